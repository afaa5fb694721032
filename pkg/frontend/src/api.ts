// URL builders for the relighting service. Both panels derive their request
// from one state snapshot, so the clean and degraded views always agree on
// subject, environment, yaw and seed.

import { ViewerState, normalizeYaw } from './state.js';

export interface PanelUrls {
  clean: string;
  degraded: string;
}

function query(params: Record<string, string | number>): string {
  const q = new URLSearchParams();
  for (const [key, value] of Object.entries(params)) {
    q.set(key, String(value));
  }
  return q.toString();
}

export function relightUrl(base: string, state: ViewerState): string {
  const yaw = normalizeYaw(state.yaw);
  return (
    `${base}/relight?` +
    query({
      subject: state.subject,
      env: state.env,
      yaw,
      exposure: state.exposure,
    })
  );
}

export function previewUrl(base: string, state: ViewerState): string {
  const yaw = normalizeYaw(state.yaw);
  return (
    `${base}/degrade-preview?` +
    query({
      subject: state.subject,
      env: state.env,
      yaw,
      seed: state.seed,
    })
  );
}

// Build the pair of panel URLs from a single snapshot of the state. Callers
// must not rebuild one side later from a newer state, that is how the two
// panels would drift apart.
export function panelUrls(base: string, state: ViewerState): PanelUrls {
  return {
    clean: relightUrl(base, state),
    degraded: previewUrl(base, state),
  };
}

export interface SubjectEntry {
  id: string;
  resolution: [number, number];
}

export interface EnvEntry {
  id: string;
}

export async function fetchJson<T>(url: string): Promise<T> {
  const resp = await fetch(url);
  if (!resp.ok) {
    throw new Error(`GET ${url} failed with ${resp.status}`);
  }
  return (await resp.json()) as T;
}

export function listSubjects(base: string): Promise<SubjectEntry[]> {
  return fetchJson(`${base}/subjects`);
}

export function listEnvs(base: string): Promise<EnvEntry[]> {
  return fetchJson(`${base}/envs`);
}
