// Browser entry point. Wires the controls to the relighting service and keeps
// the clean and degraded panels in sync: every refresh takes one snapshot of
// the state and derives both panel URLs from it.

import { ViewerState, TWO_PI, defaultState, setYaw, setExposure, carouselTick } from './state.js';
import { panelUrls, listSubjects, listEnvs } from './api.js';
import { LatestWinsFetcher } from './fetcher.js';

const API_BASE = '';

let state: ViewerState = defaultState();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

const subjectSelect = el<HTMLSelectElement>('subject');
const envSelect = el<HTMLSelectElement>('env');
const yawSlider = el<HTMLInputElement>('yaw');
const yawReadout = el<HTMLElement>('yaw-readout');
const exposureSlider = el<HTMLInputElement>('exposure');
const exposureReadout = el<HTMLElement>('exposure-readout');
const degradedToggle = el<HTMLInputElement>('degraded');
const seedInput = el<HTMLInputElement>('seed');
const rerollButton = el<HTMLButtonElement>('reroll');
const playButton = el<HTMLButtonElement>('play');
const speedSlider = el<HTMLInputElement>('speed');
const badge = el<HTMLElement>('badge');
const cleanImg = el<HTMLImageElement>('clean-img');
const degradedImg = el<HTMLImageElement>('degraded-img');
const degradedPanel = el<HTMLElement>('degraded-panel');

function showBlob(img: HTMLImageElement, blob: Blob): void {
  const old = img.src;
  img.src = URL.createObjectURL(blob);
  if (old.startsWith('blob:')) {
    URL.revokeObjectURL(old);
  }
}

async function fetchBlob(url: string): Promise<Blob> {
  const resp = await fetch(url);
  if (!resp.ok) {
    throw new Error(`HTTP ${resp.status}`);
  }
  return resp.blob();
}

function onFetchError(err: unknown): void {
  badge.textContent = err instanceof Error ? err.message : 'request failed';
  badge.hidden = false;
}

const cleanFetcher = new LatestWinsFetcher<Blob>(fetchBlob, {
  onFrame: (blob) => {
    showBlob(cleanImg, blob);
    badge.hidden = true;
  },
  onError: onFetchError,
});

const degradedFetcher = new LatestWinsFetcher<Blob>(fetchBlob, {
  onFrame: (blob) => showBlob(degradedImg, blob),
  onError: onFetchError,
});

// Request fresh frames for the current state. Both URLs come from the same
// snapshot so the panels cannot disagree on subject, env, yaw or seed.
function refresh(): void {
  if (!state.subject || !state.env) {
    return;
  }
  const urls = panelUrls(API_BASE, state);
  cleanFetcher.request(urls.clean);
  if (state.degraded) {
    degradedFetcher.request(urls.degraded);
  }
}

function syncControls(): void {
  yawSlider.value = String(state.yaw);
  yawReadout.textContent = `${(state.yaw / Math.PI).toFixed(2)} pi`;
  exposureSlider.value = String(Math.log2(state.exposure));
  exposureReadout.textContent = `${state.exposure.toFixed(2)}x`;
  degradedPanel.hidden = !state.degraded;
  playButton.textContent = state.playing ? 'Pause' : 'Play';
}

subjectSelect.addEventListener('change', () => {
  state = { ...state, subject: subjectSelect.value };
  refresh();
});

envSelect.addEventListener('change', () => {
  state = { ...state, env: envSelect.value };
  refresh();
});

yawSlider.addEventListener('input', () => {
  state = setYaw(state, Number(yawSlider.value));
  syncControls();
  refresh();
});

// The exposure slider moves in log space so equal travel means equal stops.
exposureSlider.addEventListener('input', () => {
  state = setExposure(state, Math.pow(2, Number(exposureSlider.value)));
  syncControls();
  refresh();
});

degradedToggle.addEventListener('change', () => {
  state = { ...state, degraded: degradedToggle.checked };
  syncControls();
  refresh();
});

seedInput.addEventListener('change', () => {
  const seed = Math.max(0, Math.floor(Number(seedInput.value) || 0));
  seedInput.value = String(seed);
  state = { ...state, seed };
  refresh();
});

rerollButton.addEventListener('click', () => {
  state = { ...state, seed: Math.floor(Math.random() * 1e9) };
  seedInput.value = String(state.seed);
  refresh();
});

playButton.addEventListener('click', () => {
  state = { ...state, playing: !state.playing };
  syncControls();
});

speedSlider.addEventListener('input', () => {
  state = { ...state, speed: Number(speedSlider.value) };
});

// Horizontal drag on either panel turns the subject. A full image width of
// travel is one full revolution.
function attachDrag(img: HTMLImageElement): void {
  let dragging = false;
  let lastX = 0;
  img.addEventListener('pointerdown', (ev) => {
    dragging = true;
    lastX = ev.clientX;
    img.setPointerCapture(ev.pointerId);
  });
  img.addEventListener('pointermove', (ev) => {
    if (!dragging) {
      return;
    }
    const dx = ev.clientX - lastX;
    lastX = ev.clientX;
    const width = img.clientWidth || 1;
    state = setYaw(state, state.yaw + (dx / width) * TWO_PI);
    syncControls();
    refresh();
  });
  img.addEventListener('pointerup', () => {
    dragging = false;
  });
}

attachDrag(cleanImg);
attachDrag(degradedImg);

let lastTick: number | null = null;

function frame(now: number): void {
  if (lastTick !== null && state.playing) {
    const next = carouselTick(state, (now - lastTick) / 1000);
    if (next !== state) {
      state = next;
      syncControls();
      refresh();
    }
  }
  lastTick = now;
  requestAnimationFrame(frame);
}

async function boot(): Promise<void> {
  try {
    const [subjects, envs] = await Promise.all([listSubjects(API_BASE), listEnvs(API_BASE)]);
    for (const s of subjects) {
      const opt = document.createElement('option');
      opt.value = s.id;
      opt.textContent = `${s.id} (${s.resolution[0]}x${s.resolution[1]})`;
      subjectSelect.appendChild(opt);
    }
    for (const e of envs) {
      const opt = document.createElement('option');
      opt.value = e.id;
      opt.textContent = e.id;
      envSelect.appendChild(opt);
    }
    if (subjects.length > 0 && envs.length > 0) {
      state = { ...state, subject: subjects[0].id, env: envs[0].id };
      subjectSelect.value = state.subject;
      envSelect.value = state.env;
    }
  } catch (err) {
    onFetchError(err);
  }
  seedInput.value = String(state.seed);
  speedSlider.value = String(state.speed);
  degradedToggle.checked = state.degraded;
  syncControls();
  refresh();
  requestAnimationFrame(frame);
}

boot();
