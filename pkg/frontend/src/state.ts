// Viewer state and the pure update rules that act on it. Everything here is
// plain data so the carousel and the controls can be tested without a DOM.

export const TWO_PI = Math.PI * 2;

export interface ViewerState {
  subject: string;
  env: string;
  yaw: number;        // radians, always kept in [0, 2*pi)
  exposure: number;   // linear gain, strictly positive
  degraded: boolean;  // show the degraded companion panel
  seed: number;       // shared by both panels so they depict the same draw
  playing: boolean;   // carousel on/off
  speed: number;      // carousel angular velocity, rad/s
}

export function defaultState(): ViewerState {
  return {
    subject: '',
    env: '',
    yaw: 0,
    exposure: 1,
    degraded: true,
    seed: 0,
    playing: false,
    speed: 0.5,
  };
}

// Wrap an angle into [0, 2*pi). Exact multiples of 2*pi map to 0, so a slider
// sitting at either end of its range asks for the same frame.
export function normalizeYaw(yaw: number): number {
  if (!Number.isFinite(yaw)) {
    throw new Error('yaw must be finite');
  }
  let y = yaw % TWO_PI;
  if (y < 0) {
    y += TWO_PI;
  }
  // the remainder can come back as -0 or round up to TWO_PI, both mean zero
  return y === 0 || y === TWO_PI ? 0 : y;
}

export function setYaw(state: ViewerState, yaw: number): ViewerState {
  return { ...state, yaw: normalizeYaw(yaw) };
}

export function setExposure(state: ViewerState, exposure: number): ViewerState {
  if (!Number.isFinite(exposure) || exposure <= 0) {
    throw new Error('exposure must be a positive number');
  }
  return { ...state, exposure };
}

// Advance the carousel by dt seconds. A paused carousel or one with zero
// speed is a fixed point: the same state object comes back unchanged.
export function carouselTick(state: ViewerState, dt: number): ViewerState {
  if (!Number.isFinite(dt) || dt < 0) {
    throw new Error('dt must be a non-negative number of seconds');
  }
  if (!state.playing || state.speed === 0 || dt === 0) {
    return state;
  }
  return { ...state, yaw: normalizeYaw(state.yaw + state.speed * dt) };
}
