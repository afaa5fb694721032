"""Read-only HTTP service over a directory of capture stacks and env maps.

Asset layout:
    assets/subjects/<id>/manifest.json   one capture stack per subject
    assets/envs/<id>.hdr                 equirectangular radiance maps

Relit frames are rendered on demand and cached by (subject, env, yaw);
exposure is applied after the cache so sweeping it costs nothing. All state
is immutable after startup, which makes concurrent requests safe.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import Response
from fastapi.staticfiles import StaticFiles

from .degrade import DegradeConfig, asymmetric_pair
from .io import png_bytes, read_env
from .olat import OlatStack, relight
from .radiance import LinearImage, gamma_encode

_CACHE_SIZE = 32

# previews gate every stage open so the degraded panel always shows an effect
_PREVIEW_CONFIG = DegradeConfig(p=1.0, sigma_range=(10.0, 60.0), k_range=(5, 15),
                                source_size_range=(4.0, 20.0))


class _RelitCache:
    def __init__(self, size: int = _CACHE_SIZE):
        self._data = OrderedDict()
        self._size = size
        self._lock = threading.Lock()

    def get(self, key):
        with self._lock:
            if key in self._data:
                self._data.move_to_end(key)
                return self._data[key]
        return None

    def put(self, key, value):
        with self._lock:
            self._data[key] = value
            self._data.move_to_end(key)
            while len(self._data) > self._size:
                self._data.popitem(last=False)


def _scan_assets(assets_dir: Path):
    subjects = {}
    subj_root = assets_dir / "subjects"
    if subj_root.is_dir():
        for manifest in sorted(subj_root.glob("*/manifest.json")):
            subjects[manifest.parent.name] = OlatStack.load(manifest)
    envs = {}
    env_root = assets_dir / "envs"
    if env_root.is_dir():
        for path in sorted(env_root.glob("*.hdr")):
            envs[path.stem] = read_env(path)
    return subjects, envs


def create_app(assets_dir, frontend_dir=None) -> FastAPI:
    assets_dir = Path(assets_dir)
    if not assets_dir.is_dir():
        raise ValueError(f"assets directory not found: {assets_dir}")
    subjects, envs = _scan_assets(assets_dir)
    cache = _RelitCache()

    app = FastAPI(title="relightkit service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["GET"],
                       allow_headers=["*"])

    def _subject(subject_id: str) -> OlatStack:
        if subject_id not in subjects:
            raise HTTPException(status_code=404, detail=f"unknown subject {subject_id!r}")
        return subjects[subject_id]

    def _env(env_id: str):
        if env_id not in envs:
            raise HTTPException(status_code=404, detail=f"unknown env {env_id!r}")
        return envs[env_id]

    def _relit(subject_id: str, env_id: str, yaw: float) -> LinearImage:
        if not np.isfinite(yaw):
            raise HTTPException(status_code=400, detail="yaw must be finite")
        key = (subject_id, env_id, float(yaw))
        hit = cache.get(key)
        if hit is not None:
            return hit
        out = relight(_subject(subject_id), _env(env_id), yaw=float(yaw))
        cache.put(key, out)
        return out

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/subjects")
    def list_subjects():
        return [{"id": sid, "resolution": [s.width, s.height]}
                for sid, s in sorted(subjects.items())]

    @app.get("/envs")
    def list_envs():
        return [{"id": eid} for eid in sorted(envs)]

    @app.get("/relight")
    def relight_endpoint(subject: str, env: str, yaw: float = 0.0, exposure: float = 1.0):
        if not (np.isfinite(exposure) and exposure > 0):
            raise HTTPException(status_code=400, detail="exposure must be positive")
        linear = _relit(subject, env, yaw)
        return Response(content=png_bytes(linear.scaled(exposure)), media_type="image/png")

    @app.get("/degrade-preview")
    def degrade_preview(subject: str, env: str, yaw: float = 0.0, seed: int = 0):
        if seed < 0:
            raise HTTPException(status_code=400, detail="seed must be non-negative")
        linear = _relit(subject, env, yaw)
        display = gamma_encode(linear)
        _, student, _ = asymmetric_pair(display, _PREVIEW_CONFIG, int(seed),
                                        mask=_subject(subject).mask)
        return Response(content=png_bytes(student, already_display=True),
                        media_type="image/png")

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True), name="viewer")

    return app
