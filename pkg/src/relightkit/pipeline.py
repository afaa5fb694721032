"""Dataset manifests, domain-routed batch composition, pseudo-GT emission.

Training batches mix data domains at fixed fractions; each domain is paired
with the teacher best suited to label it. Routing is deterministic under a
seed and samples without replacement until a pool runs dry, at which point
the pool reshuffles and entries drawn from the fresh pass are flagged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DOMAIN_TAGS = ("curated", "video", "olat", "residual")

DEFAULT_FRACTIONS = {"curated": 0.60, "video": 0.15, "olat": 0.10, "residual": 0.15}
DEFAULT_TEACHERS = {"curated": "real", "video": "real", "olat": "refl", "residual": "phys"}


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    tag: str
    files: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.tag not in DOMAIN_TAGS:
            raise ValueError(f"unknown domain tag {self.tag!r}")


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        ids = [e.id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("entry ids must be unique")

    def by_tag(self, tag: str) -> list:
        return [e for e in self.entries if e.tag == tag]

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        d = json.loads(text)
        entries = tuple(ManifestEntry(id=e["id"], tag=e["tag"], files=e.get("files", {}))
                        for e in d["entries"])
        return cls(entries=entries, seed=int(d.get("seed", 0)))

    def to_json(self) -> str:
        return json.dumps({
            "seed": self.seed,
            "entries": [{"id": e.id, "tag": e.tag, "files": e.files} for e in self.entries],
        }, indent=2, sort_keys=True)


@dataclass(frozen=True)
class RoutingPlan:
    batch_size: int
    fractions: dict = field(default_factory=lambda: dict(DEFAULT_FRACTIONS))
    teachers: dict = field(default_factory=lambda: dict(DEFAULT_TEACHERS))

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        if abs(sum(self.fractions.values()) - 1.0) > 1e-9:
            raise ValueError("fractions must sum to 1")
        for tag in self.fractions:
            if tag not in DOMAIN_TAGS:
                raise ValueError(f"unknown domain tag {tag!r}")
            if self.fractions[tag] < 0:
                raise ValueError("fractions must be non-negative")
        for tag, teacher in self.teachers.items():
            if teacher not in ("real", "refl", "phys"):
                raise ValueError(f"unknown teacher label {teacher!r} for {tag!r}")

    @classmethod
    def from_json(cls, text: str) -> "RoutingPlan":
        d = json.loads(text)
        return cls(batch_size=int(d["batch_size"]),
                   fractions=d.get("fractions", dict(DEFAULT_FRACTIONS)),
                   teachers=d.get("teachers", dict(DEFAULT_TEACHERS)))

    def to_json(self) -> str:
        return json.dumps({"batch_size": self.batch_size, "fractions": self.fractions,
                           "teachers": self.teachers}, indent=2, sort_keys=True)


def batch_counts(plan: RoutingPlan) -> dict:
    """Integer per-tag counts via largest-remainder rounding.

    Floor every fraction * batch_size, then hand the leftover slots to the
    largest remainders; ties break in DOMAIN_TAGS order so the result is
    deterministic. Each count deviates from its exact share by < 1.
    """
    tags = [t for t in DOMAIN_TAGS if plan.fractions.get(t, 0.0) > 0.0]
    exact = {t: plan.fractions[t] * plan.batch_size for t in tags}
    counts = {t: int(np.floor(exact[t])) for t in tags}
    leftover = plan.batch_size - sum(counts.values())
    order = sorted(tags, key=lambda t: (-(exact[t] - counts[t]), DOMAIN_TAGS.index(t)))
    for t in order[:leftover]:
        counts[t] += 1
    return counts


@dataclass(frozen=True)
class RoutedEntry:
    entry: ManifestEntry
    teacher: str
    wrapped: bool  # drawn after its pool was reshuffled mid-epoch


class _Pool:
    """Sampling without replacement with deterministic reshuffle on wrap."""

    def __init__(self, entries, rng):
        self._entries = list(entries)
        self._rng = rng
        self._order = list(rng.permutation(len(self._entries)))
        self._cursor = 0
        self.wrapped = False

    def draw(self) -> tuple:
        if self._cursor >= len(self._order):
            self._order = list(self._rng.permutation(len(self._entries)))
            self._cursor = 0
            self.wrapped = True
        e = self._entries[self._order[self._cursor]]
        self._cursor += 1
        return e, self.wrapped


def route_batches(manifest: DatasetManifest, plan: RoutingPlan, rng,
                  num_batches: int = 1) -> list:
    """Compose num_batches batches of RoutedEntry, deterministic under rng."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    counts = batch_counts(plan)
    pools = {}
    for tag in DOMAIN_TAGS:
        if counts.get(tag, 0) > 0:
            entries = manifest.by_tag(tag)
            if not entries:
                raise ValueError(f"tag {tag!r} has fraction > 0 but no entries")
            pools[tag] = _Pool(entries, rng)
    batches = []
    for _ in range(num_batches):
        batch = []
        for tag in DOMAIN_TAGS:
            teacher = plan.teachers.get(tag, "real")
            for _ in range(counts.get(tag, 0)):
                e, wrapped = pools[tag].draw()
                batch.append(RoutedEntry(entry=e, teacher=teacher, wrapped=wrapped))
        batches.append(batch)
    return batches


def routing_report(batches) -> dict:
    """JSON-friendly view of routed batches."""
    return {
        "batches": [
            [{"id": r.entry.id, "tag": r.entry.tag, "teacher": r.teacher,
              "wrapped": r.wrapped} for r in batch]
            for batch in batches
        ]
    }


# ---------------------------------------------------------------------------
# pseudo ground truth emission


def emit_pseudo_gt(entry: ManifestEntry, teacher: str, env, out_dir,
                   exponents=None) -> dict:
    """Derive and write the full supervision record for one capture entry.

    The entry must reference a capture stack manifest under files["olat"].
    Products: fitted normals and albedo, diffuse and per-lobe specular light
    maps under the prefilterd environment, and the relit composite. All
    rasters go out as PFM next to a deterministic JSON sidecar naming the
    teacher that produced them.
    """
    from .io import write_image_pfm
    from .olat import OlatStack, fit_photometric, relight
    from .prefilter import (DEFAULT_EXPONENTS, light_map_diffuse,
                            light_map_specular, prefilter_env)
    from .radiance import LinearImage

    if "olat" not in entry.files:
        raise ValueError(f"entry {entry.id!r} has no capture stack reference")
    exponents = tuple(exponents) if exponents else DEFAULT_EXPONENTS
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    try:
        stack = OlatStack.load(entry.files["olat"])
        normals, albedo, valid = fit_photometric(stack)
        pf = prefilter_env(env, exponents=exponents)
        lm_d = light_map_diffuse(normals, pf, stack.mask)
        lm_s = [light_map_specular(normals, pf, i, mask=stack.mask)
                for i in range(len(pf.specular))]
        relit = relight(stack, env)
    except Exception as exc:
        raise RuntimeError(f"pseudo-gt emission failed for entry {entry.id!r}") from exc

    files = {}
    write_image_pfm(out_dir / "normals.pfm", normals.to_image())
    files["normals"] = "normals.pfm"
    write_image_pfm(out_dir / "albedo.pfm", albedo)
    files["albedo"] = "albedo.pfm"
    write_image_pfm(out_dir / "light_diffuse.pfm", lm_d)
    files["light_diffuse"] = "light_diffuse.pfm"
    for e, lm in zip(exponents, lm_s):
        name = f"light_specular_{int(round(e)):04d}.pfm"
        write_image_pfm(out_dir / name, lm)
        files[f"light_specular_{int(round(e)):04d}"] = name
    write_image_pfm(out_dir / "relit.pfm", relit)
    files["relit"] = "relit.pfm"
    write_image_pfm(out_dir / "fit_valid.pfm", LinearImage(valid.data[:, :, None]))
    files["fit_valid"] = "fit_valid.pfm"

    sidecar = {
        "entry": entry.id,
        "tag": entry.tag,
        "teacher": teacher,
        "exponents": [float(e) for e in exponents],
        "files": files,
    }
    (out_dir / "record.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))
    return sidecar
