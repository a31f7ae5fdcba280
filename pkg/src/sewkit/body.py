"""Capsule body proxy with keyframed poses.

Body file format (JSON)::

    {"keyframes": [{"time": 0.0,
                    "capsules": [{"p0": [x, y, z], "p1": [x, y, z], "radius": r}, ...]},
                   ...]}

Times strictly increase and every keyframe has the same number of capsules.
Between keyframes endpoints and radii are interpolated linearly; outside the
keyframe range the nearest keyframe is held.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import SewError


@dataclass(frozen=True)
class Capsule:
    p0: tuple
    p1: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "p0", tuple(float(v) for v in self.p0))
        object.__setattr__(self, "p1", tuple(float(v) for v in self.p1))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise SewError("SCHEMA_VIOLATION", "capsule radius must be positive")

    def as_row(self) -> list:
        return [*self.p0, *self.p1, self.radius]


@dataclass(frozen=True)
class BodyTrack:
    keyframes: tuple  # of (time, tuple of Capsule)

    def __post_init__(self):
        frames = tuple((float(t), tuple(caps)) for t, caps in self.keyframes)
        if not frames:
            raise SewError("SCHEMA_VIOLATION", "body needs at least one keyframe")
        counts = {len(c) for _, c in frames}
        if len(counts) != 1:
            raise SewError("SCHEMA_VIOLATION", "capsule count must be constant across keyframes")
        times = [t for t, _ in frames]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise SewError("SCHEMA_VIOLATION", "keyframe times must strictly increase")
        object.__setattr__(self, "keyframes", frames)
        object.__setattr__(self, "_rows", [np.array([c.as_row() for c in caps], dtype=float).reshape(-1, 7) for _, caps in frames])

    @classmethod
    def static(cls, capsules) -> "BodyTrack":
        return cls(((0.0, tuple(capsules)),))

    @property
    def start_time(self) -> float:
        return self.keyframes[0][0]

    @property
    def end_time(self) -> float:
        return self.keyframes[-1][0]

    @property
    def n_capsules(self) -> int:
        return len(self.keyframes[0][1])

    def capsules_at(self, t: float) -> np.ndarray:
        """Capsule rows ``(p0, p1, radius)`` of shape (c, 7) at time ``t``."""
        rows = self._rows
        times = [k[0] for k in self.keyframes]
        if t <= times[0]:
            return rows[0].copy()
        if t >= times[-1]:
            return rows[-1].copy()
        j = int(np.searchsorted(times, t, side="right"))
        t0, t1 = times[j - 1], times[j]
        a = (t - t0) / (t1 - t0)
        return (1.0 - a) * rows[j - 1] + a * rows[j]


def body_to_dict(body: BodyTrack) -> dict:
    return {
        "keyframes": [
            {"time": t, "capsules": [{"p0": list(c.p0), "p1": list(c.p1), "radius": c.radius} for c in caps]}
            for t, caps in body.keyframes
        ]
    }


def _reject_constant(name):
    raise ValueError(f"non-standard JSON constant {name}")


def parse_body(text) -> BodyTrack:
    try:
        raw = json.loads(text, parse_constant=_reject_constant)
    except (json.JSONDecodeError, ValueError) as exc:
        raise SewError("MALFORMED_JSON", str(exc)) from None
    try:
        frames = []
        for i, kf in enumerate(raw["keyframes"]):
            caps = []
            for j, c in enumerate(kf["capsules"]):
                vals = list(c["p0"]) + list(c["p1"]) + [c["radius"]]
                if len(vals) != 7 or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
                    raise SewError("SCHEMA_VIOLATION", "bad capsule", f"/keyframes/{i}/capsules/{j}")
                if not all(math.isfinite(v) for v in vals):
                    raise SewError("SCHEMA_VIOLATION", "non-finite capsule value", f"/keyframes/{i}/capsules/{j}")
                caps.append(Capsule(c["p0"], c["p1"], c["radius"]))
            frames.append((float(kf["time"]), tuple(caps)))
    except (KeyError, TypeError) as exc:
        raise SewError("SCHEMA_VIOLATION", f"bad body file: {exc}") from None
    return BodyTrack(tuple(frames))


def read_body(path) -> BodyTrack:
    try:
        with open(path, "rb") as fh:
            return parse_body(fh.read())
    except FileNotFoundError:
        raise SewError("FILE_NOT_FOUND", f"no such file: {path}") from None


def default_body() -> BodyTrack:
    """The bundled 7-capsule humanoid: torso, two-segment arms, legs; T-pose then arms lowered."""
    text = resources.files("sewkit").joinpath("data/body_default.json").read_text(encoding="utf-8")
    return parse_body(text)


def empty_body() -> BodyTrack:
    return BodyTrack.static(())


def capsule_distances(points, capsules) -> np.ndarray:
    """Distance from each point to each capsule axis segment, shape (n, c). Pure numpy."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    caps = np.asarray(capsules, dtype=float).reshape(-1, 7)
    out = np.empty((len(pts), len(caps)))
    for k, c in enumerate(caps):
        a, b = c[:3], c[3:6]
        e = b - a
        ee = float(e @ e)
        if ee > 0:
            t = np.clip((pts - a) @ e / ee, 0.0, 1.0)
        else:
            t = np.zeros(len(pts))
        q = a + t[:, None] * e
        out[:, k] = np.linalg.norm(pts - q, axis=1)
    return out


def penetration_depths(points, capsules, margin: float = 0.0) -> np.ndarray:
    """Per-point max of ``radius + margin - distance`` over capsules, clipped at 0."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    caps = np.asarray(capsules, dtype=float).reshape(-1, 7)
    if len(caps) == 0 or len(pts) == 0:
        return np.zeros(len(pts))
    d = capsule_distances(pts, caps)
    return np.maximum(0.0, (caps[:, 6] + margin)[None, :] - d).max(axis=1)
