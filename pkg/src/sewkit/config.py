"""Run configuration loaded from a plain ``key = value`` text file.

Lines starting with ``#`` or ``;`` are comments. Vector values are comma
separated (``gravity = 0, -9.8, 0``). Unknown keys are an error naming the key.
Command-line overrides are applied on top of the file with :meth:`RunConfig.updated`.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass

from .assembly import AssemblyOptions
from .errors import SewError
from .pattern_io import SvgOptions
from .sim import SimParams
from .tokens import TokenSpec


@dataclass(frozen=True)
class RunConfig:
    # simulation
    dt: float = 1.0 / 60.0
    substeps: int = 8
    iterations: int = 10
    stretch_stiffness: float = 1.0
    bend_stiffness: float = 1.0
    stitch_stiffness: float = 1.0
    gravity: tuple = (0.0, -9.8, 0.0)
    damping: float = 0.02
    collision_margin: float = 0.002
    collision_rounds: int = 16
    seed: int = 0
    # drape driver
    max_steps: int = 2000
    settle_tol: float = 1e-4
    layer_offset: float = 0.004
    waist_band: tuple = ()
    waist_factor: float = 1.0
    # tokenizer
    bins: int = 256
    vertex_range: tuple = (-150.0, 150.0)
    control_range: tuple = (-2.0, 2.0)
    rotation_range: tuple = (-math.pi, math.pi)
    translation_range: tuple = (-2.0, 2.0)
    max_panels: int = 64
    max_edges_per_panel: int = 64
    # sampling and meshing
    samples_per_curve: int = 16
    target_edge: float = 4.0
    n_pairs: int = 8
    unit_scale: float = 0.01
    svg_margin: float = 5.0
    # evaluation
    eval_mesh: str = "assembled"
    eval_samples: int = 2048
    chamfer_squared: bool = False
    aggregation: str = "sample"

    @classmethod
    def keys(cls) -> list:
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"), delimiters=("=",))
        parser.optionxform = str
        try:
            parser.read_string("[run]\n" + text)
        except configparser.Error as exc:
            raise SewError("CONFIG_ERROR", f"unreadable config: {exc}") from None
        return cls().updated(dict(parser["run"]))

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_text(fh.read())
        except FileNotFoundError:
            raise SewError("FILE_NOT_FOUND", f"no such file: {path}") from None

    def updated(self, values: dict) -> "RunConfig":
        """Return a copy with ``values`` applied; strings are converted to the field's type."""
        defaults = {f.name: f.default for f in dataclasses.fields(self)}
        changes = {}
        for key, raw in values.items():
            if key not in defaults:
                raise SewError("CONFIG_ERROR", f"unknown config key: {key}", key=key)
            changes[key] = _coerce(key, raw, defaults[key])
        try:
            out = dataclasses.replace(self, **changes)
            out.sim_params()
            out.token_spec()
        except (TypeError, ValueError) as exc:
            raise SewError("CONFIG_ERROR", str(exc)) from None
        if out.waist_band and len(out.waist_band) != 2:
            raise SewError("CONFIG_ERROR", "waist_band needs two values", key="waist_band")
        return out

    def sim_params(self) -> SimParams:
        return SimParams(
            dt=self.dt,
            substeps=self.substeps,
            iterations=self.iterations,
            stretch_stiffness=self.stretch_stiffness,
            bend_stiffness=self.bend_stiffness,
            stitch_stiffness=self.stitch_stiffness,
            gravity=self.gravity,
            damping=self.damping,
            collision_margin=self.collision_margin,
            collision_rounds=self.collision_rounds,
            seed=self.seed,
        )

    def token_spec(self) -> TokenSpec:
        return TokenSpec(
            bins=self.bins,
            vertex_range=self.vertex_range,
            control_range=self.control_range,
            rotation_range=self.rotation_range,
            translation_range=self.translation_range,
            max_panels=self.max_panels,
            max_edges_per_panel=self.max_edges_per_panel,
        )

    def assembly_options(self) -> AssemblyOptions:
        return AssemblyOptions(self.samples_per_curve, self.target_edge, self.unit_scale, self.n_pairs)

    def svg_options(self) -> SvgOptions:
        return SvgOptions(samples_per_curve=self.samples_per_curve, margin=self.svg_margin)


def _coerce(key: str, raw, default):
    if not isinstance(raw, str):
        return tuple(raw) if isinstance(default, tuple) else raw
    text = raw.strip()
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            return tuple(float(p) for p in text.split(",") if p.strip())
        return text
    except ValueError:
        raise SewError("CONFIG_ERROR", f"bad value for {key}: {raw!r}", key=key) from None
