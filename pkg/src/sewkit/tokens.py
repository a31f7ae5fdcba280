"""Deterministic token codec for sewing patterns.

A pattern becomes a flat sequence of ``(slot, kind, value)`` tokens. ``slot``
is the panel index for panel tokens and ``spec.max_panels`` (the reserved
slot) for stitch and end tokens. Grammar::

    for each panel i:
        PANEL_START(i, n)                  n = vertex count
        n x [VERTEX_X, VERTEX_Y]           quantized vertex coordinates
        n x [CTRL_NONE | CTRL_X, CTRL_Y]   one group per edge
        3 x ROT, 3 x TRANS                 quantized placement
    k x [STITCH_REF, STITCH_REF]           value = panel * max_edges_per_panel + edge
    EOS

Topology survives exactly; scalars come back at their bin centers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import SewError
from .model import Panel, Placement, SewingPattern, Stitch


class Kind(str, enum.Enum):
    PANEL_START = "PANEL_START"
    VERTEX_X = "VERTEX_X"
    VERTEX_Y = "VERTEX_Y"
    CTRL_X = "CTRL_X"
    CTRL_Y = "CTRL_Y"
    CTRL_NONE = "CTRL_NONE"
    ROT = "ROT"
    TRANS = "TRANS"
    STITCH_REF = "STITCH_REF"
    EOS = "EOS"


QUANTIZED_KINDS = frozenset({Kind.VERTEX_X, Kind.VERTEX_Y, Kind.CTRL_X, Kind.CTRL_Y, Kind.ROT, Kind.TRANS})


@dataclass(frozen=True)
class TokenSpec:
    bins: int = 256
    vertex_range: tuple = (-150.0, 150.0)
    control_range: tuple = (-2.0, 2.0)
    rotation_range: tuple = (-math.pi, math.pi)
    translation_range: tuple = (-2.0, 2.0)
    max_panels: int = 64
    max_edges_per_panel: int = 64

    def __post_init__(self):
        if self.bins < 2:
            raise ValueError("bins must be >= 2")
        for name in ("vertex_range", "control_range", "rotation_range", "translation_range"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} must satisfy lo < hi")
            object.__setattr__(self, name, (float(lo), float(hi)))
        if self.max_panels < 1 or self.max_edges_per_panel < 3:
            raise ValueError("capacity limits too small")

    @property
    def reserved_slot(self) -> int:
        return self.max_panels

    def range_for(self, kind: Kind) -> tuple:
        if kind in (Kind.VERTEX_X, Kind.VERTEX_Y):
            return self.vertex_range
        if kind in (Kind.CTRL_X, Kind.CTRL_Y):
            return self.control_range
        if kind is Kind.ROT:
            return self.rotation_range
        if kind is Kind.TRANS:
            return self.translation_range
        raise KeyError(kind)

    def half_bin(self, kind: Kind) -> float:
        lo, hi = self.range_for(kind)
        return 0.5 * (hi - lo) / self.bins


class Token(NamedTuple):
    slot: int
    kind: Kind
    value: int


@dataclass(frozen=True)
class TokenSequence:
    spec: TokenSpec
    tokens: tuple
    # clamping notes from encoding; not part of the stream itself
    warnings: tuple = ()

    def __len__(self):
        return len(self.tokens)


def quantize(x: float, rng, bins: int) -> int:
    if bins < 2:
        raise ValueError("bins must be >= 2")
    if math.isnan(x):
        raise SewError("NONFINITE_VALUE", "cannot quantize NaN")
    lo, hi = rng
    x = min(max(x, lo), hi)
    idx = math.floor((x - lo) / ((hi - lo) / bins))
    return min(max(idx, 0), bins - 1)


def dequantize(idx: int, rng, bins: int) -> float:
    if not 0 <= idx < bins:
        raise SewError("BIN_OUT_OF_RANGE", f"bin {idx} outside [0, {bins})")
    lo, hi = rng
    return lo + (idx + 0.5) * (hi - lo) / bins


def encode_pattern(pattern: SewingPattern, spec: TokenSpec = TokenSpec()) -> TokenSequence:
    """Encode a valid pattern; out-of-range scalars are clamped and reported in ``warnings``."""
    if len(pattern.panels) > spec.max_panels:
        raise SewError("CAPACITY_EXCEEDED", f"{len(pattern.panels)} panels > max_panels={spec.max_panels}")
    for i, panel in enumerate(pattern.panels):
        if len(panel.vertices) > spec.max_edges_per_panel:
            raise SewError(
                "CAPACITY_EXCEEDED",
                f"panel {i} has {len(panel.vertices)} edges > max_edges_per_panel={spec.max_edges_per_panel}",
                f"/panels/{i}",
            )
    tokens = []
    warnings = []

    def q(slot, kind, x, where):
        lo, hi = spec.range_for(kind)
        if x < lo or x > hi:
            warnings.append(f"{where}: {x!r} clamped to [{lo!r}, {hi!r}]")
        tokens.append(Token(slot, kind, quantize(x, (lo, hi), spec.bins)))

    for i, (panel, placement) in enumerate(zip(pattern.panels, pattern.placements)):
        where = f"/panels/{i}"
        tokens.append(Token(i, Kind.PANEL_START, len(panel.vertices)))
        for k, v in enumerate(panel.vertices):
            q(i, Kind.VERTEX_X, v[0], f"{where}/vertices/{k}/0")
            q(i, Kind.VERTEX_Y, v[1], f"{where}/vertices/{k}/1")
        for j, e in enumerate(panel.edges):
            if e.control is None:
                tokens.append(Token(i, Kind.CTRL_NONE, 0))
            else:
                q(i, Kind.CTRL_X, e.control[0], f"{where}/edges/{j}/control/0")
                q(i, Kind.CTRL_Y, e.control[1], f"{where}/edges/{j}/control/1")
        placement = placement.canonicalized()
        for c, r in enumerate(placement.rotation):
            q(i, Kind.ROT, r, f"{where}/rotation/{c}")
        for c, t in enumerate(placement.translation):
            q(i, Kind.TRANS, t, f"{where}/translation/{c}")
    slot = spec.reserved_slot
    for st in pattern.stitches:
        for p, e in (st.first, st.second):
            tokens.append(Token(slot, Kind.STITCH_REF, p * spec.max_edges_per_panel + e))
    tokens.append(Token(slot, Kind.EOS, 0))
    return TokenSequence(spec, tuple(tokens), tuple(warnings))


def _violation(idx: int, msg: str):
    return SewError("GRAMMAR_VIOLATION", msg, idx)


def decode_pattern(seq: TokenSequence) -> SewingPattern:
    """Rebuild a pattern from tokens; any deviation from the grammar raises ``GRAMMAR_VIOLATION``."""
    spec = seq.spec
    toks = seq.tokens
    n_tok = len(toks)
    pos = 0

    def take(kind, slot):
        nonlocal pos
        if pos >= n_tok:
            raise _violation(max(n_tok - 1, 0), f"sequence ended while expecting {kind.value}")
        t = toks[pos]
        if t.kind != kind:
            raise _violation(pos, f"expected {kind.value}, found {getattr(t.kind, 'value', t.kind)}")
        if t.slot != slot:
            raise _violation(pos, f"{kind.value} in slot {t.slot}, expected slot {slot}")
        if not isinstance(t.value, int) or isinstance(t.value, bool) or t.value < 0:
            raise _violation(pos, "token value must be a non-negative integer")
        if kind in QUANTIZED_KINDS and t.value >= spec.bins:
            raise _violation(pos, f"bin {t.value} outside [0, {spec.bins})")
        pos += 1
        return t.value

    def peek():
        return toks[pos].kind if pos < n_tok else None

    def deq(kind, slot):
        return dequantize(take(kind, slot), spec.range_for(kind), spec.bins)

    panels, placements = [], []
    while peek() == Kind.PANEL_START:
        i = len(panels)
        if i >= spec.max_panels:
            raise _violation(pos, "too many panels for max_panels")
        start = pos
        n = take(Kind.PANEL_START, i)
        if not 3 <= n <= spec.max_edges_per_panel:
            raise _violation(start, f"panel vertex count {n} outside [3, {spec.max_edges_per_panel}]")
        verts = [(deq(Kind.VERTEX_X, i), deq(Kind.VERTEX_Y, i)) for _ in range(n)]
        controls = []
        for _ in range(n):
            if peek() == Kind.CTRL_NONE:
                if take(Kind.CTRL_NONE, i) != 0:
                    raise _violation(pos - 1, "CTRL_NONE carries value 0")
                controls.append(None)
            else:
                controls.append((deq(Kind.CTRL_X, i), deq(Kind.CTRL_Y, i)))
        rot = tuple(deq(Kind.ROT, i) for _ in range(3))
        trans = tuple(deq(Kind.TRANS, i) for _ in range(3))
        panels.append(Panel.from_polygon(f"panel_{i}", verts, controls))
        placements.append(Placement(rot, trans))

    slot = spec.reserved_slot
    stitches = []
    while peek() == Kind.STITCH_REF:
        sides = []
        for _ in range(2):
            at = pos
            if peek() != Kind.STITCH_REF:
                take(Kind.STITCH_REF, slot)  # raises with the right message
            v = take(Kind.STITCH_REF, slot)
            p, e = divmod(v, spec.max_edges_per_panel)
            if p >= len(panels) or e >= len(panels[p].edges):
                raise _violation(at, f"STITCH_REF to nonexistent edge (panel {p}, edge {e})")
            sides.append((p, e))
        stitches.append(Stitch(sides[0], sides[1]))

    if take(Kind.EOS, slot) != 0:
        raise _violation(pos - 1, "EOS carries value 0")
    if pos != n_tok:
        raise _violation(pos, "tokens after EOS")
    return SewingPattern(panels, placements, stitches)


def tokens_to_text(seq: TokenSequence) -> str:
    """One token per line: ``slot kind value``."""
    return "".join(f"{t.slot} {t.kind.value} {t.value}\n" for t in seq.tokens)


def tokens_from_text(text: str, spec: TokenSpec = TokenSpec()) -> TokenSequence:
    tokens = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            slot, kind, value = int(parts[0]), Kind(parts[1]), int(parts[2])
            if len(parts) != 3:
                raise ValueError
        except (ValueError, IndexError):
            raise SewError("TOKEN_PARSE_ERROR", f"bad token line {line!r}", lineno) from None
        tokens.append(Token(slot, kind, value))
    return TokenSequence(spec, tuple(tokens))
