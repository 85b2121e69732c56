r"""Poisson nucleations, PNG heights and the RSK line ensemble at x = 0.

Points are stored as ``(x, t)``. In light-cone coordinates ``u = t + x`` and
``v = t - x`` a point ``q`` lies in the forward light cone of ``p`` exactly
when both ``u`` and ``v`` increase, so the surface height at ``(x, t)`` is
the longest such chain among the points in the backward cone of ``(x, t)``.
Sorting by ``u`` and reading the ``v`` values gives a sequence whose RSK
shape :math:`\lambda` encodes the whole multilayer ensemble:
:math:`h_j(0, T) = \lambda_{1-j} + j` for ``j <= 0``.

Production code uses a truncated row insertion (``top_row_lengths``) that
keeps only the first ``K`` rows; the rows it keeps are exact because row
``k`` only receives elements bumped out of row ``k - 1``. The event-driven
step simulator (``step_heights``, ``multilayer_cascade``) is independent of
RSK and serves as the oracle.
"""

from __future__ import annotations

import bisect
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

__all__ = [
    "REGIONS",
    "GeneralPositionError",
    "PoissonConfig",
    "sample_poisson",
    "stream",
    "height",
    "step_heights",
    "multilayer_cascade",
    "rsk_tableaux",
    "rsk_shape_of_sequence",
    "top_row_lengths",
    "LineEnsemble",
    "rsk_shape",
    "symmetrize",
    "multilayer_heights",
    "EdgeSample",
    "flat_edge_sample",
    "sym_edge_sample",
    "pairing_rule_holds",
    "greene_bruteforce",
    "dump_config",
    "load_config",
]

REGIONS = ("triangle", "rectangle", "diamond")
DEFAULT_INTENSITY = 2.0
XI_FLOOR = -10.0


class GeneralPositionError(ValueError):
    pass


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Counter-based generator for sample ``index`` under master ``seed``.

    Philox keyed by ``SeedSequence(seed, spawn_key=(index,))``: the stream of
    a sample depends only on ``(seed, index)``, never on scheduling.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(index),))))


@dataclass(frozen=True)
class PoissonConfig:
    """Finite nucleation configuration; ``points`` is a read-only ``(n, 2)`` array of ``(x, t)``."""

    points: np.ndarray
    region: str
    T: float
    intensity: float = DEFAULT_INTENSITY
    seed: int | None = None
    half_width: float | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.region not in REGIONS:
            raise ValueError(f"unknown region {self.region!r}; expected one of {REGIONS}")
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if not np.all(self.contains(pts[:, 0], pts[:, 1])):
            raise ValueError(f"points outside the {self.region} region")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def t(self) -> np.ndarray:
        return self.points[:, 1]

    @property
    def u(self) -> np.ndarray:
        return self.t + self.x

    @property
    def v(self) -> np.ndarray:
        return self.t - self.x

    @property
    def width(self) -> float:
        return self.T if self.half_width is None else self.half_width

    def contains(self, x, t):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        T = self.T
        if self.region == "triangle":
            return (t >= 0) & (t <= T) & (np.abs(x) <= T - t)
        if self.region == "diamond":
            return (np.abs(t) <= T) & (np.abs(x) <= T - np.abs(t))
        return (t >= 0) & (t <= T) & (np.abs(x) <= self.width)

    def area(self) -> float:
        if self.region == "triangle":
            return self.T**2
        if self.region == "diamond":
            return 2.0 * self.T**2
        return 2.0 * self.width * self.T

    def check_general_position(self):
        if self.meta.get("general_position"):
            return
        for name, w in (("t+x", self.u), ("t-x", self.v)):
            if np.any(np.diff(np.sort(w)) == 0):
                raise GeneralPositionError(f"repeated {name} values")


def _uniform_points(region: str, n: int, T: float, width: float, rng) -> np.ndarray:
    if region == "rectangle":
        return np.column_stack([width * (2 * rng.random(n) - 1), T * rng.random(n)])
    # uniform in the triangle |x| <= T - t: density of t is proportional to T - t
    t = T * (1.0 - np.sqrt(1.0 - rng.random(n)))
    x = (T - t) * (2 * rng.random(n) - 1)
    if region == "diamond":
        t = np.where(rng.random(n) < 0.5, t, -t)
    return np.column_stack([x, t])


def _break_ties(points: np.ndarray, rng) -> np.ndarray:
    """Nudge points by a few ulps until all t+x and all t-x values are distinct."""
    pts = points.copy()
    for _ in range(64):
        u, v = pts[:, 1] + pts[:, 0], pts[:, 1] - pts[:, 0]
        if not (np.any(np.diff(np.sort(u)) == 0) or np.any(np.diff(np.sort(v)) == 0)):
            return pts
        bad = np.zeros(len(pts), dtype=bool)
        for w in (u, v):
            order = np.argsort(w, kind="stable")
            dup = np.diff(w[order]) == 0
            bad[order[1:][dup]] = True
        if not bad.any():
            return pts
        k = int(bad.sum())
        steps = rng.integers(1, 4, size=(k, 2)) * rng.choice([-1, 1], size=(k, 2))
        sub = pts[bad]
        for c in range(2):
            sub[:, c] = sub[:, c] + steps[:, c] * np.spacing(np.maximum(np.abs(sub[:, c]), 1e-300))
        pts[bad] = sub
    raise GeneralPositionError("could not separate tied points")


def sample_poisson(
    region: str = "triangle",
    intensity: float = DEFAULT_INTENSITY,
    T: float = 1.0,
    seed: int = 0,
    index: int = 0,
    half_width: float | None = None,
) -> PoissonConfig:
    """Poisson nucleations of the given intensity in ``region``.

    The point count is Poisson(intensity * area) and the points are i.i.d.
    uniform given the count. ``index`` selects the sample stream under the
    master ``seed``. Ties in ``t + x`` or ``t - x`` (probability zero) are
    broken by a deterministic few-ulp nudge from the same stream.
    """
    if intensity <= 0 or T <= 0:
        raise ValueError("intensity and T must be positive")
    if region not in REGIONS:
        raise ValueError(f"unknown region {region!r}")
    width = T if half_width is None else float(half_width)
    rng = stream(seed, index)
    area = {"triangle": T * T, "diamond": 2 * T * T, "rectangle": 2 * width * T}[region]
    n = int(rng.poisson(intensity * area))
    pts = _break_ties(_uniform_points(region, n, T, width, rng), rng)
    if region != "rectangle":
        # the nudge could push a boundary point out of the region
        pts[:, 0] = np.clip(pts[:, 0], -(T - np.abs(pts[:, 1])), T - np.abs(pts[:, 1]))
        pts = _break_ties(pts, rng)
    return PoissonConfig(pts, region, float(T), float(intensity), int(seed), half_width, {"general_position": True})


# --------------------------------------------------------------------------
# RSK
# --------------------------------------------------------------------------


def rsk_tableaux(seq) -> tuple[list[list], list[list]]:
    """Insertion and recording tableaux ``(P, Q)`` by Schensted row insertion."""
    P: list[list] = []
    Q: list[list] = []
    for step, a in enumerate(seq, start=1):
        r = 0
        while True:
            if r == len(P):
                P.append([a])
                Q.append([step])
                break
            row = P[r]
            k = bisect.bisect_right(row, a)
            if k == len(row):
                row.append(a)
                Q[r].append(step)
                break
            a, row[k] = row[k], a
            r += 1
    return P, Q


def rsk_shape_of_sequence(seq) -> tuple[int, ...]:
    return tuple(len(r) for r in rsk_tableaux(seq)[0])


@numba.njit(cache=True)
def _top_rows(keys, K):
    n = keys.shape[0]
    caps = np.empty(K, dtype=np.int64)
    offs = np.empty(K + 1, dtype=np.int64)
    offs[0] = 0
    for r in range(K):
        caps[r] = n // (r + 1) + 1
        offs[r + 1] = offs[r] + caps[r]
    buf = np.empty(offs[K], dtype=keys.dtype)
    lens = np.zeros(K, dtype=np.int64)
    for i in range(n):
        a = keys[i]
        for r in range(K):
            base = offs[r]
            L = lens[r]
            lo, hi = 0, L
            while lo < hi:
                mid = (lo + hi) >> 1
                if buf[base + mid] <= a:
                    lo = mid + 1
                else:
                    hi = mid
            if lo == L:
                buf[base + L] = a
                lens[r] = L + 1
                break
            b = buf[base + lo]
            buf[base + lo] = a
            a = b
    return lens


def top_row_lengths(keys, K: int) -> np.ndarray:
    """First ``K`` RSK row lengths of ``keys`` (exact; deeper rows are dropped)."""
    keys = np.ascontiguousarray(keys, dtype=np.float64)
    if K < 1:
        raise ValueError("K must be >= 1")
    if keys.size == 0:
        return np.zeros(K, dtype=np.int64)
    return _top_rows(keys, int(K))


def _light_cone_sequence(config: PoissonConfig) -> np.ndarray:
    config.check_general_position()
    order = np.argsort(config.u, kind="stable")
    return config.v[order]


@dataclass(frozen=True)
class LineEnsemble:
    """RSK shape at the observation point ``(x0, T)`` and the derived line heights."""

    shape: tuple[int, ...]
    T: float
    x0: float = 0.0
    complete: bool = True

    def height(self, j: int) -> int:
        """h_j = lambda_{1-j} + j for j <= 0."""
        if j > 0:
            raise ValueError("levels are j <= 0")
        k = -j
        if k >= len(self.shape) and not self.complete:
            raise ValueError(f"level {j} lies beyond the computed rows")
        lam = self.shape[k] if k < len(self.shape) else 0
        return lam + j

    def heights(self, levels: int) -> np.ndarray:
        return np.array([self.height(-k) for k in range(levels)], dtype=np.int64)


def rsk_shape(config: PoissonConfig, rows: int | None = None) -> LineEnsemble:
    """RSK shape of ``config`` seen from ``(0, T)``.

    Only points in the backward light cone of ``(0, T)`` matter. ``rows``
    keeps the first rows only (truncated insertion); ``None`` computes the
    full shape.
    """
    inside = (config.u <= config.T) & (config.v <= config.T)
    sub = config if inside.all() else _subset(config, inside)
    seq = _light_cone_sequence(sub)
    if rows is None:
        return LineEnsemble(rsk_shape_of_sequence(seq.tolist()), config.T)
    lens = top_row_lengths(seq, rows)
    shape = tuple(int(v) for v in lens if v > 0)
    return LineEnsemble(shape, config.T, complete=bool(lens[-1] == 0))


def _subset(config: PoissonConfig, mask) -> PoissonConfig:
    return PoissonConfig(
        config.points[mask], config.region, config.T, config.intensity, config.seed, config.half_width, dict(config.meta)
    )


def height(config: PoissonConfig, x: float, t: float) -> int:
    """Surface height h(x, t): longest light-cone chain in the backward cone of (x, t)."""
    if not bool(config.contains(x, t)) or t < 0:
        raise ValueError(f"({x}, {t}) is outside the {config.region} region")
    u, v = config.u, config.v
    mask = (config.t < t) & (u < t + x) & (v < t - x)
    if not mask.any():
        return 0
    seq = _light_cone_sequence(_subset(config, mask))
    return int(top_row_lengths(seq, 1)[0])


def symmetrize(config: PoissonConfig) -> PoissonConfig:
    """Add the mirror images (x, t) -> (x, -t); the result lives on the diamond."""
    if config.region != "triangle":
        raise ValueError("symmetrize expects a triangle configuration")
    mirrored = config.points * np.array([1.0, -1.0])
    pts = np.concatenate([config.points, mirrored]) if len(config) else config.points
    meta = {"symmetrized": True}
    if config.meta.get("general_position"):
        # mirrored u values are the original -v values and vice versa
        meta["general_position"] = bool(_distinct(np.concatenate([config.u, -config.v])) and _distinct(np.concatenate([config.v, -config.u])))
    return PoissonConfig(pts, "diamond", config.T, config.intensity, config.seed, meta=meta)


def _distinct(w) -> bool:
    return not np.any(np.diff(np.sort(w)) == 0)


def multilayer_heights(config: PoissonConfig, levels: int | None = None) -> np.ndarray:
    """Heights h_l(0, T), l = 0, -1, ..., from the RSK shape."""
    ens = rsk_shape(config)
    levels = levels if levels is not None else max(1, len(ens.shape) + 1)
    return ens.heights(levels)


# --------------------------------------------------------------------------
# Step dynamics oracle
# --------------------------------------------------------------------------


def step_heights(nucleations, T: float, x0: float = 0.0):
    """Event-driven PNG step dynamics for one level.

    Each nucleation creates an up-step moving left and a down-step moving
    right; a down-step meeting an up-step merges with it. Returns the height
    at ``(x0, T)`` (up-steps minus down-steps to the left of ``x0``) and the
    list of merge events, which nucleate the next level.
    """
    events = sorted((float(t), float(x)) for x, t in nucleations)
    steps: list[list[float]] = []  # [position at time now, direction]
    now = 0.0
    merges = []
    k = 0
    while True:
        steps.sort(key=lambda s: s[0])
        best, pair = math.inf, None
        for i in range(len(steps) - 1):
            a, b = steps[i], steps[i + 1]
            if a[1] > 0 > b[1]:
                dt = (b[0] - a[0]) / 2.0
                if dt < best:
                    best, pair = dt, i
        t_nuc = events[k][0] if k < len(events) else math.inf
        t_hit = now + best
        t_next = min(t_nuc, t_hit, T)
        for s in steps:
            s[0] += s[1] * (t_next - now)
        now = t_next
        if now >= T and t_nuc > T and t_hit >= T:
            break
        if t_hit <= t_nuc:
            a, b = steps[pair], steps[pair + 1]
            merges.append((0.5 * (a[0] + b[0]), now))
            del steps[pair: pair + 2]
        else:
            x = events[k][1]
            steps.append([x, -1.0])
            steps.append([x, 1.0])
            k += 1
    h = sum(1 if d < 0 else -1 for p, d in steps if p < x0)
    return h, merges


def multilayer_cascade(config: PoissonConfig, x0: float = 0.0, max_levels: int = 10_000) -> np.ndarray:
    """Heights h_l(x0, T) from the annihilation cascade, l = 0, -1, ... until no events remain.

    Level ``l`` is nucleated by the merge events of level ``l + 1``; its
    height is ``l`` plus the lines crossed. The last entry is the first
    flat level.
    """
    if config.region == "diamond":
        pts = config.points + np.array([0.0, config.T])
        T = 2.0 * config.T
    else:
        pts, T = config.points, config.T
    out = []
    nuc = [tuple(p) for p in pts]
    level = 0
    while True:
        h, merges = step_heights(nuc, T, x0)
        out.append(h + level)
        if not nuc:
            break
        nuc = [(x, t) for x, t in merges]
        level -= 1
        if -level > max_levels:
            raise RuntimeError("cascade did not terminate")
    return np.array(out, dtype=np.int64)


# --------------------------------------------------------------------------
# Greene oracle
# --------------------------------------------------------------------------


def greene_bruteforce(seq) -> list[int]:
    """a_k for k = 1..n by exhaustive search over unions of disjoint increasing subsequences."""
    seq = list(seq)
    n = len(seq)
    if n > 12:
        raise ValueError("exhaustive search is limited to 12 elements")
    full = 1 << n
    inc = []
    for mask in range(full):
        last = None
        ok = True
        for i in range(n):
            if mask >> i & 1:
                if last is not None and seq[i] < last:
                    ok = False
                    break
                last = seq[i]
        if ok:
            inc.append(mask)
    pop = np.array([bin(m).count("1") for m in range(full)])
    reach = np.zeros(full, dtype=bool)
    reach[0] = True
    out = []
    idx_all = np.arange(full)
    for _ in range(n):
        new = reach.copy()
        idx = idx_all[reach]
        for b in inc:
            ok = (idx & b) == 0
            new[idx[ok] | b] = True
        reach = new
        out.append(int(pop[reach].max()))
    return out


# --------------------------------------------------------------------------
# Edge samples
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EdgeSample:
    """Rescaled line positions above ``xi_floor``; ``levels[i]`` is the j of ``xi[i]``."""

    xi: np.ndarray
    levels: np.ndarray
    heights: np.ndarray
    xi_floor: float

    @property
    def top(self) -> float:
        return float(self.xi[0])

    def count_above(self, a: float) -> int:
        return int(np.sum(self.xi >= a))


def _edge_from_shape(ens_rows, scale_center: float, scale_width: float, xi_floor: float) -> EdgeSample | None:
    shape, complete = ens_rows
    hs, js = [], []
    j = 0
    while True:
        k = -j
        if k >= len(shape) and not complete:
            return None
        lam = shape[k] if k < len(shape) else 0
        h = lam + j
        if (h - scale_center) / scale_width < xi_floor:
            break
        hs.append(h)
        js.append(j)
        j -= 1
    hs = np.array(hs, dtype=np.int64)
    xi = (hs - scale_center) / scale_width
    return EdgeSample(xi, np.array(js, dtype=np.int64), hs, xi_floor)


def _edge(seq, center: float, width: float, xi_floor: float, rows: int) -> EdgeSample:
    while True:
        lens = top_row_lengths(seq, rows)
        shape = tuple(int(v) for v in lens)
        sample = _edge_from_shape((shape, bool(lens[-1] == 0)), center, width, xi_floor)
        if sample is not None:
            return sample
        rows *= 2


def flat_edge_sample(config: PoissonConfig, T: float | None = None, xi_floor: float = XI_FLOOR, rows: int = 16) -> EdgeSample:
    """Flat scaling xi_j = (h_j - 2T) / (T^(1/3) 2^(-2/3)) for all lines with xi_j >= xi_floor."""
    T = config.T if T is None else float(T)
    inside = (config.u <= T) & (config.v <= T)
    sub = config if inside.all() else _subset(config, inside)
    seq = _light_cone_sequence(sub)
    return _edge(seq, 2.0 * T, T ** (1.0 / 3.0) * 2.0 ** (-2.0 / 3.0), xi_floor, rows)


def sym_edge_sample(config: PoissonConfig, T: float | None = None, xi_floor: float = XI_FLOOR, rows: int = 16) -> EdgeSample:
    """Symmetrized scaling xi_j = (H_j - 2T~) / T~^(1/3), T~ = 2T, for a diamond configuration."""
    if config.region != "diamond":
        raise ValueError("sym_edge_sample expects a symmetrized (diamond) configuration")
    T = config.T if T is None else float(T)
    Tt = 2.0 * T
    seq = _light_cone_sequence(config)
    return _edge(seq, 2.0 * Tt, Tt ** (1.0 / 3.0), xi_floor, rows)


def pairing_rule_holds(config: PoissonConfig) -> bool:
    """Every displacement H_j(end) - H_j(0) of a symmetrized configuration is even."""
    shape = rsk_shape(config).shape
    return all(lam % 2 == 0 for lam in shape)


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------


def dump_config(config: PoissonConfig, target=None) -> str:
    """JSON header line, then one ``x t`` line per point (repr floats, exact round trip)."""
    header = {
        "region": config.region,
        "intensity": config.intensity,
        "T": config.T,
        "seed": config.seed,
        "n": len(config),
    }
    if config.half_width is not None:
        header["half_width"] = config.half_width
    buf = io.StringIO()
    buf.write(json.dumps(header, sort_keys=True) + "\n")
    for x, t in config.points:
        buf.write(f"{float(x)!r} {float(t)!r}\n")
    text = buf.getvalue()
    if target is not None:
        try:
            Path(target).write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write configuration to {target}: {exc}") from exc
    return text


def load_config(source) -> PoissonConfig:
    """Inverse of ``dump_config``; ``source`` is a path or the text itself."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise OSError(f"cannot read configuration {source}: {exc}") from exc
    else:
        text = source
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty configuration file")
    header = json.loads(lines[0])
    pts = [tuple(float(v) for v in ln.split()) for ln in lines[1:] if ln.strip()]
    if len(pts) != header.get("n", len(pts)):
        raise ValueError(f"header announces {header['n']} points, found {len(pts)}")
    return PoissonConfig(
        np.array(pts, dtype=float).reshape(-1, 2),
        header["region"],
        float(header["T"]),
        float(header["intensity"]),
        header.get("seed"),
        header.get("half_width"),
    )
