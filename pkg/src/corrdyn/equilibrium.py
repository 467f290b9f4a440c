"""Estimators of the equilibrium measure and tools to compare measures.

Two estimators are provided: the exact normalized pullback tree of a Dirac
mass, and random backward orbits (Brolin sampling). Backward orbits run as
many independent chains advanced together in one vectorised loop; chain c
draws from the stream ``SeedSequence(seed).spawn(n_chains)[c]``, and atoms are
emitted in (chain, draw) order, so output depends only on the config.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import correspondence as cr
from .correspondence import Correspondence
from .errors import DegenerateFiber, GuardViolation, TreeTooLarge

TREE_GUARD = 10**6
MIXING_GUARD = 10**7
DEFAULT_ATOM_CAP = 200_000
MAX_MOMENT_ORDER = 4


@dataclass(frozen=True, eq=False)
class PointMeasure:
    """Finite atomic measure: locations with positive weights."""

    locs: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        locs = np.atleast_1d(np.asarray(self.locs, dtype=complex)).copy()
        w = np.atleast_1d(np.asarray(self.weights, dtype=float)).copy()
        if locs.shape != w.shape:
            raise ValueError("locs and weights must have the same length")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        locs.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "locs", locs)
        object.__setattr__(self, "weights", w)

    @classmethod
    def dirac(cls, z) -> "PointMeasure":
        return cls([complex(z)], [1.0])

    @classmethod
    def uniform(cls, locs) -> "PointMeasure":
        locs = np.atleast_1d(np.asarray(locs, dtype=complex))
        return cls(locs, np.full(len(locs), 1.0 / max(len(locs), 1)))

    @property
    def total_mass(self) -> float:
        return float(math.fsum(self.weights))

    def __len__(self):
        return len(self.locs)

    def normalized(self) -> "PointMeasure":
        return PointMeasure(self.locs, self.weights / self.total_mass)

    def integrate(self, phi: Callable):
        return np.sum(self.weights * phi(self.locs))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["re", "im", "weight"])
            for z, w in zip(self.locs, self.weights):
                wr.writerow([repr(float(z.real)), repr(float(z.imag)), repr(float(w))])

    @classmethod
    def from_csv(cls, path) -> "PointMeasure":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0] + 1j * data[:, 1], data[:, 2])


@dataclass(frozen=True)
class SamplerConfig:
    seed: int
    n_samples: int = 100_000
    burn_in: int = 50
    atom_cap: int = DEFAULT_ATOM_CAP
    start_point: complex = 0j
    n_chains: int = 256

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.burn_in < 0 or self.n_chains < 1:
            raise ValueError("burn_in must be >= 0 and n_chains >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        z = complex(self.start_point)
        d["start_point"] = [z.real, z.imag]
        return d


# ---------------------------------------------------------------------------
# pullbacks


def _resample(locs, weights, cap: int, rng: np.random.Generator):
    total = math.fsum(weights)
    counts = rng.multinomial(cap, weights / total)
    keep = counts > 0
    locs = np.repeat(locs[keep], counts[keep])
    return locs, np.full(len(locs), total / cap)


def pullback(F: Correspondence, mu: PointMeasure) -> PointMeasure:
    """Unnormalized pullback F^* mu: every atom spread over its fiber with mass w * d2."""
    step = pullback_step(F, mu, atom_cap=None)
    return PointMeasure(step.locs, step.weights * F.degrees.d2)


def pullback_step(F: Correspondence, mu: PointMeasure, atom_cap: int | None = DEFAULT_ATOM_CAP,
                  seed: int | None = 0, chunk: int = 50_000) -> PointMeasure:
    """Normalized pullback d2^{-1} F^* mu.

    Each atom is replaced by its preimage fiber with weight w * mult / d2.
    When the result has more than ``atom_cap`` atoms it is reduced by
    seeded multinomial resampling to ``atom_cap`` equal-weight atoms.
    """
    locs_out, w_out = [], []
    for s in range(0, len(mu), chunk):
        table = cr.preimage_table(F, mu.locs[s : s + chunk])
        locs, w, _ = cr.merge_fibers(table, mu.weights[s : s + chunk])
        locs_out.append(locs)
        w_out.append(w)
    locs = np.concatenate(locs_out) if locs_out else np.zeros(0, complex)
    w = np.concatenate(w_out) if w_out else np.zeros(0)
    if atom_cap is not None and len(locs) > atom_cap:
        locs, w = _resample(locs, w, atom_cap, np.random.default_rng(seed))
    return PointMeasure(locs, w)


def preimage_tree(F: Correspondence, z0: complex, n: int) -> PointMeasure:
    """Exact d2^{-n} (F^n)^* delta_{z0}, atoms merged inside each fiber."""
    if F.degrees.d2 ** n > TREE_GUARD:
        raise TreeTooLarge(f"d2^n = {F.degrees.d2 ** n} exceeds {TREE_GUARD}")
    mu = PointMeasure.dirac(z0)
    for _ in range(n):
        mu = pullback_step(F, mu, atom_cap=None)
    return mu


# ---------------------------------------------------------------------------
# Brolin sampling

SNAP_REL = 1e-4


def _perturb_degenerate(F: Correspondence, z: np.ndarray, rng: np.random.Generator):
    """Move points whose preimage fiber is degenerate; return (z, count)."""
    if F.is_parametrized:
        return z, 0
    lead = F.Q.coeffs[-1, :]
    moved = 0
    for _ in range(100):
        try:
            cr._lead_check(lead, z, "preimage")
            return z, moved
        except DegenerateFiber as exc:
            i = int(np.flatnonzero(z == exc.location)[0])
            z = z.copy()
            z[i] += 1e-6 * (1 + abs(z[i])) * np.exp(2j * np.pi * rng.random())
            moved += 1
    raise DegenerateFiber("more than 100 restarts from degenerate fibers")


def _snap(table: np.ndarray, pick: np.ndarray) -> np.ndarray:
    """Picked root replaced by the mean of its cluster of raw roots.

    Raw roots of a k-fold root scatter like eps**(1/k); averaging keeps a
    chain sitting on a multiple root, e.g. an exceptional point, in place.
    """
    rows = np.arange(len(table))
    z = table[rows, pick]
    radius = SNAP_REL * (1.0 + np.abs(table).max(axis=1))
    near = np.abs(table - z[:, None]) <= radius[:, None]
    return (table * near).sum(axis=1) / near.sum(axis=1)


def _run_chains(F: Correspondence, cfg: SamplerConfig, chain_ids: np.ndarray,
                streams: list[np.random.SeedSequence]):
    d2 = F.degrees.d2
    per_chain = -(-cfg.n_samples // cfg.n_chains)
    steps = cfg.burn_in + per_chain
    rngs = [np.random.default_rng(streams[c]) for c in chain_ids]
    draws = np.stack([r.random(steps) for r in rngs])  # (chains, steps)
    restart_rng = np.random.default_rng(streams[chain_ids[0]].spawn(1)[0]) if len(chain_ids) else None
    z = np.full(len(chain_ids), complex(cfg.start_point))
    out = np.empty((len(chain_ids), per_chain), dtype=complex)
    restarts = 0
    for k in range(steps):
        z, moved = _perturb_degenerate(F, z, restart_rng)
        restarts += moved
        table = cr.preimage_table(F, z)
        pick = np.minimum((draws[:, k] * d2).astype(int), d2 - 1)
        z = _snap(table, pick)
        if k >= cfg.burn_in:
            out[:, k - cfg.burn_in] = z
    return out, restarts


def brolin_sample(F: Correspondence, cfg: SamplerConfig, workers: int = 1,
                  return_restarts: bool = False):
    """Random backward orbits; returns ``n_samples`` equally weighted atoms.

    At each step a preimage is chosen with probability proportional to its
    multiplicity. The first ``burn_in`` points of every chain are dropped.
    ``workers`` only changes scheduling, never the result.
    """
    loj = cr.lojasiewicz_exponent(F)
    if loj.value <= 1:
        warnings.warn("Lojasiewicz exponent <= 1: backward orbits need not converge",
                      RuntimeWarning, stacklevel=2)
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.n_chains)
    groups = np.array_split(np.arange(cfg.n_chains), max(1, workers))
    groups = [g for g in groups if len(g)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(lambda g: _run_chains(F, cfg, g, streams), groups))
    else:
        results = [_run_chains(F, cfg, g, streams) for g in groups]
    atoms = np.concatenate([r[0] for r in results], axis=0).ravel()[: cfg.n_samples]
    restarts = sum(r[1] for r in results)
    mu = PointMeasure(atoms, np.full(len(atoms), 1.0 / len(atoms)))
    return (mu, restarts) if return_restarts else mu


# ---------------------------------------------------------------------------
# moments, densities, distances


@dataclass(frozen=True, eq=False)
class MomentVector:
    """Normalized moments m[p, q] = E[z^p conj(z)^q] for p + q <= 4."""

    m: np.ndarray

    def __getitem__(self, pq):
        p, q = pq
        if p + q > MAX_MOMENT_ORDER:
            raise KeyError(pq)
        return complex(self.m[p, q])

    def keys(self):
        return [(p, q) for p in range(MAX_MOMENT_ORDER + 1)
                for q in range(MAX_MOMENT_ORDER + 1 - p)]

    def sup_diff(self, other: "MomentVector") -> float:
        return max(abs(self[k] - other[k]) for k in self.keys())

    def to_dict(self) -> dict:
        return {f"{p},{q}": [self[p, q].real, self[p, q].imag] for p, q in self.keys()}


def moments(mu: PointMeasure) -> MomentVector:
    total = mu.total_mass
    if total <= 0:
        raise ValueError("moments need positive total mass")
    w = mu.weights / total
    z = mu.locs
    zc = np.conj(z)
    m = np.zeros((MAX_MOMENT_ORDER + 1, MAX_MOMENT_ORDER + 1), dtype=complex)
    for p in range(MAX_MOMENT_ORDER + 1):
        zp = z ** p
        for q in range(MAX_MOMENT_ORDER + 1 - p):
            m[p, q] = np.sum(w * zp * zc ** q)
    return MomentVector(m)


@dataclass(frozen=True, eq=False)
class GridDensity:
    bbox: tuple
    nx: int
    ny: int
    mass: np.ndarray  # shape (nx, ny): mass[i, j] for x-bin i, y-bin j
    overflow: float

    @property
    def total(self) -> float:
        return float(self.mass.sum()) + self.overflow

    def to_pgm(self, path, bits: int = 8) -> dict:
        """Write a binary PGM (rows top to bottom = decreasing y); return sidecar dict."""
        if bits not in (8, 16):
            raise ValueError("bits must be 8 or 16")
        maxval = 255 if bits == 8 else 65535
        norm = float(self.mass.max())
        img = self.mass.T[::-1, :]
        scaled = np.zeros_like(img) if norm == 0 else img / norm
        pix = np.rint(scaled * maxval).astype(">u2" if bits == 16 else "u1")
        with open(path, "wb") as fh:
            fh.write(f"P5\n{self.nx} {self.ny}\n{maxval}\n".encode("ascii"))
            fh.write(pix.tobytes())
        side = {"bbox": list(self.bbox), "nx": self.nx, "ny": self.ny, "bits": bits,
                "normalization": norm, "overflow": self.overflow}
        with open(str(path) + ".json", "w") as fh:
            json.dump(side, fh, indent=2, sort_keys=True)
        return side


def grid_density(mu: PointMeasure, bbox, nx: int, ny: int) -> GridDensity:
    """Bin mass by floor indexing; mass outside ``bbox`` goes to overflow."""
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be positive")
    x0, x1, y0, y1 = (float(v) for v in bbox)
    mass = np.zeros((nx, ny))
    if len(mu) == 0:
        return GridDensity((x0, x1, y0, y1), nx, ny, mass, 0.0)
    ix = np.floor((mu.locs.real - x0) / (x1 - x0) * nx).astype(np.int64)
    iy = np.floor((mu.locs.imag - y0) / (y1 - y0) * ny).astype(np.int64)
    inside = (ix >= 0) & (ix < nx) & (iy >= 0) & (iy < ny)
    flat = np.bincount(ix[inside] * ny + iy[inside], weights=mu.weights[inside],
                       minlength=nx * ny)
    mass = flat.reshape(nx, ny)
    overflow = float(math.fsum(mu.weights[~inside]))
    return GridDensity((x0, x1, y0, y1), nx, ny, mass, overflow)


def common_bbox(*measures: PointMeasure, pad: float = 0.05) -> tuple:
    """Square box covering every atom of the given measures, padded."""
    pts = np.concatenate([m.locs for m in measures if len(m)])
    cx = 0.5 * (pts.real.min() + pts.real.max())
    cy = 0.5 * (pts.imag.min() + pts.imag.max())
    half = 0.5 * max(np.ptp(pts.real), np.ptp(pts.imag), 1e-3) * (1 + 2 * pad)
    return (cx - half, cx + half, cy - half, cy + half)


class MeasureDistance(NamedTuple):
    total: float
    l1: float
    moments: float

    def __float__(self):
        return self.total


def measure_distance(mu1: PointMeasure, mu2: PointMeasure, bbox=None,
                     n_grid: int = 64) -> MeasureDistance:
    """Half L1 distance of grid densities plus sup distance of moment vectors."""
    if bbox is None:
        bbox = common_bbox(mu1, mu2)
    g1 = grid_density(mu1, bbox, n_grid, n_grid)
    g2 = grid_density(mu2, bbox, n_grid, n_grid)
    l1 = 0.5 * (float(np.abs(g1.mass - g2.mass).sum()) + abs(g1.overflow - g2.overflow))
    mom = moments(mu1).sup_diff(moments(mu2))
    return MeasureDistance(l1 + mom, l1, mom)


def self_distance_baseline(F: Correspondence, cfg: SamplerConfig, bbox=None,
                           n_grid: int = 64) -> float:
    """Distance between two Brolin samples that differ only in their seed."""
    a = brolin_sample(F, cfg)
    b = brolin_sample(F, SamplerConfig(**{**asdict(cfg), "seed": cfg.seed + 1}))
    return measure_distance(a, b, bbox, n_grid).total


# ---------------------------------------------------------------------------
# mixing and commutation


def transfer_power(F: Correspondence, phi: Callable, z, n: int) -> np.ndarray:
    """Lambda^n phi at the points z, by averaging phi over the depth-n preimage tree."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    d2 = F.degrees.d2
    if len(z) * d2 ** n > MIXING_GUARD:
        raise GuardViolation(f"{len(z)} atoms x d2^{n} exceeds {MIXING_GUARD}")
    leaves = z
    for _ in range(n):
        leaves = cr.preimage_table(F, leaves).ravel()
    vals = np.asarray(phi(leaves))
    return vals.reshape(len(z), d2 ** n).mean(axis=1)


@dataclass(frozen=True)
class MixingPoint:
    n: int
    value: float
    stderr: float


def _real_if_close(v):
    v = complex(v)
    return v.real if abs(v.imag) <= 1e-12 * max(1.0, abs(v.real)) else v


def mixing_In(F: Correspondence, mu: PointMeasure, phi: Callable, psi: Callable, n: int,
              return_stderr: bool = False):
    """Empirical decorrelation int (Lambda^n phi) psi - (int phi)(int psi).

    The product term uses the invariance int Lambda^n phi = int phi, both
    integrals taken against ``mu``.
    """
    w = mu.weights / mu.total_mass
    lam = transfer_power(F, phi, mu.locs, n)
    ps = np.asarray(psi(mu.locs))
    mean_lam = np.sum(w * lam)
    mean_psi = np.sum(w * ps)
    val = np.sum(w * lam * ps) - mean_lam * mean_psi
    if not return_stderr:
        return _real_if_close(val)
    x = (lam - mean_lam) * (ps - mean_psi)
    se = float(np.sqrt(np.sum(w * np.abs(x - np.sum(w * x)) ** 2) / len(mu)))
    return _real_if_close(val), se


def mixing_curve(F, mu, phi, psi, n_values) -> list[MixingPoint]:
    out = []
    for n in n_values:
        v, se = mixing_In(F, mu, phi, psi, n, return_stderr=True)
        out.append(MixingPoint(n, abs(v), se))
    return out


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    used: tuple
    noise_floor: float
    collapsed: bool = False


COLLAPSE_REL = 1e-12


def fit_decay(curve: list[MixingPoint], floor_factor: float = 3.0) -> DecayFit:
    """Least-squares slope of log|I_n| over the points above floor_factor * stderr.

    Points are used from the start of the curve until the first one that
    drops under the noise floor. When that point is zero to rounding
    (|I_n| <= 1e-12 |I_0|) the correlation vanished exactly: the slope is
    -inf and ``collapsed`` is set.
    """
    used = []
    stop = None
    for pt in curve:
        if pt.value >= floor_factor * pt.stderr and pt.value > 0:
            used.append(pt)
        else:
            stop = pt
            break
    floor = floor_factor * max((pt.stderr for pt in curve), default=0.0)
    ns = tuple(int(p.n) for p in used)
    if used and stop is not None and stop.value <= COLLAPSE_REL * used[0].value:
        return DecayFit(float("-inf"), float("nan"), ns, floor, True)
    if len(used) < 2:
        return DecayFit(float("nan"), float("nan"), ns, floor)
    lv = np.log([p.value for p in used])
    slope, intercept = np.polyfit(np.array(ns, float), lv, 1)
    return DecayFit(float(slope), float(intercept), ns, floor)


def commuting_check(F: Correspondence, G: Correspondence, mu: PointMeasure, bbox=None,
                    n_grid: int = 64, seed: int = 0) -> MeasureDistance:
    """Distance between d2(G)^{-1} G^* mu and mu for an estimate mu of F's measure."""
    pulled = pullback_step(G, mu, atom_cap=DEFAULT_ATOM_CAP, seed=seed)
    return measure_distance(pulled, mu, bbox, n_grid)


__all__ = [
    "PointMeasure", "SamplerConfig", "MomentVector", "GridDensity", "MeasureDistance",
    "pullback", "pullback_step", "preimage_tree", "brolin_sample", "moments", "grid_density",
    "measure_distance", "common_bbox", "self_distance_baseline", "transfer_power",
    "mixing_In", "mixing_curve", "fit_decay", "commuting_check", "MixingPoint", "DecayFit",
]

