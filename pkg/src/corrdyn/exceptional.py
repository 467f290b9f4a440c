"""Totally invariant finite sets and the exceptional set.

E0 is searched among a finite seed set: fixed points, critical values and
two layers of their preimages. Points are removed until the remainder S
satisfies F^{-1}(S) = S, which is then re-verified point by point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import correspondence as cr
from . import equilibrium as eq
from . import periodic as pe
from . import polycore as pc
from .correspondence import Correspondence
from .errors import GuardViolation

ORBIT_GUARD = 10**4
DEFAULT_CONTROL = 2.5 * np.exp(1.1j)


@dataclass
class ExceptionalReport:
    e0: list
    orbit_truncation: list
    certified: bool

    def to_dict(self) -> dict:
        pair = lambda z: [complex(z).real, complex(z).imag]  # noqa: E731
        return {"e0": [pair(z) for z in self.e0], "certified": bool(self.certified),
                "orbit": [pair(z) for z in self.orbit_truncation]}

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)


def _tol(points) -> float:
    return cr.merge_radius(points) if len(points) else pc.CLUSTER_TOL


def _dedupe(points) -> np.ndarray:
    pts = np.asarray(points, dtype=complex)
    if len(pts) == 0:
        return pts
    locs, _, _ = pc.merge_close(pts, np.ones(len(pts)), _tol(pts))
    order = np.lexsort((np.round(locs.imag, 9), np.round(locs.real, 9)))
    return locs[order]


def _contained(points, S, tol) -> np.ndarray:
    if len(S) == 0:
        return np.zeros(len(points), dtype=bool)
    return np.min(np.abs(np.asarray(points)[:, None] - S[None, :]), axis=1) <= tol


def seed_set(F: Correspondence, layers: int = 2) -> np.ndarray:
    """Fixed points, critical values and ``layers`` preimage layers of both."""
    base = [p.location for p in pe.fixed_points(F)]
    base += list(cr.critical_value_poly(F).locations)
    pts = _dedupe(base)
    layer = pts
    for _ in range(layers):
        if len(layer) == 0:
            break
        layer = _dedupe(cr.preimage_table(F, layer).ravel())
        pts = _dedupe(np.concatenate([pts, layer]))
    return pts


def _reduce(F: Correspondence, S: np.ndarray) -> np.ndarray:
    """Largest subset T of S with F^{-1}(T) contained in T and T in F^{-1}(T)."""
    while len(S):
        tol = 10 * _tol(S)
        pre = cr.preimage_table(F, S)  # (len(S), d2)
        closed = np.array([_contained(row, S, tol).all() for row in pre])
        hit = _contained(S, pre[closed].ravel(), tol) if closed.any() else np.zeros(len(S), bool)
        keep = closed & hit
        if keep.all():
            break
        S = S[keep]
    return S


def certify(F: Correspondence, e0) -> bool:
    """F^{-1}(e) lies in e0 with total multiplicity d2 for every e in e0."""
    e0 = np.asarray(e0, dtype=complex)
    if len(e0) == 0:
        return True
    tol = 10 * _tol(e0)
    d2 = F.degrees.d2
    for e in e0:
        rs = cr.preimages(F, e)
        if rs.total != d2 or not _contained(rs.locations, e0, tol).all():
            return False
    covered = _contained(e0, cr.preimage_table(F, e0).ravel(), tol)
    return bool(covered.all())


def find_e0(F: Correspondence, max_size: int = 16, extra_seeds=(),
            orbit_steps: int = 0) -> ExceptionalReport:
    """Search the maximal finite totally invariant set among the seeds."""
    if max_size > 16:
        raise ValueError("max_size must be <= 16")
    seeds = seed_set(F)
    if len(extra_seeds):
        seeds = _dedupe(np.concatenate([seeds, np.asarray(extra_seeds, dtype=complex)]))
    S = _reduce(F, seeds)
    ok = certify(F, S) and len(S) <= max_size
    e0 = [complex(z) for z in S]
    orb = orbit(F, e0, orbit_steps) if orbit_steps else list(e0)
    return ExceptionalReport(e0, orb, ok)


def orbit(F: Correspondence, e0, n: int, guard: int = ORBIT_GUARD) -> list:
    """Union of F^k(e0) for k = 0..n, deduplicated."""
    pts = _dedupe(np.asarray(e0, dtype=complex))
    allpts = pts
    for _ in range(n):
        if len(pts) == 0:
            break
        if len(pts) * F.degrees.d1 > guard:
            raise GuardViolation(f"orbit would exceed {guard} points")
        pts = _dedupe(cr.image_table(F, pts).ravel())
        allpts = _dedupe(np.concatenate([allpts, pts]))
        if len(allpts) > guard:
            raise GuardViolation(f"orbit exceeds {guard} points")
    return [complex(z) for z in allpts]


@dataclass(frozen=True)
class ExceptionalTest:
    distance: float
    flagged: bool
    baseline: float
    control: complex


def exceptional_test(F: Correspondence, z: complex, n: int, mu_hat: eq.PointMeasure,
                     control: complex = DEFAULT_CONTROL, bbox=None, n_grid: int = 64,
                     factor: float = 3.0) -> ExceptionalTest:
    """Compare mu^z_n with mu_hat against the same distance from a control point."""
    if bbox is None:
        bbox = eq.common_bbox(mu_hat)
    dist = eq.measure_distance(eq.preimage_tree(F, z, n), mu_hat, bbox, n_grid).total
    base = eq.measure_distance(eq.preimage_tree(F, control, n), mu_hat, bbox, n_grid).total
    return ExceptionalTest(dist, bool(dist > factor * base), base, complex(control))


__all__ = ["ExceptionalReport", "ExceptionalTest", "find_e0", "orbit", "exceptional_test",
           "certify", "seed_set"]
