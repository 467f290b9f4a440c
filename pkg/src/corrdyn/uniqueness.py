"""Preimage-set equality, composition factors and Julia-like sets.

Compact sets are point clouds. A set is a uniqueness set for polynomials
when f^{-1}(K) = g^{-1}(K) forces f = g; the obstructions tested here are
Julia-like behaviour (P^{-1}(K) = K for some candidate P of degree >= 2) and
invariance under a rotation by 2*pi/m. Every verdict is evidence about the
sampled cloud, not a proof about the compact set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import equilibrium as eq
from . import periodic as pe
from . import polycore as pc
from .correspondence import Correspondence
from .polycore import UniPoly

INFINITE_PROXY = 64
SPACING_FACTOR = 3.0


def _xy(cloud) -> np.ndarray:
    c = np.asarray(cloud, dtype=complex)
    return np.column_stack([c.real, c.imag])


def spacing(cloud) -> float:
    """Largest nearest-neighbour distance in the cloud."""
    c = np.asarray(cloud, dtype=complex)
    if len(c) < 2:
        return 0.0
    d, _ = cKDTree(_xy(c)).query(_xy(c), k=2)
    return float(d[:, 1].max())


def default_tol(*clouds) -> float:
    """3x the coarser sample spacing for dense clouds, near-exact otherwise."""
    if min(len(c) for c in clouds) >= INFINITE_PROXY:
        return SPACING_FACTOR * max(spacing(c) for c in clouds)
    scale = max(float(np.max(np.abs(c))) for c in clouds if len(c))
    return 1e-6 * (1 + scale)


@dataclass(frozen=True, eq=False)
class CompactSet:
    cloud: np.ndarray
    descriptor: dict

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.cloud, dtype=complex)).copy()
        if len(c) == 0:
            raise ValueError("a compact set needs at least one sample")
        c.setflags(write=False)
        object.__setattr__(self, "cloud", c)

    def __len__(self):
        return len(self.cloud)

    @property
    def kind(self) -> str:
        return self.descriptor["type"]

    @classmethod
    def raw(cls, points) -> "CompactSet":
        return cls(points, {"type": "raw"})

    @classmethod
    def circles(cls, radii, n: int = 256, centre: complex = 0j) -> "CompactSet":
        theta = 2 * np.pi * np.arange(n) / n
        pts = np.concatenate([centre + r * np.exp(1j * theta) for r in radii])
        K = cls(pts, {"type": "circles", "radii": [float(r) for r in radii]})
        err = np.min(np.abs(np.abs(pts - centre)[:, None] - np.asarray(radii)[None, :]), axis=1)
        if err.max() > 1e-9:
            raise ValueError("cloud does not match the circle descriptor")
        return K

    @classmethod
    def segment(cls, a: float = -1.0, b: float = 1.0, n: int = 256) -> "CompactSet":
        return cls(np.linspace(a, b, n) + 0j, {"type": "segment", "ends": [a, b]})

    @classmethod
    def julia_like(cls, P: UniPoly, n: int = 4096, seed: int = 0) -> "CompactSet":
        """Backward orbit of P from a repelling fixed point, then one preimage layer."""
        if P.degree < 2:
            raise ValueError("Julia-like clouds need deg P >= 2")
        F = Correspondence.parametrized(UniPoly.identity(), P)
        rep = [p for p in pe.fixed_points(F) if p.cls == "repelling"]
        start = max(rep, key=lambda p: abs(p.inverse_multiplier) ** -1).location if rep else 0j
        m = max(1, n // P.degree)
        cfg = eq.SamplerConfig(seed=seed, n_samples=m, burn_in=20, start_point=start,
                               n_chains=min(64, m))
        base = eq.brolin_sample(F, cfg).locs
        pts = _preimage_cloud(P, base)
        return cls(pts, {"type": "julia_like", "P": P.to_literal()})

    def to_dict(self) -> dict:
        return {"descriptor": self.descriptor,
                "samples": [[z.real, z.imag] for z in self.cloud]}

    @classmethod
    def from_dict(cls, obj: dict) -> "CompactSet":
        pts = np.array([complex(a, b) for a, b in obj["samples"]])
        return cls(pts, dict(obj.get("descriptor", {"type": "raw"})))


def _preimage_cloud(p: UniPoly, values) -> np.ndarray:
    values = np.asarray(values, dtype=complex)
    rows = np.broadcast_to(p.coeffs, (len(values), len(p.coeffs))).copy()
    rows[:, 0] -= values
    return pc.roots_batch(rows).ravel()


def poly_preimage_set(p: UniPoly, K: CompactSet) -> CompactSet:
    """p^{-1}(K) as a raw cloud of deg p * |K| points."""
    if p.degree < 1:
        raise ValueError("deg p must be >= 1")
    return CompactSet.raw(_preimage_cloud(p, K.cloud))


def hausdorff(K1, K2) -> float:
    a = K1.cloud if isinstance(K1, CompactSet) else np.asarray(K1, dtype=complex)
    b = K2.cloud if isinstance(K2, CompactSet) else np.asarray(K2, dtype=complex)
    da, _ = cKDTree(_xy(b)).query(_xy(a))
    db, _ = cKDTree(_xy(a)).query(_xy(b))
    return float(max(da.max(), db.max()))


def preimage_equal(f: UniPoly, g: UniPoly, K: CompactSet, tol: float | None = None):
    """(f^{-1}(K) == g^{-1}(K) within tol, Hausdorff distance)."""
    A = poly_preimage_set(f, K)
    B = poly_preimage_set(g, K)
    d = hausdorff(A, B)
    if tol is None:
        tol = default_tol(A.cloud, B.cloud)
    return bool(d <= tol), d


def factor_compose(f: UniPoly, g: UniPoly) -> UniPoly | None:
    """P with f = P o g, or None when no such polynomial exists."""
    if g.degree < 1:
        raise ValueError("deg g must be >= 1")
    if f.degree % g.degree:
        return None
    return pc.outer_factor(f, g)


def julia_like_check(P: UniPoly, K: CompactSet, tol: float | None = None,
                     return_distance: bool = False):
    """Whether P^{-1}(K) = K within tol."""
    if P.degree < 2:
        raise ValueError("deg P must be >= 2")
    if len(np.unique(np.round(K.cloud, 12))) < 2:
        raise ValueError("K needs at least two distinct points")
    A = poly_preimage_set(P, K)
    d = hausdorff(A, K)
    if tol is None:
        tol = default_tol(A.cloud, K.cloud)
    ok = bool(d <= tol)
    return (ok, d) if return_distance else ok


def _centred(K: CompactSet) -> np.ndarray:
    if K.kind == "raw":
        return K.cloud - K.cloud.mean()
    return K.cloud


def rotation_invariance(K: CompactSet, m_max: int = 12, tol: float | None = None,
                        return_distances: bool = False):
    """Orders m in 2..m_max with exp(2*pi*i/m) K = K within tol."""
    if m_max > 64:
        raise ValueError("m_max must be <= 64")
    c = _centred(K)
    if tol is None:
        tol = default_tol(c)
    hits, dists = [], {}
    for m in range(2, m_max + 1):
        d = hausdorff(c * np.exp(2j * np.pi / m), c)
        dists[m] = d
        if d <= tol:
            hits.append(m)
    return (hits, dists) if return_distances else hits


def uniqueness_verdict(K: CompactSet, P_candidates, m_max: int = 12) -> dict:
    """Instance-level evidence about whether K can be a uniqueness set."""
    julia = []
    for P in P_candidates:
        if P.degree < 2:
            continue
        ok, d = julia_like_check(P, K, return_distance=True)
        julia.append({"P": P.to_literal(), "distance": d, "julia_like": ok})
    rots, dists = rotation_invariance(K, m_max, return_distances=True)
    jl = any(j["julia_like"] for j in julia)
    obstruction = jl or bool(rots)
    return {
        "julia_like": julia, "rotation_orders": rots,
        "rotation_distances": {str(m): d for m, d in dists.items()},
        "obstruction_julia_like": jl, "obstruction_rotation": bool(rots),
        "obstruction": obstruction, "infinite_proxy": len(K) >= INFINITE_PROXY,
        "verdict": ("not a uniqueness set (obstruction found)" if obstruction
                    else "no obstruction found among supplied candidates; not a proof"),
    }


def verdict_json(verdict: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(verdict, fh, indent=2, sort_keys=True)


__all__ = ["CompactSet", "poly_preimage_set", "hausdorff", "preimage_equal", "factor_compose",
           "julia_like_check", "rotation_invariance", "uniqueness_verdict", "spacing",
           "default_tol"]
