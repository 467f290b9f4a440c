"""Polynomial correspondences of the complex plane.

A correspondence is given either by a pair (g, f), whose graph is the curve
{(g(t), f(t))}, or implicitly by a bivariate polynomial Q(x, y). The graph
lives in (x, y)-space and the correspondence sends x to the y-fiber; its
inverse sends z to the x-fiber over y = z. Fibers are always counted with
multiplicity: the raw tables returned by :func:`preimage_table` and
:func:`image_table` list every point as often as it occurs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, NamedTuple

import numpy as np

from . import polycore as pc
from .errors import (
    DegenerateFiber,
    DegreeMismatchWarning,
    FitUnstable,
    ImproperGraph,
)
from .polycore import BiPoly, RootSet, UniPoly

FIBER_LEAD_TOL = 1e-12
LOJ_FIT_MAX_RESIDUAL = 0.1


class DegreePair(NamedTuple):
    d1: int
    d2: int


@dataclass(frozen=True)
class LojasiewiczEstimate:
    value: float
    method: str  # "exact" or "fit"
    residual: float = 0.0

    def to_dict(self) -> dict:
        return {"value": self.value, "method": self.method, "residual": self.residual}


@dataclass(frozen=True, eq=False)
class Correspondence:
    """A polynomial correspondence; build with :meth:`parametrized` or :meth:`implicit`."""

    g: UniPoly | None = None
    f: UniPoly | None = None
    Q: BiPoly | None = None
    name: str = ""

    @classmethod
    def parametrized(cls, g, f, name: str = "") -> "Correspondence":
        g = g if isinstance(g, UniPoly) else UniPoly(g)
        f = f if isinstance(f, UniPoly) else UniPoly(f)
        if g.degree < 1 or f.degree < 1:
            raise ValueError("both g and f must be non-constant")
        return cls(g=g, f=f, name=name)

    @classmethod
    def implicit(cls, Q, name: str = "", check_proper: bool = True) -> "Correspondence":
        Q = Q if isinstance(Q, BiPoly) else BiPoly(Q)
        if Q.deg_x < 1 or Q.deg_y < 1:
            raise ValueError("implicit graph must involve both variables")
        F = cls(Q=Q, name=name)
        if check_proper:
            _check_proper(Q)
        return F

    @property
    def is_parametrized(self) -> bool:
        return self.Q is None

    @cached_property
    def degrees(self) -> DegreePair:
        if self.is_parametrized:
            return DegreePair(self.g.degree, self.f.degree)
        return DegreePair(self.Q.deg_y, self.Q.deg_x)

    @cached_property
    def graph(self) -> BiPoly:
        return graph_poly(self)

    def to_dict(self) -> dict:
        if self.is_parametrized:
            rep = {"type": "parametrized", "g": self.g.to_literal(), "f": self.f.to_literal()}
        else:
            rep = {"type": "implicit", "Q": self.Q.to_literal()}
        return {"name": self.name, "repr": rep}

    @classmethod
    def from_dict(cls, obj: dict) -> "Correspondence":
        rep = obj["repr"]
        name = obj.get("name", "")
        kind = rep.get("type")
        if kind == "parametrized":
            return cls.parametrized(UniPoly.from_literal(rep["g"]),
                                    UniPoly.from_literal(rep["f"]), name=name)
        if kind == "implicit":
            return cls.implicit(BiPoly.from_literal(rep["Q"]), name=name)
        raise ValueError(f"unknown correspondence type {kind!r}")

    def __repr__(self):
        d1, d2 = self.degrees
        label = self.name or ("parametrized" if self.is_parametrized else "implicit")
        return f"Correspondence({label}, degrees=({d1},{d2}))"


def _check_proper(Q: BiPoly, radii=(1.0, 10.0, 100.0, 1000.0), n_angles: int = 16):
    """Reject graphs whose fibers escape to infinity over some finite point.

    The leading coefficient in each variable is sampled on circles of
    growing radius; it must stay a nonzero constant.
    """
    ang = np.exp(2j * np.pi * (np.arange(n_angles) + 0.5) / n_angles)
    pts = np.concatenate([[0.0], np.concatenate([r * ang for r in radii])])
    for lead_poly, label in ((UniPoly(Q.coeffs[:, -1]), "y"), (UniPoly(Q.coeffs[-1, :]), "x")):
        vals = np.abs(lead_poly(pts))
        if vals.min() == 0 or vals.max() > vals.min() * (1 + 1e-6):
            raise ImproperGraph(f"leading coefficient in {label} is not a nonzero constant; "
                                "some fiber escapes to infinity")


def graph_poly(F: Correspondence) -> BiPoly:
    """Graph polynomial of F, normalized to unit leading coefficient in x."""
    if not F.is_parametrized:
        return F.Q
    A = pc.poly_minus_var(F.g, "x")  # g(t) - x in (x, t)
    B = pc.poly_minus_var(F.f, "y")  # f(t) - y in (t, y)
    return pc.resultant_elim(A, B).normalized()


def escape_radius(F: Correspondence) -> float:
    """max(10, 2 * largest root magnitude of the boundary polynomials)."""
    if F.is_parametrized:
        polys = [F.g, F.f]
    else:
        polys = [UniPoly(F.Q.coeffs[:, 0]), UniPoly(F.Q.coeffs[0, :])]
    mags = [0.0]
    for p in polys:
        if p.degree >= 1:
            mags.append(float(np.max(np.abs(pc.roots(p).locations))))
    return max(10.0, 2.0 * max(mags))


# ---------------------------------------------------------------------------
# fibers


def _lead_check(lead_coeffs: np.ndarray, points: np.ndarray, what: str):
    """Raise if the leading coefficient polynomial nearly vanishes at a point."""
    val = np.abs(np.polynomial.polynomial.polyval(points, lead_coeffs))
    bound = np.polynomial.polynomial.polyval(np.abs(points), np.abs(lead_coeffs))
    bad = val <= FIBER_LEAD_TOL * np.maximum(bound, 1e-300)
    if np.any(bad):
        z = complex(points[np.flatnonzero(bad)[0]])
        raise DegenerateFiber(f"{what} fiber over {z} is degenerate", location=z)


def preimage_params(F: Correspondence, zs, init=None) -> np.ndarray:
    """Parameters t with f(t) = z for a parametrized F; shape (N, d2)."""
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    rows = np.broadcast_to(F.f.coeffs, (len(zs), len(F.f.coeffs))).copy()
    rows[:, 0] -= zs
    return pc.roots_batch(rows, init=init)


def image_params(F: Correspondence, xs) -> np.ndarray:
    """Parameters t with g(t) = x for a parametrized F; shape (N, d1)."""
    xs = np.atleast_1d(np.asarray(xs, dtype=complex))
    rows = np.broadcast_to(F.g.coeffs, (len(xs), len(F.g.coeffs))).copy()
    rows[:, 0] -= xs
    return pc.roots_batch(rows)


def preimage_table(F: Correspondence, zs) -> np.ndarray:
    """Raw preimage fibers, one row of d2 points per input point."""
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    if F.is_parametrized:
        return F.g(preimage_params(F, zs))
    _lead_check(F.Q.coeffs[-1, :], zs, "preimage")
    rows = F.Q.in_x(zs).reshape(len(zs), -1)
    return pc.roots_batch(rows)


def preimage_fibers(F: Correspondence, zs, init=None):
    """Preimage fibers with the solved variable kept for warm starts.

    Returns (solved, points): t-roots and their g-images for a parametrized
    F, the x-roots twice for an implicit one. ``init`` is a previous
    ``solved`` array of the same shape.
    """
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    if F.is_parametrized:
        t = preimage_params(F, zs, init=init)
        return t, F.g(t)
    _lead_check(F.Q.coeffs[-1, :], zs, "preimage")
    rows = F.Q.in_x(zs).reshape(len(zs), -1)
    x = pc.roots_batch(rows, init=init)
    return x, x


def image_table(F: Correspondence, xs) -> np.ndarray:
    """Raw image fibers, one row of d1 points per input point."""
    xs = np.atleast_1d(np.asarray(xs, dtype=complex))
    if F.is_parametrized:
        return F.f(image_params(F, xs))
    _lead_check(F.Q.coeffs[:, -1], xs, "image")
    rows = F.Q.in_y(xs).reshape(len(xs), -1)
    return pc.roots_batch(rows)


def merge_radius(locs) -> float:
    locs = np.asarray(locs)
    return pc.CLUSTER_TOL * (1.0 + (float(np.max(np.abs(locs))) if locs.size else 0.0))


def merge_fibers(table: np.ndarray, row_weights=None):
    """Collapse coincident points inside each fiber row.

    Each raw entry carries weight row_weight / d. Returns flat arrays
    (locations, weights, row index) ordered by row, then by first occurrence.
    """
    table = np.atleast_2d(table)
    N, d = table.shape
    rw = np.ones(N) if row_weights is None else np.asarray(row_weights, float)
    w_each = rw / d
    if d == 1:
        return table[:, 0].copy(), w_each.copy(), np.arange(N)
    radius = pc.CLUSTER_TOL * (1.0 + np.max(np.abs(table), axis=1))
    dist = np.abs(table[:, :, None] - table[:, None, :])
    iu = np.triu_indices(d, 1)
    close = np.any(dist[:, iu[0], iu[1]] <= radius[:, None], axis=1)
    if not close.any():
        return table.ravel().copy(), np.repeat(w_each, d), np.repeat(np.arange(N), d)
    # connected components of the closeness graph, per row, by boolean squaring
    adj = (dist <= radius[:, None, None]).astype(np.int64)
    for _ in range(int(np.ceil(np.log2(d)))):
        adj = (adj @ adj > 0).astype(np.int64)
    first = np.argmax(adj, axis=2)
    keep = first == np.arange(d)
    counts = adj.sum(axis=2)
    centres = (adj * table[:, None, :]).sum(axis=2) / counts
    rows = np.broadcast_to(np.arange(N)[:, None], (N, d))
    return centres[keep], (counts * w_each[:, None])[keep], rows[keep]


def preimages(F: Correspondence, z: complex) -> RootSet:
    """The fiber F^{-1}(z) with multiplicities (total d2)."""
    if F.is_parametrized:
        ts = pc.roots(F.f - z)
        locs, w, _ = pc.merge_close(F.g(ts.locations), ts.multiplicities.astype(float),
                                    merge_radius(F.g(ts.locations)))
        return RootSet(locs, np.rint(w).astype(int),
                       np.abs(F.graph(locs, np.full(len(locs), z)))).sorted()
    _lead_check(F.Q.coeffs[-1, :], np.array([z]), "preimage")
    rows = F.Q.in_x(np.array([z])).reshape(1, -1)
    return pc.roots(UniPoly(rows[0]))


def images(F: Correspondence, x: complex) -> RootSet:
    """The fiber F(x) with multiplicities (total d1)."""
    if F.is_parametrized:
        ts = pc.roots(F.g - x)
        locs, w, _ = pc.merge_close(F.f(ts.locations), ts.multiplicities.astype(float),
                                    merge_radius(F.f(ts.locations)))
        return RootSet(locs, np.rint(w).astype(int)).sorted()
    _lead_check(F.Q.coeffs[:, -1], np.array([x]), "image")
    rows = F.Q.in_y(np.array([x])).reshape(1, -1)
    return pc.roots(UniPoly(rows[0]))


def adjoint(F: Correspondence) -> Correspondence:
    """Swap the roles of the two graph variables."""
    name = f"adj({F.name})" if F.name else ""
    if F.is_parametrized:
        return Correspondence(g=F.f, f=F.g, name=name)
    return Correspondence(Q=F.Q.swap(), name=name)


def compose(F2: Correspondence, F1: Correspondence) -> Correspondence:
    """Graph of F2 o F1 (apply F1 first) via elimination of the middle variable."""
    A = F1.graph  # (x, t)
    B = F2.graph  # (t, y)
    R = pc.resultant_elim(A, B).normalized()
    name = f"{F2.name}o{F1.name}" if F1.name and F2.name else ""
    G = Correspondence(Q=R, name=name)
    want = DegreePair(F1.degrees.d1 * F2.degrees.d1, F1.degrees.d2 * F2.degrees.d2)
    if G.degrees != want:
        warnings.warn(f"composed degrees {tuple(G.degrees)} below product bound {tuple(want)}",
                      DegreeMismatchWarning, stacklevel=2)
    return G


def power(F: Correspondence, n: int) -> Correspondence:
    """F^n as an implicit correspondence (F itself for n = 1)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    out = F
    for _ in range(n - 1):
        out = compose(F, out)
    return out


def push_function(F: Correspondence, phi: Callable, z):
    """F_* phi(z): sum of phi over the preimage fiber of z."""
    table = preimage_table(F, z)
    out = np.sum(phi(table), axis=1)
    return out if np.ndim(z) else complex(out[0])


def perron_frobenius(F: Correspondence, phi: Callable, z):
    """Lambda phi(z) = F_* phi(z) / d2, the normalized fiber average."""
    table = preimage_table(F, z)
    out = np.mean(phi(table), axis=1)
    return out if np.ndim(z) else complex(out[0])


def lojasiewicz_exponent(F: Correspondence, radii=None, n_angles: int = 64) -> LojasiewiczEstimate:
    """Growth exponent of |y| against |x| on the graph near infinity.

    Exact ratio deg f / deg g for parametrized input; otherwise a log-log
    least-squares fit of min |y| over circles |x| = R.
    """
    if F.is_parametrized:
        return LojasiewiczEstimate(F.f.degree / F.g.degree, "exact")
    radii = np.logspace(2, 5, 7) if radii is None else np.asarray(radii, float)
    ang = np.exp(2j * np.pi * (np.arange(n_angles) + 0.25) / n_angles)
    logm = []
    for R in radii:
        ys = image_table(F, R * ang)
        logm.append(np.log(np.min(np.abs(ys))))
    logR = np.log(radii)
    A = np.vstack([logR, np.ones_like(logR)]).T
    coef, *_ = np.linalg.lstsq(A, np.array(logm), rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - logm) ** 2)))
    if resid > LOJ_FIT_MAX_RESIDUAL:
        raise FitUnstable(f"log-log fit residual {resid:.3g}")
    return LojasiewiczEstimate(float(coef[0]), "fit", resid)


def critical_value_poly(F: Correspondence) -> RootSet:
    """Finite set of bad values off which F^{-1} has d2 local branches.

    Union of the critical values of the second projection with the forward
    images of the critical values of the first. For implicit graphs the
    discriminant route returns a superset.
    """
    vals = []
    if F.is_parametrized:
        f, g = F.f, F.g
        if f.degree >= 2:
            vals.extend(f(pc.roots(f.deriv()).locations))
        if g.degree >= 2:
            for x in g(pc.roots(g.deriv()).locations):
                vals.extend(images(F, x).locations)
    else:
        Q = F.Q
        disc_y = pc.resultant_in_param(Q, Q.dx())
        if disc_y.degree >= 1:
            vals.extend(pc.roots(disc_y).locations)
        disc_x = pc.resultant_in_param(Q.swap(), Q.dy().swap())
        if disc_x.degree >= 1:
            for x in pc.roots(disc_x).locations:
                vals.extend(images(F, x).locations)
    vals = np.asarray(vals, dtype=complex)
    if vals.size == 0:
        return RootSet(vals, np.zeros(0, int))
    locs, _, _ = pc.merge_close(vals, np.ones(len(vals)), merge_radius(vals))
    return RootSet(locs, np.ones(len(locs), int)).sorted()
