"""Complex polynomial arithmetic in one and two variables.

Univariate polynomials are stored with ascending coefficients. Root finding
uses a vectorised Aberth-Ehrlich iteration so that whole batches of
same-degree polynomials (one per fiber) are solved in a single call.
Bivariate elimination goes through evaluation on a grid of scaled roots of
unity, a Sylvester determinant per node, and an FFT interpolation back to
coefficients.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import (
    DegenerateResultant,
    IllConditionedWarning,
    NonConvergence,
    ZeroPolynomial,
)

ABERTH_MAXIT = 500
ABERTH_STEP_TOL = 1e-13
CLUSTER_TOL = 1e-7
TRIM_REL = 1e-9
INTERP_RESIDUAL_MAX = 1e-6


def _as_coeffs(values) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values, dtype=complex)).copy()
    if arr.ndim != 1:
        raise ValueError("univariate coefficients must be one-dimensional")
    nz = np.flatnonzero(arr)
    arr = arr[: nz[-1] + 1] if nz.size else arr[:1] * 0
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class UniPoly:
    """Complex univariate polynomial, coefficients in ascending degree."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _as_coeffs(self.coeffs))

    @classmethod
    def from_roots(cls, roots, lead=1.0) -> "UniPoly":
        return cls(lead * npoly.polyfromroots(np.asarray(roots, dtype=complex)))

    @classmethod
    def monomial(cls, n: int, c=1.0) -> "UniPoly":
        out = np.zeros(n + 1, dtype=complex)
        out[n] = c
        return cls(out)

    @classmethod
    def identity(cls) -> "UniPoly":
        return cls([0.0, 1.0])

    @property
    def degree(self) -> int:
        return -1 if self.is_zero else len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return len(self.coeffs) == 1 and self.coeffs[0] == 0

    @property
    def lead(self) -> complex:
        return complex(self.coeffs[-1])

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    def __call__(self, z):
        return eval_poly(self, z)

    def _coerce(self, other) -> "UniPoly":
        return other if isinstance(other, UniPoly) else UniPoly([other])

    def __add__(self, other):
        return UniPoly(npoly.polyadd(self.coeffs, self._coerce(other).coeffs))

    __radd__ = __add__

    def __sub__(self, other):
        return UniPoly(npoly.polysub(self.coeffs, self._coerce(other).coeffs))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return UniPoly(-self.coeffs)

    def __mul__(self, other):
        if isinstance(other, UniPoly):
            return UniPoly(np.convolve(self.coeffs, other.coeffs))
        return UniPoly(self.coeffs * complex(other))

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = UniPoly([1.0])
        for _ in range(n):
            out = out * self
        return out

    def deriv(self) -> "UniPoly":
        if len(self.coeffs) == 1:
            return UniPoly([0.0])
        return UniPoly(npoly.polyder(self.coeffs))

    def compose(self, inner: "UniPoly") -> "UniPoly":
        return compose(self, inner)

    def allclose(self, other: "UniPoly", atol=1e-10) -> bool:
        n = max(len(self.coeffs), len(other.coeffs))
        a = np.zeros(n, complex)
        b = np.zeros(n, complex)
        a[: len(self.coeffs)] = self.coeffs
        b[: len(other.coeffs)] = other.coeffs
        return bool(np.max(np.abs(a - b)) <= atol)

    def to_literal(self) -> list:
        return [[float(c.real), float(c.imag)] for c in self.coeffs]

    @classmethod
    def from_literal(cls, pairs) -> "UniPoly":
        """Parse ``[[re, im], ...]`` (plain numbers are accepted as reals)."""
        vals = []
        for item in pairs:
            if isinstance(item, (list, tuple)):
                re, im = item
                vals.append(complex(re, im))
            else:
                vals.append(complex(item))
        return cls(vals)

    def __repr__(self):
        terms = []
        for k, c in enumerate(self.coeffs):
            if c != 0:
                terms.append(f"({c:.6g})z^{k}")
        return "UniPoly(" + (" + ".join(terms) or "0") + ")"


def eval_poly(p: UniPoly, z):
    """Horner evaluation of ``p`` at ``z`` (scalar or array)."""
    out = npoly.polyval(z, p.coeffs)
    if np.ndim(out) == 0:
        return complex(out)
    return out


def compose(p: UniPoly, q: UniPoly) -> UniPoly:
    """Return ``p o q``."""
    out = np.array([p.coeffs[-1]], dtype=complex)
    for c in p.coeffs[-2::-1]:
        out = np.convolve(out, q.coeffs)
        out[0] += c
    return UniPoly(out)


def chebyshev(m: int) -> UniPoly:
    """Chebyshev polynomial T_m from the three-term recurrence."""
    if m < 0:
        raise ValueError("m must be non-negative")
    prev, cur = UniPoly([1.0]), UniPoly([0.0, 1.0])
    if m == 0:
        return prev
    two_z = UniPoly([0.0, 2.0])
    for _ in range(m - 1):
        prev, cur = cur, two_z * cur - prev
    return cur


# ---------------------------------------------------------------------------
# root finding


def _newton_ratio(c: np.ndarray, z: np.ndarray, with_noise: bool = False):
    """p(z)/p'(z) row-wise for monic coefficient rows ``c`` (N, n+1).

    Points outside the unit disk are handled through the reversed
    polynomial so high degrees do not overflow. With ``with_noise`` also
    return a mask of points whose residual is already at rounding level.
    """
    n = c.shape[1] - 1
    ca = np.abs(c)
    inside = np.abs(z) <= 1.0
    zi = np.where(inside, z, 0.0)
    azi = np.abs(zi)
    p = np.broadcast_to(c[:, -1:], z.shape).astype(complex)
    pa = np.broadcast_to(ca[:, -1:], z.shape).astype(float)
    dp = np.zeros_like(p)
    for k in range(n - 1, -1, -1):
        dp = dp * zi + p
        p = p * zi + c[:, k : k + 1]
        pa = pa * azi + ca[:, k : k + 1]
    w = np.where(inside, 1.0, 1.0 / np.where(inside, 1.0, z))
    aw = np.abs(w)
    q = np.broadcast_to(c[:, :1], z.shape).astype(complex)
    qa = np.broadcast_to(ca[:, :1], z.shape).astype(float)
    dq = np.zeros_like(q)
    for k in range(1, n + 1):
        dq = dq * w + q
        q = q * w + c[:, k : k + 1]
        qa = qa * aw + ca[:, k : k + 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        r_in = p / dp
        r_out = z * q / (n * q - w * dq)
    ratio = np.where(inside, r_in, r_out)
    if not with_noise:
        return ratio
    gamma = 8 * n * np.finfo(float).eps
    noise = np.where(inside, np.abs(p) <= gamma * pa, np.abs(q) <= gamma * qa)
    return ratio, noise


def _initial_guesses(c: np.ndarray, offset: float) -> np.ndarray:
    n = c.shape[1] - 1
    k = np.arange(n)
    mags = np.abs(c[:, :n])
    expo = 1.0 / (n - k)
    rho = np.max(mags ** expo[None, :], axis=1)
    rho = np.where(rho > 0, rho, 1.0)
    ang = 2 * np.pi * k / n + offset + 0.01 * k / max(n, 1)
    return rho[:, None] * np.exp(1j * ang)[None, :]


def aberth_batch(coeffs, maxit: int = ABERTH_MAXIT, step_tol: float = ABERTH_STEP_TOL,
                 offset: float = 0.4, init=None):
    """Simultaneous Aberth-Ehrlich iteration over a batch of polynomials.

    Parameters
    ----------
    coeffs : array_like, shape (N, n+1)
        Ascending coefficients, one polynomial per row, all of exact degree n.
    init : array_like, shape (N, n), optional
        Warm-start approximations, e.g. the roots of a nearby polynomial.

    Returns
    -------
    roots : ndarray, shape (N, n)
        Roots listed with multiplicity (multiple roots appear as tight
        clusters).
    converged : ndarray of bool, shape (N,)
    """
    c = np.atleast_2d(np.asarray(coeffs, dtype=complex))
    n = c.shape[1] - 1
    if n < 1:
        raise ValueError("degree must be at least 1")
    lead = c[:, -1:]
    if np.any(lead == 0):
        raise ZeroPolynomial("leading coefficient is zero")
    c = c / lead
    if n == 1:
        return -c[:, :1], np.ones(c.shape[0], dtype=bool)
    z = _initial_guesses(c, offset) if init is None else np.array(init, dtype=complex)
    done = np.zeros(z.shape, dtype=bool)
    eye = np.eye(n, dtype=bool)
    for _ in range(maxit):
        ratio, noise = _newton_ratio(c, z, with_noise=True)
        diff = z[:, :, None] - z[:, None, :]
        diff[:, eye] = 1.0
        inv = 1.0 / diff
        inv[:, eye] = 0.0
        s = inv.sum(axis=2)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = ratio / (1.0 - ratio * s)
        bad = ~np.isfinite(step)
        if np.any(bad):
            # derivative vanished exactly; nudge off the critical point
            step = np.where(bad, 1e-3 * (1 + np.abs(z)) * np.exp(0.7j), step)
        step = np.where(done, 0.0, step)
        z = z - step
        done |= noise | (np.abs(step) <= step_tol * np.maximum(1.0, np.abs(z)))
        if done.all():
            break
    return z, done.all(axis=1)


def _inclusion_radii(p: np.ndarray, z: np.ndarray) -> np.ndarray:
    """n(|p| + rounding bound)/|p'| at each approximate root.

    Without the rounding term a perturbed multiple root can evaluate to an
    exact floating zero and never merge with its siblings.
    """
    n = len(p) - 1
    c = p / p[-1]
    ca = np.abs(c)
    gamma = 4 * n * np.finfo(float).eps
    out = np.empty(len(z))
    for i, zi in enumerate(z):
        az = abs(zi)
        if az <= 1:
            v = npoly.polyval(zi, c)
            d = npoly.polyval(zi, npoly.polyder(c))
            bound = npoly.polyval(az, ca)
            num, den = abs(v) + gamma * bound, abs(d)
        else:
            w = 1 / zi
            rc = c[::-1]
            q = npoly.polyval(w, rc)
            dq = npoly.polyval(w, npoly.polyder(rc))
            bound = npoly.polyval(abs(w), ca[::-1])
            num, den = az * (abs(q) + gamma * bound), abs(n * q - w * dq)
        out[i] = n * num / den if den > 0 else np.inf
    return out


def merge_close(locs, weights, radius, extra=None):
    """Union-find merge of points closer than ``radius`` (plus per-point slack).

    Returns (centres, summed weights, labels). Centres are weight-averaged.
    """
    locs = np.asarray(locs, dtype=complex)
    weights = np.asarray(weights, dtype=float)
    m = len(locs)
    parent = list(range(m))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    if m > 1:
        d = np.abs(locs[:, None] - locs[None, :])
        thr = np.full_like(d, radius)
        if extra is not None:
            e = np.minimum(np.asarray(extra, dtype=float), np.inf)
            thr = thr + e[:, None] + e[None, :]
        ii, jj = np.nonzero(np.triu(d <= thr, 1))
        for i, j in zip(ii, jj):
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    labels = np.array([find(i) for i in range(m)], dtype=int)
    uniq, labels = np.unique(labels, return_inverse=True)
    w = np.bincount(labels, weights=weights, minlength=len(uniq))
    centres = np.bincount(labels, weights=(locs * weights).real, minlength=len(uniq)) \
        + 1j * np.bincount(labels, weights=(locs * weights).imag, minlength=len(uniq))
    centres = centres / np.where(w > 0, w, 1.0)
    return centres, w, labels


@dataclass(frozen=True, eq=False)
class RootSet:
    """Distinct root locations with multiplicities and residuals |p(z)|."""

    locations: np.ndarray
    multiplicities: np.ndarray
    residuals: np.ndarray = field(default=None)
    valid: bool = True

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=complex)
        mult = np.asarray(self.multiplicities, dtype=int)
        res = np.zeros(len(loc)) if self.residuals is None else np.asarray(self.residuals, float)
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "multiplicities", mult)
        object.__setattr__(self, "residuals", res)

    @property
    def total(self) -> int:
        return int(self.multiplicities.sum())

    def __len__(self):
        return len(self.locations)

    def __iter__(self):
        return iter(zip(self.locations.tolist(), self.multiplicities.tolist()))

    def expanded(self) -> np.ndarray:
        """Locations repeated by multiplicity."""
        return np.repeat(self.locations, self.multiplicities)

    def sorted(self) -> "RootSet":
        order = np.lexsort((self.locations.imag.round(9), self.locations.real.round(9)))
        return RootSet(self.locations[order], self.multiplicities[order],
                       self.residuals[order], self.valid)


def _polish(p: UniPoly, z: complex, mult: int, iters: int = 3) -> complex:
    dp = p.deriv()
    best, best_res = z, abs(p(z))
    for _ in range(iters):
        d = dp(best)
        if d == 0:
            break
        cand = best - mult * p(best) / d
        res = abs(p(cand))
        if not res < best_res:
            break
        best, best_res = cand, res
    return best


def cluster_raw_roots(p: UniPoly, raw: np.ndarray, tol: float = CLUSTER_TOL) -> RootSet:
    """Group raw simultaneous-iteration output into roots with multiplicity."""
    raw = np.asarray(raw, dtype=complex)
    radius = tol * (1.0 + float(np.max(np.abs(raw))))
    slack = _inclusion_radii(p.coeffs, raw)
    centres, w, _ = merge_close(raw, np.ones(len(raw)), radius, extra=slack)
    mult = np.rint(w).astype(int)
    locs = np.array([_polish(p, c, m) for c, m in zip(centres, mult)], dtype=complex)
    res = np.abs(p(locs)) if len(locs) else np.zeros(0)
    return RootSet(locs, mult, np.atleast_1d(res)).sorted()


def roots(p: UniPoly, tol: float = CLUSTER_TOL) -> RootSet:
    """All complex roots of ``p`` with multiplicities.

    Raises
    ------
    ZeroPolynomial
        ``p`` is identically zero.
    NonConvergence
        The iteration cap was hit twice (second try with rotated starts);
        the exception carries the partial, invalid ``RootSet``.
    """
    if p.is_zero:
        raise ZeroPolynomial("cannot solve the zero polynomial")
    if p.degree < 1:
        raise ValueError("polynomial must have degree >= 1")
    raw, ok = aberth_batch(p.coeffs[None, :])
    if not ok[0]:
        raw, ok = aberth_batch(p.coeffs[None, :], offset=1.9)
    rs = cluster_raw_roots(p, raw[0], tol)
    if not ok[0]:
        bad = RootSet(rs.locations, rs.multiplicities, rs.residuals, valid=False)
        raise NonConvergence("Aberth iteration cap reached", partial=bad)
    return rs


def roots_batch(coeffs, init=None) -> np.ndarray:
    """Raw roots (with multiplicity) for a batch of same-degree polynomials.

    Rows that fail to converge are retried with rotated cold-start guesses
    before giving up.
    """
    c = np.atleast_2d(np.asarray(coeffs, dtype=complex))
    raw, ok = aberth_batch(c, init=init)
    if not ok.all():
        idx = np.flatnonzero(~ok)
        raw2, ok2 = aberth_batch(c[idx], offset=1.9)
        raw[idx] = raw2
        if not ok2.all():
            raise NonConvergence(f"{int((~ok2).sum())} fibers did not converge", partial=raw)
    return raw


# ---------------------------------------------------------------------------
# functional decomposition helpers


def _series_power(a: np.ndarray, alpha: float, nterms: int) -> np.ndarray:
    """First ``nterms`` coefficients of (1 + a1 u + a2 u^2 + ...)^alpha."""
    s = np.zeros(nterms, dtype=complex)
    s[0] = 1.0
    a = np.concatenate([[1.0], a, np.zeros(nterms)])[:nterms]
    for k in range(1, nterms):
        acc = 0j
        for j in range(1, k + 1):
            acc += (alpha * j - (k - j)) * a[j] * s[k - j]
        s[k] = acc / k
    return s


def outer_factor(f: UniPoly, h: UniPoly, check_points: int = 100, rel_tol: float = 1e-8):
    """Find P with ``f = P o h`` or return None.

    P is interpolated from values of f at points t_j with h(t_j) on a circle
    of roots of unity, then verified on random points of the unit circle.
    """
    if h.degree < 1 or f.degree < 0:
        return None
    if f.degree % h.degree:
        return None
    k = f.degree // h.degree
    n_nodes = k + 1
    rho = max(1.0, abs(h(0.0)) + 1.0)
    u = rho * np.exp(2j * np.pi * np.arange(n_nodes) / n_nodes)
    vals = np.empty(n_nodes, dtype=complex)
    for j, uj in enumerate(u):
        t = roots(h - uj).locations[0]
        vals[j] = f(t)
    pc = np.fft.fft(vals) / n_nodes
    # fft with exp(-i...) inverts evaluation at exp(+i...) nodes
    pc = pc / rho ** np.arange(n_nodes)
    P = UniPoly(pc)
    rng = np.random.default_rng(12345)
    t = np.exp(2j * np.pi * rng.random(check_points)) * (1 + rng.random(check_points))
    err = np.max(np.abs(f(t) - P(h(t))))
    scale = max(1.0, float(np.max(np.abs(f(t)))))
    if err > rel_tol * scale:
        return None
    return P


def right_factor_candidate(g: UniPoly, k: int) -> UniPoly | None:
    """Monic h with h(0)=0 and deg h = k such that g could equal B o h."""
    n = g.degree
    if k < 1 or n % k:
        return None
    r = n // k
    a = (g.coeffs / g.lead)[::-1][1:]  # coefficients of u, u^2, ... with u=1/z
    s = _series_power(a, 1.0 / r, k)
    hc = np.zeros(k + 1, dtype=complex)
    for j in range(k):
        hc[k - j] = s[j]
    return UniPoly(hc)


def common_right_factor(f: UniPoly, g: UniPoly):
    """Largest-degree common right compositional factor h of f and g.

    Returns (A, B, h) with f = A o h and g = B o h, or None when the only
    common factor is affine.
    """
    d = math.gcd(f.degree, g.degree)
    for k in sorted((k for k in range(2, d + 1) if d % k == 0), reverse=True):
        h = right_factor_candidate(g, k)
        if h is None:
            continue
        B = outer_factor(g, h)
        A = outer_factor(f, h)
        if A is not None and B is not None:
            return A, B, h
    return None


# ---------------------------------------------------------------------------
# bivariate polynomials


def _as_bicoeffs(values) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(values, dtype=complex)).copy()
    rows = np.flatnonzero(np.any(arr != 0, axis=1))
    cols = np.flatnonzero(np.any(arr != 0, axis=0))
    if rows.size == 0:
        arr = np.zeros((1, 1), dtype=complex)
    else:
        arr = arr[: rows[-1] + 1, : cols[-1] + 1]
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BiPoly:
    """Complex polynomial sum c[i, j] x^i y^j."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _as_bicoeffs(self.coeffs))

    @property
    def deg_x(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def deg_y(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    def __call__(self, x, y):
        out = npoly.polyval2d(x, y, self.coeffs)
        return complex(out) if np.ndim(out) == 0 else out

    def in_y(self, x) -> np.ndarray:
        """Coefficient rows in y after fixing x; shape (..., deg_y+1)."""
        v = npoly.polyval(np.asarray(x, dtype=complex), self.coeffs)
        return np.moveaxis(np.asarray(v), 0, -1)

    def in_x(self, y) -> np.ndarray:
        """Coefficient rows in x after fixing y; shape (..., deg_x+1)."""
        v = npoly.polyval(np.asarray(y, dtype=complex), self.coeffs.T)
        return np.moveaxis(np.asarray(v), 0, -1)

    def swap(self) -> "BiPoly":
        return BiPoly(self.coeffs.T)

    def dx(self) -> "BiPoly":
        if self.deg_x == 0:
            return BiPoly([[0.0]])
        return BiPoly(npoly.polyder(self.coeffs, axis=0))

    def dy(self) -> "BiPoly":
        if self.deg_y == 0:
            return BiPoly([[0.0]])
        return BiPoly(npoly.polyder(self.coeffs, axis=1))

    def diagonal(self) -> UniPoly:
        """Q(x, x) as a univariate polynomial."""
        c = self.coeffs
        out = np.zeros(c.shape[0] + c.shape[1] - 1, dtype=complex)
        for j in range(c.shape[1]):
            out[j : j + c.shape[0]] += c[:, j]
        return UniPoly(out)

    def trimmed(self, rel: float = TRIM_REL) -> "BiPoly":
        c = np.array(self.coeffs)
        if c.size:
            c[np.abs(c) < rel * np.max(np.abs(c))] = 0
        return BiPoly(c)

    def normalized(self) -> "BiPoly":
        top = self.coeffs[-1]
        lead = top[np.argmax(np.abs(top))]
        return BiPoly(self.coeffs / lead)

    def allclose(self, other: "BiPoly", atol=1e-9) -> bool:
        sx = max(self.coeffs.shape[0], other.coeffs.shape[0])
        sy = max(self.coeffs.shape[1], other.coeffs.shape[1])
        a = np.zeros((sx, sy), complex)
        b = np.zeros((sx, sy), complex)
        a[: self.coeffs.shape[0], : self.coeffs.shape[1]] = self.coeffs
        b[: other.coeffs.shape[0], : other.coeffs.shape[1]] = other.coeffs
        return bool(np.max(np.abs(a - b)) <= atol)

    def to_literal(self) -> dict:
        return {
            "deg_x": self.deg_x,
            "deg_y": self.deg_y,
            "coeffs": [[float(v.real), float(v.imag)] for v in self.coeffs.ravel()],
        }

    @classmethod
    def from_literal(cls, obj) -> "BiPoly":
        """Row-major ``[[re, im], ...]`` with declared ``deg_x``/``deg_y``."""
        nx, ny = int(obj["deg_x"]) + 1, int(obj["deg_y"]) + 1
        vals = []
        for item in obj["coeffs"]:
            vals.append(complex(*item) if isinstance(item, (list, tuple)) else complex(item))
        if len(vals) != nx * ny:
            raise ValueError(f"expected {nx * ny} coefficients, got {len(vals)}")
        return cls(np.array(vals, dtype=complex).reshape(nx, ny))

    @classmethod
    def from_dict(cls, terms: dict) -> "BiPoly":
        """Build from ``{(i, j): c}``."""
        nx = max(i for i, _ in terms) + 1
        ny = max(j for _, j in terms) + 1
        c = np.zeros((nx, ny), dtype=complex)
        for (i, j), v in terms.items():
            c[i, j] += v
        return cls(c)


def sylvester_det(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Batched Sylvester resultant of ascending coefficient rows.

    ``a`` has shape (..., m+1) and ``b`` shape (..., n+1); the formal degrees
    m and n are used even when leading entries vanish.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    m = a.shape[-1] - 1
    n = b.shape[-1] - 1
    if m == 0:
        return a[..., 0] ** n
    if n == 0:
        return b[..., 0] ** m
    batch = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
    a = np.broadcast_to(a, batch + a.shape[-1:])
    b = np.broadcast_to(b, batch + b.shape[-1:])
    size = m + n
    S = np.zeros(batch + (size, size), dtype=complex)
    ar = a[..., ::-1]
    br = b[..., ::-1]
    for i in range(n):
        S[..., i, i : i + m + 1] = ar
    for i in range(m):
        S[..., n + i, i : i + n + 1] = br
    return np.linalg.det(S)


def resultant_elim(A: BiPoly, B: BiPoly, trim: float = TRIM_REL,
                   check: bool = True) -> BiPoly:
    """Eliminate the shared variable t between A(x, t) and B(t, y).

    Returns Res_t(A, B) as a polynomial in (x, y). The degree bounds
    deg_x A * deg_t B and deg_y B * deg_t A fix the size of the evaluation
    grid; coefficients below ``trim`` times the largest are set to zero.

    Raises
    ------
    DegenerateResultant
        The resultant vanishes identically (A and B share a factor in t).

    Warns
    -----
    IllConditionedWarning
        Off-grid check values disagree with the interpolant by more than
        ``INTERP_RESIDUAL_MAX`` (relative).
    """
    degt_a = A.deg_y
    degt_b = B.deg_x
    if degt_a == 0 and degt_b == 0:
        raise DegenerateResultant("neither input depends on the eliminated variable")
    Dx = A.deg_x * degt_b
    Dy = B.deg_y * degt_a
    Nx, Ny = Dx + 1, Dy + 1
    xs = np.exp(2j * np.pi * np.arange(Nx) / Nx)
    ys = np.exp(2j * np.pi * np.arange(Ny) / Ny)
    a_rows = A.in_y(xs)  # (Nx, degt_a + 1)
    b_rows = B.in_x(ys)  # (Ny, degt_b + 1)
    vals = sylvester_det(a_rows[:, None, :], b_rows[None, :, :])
    vals = np.atleast_2d(vals).reshape(Nx, Ny)
    scale = (max(A.scale, 1e-300) ** degt_b) * (max(B.scale, 1e-300) ** degt_a) \
        * math.factorial(min(degt_a + degt_b, 20))
    if np.max(np.abs(vals)) <= 1e-10 * scale:
        raise DegenerateResultant("resultant vanishes on the whole evaluation grid")
    C = np.fft.fft2(vals) / (Nx * Ny)
    R = BiPoly(C).trimmed(trim)
    if check:
        rng = np.random.default_rng(7)
        px = 0.9 * np.exp(2j * np.pi * rng.random(4))
        py = 0.9 * np.exp(2j * np.pi * rng.random(4))
        direct = sylvester_det(A.in_y(px), B.in_x(py))
        resid = np.max(np.abs(direct - R(px, py))) / np.max(np.abs(vals))
        if resid > INTERP_RESIDUAL_MAX:
            warnings.warn(
                f"resultant interpolation residual {resid:.2e}", IllConditionedWarning,
                stacklevel=2,
            )
    return R


def resultant_in_param(A: BiPoly, B: BiPoly, trim: float = TRIM_REL) -> UniPoly:
    """Res_t(A(t, z), B(t, z)) as a polynomial in z (shared parameter z)."""
    degt_a, degt_b = A.deg_x, B.deg_x
    D = A.deg_y * degt_b + B.deg_y * degt_a
    N = D + 1
    zs = np.exp(2j * np.pi * np.arange(N) / N)
    vals = sylvester_det(A.in_x(zs), B.in_x(zs))
    if np.max(np.abs(vals)) == 0:
        raise DegenerateResultant("parametric resultant vanishes identically")
    c = np.fft.fft(vals) / N
    c[np.abs(c) < trim * np.max(np.abs(c))] = 0
    return UniPoly(c)


def poly_to_bipoly_x(p: UniPoly) -> BiPoly:
    """p(x) viewed as a bivariate polynomial constant in y."""
    return BiPoly(p.coeffs[:, None])


def poly_to_bipoly_y(p: UniPoly) -> BiPoly:
    return BiPoly(p.coeffs[None, :])


def poly_minus_var(p: UniPoly, var: str = "x") -> BiPoly:
    """p(t) - s as a BiPoly in (t, s) (var='y') or (s, t) (var='x')."""
    c = np.zeros((len(p.coeffs), 2), dtype=complex)
    c[:, 0] = p.coeffs
    c[0, 1] -= 1.0
    bp = BiPoly(c)  # rows: t, cols: s
    return bp.swap() if var == "x" else bp


__all__: Sequence[str] = [
    "UniPoly", "BiPoly", "RootSet", "eval_poly", "compose", "chebyshev", "roots",
    "roots_batch", "aberth_batch", "cluster_raw_roots", "merge_close",
    "resultant_elim", "resultant_in_param", "sylvester_det", "outer_factor",
    "common_right_factor", "right_factor_candidate", "poly_minus_var",
]
