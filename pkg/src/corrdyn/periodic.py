"""Periodic points of iterated correspondences.

Period-n points of F are the zeros of D(x) = Q_n(x, x), where Q_n is the
graph of F^n. For a proper graph the leading y-coefficient of Q_n is
constant, so up to a constant

    D(x) = prod_j (x - y_j(x)),

the product running over the forward chains x -> y_1 -> ... -> y_n counted
with multiplicity. We never expand D in the monomial basis, which is badly
conditioned at the degrees involved (T_243 has coefficients near 2**242).
Instead Aberth iteration is run on D directly: the logarithmic derivative
D'/D = sum_j (1 - y_j'(x)) / (x - y_j(x)) only needs the chains and their
derivatives, both available from the fibers. The expanded resultant route is
kept as ``diagonal_poly`` for cross-checks at small degree.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import spearmanr

from . import correspondence as cr
from . import equilibrium as eq
from . import polycore as pc
from .correspondence import Correspondence
from .errors import DiagonalDegenerate, TreeTooLarge

DEGREE_GUARD = 2000
CLASS_MARGIN = 1e-6
DERIV_ZERO = 1e-8
CHAIN_GUARD = 10**6


@dataclass(frozen=True)
class PeriodicPoint:
    """A periodic point with the multiplier of its recovered cycle.

    ``multiplier`` is the forward derivative along the cycle (may be
    infinite when a g' factor vanishes); ``inverse_multiplier`` is the
    derivative of the inverse branch. Both are None for Irregular points.
    """

    location: complex
    period: int
    multiplicity: int
    multiplier: complex | None
    inverse_multiplier: complex | None
    cls: str
    minimal_period: int
    cycle: tuple = ()

    def to_dict(self) -> dict:
        def part(v, attr):
            if v is None or not np.isfinite(v):
                return None
            return float(getattr(v, attr))

        z = complex(self.location)
        return {
            "re": z.real, "im": z.imag, "mult": int(self.multiplicity),
            "multiplier_re": part(self.multiplier, "real"),
            "multiplier_im": part(self.multiplier, "imag"),
            "inverse_multiplier_abs": None if self.inverse_multiplier is None
            else float(abs(self.inverse_multiplier)),
            "class": self.cls, "minimal_period": int(self.minimal_period),
        }


@dataclass
class PeriodicReport:
    n: int
    d2_pow_n: int
    points: list
    count_with_multiplicity: int
    nu_distance: float | None = None
    flags: list = field(default_factory=list)
    intersection: dict | None = None

    def measure(self, classes=("repelling",), minimal_only: bool = False) -> eq.PointMeasure:
        """nu_n: weight multiplicity / d2^n on the selected points."""
        pts = [p for p in self.points if p.cls in classes
               and (not minimal_only or p.minimal_period == self.n)]
        locs = [p.location for p in pts]
        w = [p.multiplicity / self.d2_pow_n for p in pts]
        return eq.PointMeasure(np.array(locs, dtype=complex), np.array(w, dtype=float))

    def to_dict(self) -> dict:
        d = {"n": self.n, "d2_pow_n": self.d2_pow_n,
             "count_with_multiplicity": self.count_with_multiplicity,
             "points": [p.to_dict() for p in self.points],
             "nu_distance": self.nu_distance, "flags": list(self.flags)}
        if self.intersection is not None:
            d["intersection"] = self.intersection
        return d

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)

    def to_csv(self, path) -> None:
        keys = ["re", "im", "mult", "multiplier_re", "multiplier_im",
                "inverse_multiplier_abs", "class", "minimal_period"]
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(keys)
            for p in self.points:
                d = p.to_dict()
                wr.writerow(["" if d[k] is None else repr(d[k]) if isinstance(d[k], float)
                             else d[k] for k in keys])


# ---------------------------------------------------------------------------
# forward chains


def _abs_eval(p: pc.UniPoly, t):
    return np.polynomial.polynomial.polyval(np.abs(t), np.abs(p.coeffs))


def _step(S: Correspondence, x: np.ndarray):
    """Images of the points x under S with step derivatives.

    Returns y, fwd, inv, irregular and the unthresholded forward ratio
    ``raw``, all of shape (len(x), d1).
    """
    if S.is_parametrized:
        t = cr.image_params(S, x)
        gd, fd = S.g.deriv(), S.f.deriv()
        gp, fp = gd(t), fd(t)
        y = S.f(t)
        g0 = np.abs(gp) <= DERIV_ZERO * _abs_eval(gd, 1 + np.abs(t))
        f0 = np.abs(fp) <= DERIV_ZERO * _abs_eval(fd, 1 + np.abs(t))
        if gd.degree < 0 or gd.is_zero:
            g0 = np.ones_like(g0)
        if fd.is_zero:
            f0 = np.ones_like(f0)
        num, den = fp, gp
        zero_num, zero_den = f0, g0
    else:
        y = cr.image_table(S, x)
        xx = np.broadcast_to(x[:, None], y.shape)
        qx, qy = S.Q.dx(), S.Q.dy()
        num, den = -qx(xx, y), qy(xx, y)
        ux, uy = 1 + np.abs(xx), 1 + np.abs(y)
        ax = np.polynomial.polynomial.polyval2d(ux, uy, np.abs(qx.coeffs))
        ay = np.polynomial.polynomial.polyval2d(ux, uy, np.abs(qy.coeffs))
        zero_num = np.abs(num) <= DERIV_ZERO * ax
        zero_den = np.abs(den) <= DERIV_ZERO * ay
    with np.errstate(divide="ignore", invalid="ignore"):
        fwd = np.where(zero_den, np.inf, num / np.where(zero_den, 1.0, den))
        inv = np.where(zero_num, np.inf, den / np.where(zero_num, 1.0, num))
        raw = num / den
    irregular = zero_num & zero_den
    fwd = np.where(irregular, np.nan, fwd)
    inv = np.where(irregular, np.nan, inv)
    return y, fwd, inv, irregular, raw


def _mul_inf(a, b):
    """Complex product that keeps inf * w = inf for w != 0 (no inf+nanj)."""
    prod = a * b
    infinite = (np.isinf(a) & (b != 0)) | (np.isinf(b) & (a != 0))
    return np.where(infinite & ~np.isnan(a) & ~np.isnan(b), np.inf, prod)


def forward_chains(steps, x, keep_path: bool = False):
    """All forward chains of length len(steps) from each point of x.

    Returns a dict with arrays of shape (len(x), K): ``end``, ``fwd`` and
    ``inv`` (derivative products) and ``irregular``; with ``keep_path`` also
    ``path`` of shape (len(x), K, len(steps) + 1).
    """
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    M = len(x)
    cur = x[:, None]
    fwd = np.ones((M, 1), dtype=complex)
    inv = np.ones((M, 1), dtype=complex)
    irr = np.zeros((M, 1), dtype=bool)
    raw = np.ones((M, 1), dtype=complex)
    path = cur[:, :, None] if keep_path else None
    for S in steps:
        K = cur.shape[1]
        y, f, i, b, r = _step(S, cur.ravel())
        d = y.shape[1]
        if K * d > CHAIN_GUARD:
            raise TreeTooLarge(f"{K * d} forward chains exceed {CHAIN_GUARD}")
        cur = y.reshape(M, K * d)
        with np.errstate(invalid="ignore", over="ignore"):
            fwd = _mul_inf(fwd[:, :, None], f.reshape(M, K, d)).reshape(M, K * d)
            inv = _mul_inf(inv[:, :, None], i.reshape(M, K, d)).reshape(M, K * d)
            raw = (raw[:, :, None] * r.reshape(M, K, d)).reshape(M, K * d)
        irr = (irr[:, :, None] | b.reshape(M, K, d)).reshape(M, K * d)
        if keep_path:
            path = np.concatenate([np.repeat(path, d, axis=1), cur[:, :, None]], axis=2)
    out = {"end": cur, "fwd": fwd, "inv": inv, "irregular": irr, "raw": raw}
    if keep_path:
        out["path"] = path
    return out


# ---------------------------------------------------------------------------
# diagonal solver


def _log_derivative(steps, z):
    ch = forward_chains(steps, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = (1.0 - ch["raw"]) / (z[:, None] - ch["end"])
        s = terms.sum(axis=1)
    return s, ch


def _diagonal_values(steps, nodes):
    ch = forward_chains(steps, nodes)
    return np.prod(nodes[:, None] - ch["end"], axis=1)


def _start_points(steps, N: int, offset: float = 0.4) -> np.ndarray:
    """Aberth starting circle, radius from the interpolated coefficients of D."""
    m = N + 1
    nodes = np.exp(2j * np.pi * np.arange(m) / m)
    vals = _diagonal_values(steps, nodes)
    c = np.fft.fft(vals) / m
    if not np.all(np.isfinite(c)) or c[-1] == 0:
        rho = 1.0
    else:
        cc = (c / c[-1])[None, :]
        return pc._initial_guesses(cc, offset)[0]
    k = np.arange(N)
    return rho * np.exp(1j * (2 * np.pi * k / N + offset))


def solve_diagonal(steps, N: int, maxit: int = pc.ABERTH_MAXIT,
                   step_tol: float = pc.ABERTH_STEP_TOL, z0=None, frozen=None):
    """Aberth iteration on D(x) = prod_chains (x - y(x)) of degree N.

    ``z0`` and ``frozen`` restart a previous run; frozen approximations stay
    put and deflate the others. Returns (approximations, last Newton
    corrections).
    """
    z = _start_points(steps, N) if z0 is None else np.array(z0, dtype=complex)
    done = np.zeros(N, dtype=bool) if frozen is None else np.array(frozen, dtype=bool)
    corr = np.full(N, np.inf, dtype=complex)
    eye = np.eye(N, dtype=bool)
    for _ in range(maxit):
        act = np.flatnonzero(~done)
        s, _ = _log_derivative(steps, z[act])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = 1.0 / s
        diff = z[act, None] - z[None, :]
        diff[eye[act]] = 1.0
        a = (1.0 / diff)
        a[eye[act]] = 0.0
        a = a.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = ratio / (1.0 - ratio * a)
        bad = ~np.isfinite(step)
        step = np.where(bad, 1e-3 * (1 + np.abs(z[act])) * np.exp(0.7j), step)
        z[act] = z[act] - step
        corr[act] = np.where(bad, np.inf, ratio)
        small = np.abs(step) <= step_tol * np.maximum(1.0, np.abs(z[act]))
        done[act[small]] = True
        if done.all():
            break
    return z, corr


# ---------------------------------------------------------------------------
# classification and cycle recovery


def classify(multiplier, inverse_multiplier, irregular: bool, margin: float = CLASS_MARGIN) -> str:
    """Class from the inverse-branch derivative; |inverse| < 1 means repelling."""
    if irregular or inverse_multiplier is None:
        return "irregular"
    inv = abs(inverse_multiplier)
    if inv < 1 / (1 + margin):
        return "repelling"
    if inv > 1 / (1 - margin):
        return "attracting"
    return "neutral"


def _minimal_period(path: np.ndarray, n: int, tol: float, unit: int) -> int:
    """Smallest divisor p of n with the cycle closing after p units."""
    for p in range(1, n + 1):
        if n % p == 0 and abs(path[p * unit] - path[0]) <= tol:
            if all(abs(path[(k + p) * unit] - path[k * unit]) <= tol
                   for k in range(0, n - p + 1)):
                return p
    return n


def _recover(steps, locs, mults, spread, n: int, unit: int):
    """Build PeriodicPoints at cluster centres from their closing chains."""
    ch = forward_chains(steps, locs, keep_path=True)
    points, flags = [], []
    counted = 0
    for i, (x0, m) in enumerate(zip(locs, mults)):
        gap = np.abs(ch["end"][i] - x0)
        tol = _closing_tol(x0, spread[i])
        closing = np.flatnonzero(gap <= tol)
        if len(closing) == 0:
            best = int(np.argmin(gap))
            if gap[best] > 1e-3 * (1 + abs(x0)):
                flags.append(f"not_a_zero:{x0.real:.6g}{x0.imag:+.6g}j")
                continue
            flags.append(f"cycle_recovery_failed:{x0.real:.6g}{x0.imag:+.6g}j")
            counted += m
            points.append(PeriodicPoint(complex(x0), n, int(m), None, None, "irregular", n,
                                        tuple(ch["path"][i, best])))
            continue
        counted += m
        groups = []  # (fwd, inv, irregular, path, count)
        for j in closing:
            f, v, b = ch["fwd"][i, j], ch["inv"][i, j], bool(ch["irregular"][i, j])
            for g in groups:
                if g[2] == b and (b or _same_mult(g[1], v)):
                    g[4] += 1
                    break
            else:
                groups.append([f, v, b, ch["path"][i, j], 1])
        if len(closing) != m and len(groups) > 1:
            # distinct cycles inside one clustering radius; split by chain share
            flags.append(f"merged_cycles:{x0.real:.6g}{x0.imag:+.6g}j")
        shares = _split(m, [g[4] for g in groups], len(closing))
        for g, share in zip(groups, shares):
            f, v, b, path = g[0], g[1], g[2], g[3]
            mp = _minimal_period(path, n, 1e-6 * (1 + abs(x0)), unit)
            mult = None if b or f is None else complex(f)
            invm = None if b or v is None else complex(v)
            points.append(PeriodicPoint(complex(x0), n, int(share), mult, invm,
                                        classify(mult, invm, b), mp,
                                        tuple(complex(p) for p in path)))
    return points, counted, flags


def _same_mult(a, b) -> bool:
    if a is None or b is None:
        return False
    if not (np.isfinite(a) and np.isfinite(b)):
        return np.isinf(a) and np.isinf(b)
    return abs(a - b) <= 1e-6 * (1 + abs(a))


def _split(m: int, counts: list, total: int) -> list:
    if len(counts) == 1:
        return [m]
    if total == m:
        return counts
    base = [m * c // total for c in counts]
    base[0] += m - sum(base)
    return base


def _cluster(z, corr, N):
    radius = pc.CLUSTER_TOL * (1 + float(np.max(np.abs(z))))
    slack = np.where(np.isfinite(corr), N * np.abs(corr), 0.0)
    slack = np.minimum(slack, 1e-2 * (1 + np.abs(z)))
    locs, w, labels = pc.merge_close(z, np.ones(len(z)), radius, extra=slack)
    spread = np.zeros(len(locs))
    np.maximum.at(spread, labels, np.abs(z - locs[labels]))
    return locs, np.rint(w).astype(int), labels, spread


def _closing_tol(x0, spread):
    return max(1e-8 * (1 + abs(x0)), 4.0 * spread)


def _surplus(steps, z, locs, mults, labels, spread):
    """Indices of approximations parked on a root beyond its true order.

    When no closing chain at x0 has multiplier 1 or is irregular, every
    closing chain contributes a simple factor to D, so the order of D at x0
    is the number of closing chains.
    """
    idx = np.flatnonzero(mults > 1)
    if len(idx) == 0:
        return np.zeros(0, dtype=int)
    ch = forward_chains(steps, locs[idx])
    extra = []
    for r, i in enumerate(idx):
        x0 = locs[i]
        closing = np.abs(ch["end"][r] - x0) <= _closing_tol(x0, spread[i])
        f = ch["fwd"][r, closing]
        if ch["irregular"][r, closing].any() or not np.all(np.isfinite(f)):
            continue
        if np.any(np.abs(f - 1) <= 1e-6):
            continue
        c = int(closing.sum())
        if 0 < c < mults[i]:
            members = np.flatnonzero(labels == i)
            far = members[np.argsort(-np.abs(z[members] - x0), kind="stable")]
            extra.extend(far[: mults[i] - c].tolist())
    return np.array(sorted(extra), dtype=int)


def _sort_points(points):
    return sorted(points, key=lambda p: (round(p.location.real, 9), round(p.location.imag, 9),
                                         p.cls))


def _run(steps, N: int, n: int, unit: int, expected: int, mult_factor: int = 1,
         max_rounds: int = 6):
    z, corr = solve_diagonal(steps, N)
    for r in range(max_rounds):
        locs, mults, labels, spread = _cluster(z, corr, N)
        extra = _surplus(steps, z, locs, mults, labels, spread)
        if len(extra) == 0:
            break
        # re-seed surplus approximations on a circle and iterate them alone
        rho = 1.0 + float(np.max(np.abs(z)))
        ang = 2 * np.pi * (np.arange(len(extra)) + 0.37 * (r + 1)) / len(extra)
        z = z.copy()
        z[extra] = rho * np.exp(1j * ang)
        frozen = np.ones(N, dtype=bool)
        frozen[extra] = False
        z, corr_new = solve_diagonal(steps, N, z0=z, frozen=frozen)
        corr = np.where(frozen, corr, corr_new)
    else:
        locs, mults, labels, spread = _cluster(z, corr, N)
    points, counted, flags = _recover(steps, locs, mults, spread, n, unit)
    if mult_factor != 1:
        points = [PeriodicPoint(p.location, p.period, p.multiplicity * mult_factor, p.multiplier,
                                p.inverse_multiplier, p.cls, p.minimal_period, p.cycle)
                  for p in points]
        counted *= mult_factor
    if counted != expected:
        flags.append(f"count_mismatch:{counted}!={expected}")
    return PeriodicReport(n, int(expected), _sort_points(points), int(counted), None, flags)


def reduce_common_factor(F: Correspondence):
    """Strip a common right compositional factor h from a parametrized F.

    F = (A o h) o (B o h)^{-1} has graph equal to deg(h) copies of the graph
    of A o B^{-1}. Returns (reduced F, deg h).
    """
    if not F.is_parametrized:
        return F, 1
    res = pc.common_right_factor(F.f, F.g)
    if res is None:
        return F, 1
    A, B, h = res
    return Correspondence.parametrized(B, A, name=(F.name + "/reduced") if F.name else ""), h.degree


# ---------------------------------------------------------------------------
# public operations


def fixed_points(F: Correspondence) -> list:
    """Fixed points of F with multiplicities summing to d2."""
    if F.is_parametrized:
        if F.f.degree <= F.g.degree:
            raise DiagonalDegenerate("fixed-point count needs deg f > deg g")
    elif F.Q.diagonal().is_zero:
        raise DiagonalDegenerate("Q(x, x) vanishes identically")
    return periodic_points(F, 1, reduce=False).points


def periodic_points(F: Correspondence, n: int, reduce: bool = True) -> PeriodicReport:
    """Points of period n of F (zeros of the diagonal of the graph of F^n).

    With ``reduce`` a common right factor of a parametrized pair is
    stripped first; multiplicities are then scaled by deg(h)^n.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    d2 = F.degrees.d2
    R, k = reduce_common_factor(F) if reduce else (F, 1)
    N = R.degrees.d2 ** n
    if N > DEGREE_GUARD:
        raise TreeTooLarge(f"diagonal degree {N} exceeds {DEGREE_GUARD}")
    if not R.is_parametrized and R.Q.diagonal().is_zero:
        raise DiagonalDegenerate("Q(x, x) vanishes identically")
    return _run([R] * n, N, n, 1, d2 ** n, k ** n)


def diagonal_poly(F: Correspondence, n: int = 1) -> pc.UniPoly:
    """Q_n(x, x) from the expanded graph of F^n (small degrees only)."""
    Qn = cr.power(F, n).graph
    D = Qn.diagonal()
    N = F.degrees.d2 ** n
    if D.degree > N:
        c = D.coeffs
        if np.max(np.abs(c[N + 1:])) > 1e-6 * np.max(np.abs(c)):
            raise DiagonalDegenerate("diagonal degree above the expected count")
        D = pc.UniPoly(c[: N + 1])
    return D


def mixed_fixed_points(F: Correspondence, G: Correspondence, n: int,
                       mu_hat: eq.PointMeasure | None = None, bbox=None,
                       n_grid: int = 64) -> PeriodicReport:
    """Fixed points of G o F^n, plus the graph-intersection view.

    The intersection view takes x with (x, y) on both the graph of F^n and
    the graph of G, i.e. fixed points of adjoint(G) o F^n, weighted
    p1^{-1} d2^{-n}.
    """
    p1, p2 = G.degrees
    d2 = F.degrees.d2
    N = p2 * d2 ** n
    if N > DEGREE_GUARD or p1 * d2 ** n > DEGREE_GUARD:
        raise TreeTooLarge(f"diagonal degree {max(N, p1 * d2 ** n)} exceeds {DEGREE_GUARD}")
    rep = _run([F] * n + [G], N, n + 1, 1, N)
    rep.n = n
    rep.points = [PeriodicPoint(p.location, n, p.multiplicity, p.multiplier, p.inverse_multiplier,
                                p.cls, p.minimal_period, p.cycle) for p in rep.points]
    M = p1 * d2 ** n
    inter = _run([F] * n + [cr.adjoint(G)], M, n + 1, 1, M)
    locs = np.array([p.location for p in inter.points], dtype=complex)
    w = np.array([p.multiplicity / M for p in inter.points], dtype=float)
    nu = eq.PointMeasure(locs, w)
    view = {"count_with_multiplicity": inter.count_with_multiplicity, "expected": M,
            "flags": inter.flags,
            "points": [[complex(z).real, complex(z).imag, float(wi)] for z, wi in zip(locs, w)]}
    if mu_hat is not None:
        view["distance"] = eq.measure_distance(nu, mu_hat, bbox, n_grid).total
        rep.nu_distance = eq.measure_distance(rep.measure(), mu_hat, bbox, n_grid).total
    rep.intersection = view
    return rep


def repelling_equidistribution(F: Correspondence, n_max: int, mu_hat: eq.PointMeasure,
                               minimal_only: bool = False, bbox=None, n_grid: int = 64,
                               n_min: int = 1):
    """Distances from nu_n (repelling points, weight mult/d2^n) to mu_hat.

    Returns (list of (n, distance), list of reports). The grid box defaults
    to the padded box of mu_hat so it is the same for every n.
    """
    R, _ = reduce_common_factor(F)
    if R.degrees.d2 ** n_max > DEGREE_GUARD:
        raise TreeTooLarge(f"diagonal degree {R.degrees.d2 ** n_max} exceeds {DEGREE_GUARD}")
    if bbox is None:
        bbox = eq.common_bbox(mu_hat)
    out, reports = [], []
    for n in range(n_min, n_max + 1):
        rep = periodic_points(F, n)
        nu = rep.measure(minimal_only=minimal_only)
        rep.nu_distance = eq.measure_distance(nu, mu_hat, bbox, n_grid).total if len(nu) else None
        out.append((n, rep.nu_distance))
        reports.append(rep)
    return out, reports


def spearman_trend(pairs) -> float:
    ns = [p[0] for p in pairs]
    ds = [p[1] for p in pairs]
    return float(spearmanr(ns, ds).statistic)


__all__ = ["PeriodicPoint", "PeriodicReport", "fixed_points", "periodic_points",
           "mixed_fixed_points", "repelling_equidistribution", "diagonal_poly", "classify",
           "forward_chains", "solve_diagonal", "reduce_common_factor", "spearman_trend"]
