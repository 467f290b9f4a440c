"""Inverse-branch continuation and diameter statistics.

A branch of order m over the disk |w - z| <= r is tracked through the
images of a closed boundary loop and of one spoke from the centre to the
first boundary sample. Order m+1 children start at each preimage of the
order-m centre, run down the spoke, then once around the loop. A child dies
when the continuation becomes ambiguous (two fiber points collide) or when
the loop fails to close (the disk image met a critical value).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from . import correspondence as cr
from . import polycore as pc
from .correspondence import Correspondence
from .errors import BadBasePoint, BranchCollision

COLLISION_REL = 1e-3
REFINE_CAP = 2**14


@dataclass(frozen=True, eq=False)
class BranchChain:
    base: complex
    order: int
    genealogy: tuple
    centre: complex
    boundary_images: np.ndarray
    spoke_images: np.ndarray
    alive: bool = True

    @property
    def diameter(self) -> float:
        return diameter(self.boundary_images)


def diameter(points) -> float:
    p = np.asarray(points)
    if len(p) < 2:
        return 0.0
    return float(np.max(np.abs(p[:, None] - p[None, :])))


def _fiber_geometry(fib: np.ndarray):
    """Per-row minimal pairwise gap and spread of fiber rows (B, d)."""
    d = fib.shape[1]
    if d == 1:
        inf = np.full(fib.shape[0], np.inf)
        return inf, np.zeros(fib.shape[0])
    diff = np.abs(fib[:, :, None] - fib[:, None, :])
    diff[:, np.arange(d), np.arange(d)] = np.inf
    gap = diff.min(axis=2)  # per root: distance to nearest other root
    spread = np.abs(fib - fib.mean(axis=1, keepdims=True)).max(axis=1)
    return gap, spread


def _select(fib: np.ndarray, w: np.ndarray, collision_rel: float):
    """Nearest-root choice per row with ambiguity and collision flags."""
    dist = np.abs(fib - w[:, None])
    j = np.argmin(dist, axis=1)
    rows = np.arange(len(w))
    gap, spread = _fiber_geometry(fib)
    mingap = gap.min(axis=1) if fib.shape[1] > 1 else np.full(len(w), np.inf)
    floor = pc.CLUSTER_TOL * (1 + np.abs(fib).max(axis=1))
    collide = mingap <= np.maximum(collision_rel * spread, floor)
    own_gap = gap[rows, j]
    ok = dist[rows, j] < 0.5 * own_gap
    return fib[rows, j], ok, collide


def _refine_segment(F, a, b, w, collision_rel, budget):
    """Continue w from a to b by bisecting the segment until steps are safe.

    Returns (new w, points used). Raises BranchCollision.
    """
    used = 0
    cur = w
    # depth-first: split until the nearest-root rule is safe
    pending = [(a, b)]
    while pending:
        s, e = pending.pop(0)
        fib = cr.preimage_table(F, np.array([e]))
        nxt, ok, collide = _select(fib, np.array([cur]), collision_rel)
        if collide[0]:
            raise BranchCollision("fiber points collide along the path")
        if ok[0]:
            cur = nxt[0]
            continue
        used += 1
        if used > budget:
            raise BranchCollision("refinement cap reached")
        mid = 0.5 * (s + e)
        pending[:0] = [(s, mid), (mid, e)]
    return cur, used


def continue_preimage(F: Correspondence, path, w0, collision_rel: float = COLLISION_REL,
                      max_points: int = REFINE_CAP) -> np.ndarray:
    """Analytic continuation of a preimage along ``path`` by nearest-root tracking.

    Returns the continued value at each path point. Segments on which the
    nearest-root rule is unsafe are bisected (linear interpolation between
    samples), up to ``max_points`` extra points in total.
    """
    path = np.asarray(path, dtype=complex)
    fib0 = cr.preimage_table(F, path[:1])
    gap0, spread0 = _fiber_geometry(fib0)
    j0 = int(np.argmin(np.abs(fib0[0] - w0)))
    tol = 1e-6 * (1 + abs(w0)) + 1e-3 * spread0[0]
    if abs(fib0[0, j0] - w0) > tol:
        raise ValueError("w0 is not a preimage of path[0]")
    floor0 = pc.CLUSTER_TOL * (1 + float(np.abs(fib0).max()))
    if np.isfinite(gap0).any() and gap0.min() <= max(collision_rel * spread0[0], floor0):
        raise BranchCollision("fiber points collide at the start", index=0)
    out = np.empty(len(path), dtype=complex)
    out[0] = fib0[0, j0]
    budget = max_points
    for k in range(1, len(path)):
        try:
            out[k], used = _refine_segment(F, path[k - 1], path[k], out[k - 1],
                                           collision_rel, budget)
        except BranchCollision as exc:
            raise BranchCollision(str(exc), index=k) from None
        budget -= used
    return out


def _continue_batch(F, paths: np.ndarray, w0: np.ndarray, collision_rel: float,
                    max_points: int):
    """Vectorised continuation of many branches; returns (values, alive)."""
    B, L = paths.shape
    out = np.empty((B, L), dtype=complex)
    out[:, 0] = w0
    alive = np.ones(B, dtype=bool)
    budget = np.full(B, max_points)
    solved, _ = cr.preimage_fibers(F, paths[:, 0])
    for k in range(1, L):
        idx = np.flatnonzero(alive)
        if len(idx) == 0:
            break
        solved[idx], fib = cr.preimage_fibers(F, paths[idx, k], init=solved[idx])
        nxt, ok, collide = _select(fib, out[idx, k - 1], collision_rel)
        out[idx, k] = nxt
        alive[idx[collide]] = False
        for r in np.flatnonzero(~ok & ~collide):
            b = idx[r]
            try:
                out[b, k], used = _refine_segment(F, paths[b, k - 1], paths[b, k],
                                                  out[b, k - 1], collision_rel, budget[b])
                budget[b] -= used
            except BranchCollision:
                alive[b] = False
    return out, alive


@dataclass
class BranchStats:
    base: complex
    radius: float
    rows: list  # (m, count_alive, median, q10, q90)
    slope: float
    intercept: float
    r2: float
    chains: list = field(default_factory=list)

    def alive_fraction(self, m: int, d2: int) -> float:
        return self.rows[m][1] / d2 ** m

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["m", "count_alive", "median_diameter", "q10", "q90"])
            for m, c, med, q10, q90 in self.rows:
                wr.writerow([m, c, repr(float(med)), repr(float(q10)), repr(float(q90))])

    def to_dict(self) -> dict:
        return {"base": [self.base.real, self.base.imag], "radius": self.radius,
                "rows": [{"m": m, "count_alive": c, "median_diameter": med, "q10": q10,
                          "q90": q90} for m, c, med, q10, q90 in self.rows],
                "slope": self.slope, "intercept": self.intercept, "r2": self.r2}

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)


def _fit(ms, meds):
    ms = np.asarray(ms, float)
    lv = np.log(np.asarray(meds, float))
    good = np.isfinite(lv)
    if good.sum() < 2:
        return float("nan"), float("nan"), float("nan")
    slope, icpt = np.polyfit(ms[good], lv[good], 1)
    pred = slope * ms[good] + icpt
    ss_res = float(np.sum((lv[good] - pred) ** 2))
    ss_tot = float(np.sum((lv[good] - lv[good].mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(icpt), r2


def branch_diameter_stats(F: Correspondence, z: complex, r: float, m_max: int,
                          n_boundary: int = 128, n_spoke: int = 8,
                          collision_rel: float = COLLISION_REL, fit_from: int = 1,
                          keep_chains: bool = False) -> BranchStats:
    """Alive counts and diameter quantiles of inverse branches of order 0..m_max.

    The slope is the least-squares fit of log(median diameter) against m
    over m >= ``fit_from``.
    """
    z = complex(z)
    crit = cr.critical_value_poly(F).locations
    if len(crit) and np.min(np.abs(crit - z)) <= r:
        raise BadBasePoint(f"a critical value lies within {r} of {z}")
    theta = 2 * np.pi * np.arange(n_boundary) / n_boundary
    boundary = z + r * np.exp(1j * theta)
    spoke = z + np.linspace(0.0, r, n_spoke + 1)
    chains = [BranchChain(z, 0, (), z, boundary, spoke)]
    rows = [(0, 1, 2.0 * r, 2.0 * r, 2.0 * r)]
    for m in range(1, m_max + 1):
        if not chains:
            rows.append((m, 0, float("nan"), float("nan"), float("nan")))
            continue
        centres = np.array([c.centre for c in chains])
        table = cr.preimage_table(F, centres)
        paths, starts, parents, kids = [], [], [], []
        for i, ch in enumerate(chains):
            locs, _, _ = cr.merge_fibers(table[i : i + 1])
            # closed loop: spoke out, around the boundary, back to its start
            p = np.concatenate([ch.spoke_images, ch.boundary_images[1:],
                                ch.boundary_images[:1]])
            for j, w0 in enumerate(locs):
                paths.append(p)
                starts.append(w0)
                parents.append(i)
                kids.append(j)
        paths = np.array(paths)
        vals, alive = _continue_batch(F, paths, np.array(starts), collision_rel, REFINE_CAP)
        ns = n_spoke + 1
        loop_start = vals[:, ns - 1]
        loop_end = vals[:, -1]
        step = np.max(np.abs(np.diff(vals[:, ns - 1:], axis=1)), axis=1)
        closed = np.abs(loop_end - loop_start) <= np.maximum(step, 1e-12)
        alive &= closed
        new = []
        for b in np.flatnonzero(alive):
            par = chains[parents[b]]
            new.append(BranchChain(z, m, par.genealogy + (kids[b],), starts[b],
                                   vals[b, ns - 1 : ns - 1 + n_boundary], vals[b, :ns]))
        chains = new
        diams = np.array([c.diameter for c in chains])
        if len(diams):
            rows.append((m, len(chains), float(np.median(diams)),
                         float(np.quantile(diams, 0.1)), float(np.quantile(diams, 0.9))))
        else:
            rows.append((m, 0, float("nan"), float("nan"), float("nan")))
    use = [row for row in rows if row[0] >= fit_from]
    slope, icpt, r2 = _fit([u[0] for u in use], [u[2] for u in use])
    return BranchStats(z, r, rows, slope, icpt, r2, chains if keep_chains else [])


__all__ = ["BranchChain", "BranchStats", "continue_preimage", "branch_diameter_stats",
           "diameter"]
