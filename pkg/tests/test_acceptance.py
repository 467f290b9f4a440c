"""Acceptance criteria 1-11 with their fixed tolerances.

Each test records one line per check; the terminal summary prints one
pass/fail line per criterion. Seeds are frozen in conftest.MU_CONFIGS.
"""

from __future__ import annotations

import json

import numpy as np
import pytest
from conftest import MU_CONFIGS, Z, make_ch, make_cusp, make_e1, make_e2, mu_hat, record

from corrdyn import branches as br
from corrdyn import cli
from corrdyn import correspondence as cr
from corrdyn import equilibrium as eq
from corrdyn import exceptional as ex
from corrdyn import periodic as pe
from corrdyn import uniqueness as un
from corrdyn.correspondence import Correspondence
from corrdyn.polycore import chebyshev

# tolerances, one per criterion
FIBER_SAMPLES = 500
MOMENT_TOL = 0.02
INVARIANCE_FACTOR = 2.0
ORBIT_TOL = 1e-9
EXCEPTIONAL_DEPTH = 12
GENERIC_FACTOR = 2.0
EXCEPTIONAL_MIN_DISTANCE = 0.9
MIXING_BOUND = -np.log(1.5) + 0.3
BRANCH_REL = 0.25
ALIVE_MIN = 0.5
CONTROL_MIN = 0.2
FACTOR_TOL = 1e-9


def _check(criterion, label, passed, detail=""):
    record(criterion, label, passed, detail)
    return bool(passed)


def test_criterion_01_fiber_counting():
    rng = np.random.default_rng(2024)
    zs = (rng.normal(size=FIBER_SAMPLES) + 1j * rng.normal(size=FIBER_SAMPLES)) * 2
    results = []
    for F in (make_e1(), make_e2(), make_cusp()):
        d1, d2 = F.degrees
        bad = sum(cr.preimages(F, z).total != d2 or cr.images(F, z).total != d1 for z in zs)
        results.append(_check(1, F.name, bad == 0, f"{bad} failures over {FIBER_SAMPLES} points"))
    assert all(results)


def test_criterion_02_periodic_counts():
    ok = []
    for F, n_max in ((make_e1(), 8), (make_e2(), 4)):
        d2 = F.degrees.d2
        counts = [pe.periodic_points(F, n).count_with_multiplicity for n in range(1, n_max + 1)]
        want = [d2**n for n in range(1, n_max + 1)]
        ok.append(_check(2, f"{F.name} n<={n_max}", counts == want, f"{counts}"))
    E1, E2 = make_e1(), make_e2()
    ident = Correspondence.parametrized(Z, Z, name="id")
    cubic = Correspondence.parametrized(Z, Z**3, name="z^3")
    for F, G, n in ((E1, cubic, 2), (E2, E2, 1), (E1, ident, 3), (E2, ident, 2)):
        rep = pe.mixed_fixed_points(F, G, n)
        want = G.degrees.d2 * F.degrees.d2**n
        ok.append(_check(2, f"{G.name} o {F.name}^{n}", rep.count_with_multiplicity == want,
                         f"{rep.count_with_multiplicity} vs {want}"))
    assert all(ok)


def test_criterion_03_brolin_oracle():
    cfg = MU_CONFIGS["E1"]
    assert cfg.n_samples == 100000 and cfg.burn_in == 50
    m = eq.moments(mu_hat("E1"))
    a = (abs(m[1, 0]), abs(m[2, 0]), abs(m[1, 1] - 1))
    ok1 = _check(3, "E1 circle moments", max(a) <= MOMENT_TOL,
                 "|m10|=%.4f |m20|=%.4f |m11-1|=%.4f" % a)
    m = eq.moments(mu_hat("CH"))
    b = (abs(m[1, 0]), abs(m[2, 0].real - 0.5))
    ok2 = _check(3, "CH arcsine moments", max(b) <= MOMENT_TOL, "|m10|=%.4f |Re m20-1/2|=%.4f" % b)
    assert ok1 and ok2


def test_criterion_04_pullback_invariance():
    ok = []
    for name, make in (("E1", make_e1), ("E2", make_e2), ("CH", make_ch)):
        F, mu = make(), mu_hat(name)
        bbox = eq.common_bbox(mu)
        base = eq.self_distance_baseline(F, MU_CONFIGS[name], bbox)
        d = eq.measure_distance(eq.pullback_step(F, mu, seed=0), mu, bbox).total
        ok.append(_check(4, name, d <= INVARIANCE_FACTOR * base,
                         f"distance {d:.4f} vs 2 x baseline {INVARIANCE_FACTOR * base:.4f}"))
    assert all(ok)


def test_criterion_05_exceptional_set():
    E2, mu = make_e2(), mu_hat("E2")
    rep = ex.find_e0(E2)
    ok = [_check(5, "find_e0(E2)", rep.certified and len(rep.e0) == 1 and abs(rep.e0[0]) < 1e-9,
                 f"e0={rep.e0} certified={rep.certified}")]
    t0 = ex.exceptional_test(E2, 0, EXCEPTIONAL_DEPTH, mu)
    ok.append(_check(5, "z=0 flagged", t0.flagged, f"distance {t0.distance:.3f}"))
    t10 = ex.exceptional_test(E2, 10, EXCEPTIONAL_DEPTH, mu)
    ok.append(_check(5, "z=10 cleared", not t10.flagged and t10.distance <= 2 * t10.baseline,
                     f"distance {t10.distance:.4f} vs baseline {t10.baseline:.4f}, "
                     f"depth {EXCEPTIONAL_DEPTH}"))
    orb = np.sort_complex(np.array(ex.orbit(E2, [0j], 1)))
    good = len(orb) == 2 and np.max(np.abs(orb - np.array([0, 1]))) <= ORBIT_TOL
    ok.append(_check(5, "orbit(E2,{0},1)", good, f"{orb}"))
    assert all(ok)


def test_criterion_06_generic_starts():
    E2, mu = make_e2(), mu_hat("E2")
    bbox = eq.common_bbox(mu)
    base = eq.self_distance_baseline(E2, MU_CONFIGS["E2"], bbox)
    other = eq.brolin_sample(E2, eq.SamplerConfig(seed=5, start_point=1.7 - 0.4j))
    d = eq.measure_distance(other, mu, bbox).total
    ok1 = _check(6, "generic starts", d <= GENERIC_FACTOR * base,
                 f"distance {d:.4f} vs 2 x baseline {GENERIC_FACTOR * base:.4f}")
    exc = eq.brolin_sample(E2, eq.SamplerConfig(seed=5, start_point=0j))
    de = eq.measure_distance(exc, mu, bbox).total
    ok2 = _check(6, "exceptional start", de >= EXCEPTIONAL_MIN_DISTANCE, f"distance {de:.3f}")
    assert ok1 and ok2


def test_criterion_07_repelling_equidistribution():
    pairs, _ = pe.repelling_equidistribution(make_e1(), 8, mu_hat("E1"), n_min=3)
    ds = [d for _, d in pairs]
    ok1 = _check(7, "E1 strictly decreasing n=3..8", all(np.diff(ds) < 0),
                 " ".join(f"{d:.4f}" for d in ds))
    pairs, _ = pe.repelling_equidistribution(make_e2(), 5, mu_hat("E2"))
    rho = pe.spearman_trend(pairs)
    ok2 = _check(7, "E2 Spearman n=1..5", rho < 0, f"rho {rho:.3f}")
    assert ok1 and ok2


def test_criterion_08_mixing_decay():
    E2 = make_e2()
    mu = eq.brolin_sample(E2, eq.SamplerConfig(seed=0, n_samples=1000, n_chains=64,
                                               start_point=0.3 + 0.2j))
    curve = eq.mixing_curve(E2, mu, np.real, np.real, range(0, 7))
    fit = eq.fit_decay(curve)
    vals = " ".join(f"{p.value:.2e}" for p in curve)
    ok1 = _check(8, "phi=psi=Re z", fit.slope <= MIXING_BOUND,
                 f"slope {fit.slope} (collapsed={fit.collapsed}); |I_n| {vals}")
    mu2 = eq.brolin_sample(E2, eq.SamplerConfig(seed=0, n_samples=2000, n_chains=64,
                                                start_point=0.3 + 0.2j))
    sq = lambda w: np.abs(w) ** 2  # noqa: E731
    fit2 = eq.fit_decay(eq.mixing_curve(E2, mu2, sq, sq, range(0, 6)))
    ok2 = _check(8, "supplementary phi=psi=|z|^2", fit2.slope <= MIXING_BOUND,
                 f"slope {fit2.slope:.4f} over n={fit2.used}")
    assert ok1 and ok2


def test_criterion_09_branch_contraction():
    s1 = br.branch_diameter_stats(make_e1(), 4, 0.1, 12, n_boundary=64)
    target1 = -0.5 * np.log(2)
    ok = [_check(9, "E1 slope", abs(s1.slope - target1) <= BRANCH_REL * abs(target1),
                 f"slope {s1.slope:.4f} vs {target1:.4f} +-25%, alive {s1.rows[-1][1]}/4096")]
    s2 = br.branch_diameter_stats(make_e2(), 2, 0.05, 10, n_boundary=64)
    target2 = -0.5 * np.log(1.5)
    ok.append(_check(9, "E2 slope", abs(s2.slope - target2) <= BRANCH_REL * abs(target2),
                     f"slope {s2.slope:.4f} vs {target2:.4f} +-25%"))
    frac = s2.alive_fraction(10, 3)
    ok.append(_check(9, "E2 alive fraction", frac >= ALIVE_MIN, f"{frac:.3f} at m=10"))
    assert all(ok)


def test_criterion_10_uniqueness_suite():
    circle = un.CompactSet.circles([1.0], 256)
    seg = un.CompactSet.segment(-1, 1, 256)
    ok = []
    eq1, d1 = un.preimage_equal(Z**4, Z**2, circle)
    ok.append(_check(10, "Cas 1 z^4 vs z^2 on circle", eq1, f"distance {d1:.4f}"))
    eq1b, d1b = un.preimage_equal(Z**3, np.exp(0.7j) * Z**3, un.CompactSet.circles([0.5, 1.0]))
    ok.append(_check(10, "Cas 1 z^3 vs a z^3 on radii {1/2,1}", eq1b, f"distance {d1b:.4f}"))
    eq2, d2 = un.preimage_equal(chebyshev(4), chebyshev(2), seg)
    ok.append(_check(10, "Cas 2 T4 vs T2 on [-1,1]", eq2, f"distance {d2:.4f}"))
    eqc, dc = un.preimage_equal(Z**2, Z**2 + 1, circle)
    ok.append(_check(10, "control z^2 vs z^2+1", (not eqc) and dc >= CONTROL_MIN,
                     f"distance {dc:.4f}"))
    P = un.factor_compose(chebyshev(6), chebyshev(2))
    err = np.max(np.abs(P.coeffs - chebyshev(3).coeffs)) if P is not None else np.inf
    ok.append(_check(10, "factor_compose(T6,T2)=T3", err <= FACTOR_TOL, f"max error {err:.2e}"))
    ok.append(_check(10, "julia_like_check(T3,[-1,1])", un.julia_like_check(chebyshev(3), seg)))
    for name, K, cand in (("circle", circle, [Z**2]), ("segment", seg, [chebyshev(2)])):
        v = un.uniqueness_verdict(K, cand)
        both = v["obstruction_julia_like"] and v["obstruction_rotation"]
        ok.append(_check(10, f"verdict {name}", both, f"rotations {v['rotation_orders']}"))
    assert all(ok)


def test_criterion_11_determinism(tmp_path):
    ok = []
    for name, make in (("E1", make_e1), ("E2", make_e2), ("CH", make_ch)):
        again = eq.brolin_sample(make(), MU_CONFIGS[name], workers=3)
        same = again.locs.tobytes() == mu_hat(name).locs.tobytes()
        ok.append(_check(11, f"brolin {name} (3 workers vs 1)", same))
    F, mu = make_e1(), mu_hat("E1")
    a = eq.pullback_step(F, mu, seed=0)
    b = eq.pullback_step(F, mu, seed=0)
    ok.append(_check(11, "pullback_step", a.locs.tobytes() == b.locs.tobytes()
                     and a.weights.tobytes() == b.weights.tobytes()))
    bbox = eq.common_bbox(mu)
    b1 = eq.self_distance_baseline(F, MU_CONFIGS["E1"], bbox)
    b2 = eq.self_distance_baseline(F, MU_CONFIGS["E1"], bbox)
    ok.append(_check(11, "self-distance baseline", b1 == b2, f"{b1!r}"))
    files = {}
    for run in ("a", "b"):
        code = cli.main(["measure", "--example", "E2", "--seed", "3", "--samples", "5000",
                         "--no-timing", "--out", str(tmp_path), "--prefix", "m"])
        assert code == 0
        files[run] = {p.name: p.read_bytes() for p in sorted(tmp_path.iterdir())}
    report = json.loads(files["a"]["m.report.json"])
    ok.append(_check(11, "CLI measure files byte-identical", files["a"] == files["b"],
                     f"{sorted(files['a'])}, wall_time={report['wall_time']}"))
    assert all(ok)


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(pytest.main([__file__, "-v"]))
