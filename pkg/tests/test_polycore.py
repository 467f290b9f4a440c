import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import chebyshev_sympy, chebyshev_values, compose_coeffs, np_roots

from corrdyn import polycore as pc
from corrdyn.errors import DegenerateResultant, ZeroPolynomial
from corrdyn.polycore import BiPoly, UniPoly

Z = UniPoly.identity()

coef = st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False)


def test_eval_examples():
    assert pc.eval_poly(Z**2 - 1, 2) == 3
    assert pc.eval_poly(UniPoly([0]), 5) == 0


def test_compose_examples():
    assert pc.compose(Z**2, Z + 1).allclose(Z**2 + 2 * Z + 1)
    assert pc.compose(pc.chebyshev(3), pc.chebyshev(2)).allclose(pc.chebyshev(6))


@given(st.lists(coef, min_size=1, max_size=5), st.lists(coef, min_size=1, max_size=4))
@settings(max_examples=50, deadline=None)
def test_compose_matches_oracle(p, q):
    got = pc.compose(UniPoly(p), UniPoly(q)).coeffs
    want = compose_coeffs(p, q)
    n = max(len(got), len(want))
    got = np.pad(got, (0, n - len(got)))
    want = np.pad(want, (0, n - len(want)))
    scale = 1 + np.max(np.abs(want))
    assert np.max(np.abs(got - want)) <= 1e-9 * scale


def test_roots_examples():
    rs = pc.roots(Z**2 - 1)
    assert rs.total == 2 and sorted(rs.locations.real.round(12)) == [-1, 1]
    rs = pc.roots((Z - 2) ** 3)
    assert len(rs) == 1 and rs.multiplicities[0] == 3
    assert abs(rs.locations[0] - 2) < 1e-6


def test_roots_zero_polynomial():
    with pytest.raises(ZeroPolynomial):
        pc.roots(UniPoly([0, 0]))


@given(st.lists(coef, min_size=3, max_size=9))
@settings(max_examples=60, deadline=None)
def test_roots_match_companion_oracle(c):
    c[-1] = c[-1] if abs(c[-1]) > 0.5 else 1.0
    p = UniPoly(c)
    rs = pc.roots(p)
    assert rs.total == p.degree
    want = np_roots(c)
    got = rs.expanded()
    # every oracle root near some computed root, relative to the root scale
    scale = 1 + np.max(np.abs(want))
    d = np.abs(want[:, None] - got[None, :]).min(axis=1)
    assert np.max(d) <= 1e-4 * scale


def test_roots_batch_shape_and_residual():
    rng = np.random.default_rng(0)
    c = rng.normal(size=(20, 6)) + 1j * rng.normal(size=(20, 6))
    c[:, -1] = 1
    r = pc.roots_batch(c)
    assert r.shape == (20, 5)
    vals = np.array([UniPoly(row)(r[i]) for i, row in enumerate(c)])
    assert np.max(np.abs(vals)) < 1e-8


def test_roots_batch_warm_start_agrees():
    c = np.array([[-4, 0, 1], [-9, 0, 1]], dtype=complex)
    cold = pc.roots_batch(c)
    warm = pc.roots_batch(c, init=np.array([[2.1, -2.1], [3.1, -2.9]]))
    assert np.allclose(np.sort(warm.real, axis=1), np.sort(cold.real, axis=1))


@pytest.mark.parametrize("m", range(1, 9))
def test_chebyshev_matches_oracles(m):
    T = pc.chebyshev(m)
    assert np.allclose(T.coeffs.real, chebyshev_sympy(m))
    x = np.linspace(-1, 1, 11)
    assert np.allclose(T(x).real, chebyshev_values(m, x))


def test_chebyshev_small_examples():
    assert pc.chebyshev(1).allclose(Z)
    assert pc.chebyshev(2).allclose(2 * Z**2 - 1)


def test_resultant_examples():
    A = BiPoly.from_dict({(0, 2): 1, (1, 0): -1})  # t^2 - x
    B = BiPoly.from_dict({(3, 0): 1, (0, 1): -1})  # t^3 - y
    R = pc.resultant_elim(A, B).normalized()
    want = BiPoly.from_dict({(0, 2): 1, (3, 0): -1}).normalized()
    assert R.allclose(want) or R.allclose(BiPoly(-want.coeffs))
    A = BiPoly.from_dict({(0, 1): 1, (1, 0): -1})  # t - x
    B = BiPoly.from_dict({(2, 0): 1, (0, 1): -1})  # t^2 - y
    R = pc.resultant_elim(A, B).normalized()
    want = BiPoly.from_dict({(0, 1): 1, (2, 0): -1}).normalized()
    assert R.allclose(want) or R.allclose(BiPoly(-want.coeffs))


def test_resultant_shared_factor_is_degenerate():
    # A = (t - 1)(t - x), B = (t - 1)(t - y): common factor t - 1
    A = BiPoly.from_dict({(0, 2): 1, (0, 1): -1, (1, 1): -1, (1, 0): 1})
    B = BiPoly.from_dict({(2, 0): 1, (1, 0): -1, (1, 1): -1, (0, 1): 1})
    with pytest.raises(DegenerateResultant):
        pc.resultant_elim(A, B)


def test_merge_close_groups():
    locs = np.array([0, 1e-12, 1, 1 + 1e-12, 5])
    c, w, lab = pc.merge_close(locs, np.ones(5), 1e-9)
    assert sorted(w.tolist()) == [1, 2, 2]
    assert lab[0] == lab[1] and lab[2] == lab[3] and lab[4] not in (lab[0], lab[2])


def test_common_right_factor_chebyshev():
    A, B, h = pc.common_right_factor(pc.chebyshev(6), pc.chebyshev(2))
    assert h.degree == 2
    assert pc.compose(A, h).allclose(pc.chebyshev(6), atol=1e-8)
    assert pc.compose(B, h).allclose(pc.chebyshev(2), atol=1e-8)


def test_outer_factor_none_when_impossible():
    assert pc.outer_factor(Z**3 + Z, Z**2) is None
    assert pc.outer_factor(Z**4 + Z, Z**2) is None


def test_literal_roundtrip():
    p = UniPoly([1 + 2j, 0, -3])
    assert UniPoly.from_literal(p.to_literal()).allclose(p)
    Q = BiPoly.from_dict({(0, 2): 1, (3, 0): -1})
    assert BiPoly.from_literal(Q.to_literal()).allclose(Q)
