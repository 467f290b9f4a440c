import numpy as np
import pytest
import sympy as sp
from conftest import Z
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import T, e1_preimages, e2_images, e2_preimages, graph_sympy

from corrdyn import correspondence as cr
from corrdyn.correspondence import Correspondence
from corrdyn.errors import DegenerateFiber, ImproperGraph
from corrdyn.polycore import BiPoly, UniPoly

pts = st.complex_numbers(max_magnitude=4, allow_nan=False, allow_infinity=False)


def _same_multiset(a, b, tol=1e-6):
    a, b = list(np.asarray(a)), list(np.asarray(b))
    if len(a) != len(b):
        return False
    for x in a:
        j = int(np.argmin([abs(x - y) for y in b]))
        if abs(x - b[j]) > tol * (1 + abs(x)):
            return False
        b.pop(j)
    return True


def _sympy_bipoly(poly: sp.Poly) -> BiPoly:
    terms = {m: complex(c) for m, c in zip(poly.monoms(), poly.coeffs())}
    return BiPoly.from_dict(terms)


def test_degrees(E1, E2, CUSP):
    assert tuple(E1.degrees) == (1, 2)
    assert tuple(E2.degrees) == (2, 3)
    assert tuple(CUSP.degrees) == (2, 3)


@pytest.mark.parametrize("g, f", [(T, T**2), (T**2, T**3), (T**2 - T, T**3)])
def test_graph_matches_sympy(g, f):
    gp = UniPoly([complex(c) for c in sp.Poly(g, T).all_coeffs()[::-1]])
    fp = UniPoly([complex(c) for c in sp.Poly(f, T).all_coeffs()[::-1]])
    got = cr.graph_poly(Correspondence.parametrized(gp, fp)).normalized()
    want = _sympy_bipoly(graph_sympy(g, f)).normalized()
    assert got.allclose(want, atol=1e-8) or got.allclose(BiPoly(-want.coeffs), atol=1e-8)


def test_preimage_examples(E1, E2):
    rs = cr.preimages(E1, 4)
    assert rs.total == 2 and _same_multiset(rs.expanded(), [2, -2])
    rs = cr.preimages(E2, 0)
    assert len(rs) == 1 and rs.multiplicities[0] == 3 and abs(rs.locations[0]) < 1e-9


def test_image_examples(E1, E2):
    rs = cr.images(E2, 0)
    assert _same_multiset(rs.expanded(), [0, 1])
    rs = cr.images(E1, 3)
    assert len(rs) == 1 and abs(rs.locations[0] - 9) < 1e-12


@given(pts)
@settings(max_examples=60, deadline=None)
def test_fibers_match_oracles(z):
    E1 = Correspondence.parametrized(Z, Z**2)
    E2 = Correspondence.parametrized(Z**2 - Z, Z**3)
    assert _same_multiset(cr.preimages(E1, z).expanded(), e1_preimages(z), 1e-5)
    assert _same_multiset(cr.preimage_table(E2, [z])[0], e2_preimages(z), 1e-5)
    assert _same_multiset(cr.image_table(E2, [z])[0], e2_images(z), 1e-5)


@given(pts)
@settings(max_examples=40, deadline=None)
def test_implicit_fiber_totals(z):
    F = Correspondence.implicit(BiPoly.from_dict({(0, 2): 1, (3, 0): -1}))
    assert cr.preimages(F, z).total == 3
    assert cr.images(F, z).total == 2


def test_degenerate_fiber_reports_location():
    # x y - 1: the x-fiber over y = 0 escapes to infinity
    F = Correspondence.implicit(BiPoly.from_dict({(1, 1): 1, (0, 0): -1}), check_proper=False)
    with pytest.raises(DegenerateFiber) as exc:
        cr.preimages(F, 0)
    assert exc.value.location == 0


def test_improper_graph_rejected():
    with pytest.raises(ImproperGraph):
        Correspondence.implicit(BiPoly.from_dict({(1, 1): 1, (0, 0): -1}))


def test_adjoint(E2):
    A = cr.adjoint(E2)
    assert tuple(A.degrees) == (3, 2)
    assert A.g.allclose(Z**3) and A.f.allclose(Z**2 - Z)
    AA = cr.adjoint(A)
    assert AA.g.allclose(E2.g) and AA.f.allclose(E2.f)


def test_compose_square_of_e1(E1):
    F2 = cr.compose(E1, E1)
    assert tuple(F2.degrees) == (1, 4)
    assert _same_multiset(cr.images(F2, 1.3).expanded(), [1.3**4])


def test_compose_square_of_e2_cross_checked(E2):
    F2 = cr.compose(E2, E2)
    assert tuple(F2.degrees) == (4, 9)
    x = 0.37 + 0.21j
    chain = cr.image_table(E2, cr.image_table(E2, [x]).ravel()).ravel()
    assert _same_multiset(cr.images(F2, x).expanded(), chain, 1e-5)


def test_perron_frobenius(E1):
    assert abs(cr.perron_frobenius(E1, lambda w: np.ones_like(w), 2.5) - 1) < 1e-12
    assert abs(cr.perron_frobenius(E1, np.real, 1.0)) < 1e-12


def test_lojasiewicz(E1, E2, CUSP):
    assert cr.lojasiewicz_exponent(E2).value == 1.5
    assert cr.lojasiewicz_exponent(E1).value == 2.0
    est = cr.lojasiewicz_exponent(CUSP)
    assert est.method == "fit" and abs(est.value - 1.5) < 0.02


def test_critical_values(E1, E2):
    cv = cr.critical_value_poly(E1).locations
    assert len(cv) == 1 and abs(cv[0]) < 1e-12
    cv = np.sort_complex(cr.critical_value_poly(E2).locations)
    assert len(cv) == 2 and np.allclose(cv, [0, 1 / 8], atol=1e-9)


def test_correspondence_dict_roundtrip(E2, CUSP):
    for F in (E2, CUSP):
        G = Correspondence.from_dict(F.to_dict())
        assert tuple(G.degrees) == tuple(F.degrees)
        assert G.graph.normalized().allclose(F.graph.normalized())
