"""Independent reference computations used to check and freeze test values.

Nothing here imports corrdyn. Exact algebra goes through sympy, numerics
through numpy.roots and closed forms.
"""

from __future__ import annotations

import numpy as np
import sympy as sp

X, Y, T = sp.symbols("x y t")


def np_roots(coeffs_ascending) -> np.ndarray:
    """Roots by companion-matrix eigenvalues."""
    return np.roots(np.asarray(coeffs_ascending, dtype=complex)[::-1])


def chebyshev_values(m: int, x) -> np.ndarray:
    """T_m(x) = cos(m arccos x), valid on [-1, 1]."""
    return np.cos(m * np.arccos(np.asarray(x, dtype=float)))


def chebyshev_sympy(m: int) -> list:
    """Ascending integer coefficients of T_m."""
    return [int(c) for c in sp.Poly(sp.chebyshevt(m, X), X).all_coeffs()[::-1]]


def graph_sympy(g_expr, f_expr) -> sp.Poly:
    """Res_t(g(t) - x, f(t) - y) as an exact polynomial in x and y."""
    return sp.Poly(sp.resultant(g_expr - X, f_expr - Y, T), X, Y)


def diagonal_sympy(g_expr, f_expr, n: int) -> sp.Poly:
    """Exact Q_n(x, x) by iterated elimination through the chain variables."""
    xs = sp.symbols(f"x0:{n + 1}")
    # x_{k+1} in F(x_k) iff x_k = g(t_k), x_{k+1} = f(t_k)
    curve = graph_sympy(g_expr, f_expr).as_expr()
    expr = curve.subs({X: xs[0], Y: xs[1]}, simultaneous=True)
    for k in range(1, n):
        nxt = curve.subs({X: xs[k], Y: xs[k + 1]}, simultaneous=True)
        expr = sp.resultant(expr, nxt, xs[k])
    return sp.Poly(sp.expand(expr.subs(xs[n], xs[0])), xs[0])


def root_count_sympy(poly: sp.Poly) -> int:
    return int(poly.degree())


def e1_preimages(z: complex) -> np.ndarray:
    r = np.sqrt(complex(z))
    return np.array([r, -r])


def e2_preimages(z: complex) -> np.ndarray:
    """g(t) over the cube roots t of z, for (g, f) = (t^2 - t, t^3)."""
    ts = np_roots([-complex(z), 0, 0, 1])
    return ts**2 - ts


def e2_images(x: complex) -> np.ndarray:
    ts = np_roots([-complex(x), -1, 1])
    return ts**3


def z2_periodic_points(n: int) -> np.ndarray:
    """Zeros of z^(2^n) - z: 0 and the (2^n - 1)-th roots of unity."""
    k = 2**n - 1
    return np.concatenate([[0j], np.exp(2j * np.pi * np.arange(k) / k)])


def e2_fixed_points() -> list:
    """(location, multiplier) from t^3 = t^2 - t, multiplier 3t^2/(2t-1)."""
    out = []
    for t in [0j, (1 + 1j * np.sqrt(3)) / 2, (1 - 1j * np.sqrt(3)) / 2]:
        out.append((t**2 - t, 3 * t**2 / (2 * t - 1) if t != 0 else 0j))
    return out


def circle_moments() -> dict:
    """Moments of the uniform measure on the unit circle."""
    return {(1, 0): 0.0, (2, 0): 0.0, (1, 1): 1.0}


def arcsine_moments() -> dict:
    """Moments of dx / (pi sqrt(1 - x^2)) on [-1, 1]."""
    return {(1, 0): 0.0, (2, 0): 0.5, (1, 1): 0.5}


def hausdorff_brute(a, b) -> float:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    d = np.abs(a[:, None] - b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def compose_coeffs(p, q) -> np.ndarray:
    """Ascending coefficients of p(q(z)) by Horner on numpy polynomials."""
    P = np.polynomial.Polynomial(p)
    Q = np.polynomial.Polynomial(q)
    out = np.polynomial.Polynomial([0])
    for c in P.coef[::-1]:
        out = out * Q + c
    return out.coef
