"""Shared correspondences, cached equilibrium samples and the acceptance summary."""

from __future__ import annotations

import numpy as np
import pytest

from corrdyn import equilibrium as eq
from corrdyn.correspondence import Correspondence
from corrdyn.polycore import BiPoly, UniPoly, chebyshev

Z = UniPoly.identity()

# criterion number -> list of (label, passed, detail)
ACCEPTANCE: dict = {}


def make_e1():
    return Correspondence.parametrized(Z, Z**2, name="E1")


def make_e2():
    return Correspondence.parametrized(Z**2 - Z, Z**3, name="E2")


def make_ch():
    return Correspondence.parametrized(chebyshev(2), chebyshev(6), name="CH")


def make_cusp():
    return Correspondence.implicit(BiPoly.from_dict({(0, 2): 1, (3, 0): -1}), name="CUSP")


@pytest.fixture(scope="session")
def E1():
    return make_e1()


@pytest.fixture(scope="session")
def E2():
    return make_e2()


@pytest.fixture(scope="session")
def CH():
    return make_ch()


@pytest.fixture(scope="session")
def CUSP():
    return make_cusp()


# frozen sampler settings for the cached estimates of mu
MU_CONFIGS = {
    "E1": eq.SamplerConfig(seed=0, start_point=4 + 0j),
    "E2": eq.SamplerConfig(seed=0, start_point=0.3 + 0.2j),
    "CH": eq.SamplerConfig(seed=0, start_point=0.3 + 0j),
}

_MU_CACHE: dict = {}


def mu_hat(name: str) -> eq.PointMeasure:
    if name not in _MU_CACHE:
        F = {"E1": make_e1, "E2": make_e2, "CH": make_ch}[name]()
        _MU_CACHE[name] = eq.brolin_sample(F, MU_CONFIGS[name])
    return _MU_CACHE[name]


@pytest.fixture(scope="session")
def mu_E1():
    return mu_hat("E1")


@pytest.fixture(scope="session")
def mu_E2():
    return mu_hat("E2")


@pytest.fixture(scope="session")
def mu_CH():
    return mu_hat("CH")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def record(criterion: int, label: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE.setdefault(criterion, []).append((label, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for c in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[c]
        ok = all(p for _, p, _ in parts)
        tr.write_line(f"criterion {c:2d}: {'PASS' if ok else 'FAIL'}")
        for label, p, detail in parts:
            tr.write_line(f"    [{'pass' if p else 'FAIL'}] {label}: {detail}")
