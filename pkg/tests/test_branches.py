import json

import numpy as np
import pytest

from corrdyn import branches as br
from corrdyn.errors import BadBasePoint, BranchCollision

# frozen from branch_diameter_stats(E1, 4, 0.1, 12, n_boundary=64)
FROZEN_E1_SLOPE = -0.7367809932590199


def _e1_oracle_diameter(m, z=4.0, r=0.1):
    """First-order diameter of the disk under the branch z -> z^(1/2^m)."""
    return 2 * r * z ** (2.0**-m) / (2**m * z)


def test_unit_circle_monodromy(E1):
    path = np.exp(2j * np.pi * np.arange(257) / 256)
    w = br.continue_preimage(E1, path, 1.0)
    assert abs(w[-1] + 1) < 1e-9
    assert np.allclose(w**2, path, atol=1e-9)


def test_small_loop_closes(E1):
    path = 4 + 0.1 * np.exp(2j * np.pi * np.arange(257) / 256)
    w0 = np.sqrt(4.1)
    w = br.continue_preimage(E1, path, w0)
    assert abs(w[-1] - w0) < 1e-9


def test_start_must_be_a_preimage(E1):
    path = 4 + 0.1 * np.exp(2j * np.pi * np.arange(17) / 16)
    with pytest.raises(ValueError):
        br.continue_preimage(E1, path, 2.0)


def test_collision_through_totally_invariant_point(E2):
    path = np.linspace(1, -1, 51)
    w0 = br.cr.preimage_table(E2, path[:1])[0, 0]
    with pytest.raises(BranchCollision) as exc:
        br.continue_preimage(E2, path, w0)
    assert exc.value.index is not None and 0 < exc.value.index < 51
    assert abs(path[exc.value.index]) < 0.1


def test_bad_base_point(E1):
    with pytest.raises(BadBasePoint):
        br.branch_diameter_stats(E1, 0.05, 0.1, 2)


def test_e1_stats_against_oracle(E1):
    s = br.branch_diameter_stats(E1, 4, 0.1, 12, n_boundary=64)
    assert s.rows[0][2] == 0.2
    assert [row[1] for row in s.rows] == [2**m for m in range(13)]
    for m, _, med, _, _ in s.rows[1:]:
        assert med == pytest.approx(_e1_oracle_diameter(m), rel=0.02)
    assert s.slope == pytest.approx(FROZEN_E1_SLOPE, rel=1e-6)
    assert s.r2 > 0.99


def test_m0_row_is_exact(E2):
    s = br.branch_diameter_stats(E2, 2, 0.05, 0, n_boundary=32)
    assert s.rows == [(0, 1, 0.1, 0.1, 0.1)]


def test_e2_short_run(E2):
    s = br.branch_diameter_stats(E2, 2, 0.05, 4, n_boundary=32, keep_chains=True)
    assert [row[1] for row in s.rows] == [3**m for m in range(5)]
    meds = [row[2] for row in s.rows]
    assert all(b < a for a, b in zip(meds, meds[1:]))
    assert len(s.chains) == 81 and len({c.genealogy for c in s.chains}) == 81
    assert s.alive_fraction(4, 3) == 1.0


def test_stats_serialisation(tmp_path, E1):
    s = br.branch_diameter_stats(E1, 4, 0.1, 3, n_boundary=32)
    s.to_csv(tmp_path / "b.csv")
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert lines[0] == "m,count_alive,median_diameter,q10,q90" and len(lines) == 5
    s.to_json(tmp_path / "b.json")
    assert json.loads((tmp_path / "b.json").read_text())["rows"][3]["count_alive"] == 8


def test_diameter_helper():
    assert br.diameter([0, 3 + 4j]) == 5
    assert br.diameter([1j]) == 0
