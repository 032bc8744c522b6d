import numpy as np
import pytest

from strongbind.bloch import BlochProblem, assemble_hk, lowest_eigh
from strongbind.edges import BandSlice, dual_slice, nofold_check
from strongbind.lattice import build_geometry, edge_from_indices
from strongbind.potential import trig_potential

G = build_geometry()


@pytest.fixture(scope="module")
def slices():
    out = {}
    for lam in (1.0, 5.0):
        prob = BlochProblem(trig_potential(), lam, 10)
        for ab in ((1, 0), (1, 1), (2, 1)):
            out[lam, ab] = dual_slice(prob, edge_from_indices(*ab), G.K, 41)
    return out


def test_slice_shape_and_order(slices):
    for sl in slices.values():
        assert len(sl.xis) == 41 and sl.xis[20] == 0
        assert np.all(sl.E2 - sl.E1 >= 0)
        assert abs(sl.E1[20] - sl.E_D) < 1e-6 and abs(sl.E2[20] - sl.E_D) < 1e-6
        assert any(v["xi"] == 0 and v["vertex"] == "K" for v in sl.vertices_met)


def test_slice_endpoint_symmetry():
    prob = BlochProblem(trig_potential(), 5.0, 12, reduce_k=False)
    e = edge_from_indices(2, 1)
    a = lowest_eigh(assemble_hk(prob, G.K - 0.5 * e.KK2), 2)
    b = lowest_eigh(assemble_hk(prob, G.K + 0.5 * e.KK2), 2)
    assert np.max(np.abs(a - b) / np.abs(a)) < 1e-6


def test_figure_verdicts(slices):
    expected = {
        (1.0, (1, 0)): True, (1.0, (1, 1)): False, (1.0, (2, 1)): False,
        (5.0, (1, 0)): True, (5.0, (1, 1)): True, (5.0, (2, 1)): True,
    }
    for key, holds in expected.items():
        res = nofold_check(slices[key])
        assert res["holds"] is holds, key
        if not holds:
            assert len(res["crossings"]) >= 1


def test_slice_csv(slices):
    text = slices[5.0, (1, 0)].to_csv().splitlines()
    assert text[0] == "xi,E1,E2,E_D" and len(text) == 42


def test_invalid_sample_count():
    prob = BlochProblem(trig_potential(), 5.0, 4)
    with pytest.raises(ValueError):
        dual_slice(prob, edge_from_indices(1, 0), G.K, 40)
    with pytest.raises(ValueError):
        dual_slice(prob, edge_from_indices(1, 0), G.K, 21)


def _synthetic(E1, E2, E_D=0.0):
    xis = np.linspace(-0.5, 0.5, len(E1))
    return BandSlice(edge_from_indices(1, 0), G.K, xis, np.asarray(E1), np.asarray(E2), E_D)


def test_nofold_detects_crossing_and_ignores_touching():
    x = np.linspace(-0.5, 0.5, 41)
    cone = np.abs(x)
    # lower band comes back up through the Dirac level near |xi| = 0.3
    lower = -cone + 4 * np.maximum(np.abs(x) - 0.2, 0)
    res = nofold_check(_synthetic(lower, cone + 1))
    assert not res["holds"]
    assert sorted(round(c["xi"], 3) for c in res["crossings"]) == [-0.267, 0.267]
    # tangential touching at xi = 0.4 counts as no crossing
    touch = np.where(np.isclose(x, 0.4), 0.0, -np.abs(x))
    assert nofold_check(_synthetic(touch, cone + 1))["holds"]


def test_exclusion_window():
    x = np.linspace(-0.5, 0.5, 41)
    lower = -np.abs(x)
    lower[19] = 1e-3  # wiggle one step from the Dirac sample
    assert nofold_check(_synthetic(lower, np.abs(x) + 1))["holds"]
    assert not nofold_check(_synthetic(lower, np.abs(x) + 1), exclusion_steps=0)["holds"]
