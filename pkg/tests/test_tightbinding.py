import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from strongbind.lattice import build_geometry
from strongbind.tightbinding import (dual_cell_grid, gamma, h_tb, h_tb_matrix, torus_distance,
                                     wallace)

G = build_geometry()
finite = st.floats(-30, 30, allow_nan=False)


def test_gamma_values():
    assert gamma(np.zeros(2)) == 3 + 0j
    assert abs(gamma(G.K)) < 1e-12
    for K in G.Kvert:
        assert abs(gamma(K)) < 1e-12


@settings(max_examples=100, deadline=None)
@given(finite, finite)
def test_gamma_factorization_and_rotation(x, y):
    k = np.array([x, y])
    factored = np.exp(1j * k @ G.eB[0]) * (1 + np.exp(1j * k @ G.v1) + np.exp(1j * k @ G.v2))
    assert abs(gamma(k) - factored) < 1e-10
    assert abs(gamma(G.R120 @ k) - gamma(k)) < 1e-10
    assert abs(wallace(k) - abs(gamma(k))) < 1e-10


def test_gamma_complex_argument():
    k = np.array([0.3 + 0.2j, -1.1 + 0.05j])
    direct = sum(np.exp(1j * (k @ e)) for e in G.eB)
    assert abs(gamma(k) - direct) < 1e-13


def test_wallace_values():
    assert abs(wallace(np.zeros(2)) - 3) < 1e-15
    assert abs(wallace(G.M) - 1) < 1e-12
    rng = np.random.default_rng(0)
    for _ in range(20):
        th = rng.uniform(0, 2 * math.pi)
        kap = 1e-3 * np.array([math.cos(th), math.sin(th)])
        w2 = wallace(G.K + kap) ** 2
        assert abs(w2 / (0.75 * 1e-6) - 1) < 1e-2


@settings(max_examples=50, deadline=None)
@given(finite, finite, st.integers(-2, 2), st.integers(-2, 2))
def test_wallace_periodic(x, y, m1, m2):
    k = np.array([x, y])
    assert abs(wallace(k + m1 * G.k1 + m2 * G.k2) - wallace(k)) < 1e-10


def test_h_tb_examples():
    assert np.allclose(h_tb(np.zeros(2)).eigvalsh(), [-3, 3], atol=1e-13)
    assert np.allclose(h_tb(G.K).eigvalsh(), [0, 0], atol=1e-12)
    # gamma(M) by hand: k.v1 = k.v2 = pi so |gamma| = |1 - 1 - 1| = 1
    assert np.allclose(h_tb(G.M).eigvalsh(), [-1, 1], atol=1e-12)


def test_h_tb_structure_random():
    rng = np.random.default_rng(1)
    k = rng.uniform(-10, 10, size=(1000, 2))
    H = h_tb_matrix(k)
    assert np.allclose(H, np.conj(np.swapaxes(H, -1, -2)), atol=0)
    assert np.all(H[:, 0, 0] == 0) and np.all(H[:, 1, 1] == 0)
    ev = np.linalg.eigvalsh(H)
    w = wallace(k)
    assert np.max(np.abs(ev[:, 0] + w)) < 1e-10
    assert np.max(np.abs(ev[:, 1] - w)) < 1e-10


def test_resolvent():
    T = h_tb(np.array([0.4, -0.9]))
    z = 0.3 + 1j
    R = T.resolvent(z)
    assert np.allclose(R @ (T.matrix - z * np.eye(2)), np.eye(2), atol=1e-13)


def test_dual_grid_contains_vertices_when_divisible_by_three():
    k, frac = dual_cell_grid(9)
    assert len(k) == 81
    assert np.min(torus_distance(frac, (1 / 3, 2 / 3))) < 1e-15
    assert np.min(wallace(k)) < 1e-12
    _, frac10 = dual_cell_grid(10)
    assert np.min(torus_distance(frac10, (1 / 3, 2 / 3))) > 0.01
