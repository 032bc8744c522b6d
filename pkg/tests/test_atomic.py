import json
import math

import numpy as np
import pytest
from scipy import special
from scipy.integrate import solve_ivp, trapezoid
from scipy.optimize import brentq

from strongbind.atomic import (NN_DIST, R_CRITICAL, AtomicWell, GroundState, bump_well,
                               cylinder_matching, cylinder_well_eigenvalue, ground_state,
                               ground_state_fourier, hankel_transform, kernel_representation,
                               rho_lambda, smoothed_cylinder_well, well_from_dict)
from strongbind.errors import GridTooCoarse, NoBoundState, NoRoot, Underflow
from strongbind.lattice import build_geometry

BUMP = bump_well()
J01 = special.jn_zeros(0, 1)[0]


@pytest.fixture(scope="module")
def gs20():
    return ground_state(BUMP, 20.0)


@pytest.fixture(scope="module")
def gs12():
    return ground_state(BUMP, 12.0)


def test_well_profiles():
    r = np.linspace(0, 0.4, 2001)
    for w in (BUMP, smoothed_cylinder_well()):
        v = w.profile(r)
        assert np.all(v <= 0) and np.all(v >= -1)
        assert np.all(v[r >= w.r0] == 0)
    assert BUMP.profile(0.0) == -1.0
    assert abs(BUMP.r0 - 0.33 / math.sqrt(3)) < 1e-15


def test_well_radius_bound():
    with pytest.raises(ValueError):
        AtomicWell("smooth-bump", 0.25)
    AtomicWell("smooth-bump", 0.25, allow_weak=True)
    with pytest.raises(ValueError):
        AtomicWell("smooth-bump", 0.3, allow_weak=True)
    assert well_from_dict(BUMP.to_dict()) == BUMP


def test_ground_state_basic(gs20):
    r, u = gs20.radial_grid, gs20.u
    assert abs(gs20.norm - 1) < 1e-8
    assert abs(2 * math.pi * np.sum(u * u * r) * (r[1] - r[0]) - 1) < 1e-8
    assert np.all(u > 0)
    # strictly decreasing while the values are above roundoff
    live = u > 1e-250
    assert np.all(np.diff(u[live]) < 0)
    assert -400 <= gs20.E0 < 0
    assert gs20.gap > 0
    assert gs20.energy_ratio == gs20.E0 / 400


def _shoot_energy(well, lam, guess, rend=1.2):
    def tail(E):
        r0 = 1e-6
        c = lam**2 * well.profile(0.0) - E
        sol = solve_ivp(lambda r, y: [y[1], -y[1] / r + (lam**2 * well.profile(r) - E) * y[0]],
                        [r0, rend], [1.0, c * r0 / 2], rtol=1e-11, atol=1e-14, method="DOP853")
        return sol.y[0, -1]

    return brentq(tail, guess - 1, guess + 1, xtol=1e-12)


def test_ground_energy_against_shooting(gs20):
    fine = ground_state(BUMP, 20.0, n_r=32000, refine_check=False, with_rho=False)
    E_shoot = _shoot_energy(BUMP, 20.0, gs20.E0)
    assert abs(fine.E0 - E_shoot) < 1e-6 * 400
    assert abs(gs20.E0 - E_shoot) < 2e-6 * 400


def test_energy_decreases_with_lambda(gs12, gs20):
    assert gs20.E0 < gs12.E0
    # variational bound E0 >= -lam^2 sup|V0|
    assert gs12.E0 >= -144 and gs20.E0 >= -400


def test_no_bound_state_in_box():
    with pytest.raises(NoBoundState):
        ground_state(BUMP, 1.0, n_r=400)


def test_grid_too_coarse():
    with pytest.raises(GridTooCoarse):
        ground_state(BUMP, 20.0, n_r=200)


def test_grid_refinement_rho(gs20):
    fine = ground_state(BUMP, 20.0, n_r=16000)
    assert abs(fine.E0 - gs20.E0) < 1e-6 * 400
    assert abs(fine.rho / gs20.rho - 1) < 0.01


def test_exponential_decay_outside_support():
    rates = []
    for lam in (8.0, 12.0, 16.0, 20.0, 24.0):
        gs = ground_state(BUMP, lam, with_rho=False)
        r = np.linspace(BUMP.r0 + 0.1, BUMP.r0 + 0.6, 11)
        ratio = gs.p0(r) / gs.p0(BUMP.r0)
        slope = np.polyfit(r - BUMP.r0, np.log(ratio), 1)[0]
        rates.append(-slope / lam)
        assert np.all(ratio < 1)
    assert min(rates) > 0


def test_kernel_identity(gs12):
    radii = np.linspace(0.05, 0.5, 10)
    rep = kernel_representation(gs12, BUMP, radii)
    assert np.max(np.abs(rep / gs12.p0(radii) - 1)) < 0.01


def test_rho_positive_and_majorant(gs20):
    rho = gs20.rho
    e = build_geometry().eA[0]
    s = np.linspace(0, BUMP.r0, 200)
    near = np.max(gs20.p0(np.linalg.norm(np.stack([s, 0 * s], 1) - e, axis=1)))
    bound = 400 * 1.0 * gs20.u.max() * near * math.pi * BUMP.r0**2
    assert 0 < rho < bound


def test_rho_independent_of_bond(gs12):
    geom = build_geometry()
    base = gs12.rho
    for bond in (geom.eA[1], geom.eA[2], geom.eB[0]):
        assert abs(rho_lambda(gs12, BUMP, bond) / base - 1) < 1e-10


def test_rho_underflow():
    r = (np.arange(1, 401) - 0.5) * 0.005
    gs = GroundState(lam=50.0, E0=-1.0, radial_grid=r, u=np.full_like(r, 1e-200), E1_m0=0.0, E0_m1=0.0)
    with pytest.raises(Underflow):
        rho_lambda(gs, BUMP)


def test_ground_state_json_roundtrip(gs12):
    back = GroundState.from_json(gs12.to_json())
    assert back.E0 == gs12.E0 and back.rho == gs12.rho and back.well == BUMP
    assert np.array_equal(back.u, gs12.u)
    assert json.loads(gs12.to_json())["schema"] == 1


def test_cylinder_branches():
    E1 = cylinder_well_eigenvalue(40, 0.15, 0, 1)
    E2 = cylinder_well_eigenvalue(40, 0.15, 0, 2)
    assert -1600 < E1 < E2 < 0
    assert abs(cylinder_matching(E1, 40, 0.15, 0)) < 1e-6
    with pytest.raises(NoRoot):
        cylinder_well_eigenvalue(40, 0.15, 0, 10)


def test_cylinder_large_coupling_asymptotics():
    # (E + lam^2) R^2 / j01^2 = 1 - 2 / (lam R) + O((lam R)^-2)
    errs = []
    for lam in (40.0, 100.0, 400.0, 1000.0):
        lr = lam * 0.15
        E = cylinder_well_eigenvalue(lam, 0.15)
        rel = (E + lam**2) / (J01 / 0.15) ** 2 - 1
        assert abs(rel + 2 / lr) < (2 / lr) ** 2
        errs.append(abs(rel))
    assert errs == sorted(errs, reverse=True)
    assert errs[2] < 0.05


def test_cylinder_matches_smoothed_well():
    E = cylinder_well_eigenvalue(40, 0.15)
    devs = []
    for width in (0.02, 0.01, 0.005):
        gs = ground_state(smoothed_cylinder_well(0.15, width), 40.0, n_r=20000, with_rho=False,
                          refine_check=False)
        devs.append(abs((gs.E0 + 1600) / (E + 1600) - 1))
    assert devs == sorted(devs, reverse=True)
    assert devs[-1] < 0.02


def test_hankel_examples():
    R = 0.3
    disc = lambda r: (r < R).astype(float)  # noqa: E731
    assert abs(hankel_transform(disc, 0.0, rmax=R, n=400) - math.pi * R * R) < 1e-12
    for xi in (1.0, 7.5, 20.0):
        exact = 2 * math.pi * R * special.j1(xi * R) / xi
        assert abs(hankel_transform(disc, xi, rmax=R, n=400) - exact) < 1e-10
    gauss = lambda r: np.exp(-r * r)  # noqa: E731
    assert abs(hankel_transform(gauss, 2.0, rmax=12.0, n=600) - math.pi / math.e) < 1e-12
    r = np.linspace(1e-4, 12, 40001)
    assert abs(hankel_transform((r, np.exp(-r * r)), 2.0) - math.pi / math.e) < 1e-6


def test_ground_state_fourier(gs12):
    # at xi = 0 the transform is the integral of p0
    r, u = gs12.radial_grid, gs12.u
    assert abs(ground_state_fourier(gs12, np.array([0.0]))[0]
               - 2 * math.pi * np.sum(u * r) * (r[1] - r[0])) < 1e-12
    # Plancherel: int |p0hat|^2 d xi / (2 pi)^2 = 1
    xi = np.linspace(0, 400, 8001)
    ph = ground_state_fourier(gs12, xi)
    assert abs(trapezoid(ph**2 * xi, xi) / (2 * math.pi) - 1) < 1e-3
