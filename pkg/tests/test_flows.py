import numpy as np
import pytest

from liegeo.algebra import AlgebraElement, GroupElement, adjoint_arr, bracket_arr, random_element
from liegeo.errors import IntegrationDiverged, InvalidParameters
from liegeo.filtration import SRStructure, catalog
from liegeo.flows import (
    MONITORS,
    Trajectory,
    VectorFieldSpec,
    default_monitors,
    evaluate_monitors,
    integrate,
    integrate_arr,
    rhs_chain,
    rhs_manakov,
    rhs_rank2_so4,
    rhs_singular_manakov,
    taming_spec,
)
from liegeo.geodesics import euler_solution_arr


def test_chain_all_s_equal_is_stationary():
    f = catalog("u1-su2-u2-so4").filtration
    spec = VectorFieldSpec.chain(f, (1.5, 1.5, 1.5, 1.5))
    x = random_element(4, 0)
    xdot, omega = rhs_chain(spec, x)
    assert xdot.norm() <= 1e-15
    assert np.allclose(omega.coeffs, 1.5 * x.coeffs)
    traj = integrate(spec, None, x, t_end=1.0, step=1e-2, monitors=[])
    assert np.max(np.abs(traj.x - x.coeffs)) <= 1e-14


def test_chain_rhs_matches_partial_sum_formula():
    srs = catalog("su3-g2-so7").structure
    f = srs.filtration
    spec = VectorFieldSpec.from_structure(srs)
    rng = np.random.default_rng(1)
    for _ in range(5):
        s = rng.uniform(-2, 2, 3)
        spec = VectorFieldSpec.chain(f, s)
        x = random_element(7, rng)
        parts = f.decompose_arr(x.coeffs)
        expected = np.zeros(21)
        for i in range(3):
            lower = sum((s[i] - s[j]) * parts[j] for j in range(i))
            if i:
                expected += bracket_arr(lower, parts[i], 7)
        xdot, omega = rhs_chain(spec, x)
        assert np.allclose(xdot.coeffs, expected, atol=1e-12)
        assert np.allclose(omega.coeffs, sum(s[i] * parts[i] for i in range(3)), atol=1e-13)
        # Lie-Poisson form x' = [x, omega]
        assert np.allclose(xdot.coeffs, bracket_arr(x.coeffs, omega.coeffs, 7), atol=1e-12)
        # g_0 part never moves
        assert np.allclose(f.projectors[0] @ xdot.coeffs, 0.0, atol=1e-12)


def test_general_a0_operator():
    f = catalog("su3-g2-so7").filtration
    k = f.dims[0]
    rng = np.random.default_rng(2)
    s = (0.7, 1.0, 2.0)
    # A_0 = s_0 * id recovers the chain field
    spec_id = VectorFieldSpec.chain(f, s, a0=0.7 * np.eye(k))
    spec = VectorFieldSpec.chain(f, s)
    x = random_element(7, rng)
    assert np.allclose(spec_id.rhs_arr(x.coeffs)[0], spec.rhs_arr(x.coeffs)[0], atol=1e-12)
    M = rng.normal(size=(k, k))
    A0 = M + M.T
    gen = VectorFieldSpec.chain(f, s, a0=A0)
    assert gen.kind == "general-bogoyavlensky"
    xdot, omega = gen.rhs_arr(x.coeffs)
    assert np.allclose(xdot, bracket_arr(x.coeffs, omega, 7), atol=1e-12)
    x0 = f.projectors[0] @ x.coeffs
    a0x0 = f.levels[0].T @ A0 @ (f.levels[0] @ x0)
    assert np.allclose(f.projectors[0] @ xdot, bracket_arr(x0, a0x0, 7), atol=1e-12)
    traj = integrate(gen, None, x, t_end=1.0, step=1e-3, monitors=["hamiltonian", "casimir"])
    assert max(traj.drift().values()) <= 1e-8
    with pytest.raises(InvalidParameters):
        VectorFieldSpec.chain(f, s, a0=np.ones((k, k + 1)))
    with pytest.raises(InvalidParameters):
        VectorFieldSpec.chain(f, s, a0=M)


def test_chain_restricted_to_so3_matches_rank2_system():
    nu1 = 1.3
    f = catalog("rank2-so3-so4").filtration
    spec = VectorFieldSpec.chain(f, (2 * nu1, 0.0, 0.4))
    rng = np.random.default_rng(3)
    for _ in range(10):
        x = np.zeros(6)
        x[[3, 4, 5]] = rng.normal(size=3)
        xe = AlgebraElement(x, 4)
        a = rhs_chain(spec, xe)[0].coeffs
        b = rhs_rank2_so4(nu1, 0.25, xe)[0].coeffs
        assert np.allclose(a, b, atol=1e-13)


def test_rank2_examples():
    rng = np.random.default_rng(4)
    x = np.zeros(6)
    x[[3, 4, 5]] = rng.normal(size=3)
    xdot, _ = rhs_rank2_so4(1.0, 0.5, AlgebraElement(x, 4))
    assert np.all(xdot.coeffs[:3] == 0.0)
    x = AlgebraElement.from_map(4, {"e_23": 1.0, "e_34": -1.0})
    assert rhs_rank2_so4(1.0, 0.5, x)[0].norm() == 0.0
    for _ in range(10):
        x = random_element(4, rng)
        xdot, omega = rhs_rank2_so4(1.0, 0.5, x)
        assert np.allclose(xdot.coeffs, bracket_arr(x.coeffs, omega.coeffs, 4), atol=1e-12)
        c = x.coeffs
        expected = np.zeros(6)
        expected[[3, 5]] = (c[3] + c[5])
        expected[0] = 0.5 * c[0]
        assert np.allclose(omega.coeffs, expected)
    with pytest.raises(InvalidParameters):
        VectorFieldSpec(kind="rank2-so4", n=5, nu=(1.0, 0.5))


def test_rank2_invariant_subspace_and_so3_geometry():
    x0 = AlgebraElement.from_map(4, {"e_23": 0.3, "e_24": -0.8, "e_34": 0.6})
    traj = integrate(VectorFieldSpec.rank2(1.0, 0.5), None, x0, t_end=1.0, step=1e-3, monitors=[])
    assert np.max(np.abs(traj.x[:, :3])) <= 1e-10
    x23, x24, x34 = traj.x[:, 3], traj.x[:, 4], traj.x[:, 5]
    cyl = (x23 - x34) ** 2 + 2 * x24**2
    plane = x23 + x34
    assert np.max(np.abs(cyl - cyl[0])) <= 1e-10
    assert np.max(np.abs(plane - plane[0])) <= 1e-10


def test_manakov_examples():
    x = random_element(3, 5)
    xdot, omega = rhs_manakov((1, 2, 4), (1, 4, 16), x)
    assert np.allclose(omega.coeffs, np.array([3.0, 5.0, 6.0]) * x.coeffs)
    xdot, omega = rhs_manakov((1, 2, 4), (1, 2, 4), x)
    assert np.allclose(omega.coeffs, x.coeffs) and xdot.norm() < 1e-15
    with pytest.raises(InvalidParameters):
        rhs_manakov((1, 1, 2), (1, 1, 3), x)
    with pytest.raises(InvalidParameters):
        rhs_singular_manakov((1, 1, 2), (1, 2, 3), x)


def test_singular_manakov_keeps_so_a_fixed():
    a, b = (1, 1, 2, 2, 5), (0, 0, 3, 3, 4)
    spec = VectorFieldSpec.manakov_field(a, b, singular=True)
    x = random_element(5, 6)
    xdot, omega = rhs_singular_manakov(a, b, x)
    mask = spec.manakov.mask_so_a
    assert np.all(xdot.coeffs[mask] == 0.0)
    assert np.all(omega.coeffs[spec.manakov.mask_so_b] == 0.0)
    traj = integrate(spec, None, x, t_end=1.0, step=1e-3)
    assert np.max(np.abs(traj.x[:, mask] - x.coeffs[mask])) <= 1e-10
    assert "xa_12" in traj.monitors and "L5_3" in traj.monitors


@pytest.mark.parametrize("kind", ["chain", "manakov", "rank2"])
def test_conservation_along_integration(kind):
    rng = np.random.default_rng(7)
    if kind == "chain":
        spec = VectorFieldSpec.from_structure(catalog("u1-su2-u2-so4").structure)
    elif kind == "manakov":
        spec = VectorFieldSpec.manakov_field((1, 2, 3, 5), (1, 4, 9, 25))
    else:
        spec = VectorFieldSpec.rank2(1.0, 0.5)
    x = random_element(4, rng)
    g = GroupElement.random(4, rng)
    traj = integrate(spec, g, x, t_end=1.0, step=1e-3)
    drift = traj.drift()
    assert drift["norm2"] <= 1e-10
    assert max(v for k, v in drift.items() if k.startswith("Phi_")) <= 1e-8
    assert max(drift.values()) <= 1e-8
    assert np.max(np.abs(np.einsum("tji,tjk->tik", traj.g, traj.g) - np.eye(4))) <= 1e-12


def test_energy_drift_bounded_by_fourth_power_of_step():
    srs = catalog("so2-so3-so4").structure
    spec = VectorFieldSpec.from_structure(srs)
    x0 = random_element(4, 3, 2.0)
    drifts = []
    for h in (0.05, 0.025):
        _, _, xs = integrate_arr(spec, np.eye(4), x0.coeffs, 1.0, h)
        H = spec.hamiltonian_arr(xs)
        drifts.append(np.max(np.abs(H - H[0])))
    assert drifts[0] / drifts[1] >= 16.0


def test_state_error_is_fourth_order():
    srs = catalog("so2-so3-so4").structure
    spec = VectorFieldSpec.from_structure(srs)
    x0 = random_element(4, 3, 2.0)
    exact = euler_solution_arr(srs.filtration, srs.s, x0.coeffs, 1.0)
    errs = []
    for h in (0.05, 0.025):
        _, _, xs = integrate_arr(spec, np.eye(4), x0.coeffs, 1.0, h)
        errs.append(np.max(np.abs(xs[-1] - exact)))
    assert 12.0 <= errs[0] / errs[1] <= 20.0


def test_momentum_map_constant():
    spec = VectorFieldSpec.from_structure(catalog("su3-g2-so7").structure)
    rng = np.random.default_rng(8)
    x = random_element(7, rng)
    g = GroupElement.random(7, rng)
    _, gs, xs = integrate_arr(spec, g.mat, x.coeffs, 1.0, 1e-3, record_every=50)
    phi = adjoint_arr(gs, xs)
    assert np.max(np.abs(phi - phi[0])) <= 1e-8


def test_taming_limit_is_linear_in_eps():
    srs = catalog("u1-su2-u2-so4").structure
    x0 = random_element(4, 9)
    _, _, xs = integrate_arr(VectorFieldSpec.from_structure(srs), np.eye(4), x0.coeffs, 1.0, 1e-3)
    dev = []
    for eps in (1e-2, 1e-3):
        spec = taming_spec(srs, eps)
        assert spec.s[0] == eps and spec.s[2] == eps and spec.s[1] == srs.s[1]
        _, _, xe = integrate_arr(spec, np.eye(4), x0.coeffs, 1.0, 1e-3)
        dev.append(np.max(np.linalg.norm(xe - xs, axis=-1)))
    assert 5.0 <= dev[0] / dev[1] <= 20.0
    with pytest.raises(InvalidParameters):
        taming_spec(srs, 0.0)


def test_batched_integration_matches_single_runs():
    spec = VectorFieldSpec.from_structure(catalog("so2-so3-so4").structure)
    rng = np.random.default_rng(10)
    X = rng.normal(size=(3, 6))
    G = np.array([GroupElement.random(4, rng).mat for _ in range(3)])
    t, gs, xs = integrate_arr(spec, G, X, 0.5, 1e-2)
    for k in range(3):
        _, g1, x1 = integrate_arr(spec, G[k], X[k], 0.5, 1e-2)
        assert np.allclose(xs[:, k], x1, atol=1e-14)
        assert np.allclose(gs[:, k], g1, atol=1e-14)


def test_step_adjusted_to_hit_t_end_and_recording():
    spec = VectorFieldSpec.rank2(1.0, 0.5)
    t, _, _ = integrate_arr(spec, np.eye(4), np.ones(6), 1.0, 0.3)
    assert t[-1] == 1.0 and len(t) == 4
    t, _, _ = integrate_arr(spec, np.eye(4), np.ones(6), 1.0, 0.01, record_every=30)
    assert t[-1] == 1.0 and len(t) == 1 + 3 + 1
    with pytest.raises(ValueError):
        integrate_arr(spec, np.eye(4), np.ones(6), 1.0, 0.0)


def test_divergence_reports_last_good_time():
    spec = VectorFieldSpec.rank2(1.0, 0.5)
    x = AlgebraElement(np.array([np.nan, 0, 0, 0, 0, 0]), 4)
    with pytest.raises(IntegrationDiverged) as info:
        integrate(spec, None, x, t_end=1.0, step=0.1)
    assert info.value.last_time == 0.0


def test_monitor_registry():
    spec = VectorFieldSpec.manakov_field((1, 1, 2, 3), (1, 1, 4, 9), singular=True)
    assert default_monitors(spec) == ["hamiltonian", "casimir", "momentum_map",
                                      "casimirs_so4", "manakov", "so_a"]
    x = random_element(4, 0).coeffs
    vals = evaluate_monitors(spec, ["casimirs_so4"], np.eye(4), x)
    assert set(vals) == {"I1", "I2"}
    with pytest.raises(InvalidParameters):
        evaluate_monitors(spec, ["nope"], np.eye(4), x)
    chain = VectorFieldSpec.from_structure(catalog("so2-so3-so4").structure)
    with pytest.raises(InvalidParameters):
        evaluate_monitors(chain, ["manakov"], np.eye(4), x)
    assert set(MONITORS) >= {"hamiltonian", "casimir", "momentum_map", "manakov"}


def test_trajectory_invariants():
    with pytest.raises(ValueError):
        Trajectory(times=np.array([0.0, 0.0]), g=np.zeros((2, 3, 3)), x=np.zeros((2, 3)), n=3)
    with pytest.raises(ValueError):
        Trajectory(times=np.array([0.0, 1.0]), g=np.zeros((2, 3, 3)), x=np.zeros((2, 6)), n=3)
    traj = integrate(VectorFieldSpec.rank2(1.0, 0.5), None, random_element(4, 1), 0.1, 0.01)
    states = traj.states
    assert len(states) == len(traj) == 11
    assert isinstance(states[0][0], GroupElement)


def test_spec_validation():
    f = catalog("so2-so3-so4").filtration
    with pytest.raises(InvalidParameters):
        VectorFieldSpec.chain(f, (0.0, 1.0))
    with pytest.raises(InvalidParameters):
        VectorFieldSpec(kind="bogus", n=4)
    with pytest.raises(InvalidParameters):
        VectorFieldSpec(kind="manakov", n=4)
    srs = SRStructure(f, {1, 2}, (0.0, 1.0, 3.0))
    assert VectorFieldSpec.from_structure(srs).s == (0.0, 1.0, 3.0)


def test_batched_weights_match_single_runs():
    f = catalog("su3-g2-so7").filtration
    rng = np.random.default_rng(11)
    S = rng.uniform(-2, 2, (3, 3))
    X = rng.normal(size=(3, 21))
    _, gb, xb = integrate_arr(VectorFieldSpec.chain(f, S), np.eye(7), X, 0.5, 1e-2)
    for k in range(3):
        _, g1, x1 = integrate_arr(VectorFieldSpec.chain(f, S[k]), np.eye(7), X[k], 0.5, 1e-2)
        assert np.allclose(xb[:, k], x1, atol=1e-14) and np.allclose(gb[:, k], g1, atol=1e-14)
    with pytest.raises(InvalidParameters):
        VectorFieldSpec.chain(f, np.zeros((3, 4)))
