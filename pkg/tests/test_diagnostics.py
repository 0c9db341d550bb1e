"""Pathwise functionals: quotients, martingale, bounds, gaps, kernels."""
import numpy as np
import pytest
from hypothesis import given, strategies as st

from spdelab import diagnostics as diag
from spdelab.brownian import uniform_grid
from spdelab.integrator import integrate, integrate_ensemble
from spdelab.operators import MatrixPath, OperatorFamily, assemble_tilde_A, sym
from spdelab.systems import make_diagonal, make_system


def diag_system(eigs=(1.0, 4.0, 9.0), noise=((0.3, 0.2, 0.1),)):
    return make_diagonal(eigs, noise)


# -- pointwise functionals --------------------------------------------


def test_quotient_on_eigenvector():
    m = np.diag([2.0, 5.0])
    assert diag.quotient(np.array([1.0, 0.0]), m, 0.0) == pytest.approx(2.0)
    assert diag.quotient(np.array([0.0, 3.0]), m, 0.0) == pytest.approx(5.0)


def test_quotient_uses_symmetric_part():
    m = np.array([[1.0, 10.0], [-10.0, 1.0]])  # skew part is invisible
    u = np.array([1.0, 1.0])
    assert diag.quotient(u, m, 0.0) == pytest.approx(1.0)


@given(st.floats(0.1, 10.0))
def test_quotient_scale_invariant_at_eps_zero(scale):
    m = np.diag([1.0, 3.0])
    u = np.array([1.0, 2.0])
    assert diag.quotient(scale * u, m, 0.0) == pytest.approx(
        diag.quotient(u, m, 0.0), rel=1e-12
    )


def test_quotient_eps_shrinks_magnitude():
    m = np.diag([2.0, 2.0])
    u = np.array([1.0, 0.0])
    assert diag.quotient(u, m, 1.0) == pytest.approx(1.0)  # 2 / (1 + 1)


def test_quotient_full_adds_squared_noise_term():
    sys = diag_system()
    u = np.array([1.0, 0.0, 0.0])
    base = diag.quotient(u, assemble_tilde_A(sys.ops, 0.0), 0.0)
    full = diag.quotient_full(u, sys.ops, 0.0, 0.0)
    assert full == pytest.approx(base + 0.3**2)


def test_eigen_residual_zero_on_eigenpair():
    m = np.diag([1.0, 4.0])
    assert diag.eigen_residual(np.array([0.0, 2.0]), m, 4.0) == pytest.approx(0.0)
    assert diag.eigen_residual(np.array([1.0, 0.0]), m, 4.0) == pytest.approx(3.0)


# -- martingale and psi -----------------------------------------------


def test_martingale_starts_at_one_and_stays_positive():
    sys = diag_system()
    traj = integrate(sys, "euler-maruyama", uniform_grid(1.0, 1e-3), seed=0)
    m = diag.exp_martingale(traj, sys.ops, 1e-6)
    assert m[0] == 1.0
    assert np.all(m > 0)


def test_martingale_mean_near_one_small_ensemble():
    sys = diag_system(eigs=(1.0,), noise=((0.4,),))
    grid = uniform_grid(1.0, 1e-3)
    ens = integrate_ensemble(sys, "euler-maruyama", grid, seed=3, n_paths=400)
    m = diag.exp_martingale_batch(ens.states, ens.increments, ens.times,
                                  sys.ops, 1e-6)
    mean = m[:, -1].mean()
    se = m[:, -1].std() / np.sqrt(400)
    assert abs(mean - 1.0) <= 4 * se


def test_martingale_batch_matches_per_path():
    sys = diag_system()
    grid = uniform_grid(0.5, 1e-3)
    ens = integrate_ensemble(sys, "euler-maruyama", grid, seed=5, n_paths=3)
    batch = diag.exp_martingale_batch(ens.states, ens.increments, ens.times,
                                      sys.ops, 1e-6)
    for p in range(3):
        single = diag.exp_martingale(ens.trajectory(p), sys.ops, 1e-6)
        assert np.allclose(batch[p], single, rtol=1e-12)


def test_martingale_constant_for_noise_free_path():
    sys = diag_system(noise=((0.0, 0.0, 0.0),))
    traj = integrate(sys, "euler-maruyama", uniform_grid(0.5, 1e-2), seed=0)
    assert np.allclose(diag.exp_martingale(traj, sys.ops, 1e-6), 1.0)


def test_psi_closed_form():
    sys = diag_system()
    traj = integrate(sys, "euler-maruyama", uniform_grid(0.1, 1e-2), seed=1)
    eps = 1e-4
    m = diag.exp_martingale(traj, sys.ops, eps)
    psi = diag.psi_series(traj, sys.ops, eps, martingale=m)
    expect = -0.5 * m * np.log(np.sum(traj.states**2, axis=1) + eps)
    assert np.allclose(psi, expect)


# -- Gronwall bound and envelope --------------------------------------


def test_bound_process_deterministic_flow():
    """Without noise the bound reduces to the initial quotient: X constant
    and the decreasing quotient stays below it."""
    sys = diag_system(noise=((0.0, 0.0, 0.0),))
    traj = integrate(sys, "drift-implicit", uniform_grid(2.0, 1e-3), seed=0)
    x, verdict = diag.bound_process_X(traj, sys.ops, 1e-8)
    lam = diag.quotient_series(traj, sys.ops, 1e-8)
    assert np.allclose(x, x[0])
    assert verdict.n_violations == 0
    assert np.all(np.diff(lam) <= 1e-12)


def test_bound_process_with_noise_mostly_holds():
    sys = diag_system()
    traj = integrate(sys, "euler-maruyama", uniform_grid(1.0, 1e-4), seed=7)
    _, verdict = diag.bound_process_X(traj, sys.ops, 1e-8)
    assert verdict.violation_fraction <= 0.01


def test_envelope_on_diagonal_oracle():
    sys = diag_system()
    traj = integrate(sys, "euler-maruyama", uniform_grid(1.0, 1e-4), seed=11)
    env, verdict = diag.comparison_envelope(traj, sys.ops, 0, 1e-8)
    assert verdict.n_excluded == 0
    assert verdict.violation_fraction < 0.01
    assert np.all(np.isfinite(env))


def test_hitting_time():
    sys = diag_system(noise=((0.0, 0.0, 0.0),))
    traj = integrate(sys, "drift-implicit", uniform_grid(3.0, 1e-3), seed=0)
    norms = np.linalg.norm(traj.states, axis=1)
    r = norms[len(norms) // 2]
    tau = diag.hitting_time(traj, r)
    assert tau is not None
    assert tau == pytest.approx(traj.times[len(norms) // 2], abs=2e-3)
    assert diag.hitting_time(traj, 0.0) is None  # never reaches zero


# -- Galerkin gaps ----------------------------------------------------


def test_galerkin_gaps_vanish_at_full_section():
    sys = make_system("torus-heat-scalar", dim=16,
                      u0=[1.0 / (1 + i) for i in range(16)])
    traj = integrate(sys, "drift-implicit", uniform_grid(0.5, 1e-3), seed=0)
    k3, k4, k5 = diag.galerkin_gaps(traj, sys.ops, sys.basis, 1e-8, (4, 8, 16))
    assert k3[16] == pytest.approx(0.0, abs=1e-20)
    assert k4[16] == pytest.approx(0.0, abs=1e-20)
    assert k3[4] >= k3[8] >= k3[16]
    assert k4[4] >= k4[8] >= k4[16]
    assert k5 >= 0.0


# -- spectral-limit report and backward probe -------------------------


def test_spectral_limit_report_settled_paths():
    quots = np.array([
        np.concatenate([np.linspace(5.0, 1.0, 80), np.full(20, 1.001)]),
        np.linspace(9.0, 0.0, 100),  # still moving in the window
    ])
    finals = np.array([[1.0, 0.0], [1.0, 1.0]])
    tilde = np.diag([1.0, 4.0])
    rep = diag.spectral_limit_report(quots, finals, tilde, np.array([1.0, 4.0]))
    assert rep.paths[0].settled
    assert rep.paths[0].matched_eigenvalue == 1.0
    assert rep.paths[0].gap < 1e-2
    assert not rep.paths[1].settled
    assert rep.histogram() == {1.0: 1}


def test_backward_probe_positive_and_zero_start():
    sys = diag_system()
    grid = uniform_grid(1.0, 1e-3)
    ens = integrate_ensemble(sys, "euler-maruyama", grid, seed=2, n_paths=4)
    probe = diag.backward_probe(ens.states, ens.times)
    assert probe["all_positive"]
    assert probe["n_underflow"] == 0

    zero = integrate(sys, "euler-maruyama", grid, seed=2,
                     u0=np.zeros(3))
    assert np.all(zero.states == 0.0)


# -- derivative kernels -----------------------------------------------


def _random_symmetric(rng, n):
    c = rng.standard_normal((n, n))
    return 0.5 * (c + c.T)


def test_kernel_values_at_origin():
    c = np.diag([2.0, 4.0])
    eps = 0.5
    x0 = np.zeros(2)
    h1 = np.array([1.0, 0.0])
    h2 = np.array([1.0, 0.0])
    assert diag.quotient_fn(c, eps, x0) == 0.0
    assert diag.quotient_fn_d1(c, eps, x0, h1) == 0.0
    assert diag.quotient_fn_d2(c, eps, x0, h1, h2) == pytest.approx(2 * 2.0 / eps)


def test_kernel_first_derivative_finite_difference():
    rng = np.random.default_rng(0)
    for _ in range(30):
        n = int(rng.integers(2, 7))
        c = _random_symmetric(rng, n)
        eps = 10.0 ** rng.uniform(-3, 0)
        x = rng.standard_normal(n)
        h = rng.standard_normal(n)
        step = 1e-5
        fd = (diag.quotient_fn(c, eps, x + step * h)
              - diag.quotient_fn(c, eps, x - step * h)) / (2 * step)
        d1 = diag.quotient_fn_d1(c, eps, x, h)
        assert abs(fd - d1) <= 1e-6 * max(1.0, abs(d1))


def test_kernel_second_derivative_symmetric_in_directions():
    rng = np.random.default_rng(1)
    c = _random_symmetric(rng, 4)
    x = rng.standard_normal(4)
    h1 = rng.standard_normal(4)
    h2 = rng.standard_normal(4)
    assert diag.quotient_fn_d2(c, 0.1, x, h1, h2) == pytest.approx(
        diag.quotient_fn_d2(c, 0.1, x, h2, h1), rel=1e-12
    )


def test_kernel_rejects_nonpositive_eps():
    with pytest.raises(ValueError):
        diag.quotient_fn(np.eye(2), 0.0, np.ones(2))
