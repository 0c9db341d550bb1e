"""Pathwise functionals of the quotient dynamics and their inequality checks.

Everything here is computed on the trajectory grid with left-point (Ito)
evaluation of stochastic integrals, consistent with the schemes.  Quadratic
forms use the symmetric part of the corrected generator; the raw matrix is
applied where an operator (not a form) acts on a vector.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .basis import SpectralBasis
from .integrator import Trajectory
from .operators import (
    MatrixPath,
    OperatorFamily,
    TildeOperator,
    assemble_tilde_A,
    galerkin_compress,
    sym,
)

#: below this H-norm an eps=0 quotient step is excluded and counted, not patched
NORM_FLOOR = 1e-150


def _sym_matrix(tilde: Union[TildeOperator, np.ndarray]) -> np.ndarray:
    if isinstance(tilde, TildeOperator):
        return tilde.sym_part
    return sym(np.asarray(tilde, dtype=float))


def _raw_matrix(tilde: Union[TildeOperator, np.ndarray]) -> np.ndarray:
    if isinstance(tilde, TildeOperator):
        return tilde.matrix
    return np.asarray(tilde, dtype=float)


# -- pointwise functionals --------------------------------------------


def quotient(u: np.ndarray, tilde: Union[TildeOperator, np.ndarray], eps: float) -> float:
    """Rayleigh-type quotient <sym(T)u, u> / (|u|^2 + eps)."""
    u = np.asarray(u, dtype=float)
    m = _sym_matrix(tilde)
    den = float(u @ u) + eps
    if eps == 0.0 and den <= NORM_FLOOR**2:
        raise ZeroDivisionError("quotient with eps=0 requires |u| > 0")
    return float(u @ m @ u) / den


def quotient_full(u: np.ndarray, ops: OperatorFamily, t: float, eps: float) -> float:
    """Quotient plus the squared weak-noise term."""
    u = np.asarray(u, dtype=float)
    base = quotient(u, assemble_tilde_A(ops, t), eps)
    den = float(u @ u) + eps
    extra = 0.0
    for bp in ops.Bs:
        extra += float(u @ bp.at(t) @ u) ** 2
    return base + extra / den**2


def quotient_F(u: np.ndarray, ops: OperatorFamily, t: float, eps: float) -> float:
    """Full quotient plus the nonlinearity's projection term."""
    u = np.asarray(u, dtype=float)
    out = quotient_full(u, ops, t, eps)
    if ops.F is not None:
        den = float(u @ u) + eps
        out += float(np.dot(ops.F(t, u), u)) / den
    return out


def eigen_residual(u: np.ndarray, tilde: Union[TildeOperator, np.ndarray], lam: float) -> float:
    """|(sym(T) - lam) u| / |u|; zero exactly on an eigenpair."""
    u = np.asarray(u, dtype=float)
    nu = np.linalg.norm(u)
    if nu <= NORM_FLOOR:
        raise ZeroDivisionError("eigen residual undefined at u=0")
    m = _sym_matrix(tilde)
    return float(np.linalg.norm(m @ u - lam * u)) / nu


# -- series along a trajectory ----------------------------------------


def _apply(mp_or_mat, states: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Apply a (possibly time-dependent) matrix to every state, shape-preserving."""
    if isinstance(mp_or_mat, np.ndarray):
        return states @ mp_or_mat.T
    if mp_or_mat.is_constant:
        return states @ mp_or_mat.values.T
    out = np.empty_like(states)
    for j, t in enumerate(times):
        out[..., j, :] = states[..., j, :] @ mp_or_mat.at(float(t)).T
    return out


def _tilde_applied(ops: OperatorFamily, states: np.ndarray, times: np.ndarray,
                   symmetric: bool) -> np.ndarray:
    if ops.is_constant:
        tilde = assemble_tilde_A(ops, float(times[0]))
        m = tilde.sym_part if symmetric else tilde.matrix
        return states @ m.T
    out = np.empty_like(states)
    for j, t in enumerate(times):
        tilde = assemble_tilde_A(ops, float(t))
        m = tilde.sym_part if symmetric else tilde.matrix
        out[..., j, :] = states[..., j, :] @ m.T
    return out


def rho_series(traj: Trajectory, ops: OperatorFamily, delta: float) -> np.ndarray:
    """Per-noise ratio <u, B_k u>/(|u|^2 + delta), shape (J+1, n)."""
    states, times = traj.states, traj.times
    den = np.sum(states**2, axis=-1) + delta
    if delta == 0.0 and np.any(den <= NORM_FLOOR**2):
        raise ZeroDivisionError("rho with delta=0 on a vanishing path")
    out = np.empty(states.shape[:-1] + (ops.n_noise,))
    for k, bp in enumerate(ops.Bs):
        bu = _apply(bp, states, times)
        out[..., k] = np.sum(states * bu, axis=-1) / den
    return out


def exp_martingale(traj: Trajectory, ops: OperatorFamily, delta: float) -> np.ndarray:
    """Exponential martingale of the weak-noise ratios, mean one at all times.

    Accumulated in log space with left-point increments:
    log M picks up -2 sum_k rho_k dw_k - 2 sum_k rho_k^2 dt per step.
    """
    rho = rho_series(traj, ops, delta)  # (J+1, n)
    dw = traj.path.increments  # (J, n)
    dt = traj.dt
    incr = -2.0 * np.sum(rho[:-1] * dw, axis=-1) - 2.0 * np.sum(rho[:-1] ** 2, axis=-1) * dt
    logm = np.concatenate([[0.0], np.cumsum(incr)])
    return np.exp(logm)


def exp_martingale_batch(
    states: np.ndarray, increments: np.ndarray, times: np.ndarray,
    ops: OperatorFamily, delta: float,
) -> np.ndarray:
    """Ensemble version of exp_martingale on stacked paths.

    states has shape (P, J+1, N) and increments (P, J, n); returns (P, J+1).
    """
    states = np.asarray(states, dtype=float)
    dt = float(times[1] - times[0])
    den = np.sum(states**2, axis=-1) + delta  # (P, J+1)
    incr = np.zeros(increments.shape[:-1])  # (P, J)
    sq = np.zeros_like(den)
    for k, bp in enumerate(ops.Bs):
        bu = _apply(bp, states, times)
        rho = np.sum(states * bu, axis=-1) / den
        incr += rho[:, :-1] * increments[..., k]
        sq += rho**2
    log_steps = -2.0 * incr - 2.0 * sq[:, :-1] * dt
    logm = np.concatenate(
        [np.zeros((states.shape[0], 1)), np.cumsum(log_steps, axis=1)], axis=1
    )
    return np.exp(logm)


def psi_series(traj: Trajectory, ops: OperatorFamily, eps: float,
               martingale: Optional[np.ndarray] = None) -> np.ndarray:
    """-(1/2) M_eps(t) log(|u(t)|^2 + eps)."""
    if eps <= 0.0:
        raise ValueError("psi series requires eps > 0")
    m = exp_martingale(traj, ops, eps) if martingale is None else martingale
    sq = np.sum(traj.states**2, axis=-1)
    return -0.5 * m * np.log(sq + eps)


def quotient_series(traj: Trajectory, ops: OperatorFamily, eps: float) -> np.ndarray:
    """The plain quotient at every grid time."""
    states, times = traj.states, traj.times
    tu = _tilde_applied(ops, states, times, symmetric=True)
    den = np.sum(states**2, axis=-1) + eps
    return np.sum(states * tu, axis=-1) / den


def hitting_time(traj: Trajectory, r: float) -> Optional[float]:
    """First grid time with |u(t)| <= r, or None if the level is never hit."""
    if r < 0:
        raise ValueError("hitting level must be nonnegative")
    norms = np.sqrt(np.sum(traj.states**2, axis=-1))
    hits = np.flatnonzero(norms <= r)
    if hits.size == 0:
        return None
    return float(traj.times[hits[0]])


# -- Gronwall bound process and comparison envelope -------------------


@dataclass(frozen=True)
class InequalityVerdict:
    """Outcome of a pathwise inequality check with a dt-dependent tolerance."""

    n_checked: int
    n_violations: int
    n_excluded: int
    tol: float

    @property
    def violation_fraction(self) -> float:
        return self.n_violations / max(self.n_checked, 1)


def _as_table(value, times: np.ndarray) -> np.ndarray:
    if value is None:
        return np.zeros(len(times))
    if np.isscalar(value):
        return np.full(len(times), float(value))
    value = np.asarray(value, dtype=float)
    if value.shape != times.shape:
        raise ValueError("constant table length does not match trajectory grid")
    return value


def bound_process_X(
    traj: Trajectory,
    ops: OperatorFamily,
    eps: float,
    K1=None,
    K2=None,
    K6=None,
    n_table=None,
    tol_coeff: float = 1.0,
    martingale: Optional[np.ndarray] = None,
):
    """Explicit solution of the comparison SDE and the pointwise bound check.

    Returns (X, verdict): X dominates M_eps * quotient up to a discretization
    tolerance tol_coeff * sqrt(dt).
    """
    times, states, dw = traj.times, traj.states, traj.path.increments
    dt = traj.dt
    m = exp_martingale(traj, ops, eps) if martingale is None else martingale
    lam = quotient_series(traj, ops, eps)
    g = _as_table(n_table, times) ** 2 + _as_table(K2, times) + _as_table(K6, times)
    k1 = _as_table(K1, times)
    big_g = np.concatenate([[0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * dt)])

    # left-point integrands of the driving terms
    den = np.sum(states**2, axis=-1) + eps
    tu = _tilde_applied(ops, states, times, symmetric=True)
    drive = np.zeros(len(times) - 1)
    for k, bp in enumerate(ops.Bs):
        bu = _apply(bp, states, times)
        ratio = 2.0 * np.sum(tu * bu, axis=-1) / den
        drive += (m * ratio)[:-1] * dw[:, k]
    k1_term = np.concatenate([[0.0], np.cumsum(np.exp(-big_g[:-1]) * k1[:-1] * m[:-1] * dt)])
    stoch = np.concatenate([[0.0], np.cumsum(np.exp(-big_g[:-1]) * drive)])
    x = np.exp(big_g) * (m[0] * lam[0] + k1_term - stoch)

    tol = tol_coeff * np.sqrt(dt)
    lhs = m * lam
    viol = int(np.sum(lhs > x + tol))
    verdict = InequalityVerdict(
        n_checked=len(times), n_violations=viol, n_excluded=0, tol=tol
    )
    return x, verdict


def envelope_series(
    traj: Trajectory,
    ops: OperatorFamily,
    eps: float,
    K2=None,
    K6=None,
    n_table=None,
    martingale: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Damped quotient S_eps(t) = exp(-int g) M_eps(t) * quotient(t)."""
    times = traj.times
    dt = traj.dt
    m = exp_martingale(traj, ops, eps) if martingale is None else martingale
    lam = quotient_series(traj, ops, eps)
    g = _as_table(n_table, times) ** 2 + _as_table(K2, times) + _as_table(K6, times)
    big_g = np.concatenate([[0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * dt)])
    return np.exp(-big_g) * m * lam


def comparison_envelope(
    traj: Trajectory,
    ops: OperatorFamily,
    tau_index: int,
    eps: float,
    K2=None,
    K6=None,
    n_table=None,
    tol_coeff: float = 1.0,
    form_floor: float = 1e-12,
    martingale: Optional[np.ndarray] = None,
):
    """Geometric comparison envelope for the damped quotient from time tau.

    Valid when the commutator certificate holds with a vanishing constant
    term.  Steps with |<tilde_A u, u>| below form_floor are excluded from
    the verdict and counted.
    """
    times, states, dw = traj.times, traj.states, traj.path.increments
    dt = traj.dt
    s = envelope_series(traj, ops, eps, K2=K2, K6=K6, n_table=n_table,
                        martingale=martingale)
    tu = _tilde_applied(ops, states, times, symmetric=True)
    form = np.sum(states * tu, axis=-1)  # <tilde_A u, u>
    excluded = np.abs(form) < form_floor
    safe_form = np.where(excluded, 1.0, np.abs(form))

    log_env = np.zeros(len(times))
    acc = 0.0
    for j in range(tau_index, len(times) - 1):
        if excluded[j]:
            log_env[j + 1] = acc
            continue
        step = 0.0
        for k, bp in enumerate(ops.Bs):
            bu = states[j] @ bp.at(float(times[j])).T
            r = float(tu[j] @ bu) / safe_form[j]
            step += -2.0 * r * dw[j, k] - 2.0 * r * r * dt
        acc += step
        log_env[j + 1] = acc

    env = np.full(len(times), np.nan)
    env[tau_index:] = s[tau_index] * np.exp(log_env[tau_index:])

    tol = tol_coeff * np.sqrt(dt)
    idx = np.arange(tau_index, len(times))
    usable = idx[~excluded[idx]]
    viol = int(np.sum(s[usable] > env[usable] + tol))
    verdict = InequalityVerdict(
        n_checked=len(usable), n_violations=viol,
        n_excluded=int(np.sum(excluded[idx])), tol=tol,
    )
    return env, verdict


# -- Galerkin gaps ----------------------------------------------------


def galerkin_gaps(
    traj: Trajectory,
    ops: OperatorFamily,
    basis: SpectralBasis,
    eps: float,
    N_list: Sequence[int],
    martingale: Optional[np.ndarray] = None,
):
    """Damped-path integrals measuring the finite-section error.

    Returns (K3, K4, K5): K3 and K4 are dicts over N; K5 is independent of N.
    """
    times, states = traj.times, traj.states
    m = exp_martingale(traj, ops, eps) if martingale is None else martingale
    den = np.sum(states**2, axis=-1) + eps
    tu = _tilde_applied(ops, states, times, symmetric=False)
    k5 = float(np.trapezoid(m * np.sum(tu**2, axis=-1) / den, times))

    lam = basis.hat_eigenvalues
    k3, k4 = {}, {}
    for n in N_list:
        if not (0 < n <= basis.dim):
            raise ValueError(f"section size {n} outside (0, {basis.dim}]")
        if ops.is_constant:
            tilde = assemble_tilde_A(ops, float(times[0])).matrix
            gap_m = galerkin_compress(tilde, n) - tilde
            gap_u = states @ gap_m.T
        else:
            gap_u = np.empty_like(states)
            for j, t in enumerate(times):
                tilde = assemble_tilde_A(ops, float(t)).matrix
                gap_u[j] = states[j] @ (galerkin_compress(tilde, n) - tilde).T
        k3[n] = float(np.trapezoid(m * np.sum(gap_u**2, axis=-1) / den, times))

        tail = np.zeros(len(times))
        for bp in ops.Bs:
            bu = _apply(bp, states, times)
            tail += np.sum(lam[n:] * bu[..., n:] ** 2, axis=-1)
        k4[n] = float(np.trapezoid(m * tail / den, times))
    return k3, k4, k5


# -- spectral-limit reporting -----------------------------------------


@dataclass
class PathVerdict:
    settled: bool
    lambda_estimate: float
    matched_eigenvalue: Optional[float]
    gap: Optional[float]
    residual_final: Optional[float]
    window_std: float


@dataclass
class SpectralLimitReport:
    """Per-path eigenvalue matching of the long-time quotient."""

    eigenvalues: np.ndarray
    paths: list
    settle_tol: float

    @property
    def n_settled(self) -> int:
        return sum(p.settled for p in self.paths)

    @property
    def n_matched(self) -> int:
        return sum(p.settled and p.matched_eigenvalue is not None for p in self.paths)

    def histogram(self) -> dict:
        counts: dict = {}
        for p in self.paths:
            if p.settled and p.matched_eigenvalue is not None:
                key = float(p.matched_eigenvalue)
                counts[key] = counts.get(key, 0) + 1
        return counts

    def to_dict(self) -> dict:
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "settle_tol": self.settle_tol,
            "n_paths": len(self.paths),
            "n_settled": self.n_settled,
            "histogram": {str(k): v for k, v in self.histogram().items()},
            "paths": [
                {
                    "settled": p.settled,
                    "lambda_estimate": p.lambda_estimate,
                    "matched_eigenvalue": p.matched_eigenvalue,
                    "gap": p.gap,
                    "residual_final": p.residual_final,
                    "window_std": p.window_std,
                }
                for p in self.paths
            ],
        }


def spectral_limit_report(
    quotients: np.ndarray,
    final_states: np.ndarray,
    tilde_sym: np.ndarray,
    eigenvalues: np.ndarray,
    window_frac: float = 0.2,
    settle_tol: Optional[float] = None,
) -> SpectralLimitReport:
    """Match the final-window quotient of each path to the spectrum.

    quotients has shape (P, J+1); a path settles when the standard deviation
    over the final window is below settle_tol (default: 10% of the smallest
    spectral gap).
    """
    quotients = np.atleast_2d(np.asarray(quotients, dtype=float))
    final_states = np.atleast_2d(np.asarray(final_states, dtype=float))
    eigenvalues = np.sort(np.asarray(eigenvalues, dtype=float))
    if settle_tol is None:
        gaps = np.diff(eigenvalues)
        min_gap = float(np.min(gaps)) if gaps.size else 1.0
        settle_tol = 0.1 * (min_gap if min_gap > 0 else 1.0)

    j1 = quotients.shape[1]
    w0 = max(0, int(np.floor((1.0 - window_frac) * j1)))
    paths = []
    for p in range(quotients.shape[0]):
        window = quotients[p, w0:]
        est = float(np.mean(window))
        std = float(np.std(window))
        settled = std < settle_tol
        if settled:
            idx = int(np.argmin(np.abs(eigenvalues - est)))
            matched = float(eigenvalues[idx])
            gap = abs(est - matched)
            u = final_states[p]
            res = (
                eigen_residual(u, tilde_sym, matched)
                if np.linalg.norm(u) > NORM_FLOOR
                else None
            )
        else:
            matched, gap, res = None, None, None
        paths.append(
            PathVerdict(
                settled=settled, lambda_estimate=est, matched_eigenvalue=matched,
                gap=gap, residual_final=res, window_std=std,
            )
        )
    return SpectralLimitReport(eigenvalues=eigenvalues, paths=paths, settle_tol=settle_tol)


def backward_probe(states: np.ndarray, times: np.ndarray) -> dict:
    """Minimum H-norm per path: the backward-uniqueness dichotomy report.

    For a nonzero start every path should stay strictly away from zero; a
    zero start must stay identically zero.
    """
    states = np.asarray(states, dtype=float)
    if states.ndim == 2:
        states = states[None]
    norms = np.sqrt(np.sum(states**2, axis=-1))  # (P, J+1)
    min_norms = norms.min(axis=1)
    argmins = norms.argmin(axis=1)
    return {
        "n_paths": int(states.shape[0]),
        "min_norm_per_path": min_norms,
        "min_time_per_path": times[argmins],
        "margin": float(min_norms.min()),
        "all_positive": bool(np.all(min_norms > 0.0)),
        "n_underflow": int(np.sum(min_norms <= NORM_FLOOR)),
    }


# -- derivative kernels of the regularized quotient -------------------


def quotient_fn(C: np.ndarray, eps: float, x: np.ndarray) -> float:
    """<C x, x> / (|x|^2 + eps)."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    C = np.asarray(C, dtype=float)
    x = np.asarray(x, dtype=float)
    return float(x @ C @ x) / (float(x @ x) + eps)


def quotient_fn_d1(C: np.ndarray, eps: float, x: np.ndarray, h: np.ndarray) -> float:
    """First directional derivative of the regularized quotient (C symmetric)."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    C = np.asarray(C, dtype=float)
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    den = float(x @ x) + eps
    cx = C @ x
    return 2.0 * float(cx @ h) / den - 2.0 * float(cx @ x) * float(x @ h) / den**2


def quotient_fn_d2(
    C: np.ndarray, eps: float, x: np.ndarray, h1: np.ndarray, h2: np.ndarray
) -> float:
    """Second derivative of the regularized quotient (C symmetric)."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    C = np.asarray(C, dtype=float)
    x = np.asarray(x, dtype=float)
    h1 = np.asarray(h1, dtype=float)
    h2 = np.asarray(h2, dtype=float)
    den = float(x @ x) + eps
    cx = C @ x
    cxx = float(cx @ x)
    return (
        2.0 * float((C @ h1) @ h2) / den
        - 4.0 * float(cx @ h1) * float(x @ h2) / den**2
        - 4.0 * float(cx @ h2) * float(x @ h1) / den**2
        - 2.0 * cxx * float(h2 @ h1) / den**2
        + 8.0 * cxx * float(x @ h1) * float(x @ h2) / den**3
    )
