"""Decoder synthesis: the auxiliary system that turns photon counting
into an optimal measurement of the emission field.

The synthesis runs entirely on the discrete bin decomposition.  With
A^0, A^1 the sensor's Kraus pair and R_n = sqrt(rho_tilde(t_n)) W0 the
left-normalization gauge (rho_tilde solves the master equation from the
identity), the per-bin left-normalized tensors are

    B^s_n = R_n^{-1} A^s R_{n-1},

and the decoder generators are read off their complex conjugates:

    Bbar^0 = 1 - i H_D dt - (1/2) J_D^dag J_D dt,
    Bbar^1 = -sqrt(dt) J_D^dag.

``build_decoder`` extracts H_D(t), J_D(t) exactly from this relation
per bin, which stays correct for arbitrary time dependence (the closed
form below drops a gauge-motion term proportional to dR/dt and is only
exact once rho_tilde has relaxed).  ``stationary_decoder`` evaluates
that closed form

    H_D = -(1/2){ R^T [conj(H) - (i/2) J^T conj(J)] R^-T + h.c. },
    J_D = -R^T J^T R^-T

at the steady state, where it is exact.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    DegenerateSteadyState,
    NonUnitaryGauge,
    RankDeficientRho,
    RankDeficientSteadyState,
)
from .linalg import psd_sqrt, robust_inv
from .models import SensorModel
from .propagate import TimeGrid, pair_table

__all__ = [
    "DecoderModel",
    "rho_tilde",
    "build_decoder",
    "stationary_decoder",
    "two_level_decoder",
    "liouvillian_steady_state",
    "verify_decoding",
]


@dataclass(eq=False)
class DecoderModel:
    """Generators of the decoding system.

    ``initial_state_d`` is the product-form decoder state W0^dag psi_S(0)
    of the underlying theorem.  ``purified_joint`` is the joint
    sensor+decoder vector vec(R(0))/|R(0)| that the cascade uses by
    default: it is the initialization under which the all-zeros record
    carries probability 1 - O(dt) (see the vacuum-output tests).
    """

    dim: int
    hamiltonian_d: Callable[[float], np.ndarray]
    jump_d: Callable[[float], np.ndarray]
    initial_state_d: np.ndarray
    w0: Optional[np.ndarray] = None
    purified_joint: Optional[np.ndarray] = None
    rank_log: Optional[np.ndarray] = None
    tables: Optional[tuple] = None
    time_dependent: bool = True
    herm_residual: float = 0.0


def _check_unitary(w0, dim):
    if w0 is None:
        return np.eye(dim, dtype=complex)
    w0 = np.asarray(w0, dtype=complex)
    if w0.shape != (dim, dim):
        raise NonUnitaryGauge(f"W0 shape {w0.shape} != ({dim}, {dim})")
    if np.abs(w0.conj().T @ w0 - np.eye(dim)).max() > 1e-12:
        raise NonUnitaryGauge("W0^dag W0 deviates from identity beyond 1e-12")
    return w0


def rho_tilde(model: SensorModel, theta: float, grid: TimeGrid, max_step: float = 0.05):
    """Solve the master equation from the identity: rho_tilde(0) = 1_D.

    Same discrete update as the density propagation; trace is conserved
    at D up to the first-order completeness defect.
    """
    tab = pair_table(model, theta, grid, max_step)
    rt = np.eye(model.dim, dtype=complex)
    out = np.empty((grid.n_steps + 1, model.dim, model.dim), dtype=complex)
    out[0] = rt
    for k in range(grid.n_steps):
        a0, a1 = tab.at(k)
        rt = a0 @ rt @ a0.conj().T + a1 @ rt @ a1.conj().T
        out[k + 1] = rt
    return out


def build_decoder(model: SensorModel, theta: float, grid: TimeGrid,
                  w0=None, max_step: float = 0.05, rank_tol: float = 1e-10):
    """Synthesize tabulated decoder generators along the grid.

    Exact per-bin extraction from the left-normalized tensors; valid
    for arbitrary time-dependent sensor dynamics.  H_D(t) and J_D(t)
    are tabulated at left endpoints and interpolated as step constants,
    matching the Kraus convention.
    """
    D = model.dim
    w0 = _check_unitary(w0, D)
    tab = pair_table(model, theta, grid, max_step)
    n = grid.n_steps
    dt = grid.dt
    sq = np.sqrt(dt)

    rt = np.eye(D, dtype=complex)
    r_prev = w0.copy()
    hd = np.empty((n, D, D), dtype=complex)
    jd = np.empty((n, D, D), dtype=complex)
    ranks = np.empty(n + 1, dtype=np.int64)
    ranks[0] = D
    herm_res = 0.0
    for k in range(n):
        a0, a1 = tab.at(k)
        rt = a0 @ rt @ a0.conj().T + a1 @ rt @ a1.conj().T
        tr = np.trace(rt).real
        ev = np.linalg.eigvalsh(0.5 * (rt + rt.conj().T))
        ranks[k + 1] = int(np.sum(ev > rank_tol * tr))
        if ev.min() <= rank_tol * tr:
            t_fail = grid.t_start + (k + 1) * dt
            raise RankDeficientRho(
                f"rho_tilde rank-deficient at t={t_fail:.6g} "
                f"(min eigenvalue {ev.min():.3e}, trace {tr:.3e})"
            )
        r_new = psd_sqrt(rt) @ w0
        ri = robust_inv(r_new, rel_tol=rank_tol)
        b0c = (ri @ a0 @ r_prev).conj()
        b1c = (ri @ a1 @ r_prev).conj()
        h = (1j / (2.0 * dt)) * (b0c - b0c.conj().T)
        herm_res = max(herm_res, float(np.abs(h - h.conj().T).max()))
        hd[k] = 0.5 * (h + h.conj().T)
        jd[k] = -b1c.conj().T / sq
        r_prev = r_new

    t0, tend = grid.t_start, grid.t_end

    def ham_d(t):
        k = min(max(int(np.floor((t - t0) / dt)), 0), n - 1)
        return hd[k]

    def jump_d(t):
        k = min(max(int(np.floor((t - t0) / dt)), 0), n - 1)
        return jd[k]

    return DecoderModel(
        dim=D,
        hamiltonian_d=ham_d,
        jump_d=jump_d,
        initial_state_d=w0.conj().T @ model.initial_state,
        w0=w0,
        purified_joint=w0.ravel() / np.sqrt(D),
        rank_log=ranks,
        tables=(grid.left_times.copy(), hd, jd),
        time_dependent=True,
    )


def liouvillian_steady_state(model: SensorModel, theta: float, t: float = 0.0,
                             kernel_tol: float = 1e-9):
    """Unique steady state of the (time-independent) Lindblad generator.

    Raises DegenerateSteadyState when the generator kernel is not
    one-dimensional.
    """
    h = model.hamiltonian(t, theta)
    j = model.jump(t, theta)
    D = model.dim
    eye = np.eye(D)
    jj = j.conj().T @ j
    L = (
        -1j * (np.kron(h, eye) - np.kron(eye, h.conj()))
        + np.kron(j, j.conj())
        - 0.5 * (np.kron(jj, eye) + np.kron(eye, jj.conj()))
    )
    w, v = np.linalg.eig(L)
    scale = max(1.0, float(np.abs(w).max()))
    null = np.where(np.abs(w) < kernel_tol * scale)[0]
    if len(null) != 1:
        raise DegenerateSteadyState(
            f"Lindblad kernel dimension {len(null)} (eigenvalues {w[null]})"
        )
    rho = v[:, null[0]].reshape(D, D)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    return rho


def stationary_decoder(model: SensorModel, theta: float, w0=None,
                       min_population: float = 1e-10):
    """Constant decoder generators from the steady-state closed form.

    Exact in the large-t limit of ``build_decoder`` (no gauge motion at
    stationarity).  Requires a time-independent model with a unique
    full-rank steady state.
    """
    if model.time_dependent:
        raise DegenerateSteadyState("stationary synthesis needs a time-independent model")
    D = model.dim
    w0 = _check_unitary(w0, D)
    rho_ss = liouvillian_steady_state(model, theta)
    p = np.linalg.eigvalsh(rho_ss)
    if p.min() <= min_population:
        raise RankDeficientSteadyState(
            f"steady-state population {p.min():.3e} at or below {min_population}"
        )
    r = psd_sqrt(D * rho_ss) @ w0
    rt = r.T
    rti = robust_inv(rt)
    h = model.hamiltonian(0.0, theta)
    j = model.jump(0.0, theta)
    m = rt @ (h.conj() - 0.5j * (j.T @ j.conj())) @ rti
    hd_mat = -0.5 * (m + m.conj().T)
    jd_mat = -rt @ j.T @ rti

    return DecoderModel(
        dim=D,
        hamiltonian_d=lambda t: hd_mat,
        jump_d=lambda t: jd_mat,
        initial_state_d=w0.conj().T @ model.initial_state,
        w0=w0,
        purified_joint=r.ravel() / np.linalg.norm(r.ravel()),
        rank_log=None,
        tables=None,
        time_dependent=False,
    )


def two_level_decoder(omega, delta_d, gamma):
    """Two-level decoder with explicit drive parameters, basis {e, g}.

    H_D = -delta_d |e><e| + (omega/2)(|e><g| + |g><e|),
    J_D = sqrt(gamma) |g><e|.

    The detuning convention matches the two-level sensor model, so a
    decoder matched to a sensor at detuning Delta has delta_d = -Delta.
    This is the natural laboratory pair: identical hardware with the
    detuning sign flipped.  It is gauge-equivalent to (not entrywise
    equal to) the constant-gauge output of ``stationary_decoder``.
    """
    hd = np.array([[-delta_d, 0.5 * omega], [0.5 * omega, 0.0]], dtype=complex)
    jd = np.array([[0.0, 0.0], [np.sqrt(gamma), 0.0]], dtype=complex)
    return DecoderModel(
        dim=2,
        hamiltonian_d=lambda t: hd,
        jump_d=lambda t: jd,
        initial_state_d=np.array([0.0, 1.0], dtype=complex),
        w0=None,
        purified_joint=None,
        rank_log=None,
        tables=None,
        time_dependent=False,
    )


def verify_decoding(sensor: SensorModel, dec: DecoderModel, theta: float,
                    grid: TimeGrid, init="auto", max_step: float = 0.05):
    """Probability of the all-zeros record for the cascaded pair.

    A correct decoder keeps its output field dark: P_vac = 1 - O(dt)
    under the purified joint initialization.  Returns P_vac at t_end.
    """
    from .cascade import cascade_generators, vacuum_probability

    gen = cascade_generators(sensor, dec, init=init)
    return vacuum_probability(gen, theta, grid, max_step=max_step)
