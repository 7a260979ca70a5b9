"""Discrete-time propagation engines.

The emission field is built from a per-bin Kraus pair

    a0 = 1 - i H(t) dt - (1/2) J^dag J dt,      a1 = sqrt(dt) J,

with time-dependent operators sampled at the left endpoint of each
bin.  All higher-level quantities (master equation, generalized
two-parameter state, decoder synthesis, cascade sampling, brute-force
oracles) are defined on exactly this discretization, so equivalence
tests between routes are exact rather than asymptotic.

The pair is complete only to O(dt^2) per bin; raw traces therefore
drift by O(T dt) over a propagation.  That defect is left visible
(no hidden renormalization) and is cancelled downstream by defining
fidelities on unit-trace states.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import StepTooLarge, TraceDrift
from .models import SensorModel

__all__ = [
    "TimeGrid",
    "KrausPair",
    "GeneralizedState",
    "kraus_pair",
    "pair_table",
    "evolve_density",
    "evolve_generalized",
]


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid; n_steps * dt spans [t_start, t_end] exactly."""

    t_start: float
    t_end: float
    dt: float
    n_steps: int = field(init=False)

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        span = self.t_end - self.t_start
        n = int(round(span / self.dt))
        if n < 0 or abs(n * self.dt - span) > 1e-12 * max(1.0, abs(span)):
            raise ValueError(
                f"grid span {span} is not an integer multiple of dt={self.dt}"
            )
        object.__setattr__(self, "n_steps", n)

    @property
    def times(self):
        """All n_steps+1 grid times including both ends."""
        return self.t_start + self.dt * np.arange(self.n_steps + 1)

    @property
    def left_times(self):
        """Left bin endpoints where operators are sampled."""
        return self.t_start + self.dt * np.arange(self.n_steps)


@dataclass
class KrausPair:
    a0: np.ndarray
    a1: np.ndarray

    @property
    def completeness_defect(self):
        """max |a0^dag a0 + a1^dag a1 - 1|, O(dt^2) for a valid pair."""
        d = self.a0.conj().T @ self.a0 + self.a1.conj().T @ self.a1
        d = d - np.eye(d.shape[0])
        return float(np.abs(d).max())


@dataclass
class GeneralizedState:
    """Two-parameter generalized density operator mu_{theta1,theta2}(t)."""

    mu: np.ndarray
    theta1: float
    theta2: float
    t: float


def _guard(h_norm, jj_norm, dt, max_step, t):
    load = dt * max(h_norm, jj_norm)
    if load > max_step:
        raise StepTooLarge(
            f"dt*max(|H|,|J^dag J|) = {load:.3g} exceeds {max_step} at t={t:.4g}; "
            "refine dt or widen max_step explicitly"
        )


def kraus_pair(model: SensorModel, t: float, theta: float, dt: float, max_step: float = 0.05):
    """The per-bin Kraus pair of ``model`` at (t, theta).

    The guard dt*max(|H|, |J^dag J|) <= max_step keeps the first-order
    bin expansion trustworthy; coarse-grid oracle runs may widen
    max_step deliberately.
    """
    h = model.hamiltonian(t, theta)
    j = model.jump(t, theta)
    jj = j.conj().T @ j
    _guard(np.linalg.norm(h, 2), np.linalg.norm(jj, 2), dt, max_step, t)
    a0 = np.eye(model.dim, dtype=complex) - 1j * h * dt - 0.5 * jj * dt
    return KrausPair(a0=a0, a1=np.sqrt(dt) * j)


class PairTable:
    """Kraus pairs tabulated over a grid.

    For time-independent models a single pair is stored and shared by
    every step; otherwise a0/a1 have one entry per bin.
    """

    def __init__(self, a0, a1, static):
        self.a0 = a0
        self.a1 = a1
        self.static = static

    def at(self, k):
        if self.static:
            return self.a0[0], self.a1[0]
        return self.a0[k], self.a1[k]


def pair_table(model: SensorModel, theta: float, grid: TimeGrid, max_step: float = 0.05):
    dt = grid.dt
    if not model.time_dependent:
        p = kraus_pair(model, grid.t_start, theta, dt, max_step)
        return PairTable(p.a0[None], p.a1[None], static=True)

    ts = grid.left_times
    batch = getattr(model, "hamiltonian_batch", None)
    if batch is not None:
        hs = batch(ts, theta)
        j = model.jump(grid.t_start, theta)
        jj = j.conj().T @ j
        hmax = float(np.linalg.norm(hs, axis=(1, 2)).max()) if len(ts) else 0.0
        _guard(hmax, np.linalg.norm(jj, 2), dt, max_step, grid.t_start)
        eye = np.eye(model.dim, dtype=complex)
        a0 = eye[None] - 1j * dt * hs - 0.5 * dt * jj[None]
        a1 = np.broadcast_to(np.sqrt(dt) * j, (len(ts), model.dim, model.dim)).copy()
        return PairTable(a0, a1, static=False)

    a0 = np.empty((grid.n_steps, model.dim, model.dim), dtype=complex)
    a1 = np.empty_like(a0)
    for k, t in enumerate(ts):
        p = kraus_pair(model, float(t), theta, dt, max_step)
        a0[k] = p.a0
        a1[k] = p.a1
    return PairTable(a0, a1, static=False)


def evolve_density(model: SensorModel, theta: float, grid: TimeGrid,
                   max_step: float = 0.05, trace_tol: float = 1e-2):
    """Master-equation evolution by repeated Kraus application.

    Returns the full (n_steps+1, D, D) trajectory of density matrices.
    Trace is monitored, not renormalized; the O(T dt) completeness
    drift of the first-order pair is expected and tolerated up to
    ``trace_tol``, beyond which TraceDrift signals an unstable grid.
    """
    tab = pair_table(model, theta, grid, max_step)
    psi = model.initial_state
    rho = np.outer(psi, psi.conj())
    out = np.empty((grid.n_steps + 1, model.dim, model.dim), dtype=complex)
    out[0] = rho
    for k in range(grid.n_steps):
        a0, a1 = tab.at(k)
        rho = a0 @ rho @ a0.conj().T + a1 @ rho @ a1.conj().T
        out[k + 1] = rho
        tr = np.trace(rho).real
        if abs(tr - 1.0) > trace_tol:
            raise TraceDrift(
                f"|tr rho - 1| = {abs(tr - 1.0):.3g} at step {k + 1} "
                f"(t={grid.t_start + (k + 1) * grid.dt:.4g}); refine dt"
            )
    return out


def evolve_generalized(model: SensorModel, theta1: float, theta2: float,
                       grid: TimeGrid, max_step: float = 0.05,
                       return_series: bool = False,
                       tables: Optional[tuple] = None):
    """Propagate mu(0) = rho_S(0) under mu -> sum_s A^s(theta1) mu A^s(theta2)^dag.

    At theta1 = theta2 this is exactly the evolve_density update.
    ``tables`` lets callers reuse precomputed PairTables for the two
    parameter values (an optimization for finite-difference sweeps).
    """
    if tables is None:
        ta = pair_table(model, theta1, grid, max_step)
        tb = ta if theta2 == theta1 else pair_table(model, theta2, grid, max_step)
    else:
        ta, tb = tables
    psi = model.initial_state
    mu = np.outer(psi, psi.conj())
    series = None
    if return_series:
        series = np.empty((grid.n_steps + 1, model.dim, model.dim), dtype=complex)
        series[0] = mu
    for k in range(grid.n_steps):
        a0a, a1a = ta.at(k)
        a0b, a1b = tb.at(k)
        mu = a0a @ mu @ a0b.conj().T + a1a @ mu @ a1b.conj().T
        if return_series:
            series[k + 1] = mu
    state = GeneralizedState(mu=mu, theta1=theta1, theta2=theta2, t=grid.t_end)
    if return_series:
        return state, series
    return state
