"""Cascaded sensor + decoder photon counting.

The decoder output is fed back as the input of nothing: sensor and
decoder emit into a shared unidirectional field, and the cascade
Hamiltonian

    H_c = H_S x 1 + 1 x H_D + (i/2)(J_D J_S^dag - J_S J_D^dag)

with collective jump J_c = J_S x 1 + 1 x J_D routes the sensor
emission through the decoder before detection.  A correctly matched
decoder interferes the two contributions destructively, so the
detector stays dark at the decoding point and the counting record
becomes maximally sensitive to the sensor parameter.

Records are bin strings sampled with per-bin click probability
p1 = eta tr(J_c rho J_c^dag) dt / tr(rho); the log-likelihood of a
record is the log-trace of the record-conditioned unnormalized state.
Fisher information is estimated as the sample mean of squared central
finite-difference scores over trajectories, with a fixed-seed
counter-based stream per trajectory so the result is independent of
chunking and thread count.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import _engine
from .errors import CmsenseError, RecordLengthMismatch
from .models import SensorModel, _sigma
from .propagate import TimeGrid, _guard

__all__ = [
    "Imperfections",
    "CascadeGenerators",
    "CountingRecord",
    "FisherEstimate",
    "MismatchResult",
    "cascade_generators",
    "step_matrices",
    "vacuum_probability",
    "sample_trajectory",
    "record_log_likelihood",
    "sample_records",
    "replay_records",
    "fisher_from_trajectories",
    "mismatch_sweep",
    "full_width_half_max",
]

_CHUNK = 256
_SEGMENT_MIN_STEPS = 50_000


@dataclass(frozen=True)
class Imperfections:
    """Static hardware imperfections of a two-level cascade.

    gamma: photon loss rate per factor (channel sqrt(gamma)|g><e|),
    gamma_dep: dephasing rate per factor (channel sqrt(gamma_dep) sigma_z);
        defaults to gamma when None,
    eta: detector efficiency in (0, 1].
    """

    gamma: float = 0.0
    gamma_dep: Optional[float] = None
    eta: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.eta <= 1.0):
            raise CmsenseError(f"eta must be in (0, 1], got {self.eta}")
        if self.gamma < 0 or (self.gamma_dep is not None and self.gamma_dep < 0):
            raise CmsenseError("imperfection rates must be nonnegative")

    @property
    def dephasing(self):
        return self.gamma if self.gamma_dep is None else self.gamma_dep

    @property
    def trivial(self):
        return self.gamma == 0.0 and self.dephasing == 0.0 and self.eta == 1.0


@dataclass(eq=False)
class CascadeGenerators:
    """Joint generators of the cascaded counting model.

    ``h_total`` and ``j_total`` map (t, theta) to joint-space matrices;
    theta enters through the sensor side only.  ``extra_lindblad`` holds
    constant undetected channels (loss, dephasing).  Exactly one of
    ``initial_state`` (pure) / ``initial_rho`` is set.
    """

    dim: int
    h_total: Callable[[float, float], np.ndarray]
    j_total: Callable[[float, float], np.ndarray]
    extra_lindblad: List[np.ndarray]
    detector_eta: float
    initial_state: Optional[np.ndarray]
    initial_rho: Optional[np.ndarray]
    time_dependent: bool
    sensor: Optional[SensorModel] = None
    decoder: object = None


def _two_level_channels(dim_s, dim_d, imp: Imperfections):
    if dim_s != 2 or (dim_d not in (1, 2)):
        raise CmsenseError(
            "loss/dephasing channels are defined for two-level factors only"
        )
    sge = _sigma(1, 0, 2)
    sz = np.diag([1.0, -1.0]).astype(complex)
    eye_d = np.eye(dim_d, dtype=complex)
    chans = []
    if imp.gamma > 0:
        chans.append(np.sqrt(imp.gamma) * np.kron(sge, eye_d))
        if dim_d == 2:
            chans.append(np.sqrt(imp.gamma) * np.kron(np.eye(2), sge))
    gd = imp.dephasing
    if gd > 0:
        chans.append(np.sqrt(gd) * np.kron(sz, eye_d))
        if dim_d == 2:
            chans.append(np.sqrt(gd) * np.kron(np.eye(2), sz))
    return chans


def cascade_generators(sensor: SensorModel, dec=None,
                       imperfections: Optional[Imperfections] = None,
                       init="auto") -> CascadeGenerators:
    """Assemble the joint generators for sensor alone or sensor + decoder.

    init: "auto" picks the decoder's purified joint vector when it
    provides one (the vacuum-output initialization), else the product
    of sensor and decoder initial states; "product" forces the product;
    an explicit array is used as given (vector or density).
    """
    imp = imperfections or Imperfections()
    ds = sensor.dim
    if dec is None:
        dim = ds
        h_total = lambda t, th: sensor.hamiltonian(t, th)
        j_total = lambda t, th: sensor.jump(t, th)
        time_dep = sensor.time_dependent
        psi0 = sensor.initial_state
        if isinstance(init, np.ndarray):
            psi0 = init
        extra = _two_level_channels(ds, 1, imp) if not imp.trivial else []
    else:
        dd = dec.dim
        dim = ds * dd
        eye_s = np.eye(ds, dtype=complex)
        eye_d = np.eye(dd, dtype=complex)

        def h_total(t, th):
            hs = sensor.hamiltonian(t, th)
            js = sensor.jump(t, th)
            hd = dec.hamiltonian_d(t)
            jd = dec.jump_d(t)
            return (
                np.kron(hs, eye_d)
                + np.kron(eye_s, hd)
                + 0.5j * (np.kron(js.conj().T, jd) - np.kron(js, jd.conj().T))
            )

        def j_total(t, th):
            return np.kron(sensor.jump(t, th), eye_d) + np.kron(eye_s, dec.jump_d(t))

        time_dep = sensor.time_dependent or dec.time_dependent
        if isinstance(init, np.ndarray):
            psi0 = init
        elif init == "product" or dec.purified_joint is None:
            psi0 = np.kron(sensor.initial_state, dec.initial_state_d)
        else:
            psi0 = dec.purified_joint
        extra = _two_level_channels(ds, dd, imp) if not imp.trivial else []

    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.ndim == 1:
        vec, rho = psi0 / np.linalg.norm(psi0), None
    else:
        rho = psi0 / np.trace(psi0).real
        vec = None
    return CascadeGenerators(
        dim=dim, h_total=h_total, j_total=j_total, extra_lindblad=extra,
        detector_eta=imp.eta, initial_state=vec, initial_rho=rho,
        time_dependent=time_dep, sensor=sensor, decoder=dec,
    )


def _superops(m0, j, extra, eta, dt):
    s1 = eta * dt * np.kron(j, j.conj())
    s0 = np.kron(m0, m0.conj()) + (1.0 - eta) * dt * np.kron(j, j.conj())
    for l in extra:
        s0 = s0 + dt * np.kron(l, l.conj())
    return s0, s1


def _batched_kron(a, b):
    n = a.shape[0]
    da, db = a.shape[1], b.shape[1]
    return np.einsum("nij,nkl->nikjl", a, b).reshape(n, da * db, da * db)


def step_matrices(gen: CascadeGenerators, theta: float, grid: TimeGrid,
                  max_step: float = 0.05) -> _engine.StepOps:
    """Tabulate per-bin operators for the engines.

    Static generators give a single (D, D) pair; time-dependent ones a
    full (n_steps, D, D) table, assembled vectorized when the sensor
    exposes a batch Hamiltonian and the decoder is tabulated or static.
    """
    D = gen.dim
    dt = grid.dt
    eye = np.eye(D, dtype=complex)
    need_density = bool(gen.extra_lindblad) or gen.detector_eta < 1.0 \
        or gen.initial_rho is not None

    def one_pair(t):
        h = gen.h_total(t, theta)
        j = gen.j_total(t, theta)
        decay = j.conj().T @ j
        for l in gen.extra_lindblad:
            decay = decay + l.conj().T @ l
        _guard(np.linalg.norm(h, 2), np.linalg.norm(decay, 2), dt, max_step, t)
        m0 = eye - 1j * dt * h - 0.5 * dt * decay
        return m0, np.sqrt(dt) * j

    if not gen.time_dependent:
        m0, m1 = one_pair(grid.t_start)
        ops = _engine.StepOps(
            dim=D, n_steps=grid.n_steps, dt=dt, eta=gen.detector_eta,
            static=True, m0=m0, m1=m1,
            init_vec=gen.initial_state, init_rho=gen.initial_rho,
        )
        if need_density:
            if ops.init_rho is None:
                ops.init_rho = np.outer(gen.initial_state, gen.initial_state.conj())
                ops.init_vec = None
            ops.s0, ops.s1 = _superops(m0, m1 / np.sqrt(dt), gen.extra_lindblad,
                                       gen.detector_eta, dt)
        return ops

    ts = grid.left_times
    n = grid.n_steps
    sensor = gen.sensor
    dec = gen.decoder
    fast = (
        sensor is not None
        and hasattr(sensor, "hamiltonian_batch")
        and (dec is None or not dec.time_dependent or dec.tables is not None)
    )
    if fast:
        hs = sensor.hamiltonian_batch(ts, theta)
        js0 = sensor.jump(ts[0], theta)
        js = np.broadcast_to(js0, (n,) + js0.shape)
        if dec is None:
            h_tab, j_tab = hs, np.array(js)
        else:
            dd = dec.dim
            eye_d = np.eye(dd, dtype=complex)
            eye_s = np.eye(sensor.dim, dtype=complex)
            if dec.tables is not None:
                t_tab, hd, jd = dec.tables
                if len(t_tab) != n or abs(t_tab[0] - ts[0]) > 1e-12:
                    raise CmsenseError("decoder tables do not match the grid")
            else:
                hd = np.broadcast_to(dec.hamiltonian_d(ts[0]), (n, dd, dd))
                jd = np.broadcast_to(dec.jump_d(ts[0]), (n, dd, dd))
            eye_dn = np.broadcast_to(eye_d, (n, dd, dd))
            eye_sn = np.broadcast_to(eye_s, (n,) + eye_s.shape)
            h_tab = (
                _batched_kron(hs, eye_dn)
                + _batched_kron(eye_sn, hd)
                + 0.5j * (_batched_kron(np.conj(np.transpose(js, (0, 2, 1))), jd)
                          - _batched_kron(js, np.conj(np.transpose(jd, (0, 2, 1)))))
            )
            j_tab = _batched_kron(js, eye_dn) + _batched_kron(eye_sn, jd)
        decay = np.einsum("nji,njk->nik", j_tab.conj(), j_tab)
        for l in gen.extra_lindblad:
            decay = decay + (l.conj().T @ l)[None]
        fro = np.maximum(np.linalg.norm(h_tab, axis=(1, 2)),
                         np.linalg.norm(decay, axis=(1, 2)))
        worst = int(np.argmax(fro))
        if dt * fro[worst] > max_step:  # Frobenius prefilter, exact confirm
            _guard(np.linalg.norm(h_tab[worst], 2),
                   np.linalg.norm(decay[worst], 2), dt, max_step, float(ts[worst]))
        m0 = eye[None] - 1j * dt * h_tab - 0.5 * dt * decay
        m1 = np.sqrt(dt) * j_tab
    else:
        m0 = np.empty((n, D, D), dtype=complex)
        m1 = np.empty((n, D, D), dtype=complex)
        for k, t in enumerate(ts):
            m0[k], m1[k] = one_pair(t)

    ops = _engine.StepOps(
        dim=D, n_steps=n, dt=dt, eta=gen.detector_eta, static=False,
        m0=m0, m1=m1, init_vec=gen.initial_state, init_rho=gen.initial_rho,
    )
    if need_density:
        if n * D ** 4 * 16 > 2e9:
            raise CmsenseError("time-dependent superoperator table too large")
        if ops.init_rho is None:
            ops.init_rho = np.outer(gen.initial_state, gen.initial_state.conj())
            ops.init_vec = None
        j_raw = m1 / np.sqrt(dt)
        s0 = _batched_kron(m0, m0.conj()) \
            + (1.0 - gen.detector_eta) * dt * _batched_kron(j_raw, j_raw.conj())
        for l in gen.extra_lindblad:
            s0 = s0 + dt * np.kron(l, l.conj())[None]
        ops.s0 = s0
        ops.s1 = gen.detector_eta * dt * _batched_kron(j_raw, j_raw.conj())
    return ops


def vacuum_probability(gen: CascadeGenerators, theta: float, grid: TimeGrid,
                       max_step: float = 0.05):
    """Probability that the detector never clicks over the grid."""
    ops = step_matrices(gen, theta, grid, max_step)
    if ops.pure_ok:
        psi = ops.init_vec.astype(complex)
        logp = 0.0
        for k in range(ops.n_steps):
            m0, _ = ops.pair_at(k)
            psi = m0 @ psi
            w = float(np.vdot(psi, psi).real)
            logp += np.log(w)
            psi /= np.sqrt(w)
        return float(np.exp(logp))
    tv = np.eye(ops.dim, dtype=complex).ravel()
    rho = ops.init_rho.ravel()
    logp = 0.0
    for k in range(ops.n_steps):
        s0 = ops.s0 if ops.static else ops.s0[k]
        rho = s0 @ rho
        w = float((rho @ tv).real)
        logp += np.log(w)
        rho /= w
    return float(np.exp(logp))


@dataclass(eq=False)
class CountingRecord:
    """A single photon-counting record on a fixed bin grid."""

    clicks: np.ndarray
    log_likelihood: float
    theta: float
    seed: int

    @property
    def n_clicks(self):
        return int(self.clicks.sum())


def _resolve_engine(ops, engine):
    if engine not in ("auto", "step", "segment"):
        raise CmsenseError(f"unknown engine {engine!r}")
    if engine == "segment" or (engine == "auto" and ops.static and ops.pure_ok
                               and ops.n_steps >= _SEGMENT_MIN_STEPS):
        if not (ops.static and ops.pure_ok):
            raise CmsenseError("segment engine requires static pure dynamics")
        eig = _engine.eig_stepper(ops.m0)
        if eig is not None:
            return "segment", eig
        if engine == "segment":
            raise CmsenseError("no-click matrix is not stably diagonalizable")
    return ("step", None)


def _chunks(n):
    return [(i, min(i + _CHUNK, n)) for i in range(0, n, _CHUNK)]


def _run_chunks(fn, spans, threads):
    if threads <= 1 or len(spans) <= 1:
        return [fn(a, b) for a, b in spans]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(lambda s: fn(*s), spans))


def sample_records(gen, theta, grid, n_traj, seed=0, threads=1,
                   engine="auto", max_step=0.05):
    """Sample n_traj records; returns (list of click-index arrays, logL)."""
    ops = step_matrices(gen, theta, grid, max_step)
    kind, eig = _resolve_engine(ops, engine)

    def work(a, b):
        idx = np.arange(a, b)
        if kind == "segment":
            return _engine.sample_segment(ops, eig, idx, seed)
        if ops.pure_ok:
            clicks, logl = _engine.sample_pure(ops, idx, seed)
        else:
            clicks, logl = _engine.sample_density(ops, idx, seed)
        return _engine.clicks_to_indices(clicks), logl

    parts = _run_chunks(work, _chunks(n_traj), threads)
    indices = [h for p in parts for h in p[0]]
    logl = np.concatenate([p[1] for p in parts])
    return indices, logl, kind


def replay_records(gen, theta, indices, grid, threads=1, engine_kind="step",
                   max_step=0.05):
    """Log-likelihoods of stored records at parameter value theta."""
    ops = step_matrices(gen, theta, grid, max_step)
    if engine_kind == "segment":
        _, eig = _resolve_engine(ops, "segment")

        def work(a, b):
            return _engine.replay_segment(ops, eig, indices[a:b])
    else:
        def work(a, b):
            clicks = _engine.indices_to_clicks(indices[a:b], ops.n_steps)
            if ops.pure_ok:
                return _engine.replay_pure(ops, clicks)
            return _engine.replay_density_logl(ops, clicks)

    parts = _run_chunks(work, _chunks(len(indices)), threads)
    return np.concatenate(parts)


def sample_trajectory(gen: CascadeGenerators, theta_true: float, grid: TimeGrid,
                      seed: int = 0, max_step: float = 0.05,
                      engine: str = "auto") -> CountingRecord:
    """Draw one record at theta_true with the stream keyed by (seed, 0)."""
    indices, logl, _ = sample_records(gen, theta_true, grid, 1, seed=seed,
                                      engine=engine, max_step=max_step)
    clicks = _engine.indices_to_clicks(indices, grid.n_steps)[0]
    return CountingRecord(clicks=clicks, log_likelihood=float(logl[0]),
                          theta=theta_true, seed=seed)


def record_log_likelihood(gen: CascadeGenerators, theta: float, record,
                          grid: TimeGrid, max_step: float = 0.05):
    """log tr of the record-conditioned unnormalized joint state."""
    clicks = record.clicks if isinstance(record, CountingRecord) else np.asarray(record)
    if clicks.shape[-1] != grid.n_steps:
        raise RecordLengthMismatch(
            f"record has {clicks.shape[-1]} bins, grid has {grid.n_steps}"
        )
    idx = _engine.clicks_to_indices(np.atleast_2d(clicks).astype(np.uint8))
    out = replay_records(gen, theta, idx, grid)
    return float(out[0])


@dataclass(eq=False)
class FisherEstimate:
    """Monte Carlo Fisher information of the counting record.

    value = mean of squared finite-difference scores; std_error is the
    standard error of that mean.  mean_score should vanish within a few
    mean_score_se (it does up to the O(dt) discretization bias);
    halving_dev reports the largest relative change of a score when the
    finite-difference step is halved, over the diagnostic subset.
    """

    value: float
    std_error: float
    n_traj: int
    theta_step: float
    mean_score: float
    mean_score_se: float
    halving_dev: float
    mean_clicks: float
    engine: str
    seed: int


def fisher_from_trajectories(gen: CascadeGenerators, theta: float, grid: TimeGrid,
                             n_traj: int, theta_step: float = 1e-3,
                             seed: int = 0, threads: int = 1, engine: str = "auto",
                             halving_fraction: float = 0.1,
                             max_step: float = 0.05) -> FisherEstimate:
    """Estimate the Fisher information of the record at theta.

    Samples records at theta, replays each at theta +/- theta_step and
    averages the squared central-difference score.  A fraction of the
    records is replayed again at half the step as a discretization
    check.
    """
    eps = theta_step
    indices, _, kind = sample_records(gen, theta, grid, n_traj, seed=seed,
                                      threads=threads, engine=engine,
                                      max_step=max_step)
    lp = replay_records(gen, theta + eps, indices, grid, threads, kind, max_step)
    lm = replay_records(gen, theta - eps, indices, grid, threads, kind, max_step)
    scores = (lp - lm) / (2.0 * eps)

    m = int(np.ceil(halving_fraction * n_traj))
    halving_dev = 0.0
    if m > 0:
        sub = indices[:m]
        lp2 = replay_records(gen, theta + 0.5 * eps, sub, grid, threads, kind, max_step)
        lm2 = replay_records(gen, theta - 0.5 * eps, sub, grid, threads, kind, max_step)
        s2 = (lp2 - lm2) / eps
        scale = max(float(np.abs(scores[:m]).max(initial=0.0)), 1e-12)
        halving_dev = float(np.abs(s2 - scores[:m]).max(initial=0.0) / scale)

    sq = scores ** 2
    value = float(sq.mean())
    std_error = float(sq.std(ddof=1) / np.sqrt(n_traj)) if n_traj > 1 else 0.0
    mean_clicks = float(np.mean([len(h) for h in indices]))
    return FisherEstimate(
        value=value, std_error=std_error, n_traj=n_traj, theta_step=eps,
        mean_score=float(scores.mean()),
        mean_score_se=float(scores.std(ddof=1) / np.sqrt(n_traj)) if n_traj > 1 else 0.0,
        halving_dev=halving_dev, mean_clicks=mean_clicks, engine=kind, seed=seed,
    )


def full_width_half_max(x, y):
    """FWHM of a sampled peak by linear interpolation at the outermost
    half-maximum crossings; NaN when a side never falls below half."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    half = 0.5 * y.max()
    lo = hi = None
    for i in range(len(x) - 1):
        if y[i] < half <= y[i + 1]:
            lo = x[i] + (half - y[i]) * (x[i + 1] - x[i]) / (y[i + 1] - y[i])
            break
    for i in range(len(x) - 1, 0, -1):
        if y[i] < half <= y[i - 1]:
            hi = x[i - 1] + (half - y[i - 1]) * (x[i] - x[i - 1]) / (y[i] - y[i - 1])
            break
    if lo is None or hi is None:
        return float("nan")
    return float(hi - lo)


@dataclass(eq=False)
class MismatchResult:
    mismatches: np.ndarray
    fisher: List[FisherEstimate]
    fwhm: float

    @property
    def values(self):
        return np.array([f.value for f in self.fisher])


def mismatch_sweep(sensor: SensorModel, theta: float, mismatches: Sequence[float],
                   grid: TimeGrid, n_traj: int, theta_step: float = 1e-3,
                   seed: int = 0, threads: int = 1,
                   max_step: float = 0.05) -> MismatchResult:
    """Fisher information versus decoder detuning mismatch.

    For each mismatch dm the decoder is the two-level pair with detuning
    offset dm from the matched value; dm = 0 reproduces the matched
    decoder.  Requires a two-level sensor with a static Rabi drive.
    """
    from .decoder import two_level_decoder

    if sensor.dim != 2:
        raise CmsenseError("mismatch sweep is defined for the two-level sensor")
    h0 = sensor.hamiltonian(grid.t_start, theta)
    j0 = sensor.jump(grid.t_start, theta)
    omega = 2.0 * float(h0[0, 1].real)
    gamma = float(np.abs(j0[1, 0]) ** 2)
    delta = -float(h0[0, 0].real)

    fishers = []
    for i, dm in enumerate(mismatches):
        dec = two_level_decoder(omega, dm - delta, gamma)
        gen = cascade_generators(sensor, dec)
        fishers.append(
            fisher_from_trajectories(
                gen, theta, grid, n_traj, theta_step=theta_step,
                seed=seed + 7919 * i, threads=threads, max_step=max_step,
            )
        )
    xs = np.asarray(mismatches, dtype=float)
    fwhm = full_width_half_max(xs, np.array([f.value for f in fishers]))
    return MismatchResult(mismatches=xs, fisher=fishers, fwhm=fwhm)
