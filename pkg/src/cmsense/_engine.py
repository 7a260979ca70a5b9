"""Trajectory engines for photon-counting records.

Three interchangeable integrators for the same per-bin measurement
model {no click, click}:

* pure-state batch stepper: valid when the joint state stays pure
  (no extra Lindblad channels, unit detector efficiency),
* density-operator batch stepper via row-major superoperators: the
  general path, needed for loss / dephasing / finite efficiency,
* segment stepper for static generators: diagonalize the no-click
  matrix once and jump between clicks by eigenvalue powers, with
  waiting times drawn by inverting the survival function.  Costs
  O(number of clicks) per trajectory instead of O(number of bins).

Sampling draws clicks with the raw probability p1 = eta * |M1 psi|^2
per bin; log-likelihoods accumulate raw branch weights, so exp(logL)
is the trace of the record-conditioned unnormalized state.  Every
trajectory owns a counter-based RNG stream keyed by (seed, index), so
results do not depend on chunking or thread count.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ClickProbabilityOverflow

_BLOCK = 4096
_P1_MAX = 0.1


@dataclass(eq=False)
class StepOps:
    """Per-bin operators of a cascaded counting model.

    ``m0``/``m1`` are (D, D) when static, else (n_steps, D, D) tables.
    ``s0``/``s1`` are the matching no-click / click superoperators on
    row-major vectorized densities (built on demand; include loss,
    dephasing and the (1 - eta) feed-through).
    """

    dim: int
    n_steps: int
    dt: float
    eta: float
    static: bool
    m0: np.ndarray
    m1: np.ndarray
    s0: Optional[np.ndarray] = None
    s1: Optional[np.ndarray] = None
    init_vec: Optional[np.ndarray] = None
    init_rho: Optional[np.ndarray] = None

    @property
    def pure_ok(self):
        return self.s0 is None and self.eta == 1.0 and self.init_vec is not None

    def pair_at(self, k):
        if self.static:
            return self.m0, self.m1
        return self.m0[k], self.m1[k]


def _streams(indices, seed):
    return [np.random.Generator(np.random.Philox(key=[seed, int(i)])) for i in indices]


def _check_p1(p1max, k, dt):
    if p1max > _P1_MAX:
        raise ClickProbabilityOverflow(
            f"click probability {p1max:.3g} > {_P1_MAX} at bin {k} (dt={dt:g}); "
            "reduce the time step"
        )


def sample_pure(ops: StepOps, indices, seed):
    """Draw records for a batch of trajectory indices.

    Returns (clicks uint8 (B, n_steps), logL (B,)).
    """
    B = len(indices)
    n, D = ops.n_steps, ops.dim
    gens = _streams(indices, seed)
    psi = np.tile(ops.init_vec, (B, 1)).astype(complex)
    logl = np.zeros(B)
    clicks = np.zeros((B, n), dtype=np.uint8)
    u = np.empty((B, 0))
    off = 0
    for k in range(n):
        if off == u.shape[1]:
            m = min(_BLOCK, n - k)
            u = np.stack([g.random(m) for g in gens])
            off = 0
        m0, m1 = ops.pair_at(k)
        ns = psi @ m0.T
        cs = psi @ m1.T
        b1 = np.einsum("bi,bi->b", cs, cs.conj()).real
        _check_p1(float(b1.max(initial=0.0)), k, ops.dt)
        hit = u[:, off] < b1
        off += 1
        clicks[:, k] = hit
        b0 = np.einsum("bi,bi->b", ns, ns.conj()).real
        w = np.where(hit, b1, b0)
        psi = np.where(hit[:, None], cs, ns) / np.sqrt(w)[:, None]
        logl += np.log(w)
    return clicks, logl


def replay_pure(ops: StepOps, clicks):
    """Log-likelihood of given records under (possibly different) ops."""
    B = clicks.shape[0]
    psi = np.tile(ops.init_vec, (B, 1)).astype(complex)
    logl = np.zeros(B)
    for k in range(ops.n_steps):
        m0, m1 = ops.pair_at(k)
        hit = clicks[:, k].astype(bool)
        out = np.where(hit[:, None], psi @ m1.T, psi @ m0.T)
        w = np.einsum("bi,bi->b", out, out.conj()).real
        psi = out / np.sqrt(w)[:, None]
        logl += np.log(w)
    return logl


def _trace_vec(D):
    return np.eye(D, dtype=complex).ravel()

def sample_density(ops: StepOps, indices, seed):
    B = len(indices)
    n, D = ops.n_steps, ops.dim
    gens = _streams(indices, seed)
    tv = _trace_vec(D)
    rho = np.tile(ops.init_rho.ravel(), (B, 1)).astype(complex)
    logl = np.zeros(B)
    clicks = np.zeros((B, n), dtype=np.uint8)
    u = np.empty((B, 0))
    off = 0
    for k in range(n):
        if off == u.shape[1]:
            m = min(_BLOCK, n - k)
            u = np.stack([g.random(m) for g in gens])
            off = 0
        s0, s1 = (ops.s0, ops.s1) if ops.static else (ops.s0[k], ops.s1[k])
        cv = rho @ s1.T
        p1 = (cv @ tv).real
        _check_p1(float(p1.max(initial=0.0)), k, ops.dt)
        hit = u[:, off] < p1
        off += 1
        clicks[:, k] = hit
        nv = rho @ s0.T
        p0 = (nv @ tv).real
        w = np.where(hit, p1, p0)
        rho = np.where(hit[:, None], cv, nv) / w[:, None]
        logl += np.log(w)
    return clicks, logl


def replay_density(ops: StepOps, clicks):
    B = clicks.shape[0]
    tv = _trace_vec(ops.dim)
    rho = np.tile(ops.init_rho.ravel(), (B, 1)).astype(complex)
    logl = np.zeros(B)
    for k in range(ops.n_steps):
        s0, s1 = (ops.s0, ops.s1) if ops.static else (ops.s0[k], ops.s1[k])
        hit = clicks[:, k].astype(bool)
        out = np.where(hit[:, None], rho @ s1.T, rho @ s0.T)
        w = (out @ tv).real
        rho = out / w[:, None]
        logl += np.log(w)
    return rho, logl


def replay_density_logl(ops, clicks):
    return replay_density(ops, clicks)[1]


@dataclass(eq=False)
class EigStepper:
    """Eigendecomposition of a static no-click matrix M0 = V diag(lam) Vi."""

    v: np.ndarray
    lam: np.ndarray
    vi: np.ndarray
    log_lam: np.ndarray
    log_mag_max: float


def eig_stepper(m0, cond_max=1e8, resid_tol=1e-9):
    """Diagonalize M0; returns None when the basis is too ill-conditioned."""
    lam, v = np.linalg.eig(m0)
    s = np.linalg.svd(v, compute_uv=False)
    if s[0] / s[-1] > cond_max:
        return None
    vi = np.linalg.inv(v)
    if np.abs(v @ np.diag(lam) @ vi - m0).max() > resid_tol * max(1.0, np.abs(m0).max()):
        return None
    log_lam = np.log(lam.astype(complex))
    return EigStepper(v=v, lam=lam, vi=vi, log_lam=log_lam,
                      log_mag_max=float(log_lam.real.max()))


def _propagate_scaled(eig, w, j):
    """V (lam^j * w) scaled by |lam_max|^-j; returns (vector, log scale)."""
    comp = np.exp(j * (eig.log_lam - eig.log_mag_max))
    return eig.v @ (comp * w), j * eig.log_mag_max


def _log_survival(eig, w, j):
    vec, ls = _propagate_scaled(eig, w, j)
    nrm = np.linalg.norm(vec)
    if nrm == 0.0:
        return -np.inf
    return 2.0 * (ls + np.log(nrm))


def _first_click(eig, w, log_u, n_rem):
    """Smallest j in [1, n_rem] with log S(j) <= log u, or None."""
    if _log_survival(eig, w, n_rem) > log_u:
        return None
    lo, hi = 0, n_rem
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _log_survival(eig, w, mid) <= log_u:
            hi = mid
        else:
            lo = mid
    return hi


def sample_segment(ops: StepOps, eig: EigStepper, indices, seed):
    """Segment sampler for static pure ops.  Returns (list of click-index
    arrays, logL array)."""
    n = ops.n_steps
    m1 = ops.m1
    out_idx, out_logl = [], []
    for i in indices:
        g = np.random.Generator(np.random.Philox(key=[seed, int(i)]))
        psi = ops.init_vec.astype(complex)
        logl = 0.0
        pos = 0
        hits = []
        while pos < n:
            w = eig.vi @ psi
            log_u = np.log1p(-g.random())
            j = _first_click(eig, w, log_u, n - pos)
            if j is None:
                logl += _log_survival(eig, w, n - pos)
                break
            vec, ls = _propagate_scaled(eig, w, j - 1)
            nrm = np.linalg.norm(vec)
            logl += 2.0 * (ls + np.log(nrm))
            psi = vec / nrm
            cs = m1 @ psi
            b1 = float(np.vdot(cs, cs).real)
            _check_p1(b1, pos + j - 1, ops.dt)
            logl += np.log(b1)
            psi = cs / np.sqrt(b1)
            hits.append(pos + j - 1)
            pos += j
        out_idx.append(np.asarray(hits, dtype=np.int64))
        out_logl.append(logl)
    return out_idx, np.asarray(out_logl)


def replay_segment(ops: StepOps, eig: EigStepper, click_indices):
    """Log-likelihoods of records given by click-index arrays."""
    n = ops.n_steps
    m1 = ops.m1
    out = np.empty(len(click_indices))
    for r, hits in enumerate(click_indices):
        psi = ops.init_vec.astype(complex)
        logl = 0.0
        pos = 0
        for h in hits:
            j = int(h) - pos + 1
            w = eig.vi @ psi
            vec, ls = _propagate_scaled(eig, w, j - 1)
            nrm = np.linalg.norm(vec)
            logl += 2.0 * (ls + np.log(nrm))
            psi = vec / nrm
            cs = m1 @ psi
            b1 = float(np.vdot(cs, cs).real)
            logl += np.log(b1)
            psi = cs / np.sqrt(b1)
            pos = int(h) + 1
        if pos < n:
            w = eig.vi @ psi
            logl += _log_survival(eig, w, n - pos)
        out[r] = logl
    return out


def clicks_to_indices(clicks):
    return [np.flatnonzero(row).astype(np.int64) for row in clicks]


def indices_to_clicks(click_indices, n_steps):
    out = np.zeros((len(click_indices), n_steps), dtype=np.uint8)
    for r, hits in enumerate(click_indices):
        out[r, hits] = 1
    return out
