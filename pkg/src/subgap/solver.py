"""Two independent routes to the periodic steady state.

``evolve`` integrates the vectorised master equation with an adaptive
embedded Runge-Kutta pair until the period-averaged state stops changing;
``periodic_steady_state_fourier`` solves the block-linear system for the
Fourier components of the periodic solution directly.  Both return a
PeriodicState carrying the harmonics of rho over one period, from which all
observables are computed the same way.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import spsolve

from .generator import PeriodicGenerator

_TRACE_IDX = (0, 5, 10, 15)
_POSITIVITY_FLOOR = -1e-3    # eigenvalue breaches beyond this fail the run


class PositivityError(RuntimeError):
    """Density-matrix eigenvalue fell below the monitoring floor."""


class SteadyStateError(RuntimeError):
    """Singular or ill-conditioned periodic steady-state system."""


def _trace_norm(m: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvalsh(0.5 * (m + m.conj().T))).sum()
                 + 0.5 * np.linalg.norm(m - m.conj().T))


def _check_positivity(rho: np.ndarray, context: str):
    lo = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
    if lo < _POSITIVITY_FLOOR:
        raise PositivityError(f"min eigenvalue {lo:.3e} below {_POSITIVITY_FLOOR} ({context})")
    return lo


@dataclass
class PeriodicState:
    """One period of the (steady) state: harmonics and a uniform time grid.

    rho(t) = sum_n harmonics[n] e^{i n V t}; grid_states[j] = rho(t_grid[j]).
    """

    drive_freq: float
    period: float
    harmonics: dict
    t_grid: np.ndarray
    grid_states: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def average(self) -> np.ndarray:
        return self.harmonics.get(0, np.zeros((4, 4), dtype=complex))

    def at(self, t) -> np.ndarray:
        out = np.zeros(np.shape(t) + (4, 4), dtype=complex)
        for n, mat in self.harmonics.items():
            ph = np.exp(1j * n * self.drive_freq * np.asarray(t))
            out += np.multiply.outer(ph, mat) if np.ndim(t) else ph * mat
        return out


@dataclass
class Trajectory:
    """Checkpointed evolution record: one entry per drive period."""

    times: np.ndarray
    states: np.ndarray              # rho at the period boundaries
    converged: bool
    residual: float                 # last period-to-period averaged-state change
    final_state: PeriodicState      # dense sampling of the last period
    min_eigenvalue: float

    def to_csv(self, path: str):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t,p0,p_down,p_up,p_double,abs_coh_0d\n")
            for t, rho in zip(self.times, self.states):
                d = np.real(np.diag(rho))
                fh.write(f"{t:.12g},{d[0]:.12g},{d[1]:.12g},{d[2]:.12g},{d[3]:.12g},"
                         f"{abs(rho[0, 3]):.12g}\n")


def _harmonics_from_grid(grid_states: np.ndarray, t_grid: np.ndarray,
                         drive_freq: float, n_keep: int) -> dict:
    n = len(t_grid)
    ks = np.arange(-n_keep, n_keep + 1)
    w = np.exp(-1j * drive_freq * np.outer(ks, t_grid)) / n
    coeff = (w @ grid_states.reshape(n, -1)).reshape(len(ks), 4, 4)
    return {int(k): coeff[i] for i, k in enumerate(ks)}


def evolve(gen: PeriodicGenerator, rho0: np.ndarray, t_final: float | None = None,
           rtol: float = 1e-9, atol: float = 1e-12, conv_tol: float = 1e-7,
           n_sample: int = 256) -> Trajectory:
    """Integrate rho' = L(t) rho from rho0 and detect the periodic steady state.

    Convergence is declared when the period-averaged state changes by less
    than conv_tol in trace norm between consecutive periods; integration
    stops there or at t_final (default 10 / gamma_ref), whichever is first.
    """
    basis = gen.basis
    p = basis.params
    T = basis.period
    rho0 = np.asarray(rho0, dtype=complex)
    if np.abs(rho0 - rho0.conj().T).max() > 1e-12 or abs(np.trace(rho0) - 1.0) > 1e-12:
        raise ValueError("rho0 must be Hermitian with unit trace")
    _check_positivity(rho0, "initial state")

    if t_final is None:
        gref = p.gamma_ref
        t_final = 10.0 / gref if gref > 0 else 100.0 * T
    n_periods = max(2, int(math.ceil(t_final / T)))

    ms, mats = gen.stacked()
    w = basis.drive_freq
    flat = mats.reshape(len(ms), 256)

    def rhs(t, y):
        phases = np.exp(1j * ms * (w * t))
        return ((phases @ flat).reshape(16, 16)) @ y

    t_eval = np.linspace(0.0, T, n_sample, endpoint=False)
    y = rho0.reshape(16).copy()
    times = [0.0]
    states = [rho0.copy()]
    prev_avg = None
    converged = False
    residual = math.inf
    min_eig = 0.0
    last_grid = None

    for period_idx in range(n_periods):
        t0 = period_idx * T
        sol = solve_ivp(rhs, (t0, t0 + T), y, method="DOP853", rtol=rtol, atol=atol,
                        t_eval=np.append(t0 + t_eval, t0 + T), dense_output=False)
        if not sol.success:
            raise RuntimeError(f"integrator failed in period {period_idx}: {sol.message}")
        y = sol.y[:, -1]
        grid = sol.y.T[:-1].reshape(n_sample, 4, 4)
        avg = grid.mean(axis=0)
        min_eig = _check_positivity(avg, f"period {period_idx}")
        times.append(t0 + T)
        states.append(y.reshape(4, 4).copy())
        last_grid = grid
        if prev_avg is not None:
            residual = _trace_norm(avg - prev_avg)
            if residual < conv_tol:
                converged = True
                prev_avg = avg
                break
        prev_avg = avg

    n_keep = max(gen.max_harmonic + 4, 8)
    harmonics = _harmonics_from_grid(last_grid, t_eval, w, min(n_keep, n_sample // 2 - 1))
    final = PeriodicState(drive_freq=w, period=T, harmonics=harmonics,
                          t_grid=t_eval, grid_states=last_grid,
                          meta={"solver": "evolve", "converged": converged,
                                "residual": residual})
    return Trajectory(times=np.array(times), states=np.array(states), converged=converged,
                      residual=residual, final_state=final, min_eigenvalue=min_eig)


def period_average(traj: Trajectory, force: bool = False) -> np.ndarray:
    """Period-averaged density matrix of the stored final period."""
    if not traj.converged and not force:
        raise SteadyStateError(
            f"trajectory not converged (residual {traj.residual:.3e}); pass force=True")
    return traj.final_state.average


def periodic_steady_state_fourier(gen: PeriodicGenerator, m_max: int | None = None,
                                  n_sample: int = 256) -> PeriodicState:
    """Directly solve for the Fourier components of the periodic steady state.

    Writing rho(t) = sum_n rho_n e^{i n V t}, the components satisfy
    i n V rho_n = sum_m L_m rho_{n-m}; the trace constraint Tr rho_0 = 1
    replaces one scalar equation.  Singular systems fall back to a minimum-
    norm least-squares solve and are reported if inconsistent.
    """
    basis = gen.basis
    w = basis.drive_freq
    T = basis.period
    if m_max is None:
        m_max = gen.max_harmonic + 6
    nblk = 2 * m_max + 1
    dim = 16 * nblk

    harmonics = gen.harmonics
    blocks = {}
    for n in range(-m_max, m_max + 1):
        bi = n + m_max
        blocks[(bi, bi)] = -1j * n * w * np.eye(16, dtype=complex)
    for m, mat in harmonics.items():
        for n in range(-m_max, m_max + 1):
            src = n - m
            if -m_max <= src <= m_max:
                key = (n + m_max, src + m_max)
                blocks[key] = blocks.get(key, 0) + mat

    data, rows, cols = [], [], []
    for (bi, bj), mat in blocks.items():
        r, c = np.nonzero(np.abs(mat) > 0)
        data.extend(mat[r, c])
        rows.extend(16 * bi + r)
        cols.extend(16 * bj + c)
    a0 = sp.csr_matrix((data, (rows, cols)), shape=(dim, dim), dtype=complex)

    trace_vec = np.zeros(dim, dtype=complex)
    for i in _TRACE_IDX:
        trace_vec[16 * m_max + i] = 1.0

    def _acceptable(x):
        if x is None or not np.all(np.isfinite(x)):
            return False
        scale = 1.0 + np.linalg.norm(x)
        if np.linalg.norm(a0 @ x) > 1e-8 * scale:
            return False
        if abs(trace_vec @ x - 1.0) > 1e-8:
            return False
        rho0 = x[16 * m_max:16 * m_max + 16].reshape(4, 4)
        if np.abs(rho0 - rho0.conj().T).max() > 1e-6:
            return False
        return bool(np.linalg.eigvalsh(0.5 * (rho0 + rho0.conj().T)).min()
                    > _POSITIVITY_FLOOR)

    # fast path: replace one equation of the n=0 block with the trace row
    trace_row = 16 * m_max
    a = a0.tolil()
    a[trace_row, :] = trace_vec
    a = a.tocsr()
    b = np.zeros(dim, dtype=complex)
    b[trace_row] = 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sp.linalg.MatrixRankWarning)
        try:
            x = spsolve(a, b)
        except Exception:
            x = None

    if not _acceptable(x):
        # Singular generator (e.g. conserved coherence directions at g=0):
        # keep every equation and append the trace constraint, then take the
        # minimum-norm least-squares solution, which zeroes the free
        # directions instead of amplifying them.
        a_aug = np.vstack([a0.toarray(), trace_vec])
        b_aug = np.zeros(dim + 1, dtype=complex)
        b_aug[-1] = 1.0
        x, *_ = np.linalg.lstsq(a_aug, b_aug, rcond=None)
        resid = np.linalg.norm(a_aug @ x - b_aug)
        if resid > 1e-7 or not np.all(np.isfinite(x)):
            raise SteadyStateError(
                f"periodic steady-state system inconsistent (residual {resid:.3e})")

    comps = x.reshape(nblk, 4, 4)
    harmonics_rho = {}
    for n in range(-m_max, m_max + 1):
        mat = comps[n + m_max]
        if np.abs(mat).max() > 1e-300:
            harmonics_rho[n] = mat
    t_grid = np.linspace(0.0, T, n_sample, endpoint=False)
    state = PeriodicState(drive_freq=w, period=T, harmonics=harmonics_rho,
                          t_grid=t_grid, grid_states=None,
                          meta={"solver": "fourier", "m_max": m_max})
    state.grid_states = state.at(t_grid)
    _check_positivity(state.average, "fourier steady state")
    tr = np.trace(state.average)
    if abs(tr - 1.0) > 1e-8:
        raise SteadyStateError(f"steady-state trace {tr} deviates from 1")
    return state
