"""Floquet machinery: one-period propagator, quasienergies, modes, Fourier tables.

The driven Hamiltonian is block diagonal in parity: a driven 2x2 block on
{|0>, |down-up|} and a static degenerate block on {|down>, |up>}.  The
propagator is accumulated from exact exponentials of the frozen Hamiltonian
(midpoint-sampled sub-steps), which keeps the product unitary to machine
precision and second-order accurate in the step size.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import schur
from scipy.optimize import linear_sum_assignment

from .model import (DOUBLE, DOWN, EMPTY, LEADS, UP, C_DOWN, C_UP,
                    JunctionParams)

_EVEN = (EMPTY, DOUBLE)
_ODD = (DOWN, UP)


def _drive_amplitude(p: JunctionParams, t):
    """Coefficient of c_down c_up in H(t); the matrix element <0|H|du> is its negative."""
    amp = np.zeros(np.shape(t), dtype=complex) if not np.isscalar(t) else 0.0j
    for lead in LEADS:
        amp = amp + p.g_lead(lead) * np.exp(2j * p.v_lead(lead) * np.asarray(t))
    return amp


def _even_block_steps(p: JunctionParams, t_mid: np.ndarray, dt: float) -> np.ndarray:
    """Exact exponentials exp(-i dt H_even(t_mid)) for all sub-steps, shape (N,2,2)."""
    d2 = 2.0 * p.omega + p.u_int
    h = -_drive_amplitude(p, t_mid)          # <0|H|du>
    alpha = 0.5 * d2
    mx = h.real
    my = -h.imag
    mz = np.full_like(mx, -0.5 * d2)
    beta = np.sqrt(mx * mx + my * my + mz * mz)
    theta = beta * dt
    cos_t = np.cos(theta)
    sinc = np.where(beta > 0, np.sin(theta) / np.where(beta > 0, beta, 1.0), dt)
    phase = np.exp(-1j * alpha * dt)
    steps = np.empty((len(t_mid), 2, 2), dtype=complex)
    steps[:, 0, 0] = phase * (cos_t - 1j * sinc * mz)
    steps[:, 1, 1] = phase * (cos_t + 1j * sinc * mz)
    steps[:, 0, 1] = phase * (-1j * sinc * (mx - 1j * my))
    steps[:, 1, 0] = phase * (-1j * sinc * (mx + 1j * my))
    return steps


def _propagate_grid(p: JunctionParams, n_grid: int, n_steps: int):
    """Cumulative even-block propagator at grid times plus the full-period value.

    Returns (t_grid, u_even_grid (n_grid,2,2), u_even_T (2,2)).  The grid holds
    U at t_j = j T / n_grid, j = 0 .. n_grid-1; sub-stepping uses at least
    ceil(n_steps / n_grid) exact exponentials per grid interval.
    """
    T = p.period
    n_sub = max(1, math.ceil(n_steps / n_grid))
    n_tot = n_sub * n_grid
    dt = T / n_tot
    t_mid = (np.arange(n_tot) + 0.5) * dt
    steps = _even_block_steps(p, t_mid, dt)
    s = steps.reshape(n_grid * n_sub, 4).tolist()

    u_grid = np.empty((n_grid, 2, 2), dtype=complex)
    u00, u01, u10, u11 = 1.0 + 0.0j, 0.0j, 0.0j, 1.0 + 0.0j
    idx = 0
    for j in range(n_grid):
        u_grid[j] = ((u00, u01), (u10, u11))
        for _ in range(n_sub):
            a00, a01, a10, a11 = s[idx]
            idx += 1
            u00, u01, u10, u11 = (a00 * u00 + a01 * u10, a00 * u01 + a01 * u11,
                                  a10 * u00 + a11 * u10, a10 * u01 + a11 * u11)
    u_T = np.array([[u00, u01], [u10, u11]])
    t_grid = np.arange(n_grid) * (T / n_grid)
    return t_grid, u_grid, u_T


def _embed_full(u_even, t, omega: float) -> np.ndarray:
    """Assemble the 4x4 propagator from the even block and the trivial odd block."""
    t = np.asarray(t)
    scalar = t.ndim == 0
    te = np.atleast_1d(t)
    ue = u_even.reshape((-1, 2, 2))
    out = np.zeros((len(te), 4, 4), dtype=complex)
    out[:, EMPTY, EMPTY] = ue[:, 0, 0]
    out[:, EMPTY, DOUBLE] = ue[:, 0, 1]
    out[:, DOUBLE, EMPTY] = ue[:, 1, 0]
    out[:, DOUBLE, DOUBLE] = ue[:, 1, 1]
    ph = np.exp(-1j * omega * te)
    out[:, DOWN, DOWN] = ph
    out[:, UP, UP] = ph
    return out[0] if scalar else out


def propagator_over_period(p: JunctionParams, n_steps: int = 10000) -> np.ndarray:
    """One-period propagator U(T) as a product of exact sub-step exponentials."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    _, _, u_even = _propagate_grid(p, 1, n_steps)
    return _embed_full(u_even, p.period, p.omega)


def _fold_zone(angles: np.ndarray, period: float) -> np.ndarray:
    """Fold eigenphase-derived energies into the first Brillouin zone [-pi/T, pi/T]."""
    zone = 2.0 * math.pi / period
    return (angles + 0.5 * zone) % zone - 0.5 * zone


def quasienergies_and_modes(u_T: np.ndarray, period: float):
    """Quasienergies and t=0 Floquet modes from the one-period propagator.

    Eigenvalues of U(T) are e^{-i E_a T}.  Degenerate clusters are re-spanned
    deterministically by projecting the bare basis states, in the order
    {|0>, |down>, |up>, |down-up>}, onto the cluster subspace; the overall
    mode order maximises overlap with that same bare order.
    """
    defect = np.linalg.norm(u_T.conj().T @ u_T - np.eye(4))
    if defect > 1e-6:
        raise ValueError(f"propagator is not unitary (defect {defect:.2e})")
    tmat, q = schur(u_T, output="complex")
    lams = np.diag(tmat).copy()
    vecs = q.copy()

    gram = vecs.conj().T @ vecs
    if abs(np.linalg.det(gram)) < 1e-6:
        raise ValueError("ill-conditioned Floquet eigenbasis")

    # cluster by eigenvalue proximity on the unit circle
    used = np.zeros(4, dtype=bool)
    clusters = []
    for i in range(4):
        if used[i]:
            continue
        members = [i]
        used[i] = True
        for j in range(i + 1, 4):
            if not used[j] and abs(lams[j] - lams[i]) < 1e-7:
                members.append(j)
                used[j] = True
        clusters.append(members)

    new_vecs = np.empty_like(vecs)
    new_lams = np.empty(4, dtype=complex)
    col = 0
    for members in clusters:
        sub = vecs[:, members]
        lam = lams[members[0]]
        if len(members) == 1:
            new_vecs[:, col] = sub[:, 0]
            new_lams[col] = lam
            col += 1
            continue
        # deterministic span: bare states projected into the cluster subspace
        proj = sub @ sub.conj().T
        chosen = []
        for bare in range(4):
            v = proj[:, bare].copy()
            for c in chosen:
                v -= c * (c.conj() @ v)
            nrm = np.linalg.norm(v)
            if nrm > 1e-6:
                chosen.append(v / nrm)
            if len(chosen) == len(members):
                break
        if len(chosen) != len(members):
            raise ValueError("failed to re-span a degenerate quasienergy cluster")
        for v in chosen:
            new_vecs[:, col] = v
            new_lams[col] = lam
            col += 1

    energies = _fold_zone(-np.angle(new_lams) / period, period)

    # order by maximal overlap with the bare basis, then fix phases
    cost = -np.abs(new_vecs) ** 2               # cost[bare, mode]
    _, order = linear_sum_assignment(cost)      # order[bare] = matched mode
    energies = energies[order]
    modes = new_vecs[:, order]
    for a in range(4):
        imax = int(np.argmax(np.abs(modes[:, a])))
        ph = modes[imax, a]
        if abs(ph) > 0:
            modes[:, a] *= np.conj(ph) / abs(ph)
    return energies, modes


@dataclass
class FloquetBasis:
    """Quasienergies, periodic modes on a time grid, and operator Fourier tables.

    ``mode_grid[j, :, a]`` holds phi_a(t_j); tables map an operator to an
    array of shape (2 k_max + 1, 4, 4) with harmonic index k = -k_max .. k_max
    relative to e^{i k V t} (signed drive frequency V).
    """

    params: JunctionParams
    k_max: int
    n_grid: int
    period: float
    drive_freq: float
    quasi: np.ndarray
    modes0: np.ndarray
    t_grid: np.ndarray
    mode_grid: np.ndarray
    u_T: np.ndarray
    tables: dict = field(default_factory=dict)

    @property
    def ks(self) -> np.ndarray:
        return np.arange(-self.k_max, self.k_max + 1)

    def delta(self, a: int, b: int, k: int) -> float:
        """Transition argument Delta_{abk} = E_a - E_b + k V."""
        return float(self.quasi[a] - self.quasi[b] + k * self.drive_freq)

    def delta_matrix(self, k: int) -> np.ndarray:
        return self.quasi[:, None] - self.quasi[None, :] + k * self.drive_freq

    def fourier_table(self, name: str, op: np.ndarray | None = None) -> np.ndarray:
        """Fourier components <phi_a(t)|op|phi_b(t)> -> c^{abk}, cached by name."""
        if name in self.tables:
            return self.tables[name]
        if op is None:
            raise KeyError(name)
        grid_vals = np.einsum("nia,ij,njb->nab", self.mode_grid.conj(), op, self.mode_grid)
        tbl = _dft_tables(grid_vals, self.t_grid, self.drive_freq, self.k_max)
        self.tables[name] = tbl
        return tbl

    def grid_matrix_elements(self, op: np.ndarray) -> np.ndarray:
        """<phi_a(t_j)|op|phi_b(t_j)> on the full grid, shape (n_grid, 4, 4)."""
        return np.einsum("nia,ij,njb->nab", self.mode_grid.conj(), op, self.mode_grid)

    def diagnostics(self) -> str:
        """Structured text record of quasienergies and Fourier-table norms."""
        lines = [f"period {self.period:.12g}", f"drive_freq {self.drive_freq:.12g}"]
        for a, e in enumerate(self.quasi):
            lines.append(f"quasienergy {a} {e:+.12g}")
        for name, tbl in sorted(self.tables.items()):
            norms = np.linalg.norm(tbl, axis=(1, 2))
            k0 = self.k_max
            top = ", ".join(f"k={k - k0}:{norms[k]:.3e}" for k in np.argsort(norms)[::-1][:5])
            lines.append(f"table {name} total {np.linalg.norm(norms):.6e} top [{top}]")
        return "\n".join(lines)


def dagger_table(tbl: np.ndarray) -> np.ndarray:
    """Fourier table of the adjoint operator: (O^dag)^{abk} = conj(O^{ba,-k})."""
    return np.conj(tbl[::-1].transpose(0, 2, 1))


def _dft_tables(grid_vals: np.ndarray, t_grid: np.ndarray, drive_freq: float,
                k_max: int) -> np.ndarray:
    """Uniform-grid DFT of periodic matrix elements onto harmonics |k| <= k_max."""
    n = len(t_grid)
    ks = np.arange(-k_max, k_max + 1)
    w = np.exp(-1j * drive_freq * np.outer(ks, t_grid)) / n
    return (w @ grid_vals.reshape(n, -1)).reshape(len(ks), 4, 4)


def build_floquet_basis(p: JunctionParams, k_max: int = 20, n_grid: int = 2048,
                        n_steps: int = 10000) -> FloquetBasis:
    """Construct the full Floquet basis for one parameter point.

    Raises if the mode periodicity residual ||phi_a(T) - phi_a(0)|| exceeds
    1e-6 or if the truncated Fourier tables fail to reconstruct the grid
    matrix elements to the same tolerance; warns if the estimated tail weight
    beyond k_max exceeds 1e-8.
    """
    T = p.period
    t_grid, u_even_grid, u_even_T = _propagate_grid(p, n_grid, n_steps)
    u_T = _embed_full(u_even_T, T, p.omega)
    energies, modes0 = quasienergies_and_modes(u_T, T)

    u_grid = _embed_full(u_even_grid, t_grid, p.omega)
    mode_grid = np.einsum("njk,ka->nja", u_grid, modes0)
    mode_grid *= np.exp(1j * np.outer(t_grid, energies))[:, None, :]

    phi_T = np.exp(1j * energies * T)[None, :] * (u_T @ modes0)
    resid = np.linalg.norm(phi_T - modes0, axis=0).max()
    if resid > 1e-6:
        raise ValueError(f"Floquet mode periodicity residual {resid:.2e} exceeds 1e-6")

    basis = FloquetBasis(params=p, k_max=k_max, n_grid=n_grid, period=T,
                         drive_freq=p.bias, quasi=energies, modes0=modes0,
                         t_grid=t_grid, mode_grid=mode_grid, u_T=u_T)
    for name, op in (("c_down", C_DOWN), ("c_up", C_UP)):
        tbl = basis.fourier_table(name, op)
        _check_table(basis, tbl, op, name)
    return basis


def _check_table(basis: FloquetBasis, tbl: np.ndarray, op: np.ndarray, name: str):
    # geometric tail estimate from the last retained harmonics
    last = np.abs(tbl[[0, -1]]).max(axis=(1, 2))
    prev = np.abs(tbl[[1, -2]]).max(axis=(1, 2))
    tail = 0.0
    for lo, hi in zip(last, prev):
        r = min(0.99, lo / hi) if hi > 0 else 0.0
        tail += (lo * lo) * r * r / (1.0 - r * r) if r > 0 else 0.0
    if tail > 1e-8:
        warnings.warn(f"table {name}: estimated tail weight {tail:.2e} beyond "
                      f"k_max={basis.k_max} exceeds 1e-8", RuntimeWarning)
    grid_vals = basis.grid_matrix_elements(op)
    phases = np.exp(1j * basis.drive_freq * np.outer(basis.t_grid, basis.ks))
    recon = np.einsum("nk,kab->nab", phases, tbl)
    err = np.abs(recon - grid_vals).max()
    if err > 1e-6:
        raise ValueError(f"table {name}: reconstruction error {err:.2e} exceeds 1e-6")
