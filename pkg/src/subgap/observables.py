"""Period-averaged particle currents, parity populations, current records.

Sign convention (also stated in the CSV header): reported currents are
positive when particles flow left -> right through the device, so the left
columns carry the flux out of the left lead into the dot and the right
columns the flux out of the dot into the right lead.  Currents are quoted in
units of gamma_ref = (gamma_L + gamma_R)/2.  The conservation residual is
the raw continuity sum dN_dot/dt + sum_l dN_l/dt + 2 sum_l dP_l/dt + I_loss,
which vanishes at a converged steady state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .floquet import FloquetBasis, build_floquet_basis
from .generator import PeriodicGenerator, build_generator
from .leads import RateTable
from .model import (DOUBLE, DOWN, EMPTY, LEADS, NUMBER_OP, PAIR_CREATE, UP,
                    JunctionParams, NumericsConfig)
from .solver import (PeriodicState, Trajectory, evolve,
                     periodic_steady_state_fourier)

_LEAD_ORIENTATION = {"L": -1.0, "R": +1.0}   # reported = orientation * dN_lead/dt
_DRIVE_HARMONIC = {"L": +1, "R": -1}         # e^{2 i V_l t} = e^{i s_l V t}


def _number_table(basis: FloquetBasis) -> np.ndarray:
    return basis.fourier_table("number", NUMBER_OP)


def _pair_table(basis: FloquetBasis) -> np.ndarray:
    return basis.fourier_table("pair_create", PAIR_CREATE)


def _part_flux(gen: PeriodicGenerator, state: PeriodicState, key: str) -> float:
    """-<< N, L_part(t) rho(t) >> averaged over one period (raw units).

    This is the particle flux into whatever the generator part describes:
    dN_lead/dt for a lead part, the loss flux for the loss part.
    """
    ms, mats = gen.part_stacked(key)
    if len(ms) == 0:
        return 0.0
    ntbl = _number_table(gen.basis)
    k_max = gen.basis.k_max
    total = 0.0j
    for mi, m in enumerate(ms):
        for n, rho_n in state.harmonics.items():
            k = -(m + n)
            if abs(k) > k_max:
                continue
            w = ntbl[k + k_max].T.reshape(16)          # vec of <phi_b|N|phi_a>
            total += w @ (mats[mi] @ rho_n.reshape(16))
    return -float(np.real(total))


def lead_current_raw(gen: PeriodicGenerator, state: PeriodicState, lead: str) -> float:
    """dN_lead/dt: period-averaged particle flux into moderate-gap lead l."""
    return _part_flux(gen, state, f"lead_{lead}")


def incoherent_current_raw(gen: PeriodicGenerator, state: PeriodicState) -> float:
    """Particle flux removed by the engineered channels (loss; dephasing ~ 0)."""
    return _part_flux(gen, state, "loss") + _part_flux(gen, state, "deph")


def pair_current_raw(state: PeriodicState, basis: FloquetBasis, lead: str) -> float:
    """dP_lead/dt: period-averaged Cooper-pair flux into large-gap lead l.

    i (g_l^* e^{-2 i V_l t} <c_up^dag c_down^dag> - h.c.), period averaged.
    """
    p = basis.params
    g = p.g_lead(lead)
    if g == 0:
        return 0.0
    ptbl = _pair_table(basis)
    k_max = basis.k_max
    s = _DRIVE_HARMONIC[lead]
    acc = 0.0j
    for n, rho_n in state.harmonics.items():
        k = s - n
        if abs(k) > k_max:
            continue
        acc += np.sum(rho_n * ptbl[k + k_max].T)
    return -2.0 * float(np.imag(np.conj(g) * acc))


def dot_drift_raw(state: PeriodicState, basis: FloquetBasis,
                  traj: Trajectory | None = None) -> float:
    """Period-averaged d<N>/dt; zero by construction for a Fourier solution."""
    if traj is None:
        return 0.0
    eta0 = basis.grid_matrix_elements(NUMBER_OP)[0]     # <phi_b(0)|N|phi_a(0)>
    n_start = np.sum(traj.states[-2] * eta0.T).real
    n_end = np.sum(traj.states[-1] * eta0.T).real
    return (n_end - n_start) / basis.period


def parity_populations(state: PeriodicState, basis: FloquetBasis) -> tuple[float, float]:
    """Period-averaged bare-basis populations of the even and odd sectors."""
    stride = max(1, basis.n_grid // 256)
    ts = basis.t_grid[::stride]
    phi = basis.mode_grid[::stride]
    rho = state.at(ts)
    rho_bare = np.einsum("nia,nab,njb->nij", phi, rho, phi.conj())
    diag = np.real(np.einsum("nii->ni", rho_bare))
    even = float(diag[:, EMPTY].mean() + diag[:, DOUBLE].mean())
    odd = float(diag[:, DOWN].mean() + diag[:, UP].mean())
    return even, odd


@dataclass
class CurrentRecord:
    """One solved bias point, currents in units of gamma_ref."""

    V: float
    omega: float
    U: float
    g_L: float
    g_R: float
    gamma_L: float
    gamma_R: float
    gamma_loss: float
    gamma_deph: float
    I_qd: float
    I_s_L: float
    I_s_R: float
    I_p_L: float
    I_p_R: float
    I_incoh: float
    pop_even: float
    pop_odd: float
    residual: float
    solver: str
    status: str = "ok"

    COLUMNS = ("V", "omega", "U", "g_L", "g_R", "gamma_L", "gamma_R",
               "gamma_loss", "gamma_deph", "I_qd", "I_s_L", "I_s_R",
               "I_p_L", "I_p_R", "I_incoh", "pop_even", "pop_odd",
               "residual", "solver", "status")

    def row(self) -> list:
        return [getattr(self, c) for c in self.COLUMNS]

    @classmethod
    def failed(cls, p: JunctionParams, solver: str, message: str) -> "CurrentRecord":
        nan = float("nan")
        return cls(V=p.bias, omega=p.omega, U=p.u_int, g_L=p.g_L, g_R=p.g_R,
                   gamma_L=p.gamma_L, gamma_R=p.gamma_R, gamma_loss=p.gamma_loss,
                   gamma_deph=p.gamma_deph, I_qd=nan, I_s_L=nan, I_s_R=nan,
                   I_p_L=nan, I_p_R=nan, I_incoh=nan, pop_even=nan, pop_odd=nan,
                   residual=nan, solver=solver, status=f"error:{message}")


def record_from_state(gen: PeriodicGenerator, state: PeriodicState,
                      traj: Trajectory | None = None,
                      solver: str = "fourier") -> CurrentRecord:
    basis = gen.basis
    p = basis.params
    gref = p.gamma_ref
    scale = 1.0 / gref if gref > 0 else 1.0

    raw_lead = {lead: lead_current_raw(gen, state, lead) for lead in LEADS}
    raw_pair = {lead: pair_current_raw(state, basis, lead) for lead in LEADS}
    raw_incoh = incoherent_current_raw(gen, state)
    raw_qd = dot_drift_raw(state, basis, traj)
    residual = raw_qd + sum(raw_lead.values()) + 2.0 * sum(raw_pair.values()) + raw_incoh
    even, odd = parity_populations(state, basis)

    status = "ok"
    if traj is not None and not traj.converged:
        status = f"unconverged:{traj.residual:.3e}"

    return CurrentRecord(
        V=p.bias, omega=p.omega, U=p.u_int, g_L=p.g_L, g_R=p.g_R,
        gamma_L=p.gamma_L, gamma_R=p.gamma_R, gamma_loss=p.gamma_loss,
        gamma_deph=p.gamma_deph,
        I_qd=raw_qd * scale,
        I_s_L=_LEAD_ORIENTATION["L"] * raw_lead["L"] * scale,
        I_s_R=_LEAD_ORIENTATION["R"] * raw_lead["R"] * scale,
        I_p_L=_LEAD_ORIENTATION["L"] * raw_pair["L"] * scale,
        I_p_R=_LEAD_ORIENTATION["R"] * raw_pair["R"] * scale,
        I_incoh=raw_incoh * scale,
        pop_even=even, pop_odd=odd,
        residual=residual * scale,
        solver=solver, status=status)


def solve_point(p: JunctionParams, numerics: NumericsConfig | None = None,
                solver: str = "fourier", rho0: np.ndarray | None = None,
                t_final: float | None = None,
                return_context: bool = False):
    """Full pipeline for one parameter point: basis -> rates -> generator -> state.

    solver is 'fourier', 'evolve' or 'both'; returns one CurrentRecord, or a
    list of two for 'both'.
    """
    if numerics is None:
        numerics = NumericsConfig()
    basis = build_floquet_basis(p, k_max=numerics.k_max, n_grid=numerics.n_grid,
                                n_steps=numerics.n_steps)
    rates = RateTable(p)
    gen = build_generator(basis, rates)

    records = []
    context = {"basis": basis, "gen": gen}
    if solver in ("fourier", "both"):
        state = periodic_steady_state_fourier(gen, m_max=numerics.m_max)
        records.append(record_from_state(gen, state, solver="fourier"))
        context["fourier_state"] = state
    if solver in ("evolve", "both"):
        if rho0 is None:
            rho0 = np.zeros((4, 4), dtype=complex)
            rho0[EMPTY, EMPTY] = 1.0
        if t_final is None and p.gamma_ref > 0:
            t_final = numerics.t_final_factor / p.gamma_ref
        traj = evolve(gen, rho0, t_final=t_final)
        records.append(record_from_state(gen, traj.final_state, traj=traj,
                                         solver="evolve"))
        context["trajectory"] = traj
    if not records:
        raise ValueError(f"unknown solver {solver!r}")
    result = records if solver == "both" else records[0]
    return (result, context) if return_context else result
