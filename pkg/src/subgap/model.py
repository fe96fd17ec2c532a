"""Four-level dot model: parameters, fermionic operators, driven Hamiltonian.

Basis ordering is fixed to {|0>, |down>, |up>, |down-up>} everywhere; the
doubly occupied state is c_down^dag c_up^dag |0>, which puts a minus sign on
the |down><down-up| element of c_up.  All energies are in units of the
moderate-lead gap (Delta = 1 by convention).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

# bare basis indices
EMPTY, DOWN, UP, DOUBLE = 0, 1, 2, 3

LEADS = ("L", "R")


def build_dot_operators():
    """Return (c_down, c_up) as 4x4 complex matrices.

    c_down = |0><down| + |up><down-up|
    c_up   = |0><up|   - |down><down-up|
    """
    c_down = np.zeros((4, 4), dtype=complex)
    c_down[EMPTY, DOWN] = 1.0
    c_down[UP, DOUBLE] = 1.0
    c_up = np.zeros((4, 4), dtype=complex)
    c_up[EMPTY, UP] = 1.0
    c_up[DOWN, DOUBLE] = -1.0
    return c_down, c_up


C_DOWN, C_UP = build_dot_operators()
NUMBER_OP = C_DOWN.conj().T @ C_DOWN + C_UP.conj().T @ C_UP
PAIR_ANNIHILATE = C_DOWN @ C_UP          # = -|0><down-up|
PAIR_CREATE = PAIR_ANNIHILATE.conj().T   # = c_up^dag c_down^dag


@dataclass(frozen=True)
class JunctionParams:
    """Physical inputs of the four-terminal junction, in units of Delta.

    The bias is symmetric by construction: V_L = -V_R = bias/2.  Asymmetric
    bias is rejected at this level rather than silently rotated away.
    """

    omega: float = -1.0          # dot level
    u_int: float = 2.0           # Coulomb interaction
    g_L: float = 0.0             # |g| of left Cooper-pair drive
    g_R: float = 0.0
    phi_L: float = 0.0           # superconductor phases (drive and lead)
    phi_R: float = 0.0
    delta_L: float = 1.0         # moderate-lead gaps
    delta_R: float = 1.0
    gamma_L: float = 1e-2        # single-particle tunnel rates
    gamma_R: float = 1e-2
    bias: float = 1.0            # V = V_L - V_R
    temp_L: float = 0.0
    temp_R: float = 0.0
    gamma_loss: float = 0.0
    gamma_deph: float = 0.0
    dos_epsilon: float = 0.1     # regularizer of the DOS and PV kernels
    cutoff: float = 100.0        # quadrature cutoff Omega_f

    def __post_init__(self):
        if self.delta_L <= 0 or self.delta_R <= 0:
            raise ValueError("lead gaps must be positive")
        if self.gamma_L < 0 or self.gamma_R < 0:
            raise ValueError("tunnel rates must be non-negative")
        if self.g_L < 0 or self.g_R < 0:
            raise ValueError("pair amplitudes are magnitudes; fold signs into phi_l")
        if self.temp_L < 0 or self.temp_R < 0:
            raise ValueError("temperatures must be non-negative")
        if self.gamma_loss < 0 or self.gamma_deph < 0:
            raise ValueError("incoherent rates must be non-negative")
        if self.dos_epsilon <= 0:
            raise ValueError("dos_epsilon must be positive")
        if self.cutoff <= max(self.delta_L, self.delta_R):
            raise ValueError("cutoff must exceed the largest gap")

    # per-lead accessors -------------------------------------------------
    def v_lead(self, lead: str) -> float:
        if lead == "L":
            return 0.5 * self.bias
        if lead == "R":
            return -0.5 * self.bias
        raise KeyError(lead)

    def g_lead(self, lead: str) -> complex:
        if lead == "L":
            return self.g_L * np.exp(1j * self.phi_L)
        if lead == "R":
            return self.g_R * np.exp(1j * self.phi_R)
        raise KeyError(lead)

    def delta_lead(self, lead: str) -> float:
        return self.delta_L if lead == "L" else self.delta_R

    def gamma_lead(self, lead: str) -> float:
        return self.gamma_L if lead == "L" else self.gamma_R

    def temp_lead(self, lead: str) -> float:
        return self.temp_L if lead == "L" else self.temp_R

    def phi_lead(self, lead: str) -> float:
        return self.phi_L if lead == "L" else self.phi_R

    @property
    def period(self) -> float:
        if self.bias == 0.0:
            raise ValueError("bias must be non-zero for the driven problem")
        return 2.0 * math.pi / abs(self.bias)

    @property
    def gamma_ref(self) -> float:
        """Reference rate used to quote currents: mean of the two tunnel rates."""
        return 0.5 * (self.gamma_L + self.gamma_R)

    def with_bias(self, v: float) -> "JunctionParams":
        return replace(self, bias=v)


def hamiltonian_at(t: float, p: JunctionParams) -> np.ndarray:
    """Effective dot Hamiltonian H_QD + sum_l (g_l e^{2i V_l t} c_down c_up + h.c.).

    Periodic with T = 2 pi / |V| since V_L = -V_R = V/2.
    """
    h = np.diag([0.0, p.omega, p.omega, 2.0 * p.omega + p.u_int]).astype(complex)
    drive = 0.0j
    for lead in LEADS:
        drive += p.g_lead(lead) * np.exp(2j * p.v_lead(lead) * t)
    h += drive * PAIR_ANNIHILATE
    h += np.conj(drive) * PAIR_CREATE
    return h


def parity_projectors():
    """Projectors onto the even {|0>,|down-up>} and odd {|down>,|up>} sectors."""
    even = np.diag([1.0, 0.0, 0.0, 1.0]).astype(complex)
    odd = np.diag([0.0, 1.0, 1.0, 0.0]).astype(complex)
    return even, odd


# ---------------------------------------------------------------------------
# configuration file ingestion

_PARAM_FIELDS = None


def _param_fields():
    global _PARAM_FIELDS
    if _PARAM_FIELDS is None:
        _PARAM_FIELDS = {f.name for f in fields(JunctionParams)}
    return _PARAM_FIELDS


@dataclass
class NumericsConfig:
    """Discretisation knobs shared by the Floquet/generator/solver pipeline."""

    k_max: int = 20              # Fourier table truncation |k| <= k_max
    n_grid: int = 2048           # mode-grid points per period
    n_steps: int = 10000         # propagator sub-steps per period
    m_max: int | None = None     # steady-state harmonic truncation (None: auto)
    t_final_factor: float = 10.0  # evolve horizon in units of 1/gamma_ref

    def __post_init__(self):
        if self.k_max < 1 or self.n_grid < 4 or self.n_steps < 1:
            raise ValueError("invalid numerics configuration")


_NUMERIC_FIELDS = {"k_max", "n_grid", "n_steps", "m_max", "t_final_factor"}
_INT_NUMERIC = {"k_max", "n_grid", "n_steps", "m_max"}


def load_config(path: str) -> tuple[JunctionParams, NumericsConfig]:
    """Read a flat key-value config file (``key = value``, '#' comments).

    Keys mirror JunctionParams field names, plus the NumericsConfig knobs.
    Unknown keys are errors.  All energies are in units of Delta.
    """
    pvals: dict = {}
    nvals: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            if key in _param_fields():
                pvals[key] = float(val)
            elif key in _NUMERIC_FIELDS:
                nvals[key] = int(val) if key in _INT_NUMERIC else float(val)
            else:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    return JunctionParams(**pvals), NumericsConfig(**nvals)
