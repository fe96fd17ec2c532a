"""Assembly of the periodic master-equation generator in the Floquet basis.

The generator acts on the density matrix written in the co-moving Floquet
frame, rho^{ab}(t) = <phi_a(t)| rho_S(t) |phi_b(t)>, vectorised row-major to
a 16-vector.  It is stored as harmonic components L(t) = sum_m L_m e^{i m V t}.

Each dissipative term couples a pair of operator Fourier components weighted
by a complex rate evaluated at the transition argument of whichever factor
sits at the earlier time in the underlying correlation integral.  Both spin
orderings of the anomalous (pair-correlation) terms are kept explicitly, so
trace and Hermiticity preservation hold identically on the full operator
space rather than only on spin-symmetric states.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .floquet import FloquetBasis, dagger_table
from .leads import RateTable
from .model import (DOUBLE, DOWN, EMPTY, LEADS, UP, C_DOWN, C_UP,
                    JunctionParams)

I4 = np.eye(4, dtype=complex)

# spin-occupation operators used as dephasing jump operators
N_DOWN = C_DOWN.conj().T @ C_DOWN
N_UP = C_UP.conj().T @ C_UP

_NORM_CUT = 1e-13   # relative cutoff for retaining table harmonics


def _kron_left(a: np.ndarray) -> np.ndarray:
    return np.kron(a, I4)


def _kron_right(b: np.ndarray) -> np.ndarray:
    return np.kron(I4, b.T)


def _kron_sandwich(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(a, b.T)


class _Harmonics(dict):
    """dict[int, 16x16] with accumulate-add."""

    def add(self, m: int, mat: np.ndarray):
        if m in self:
            self[m] = self[m] + mat
        else:
            self[m] = mat


def _retained(tbl: np.ndarray, k_max: int):
    """Harmonic indices of a table worth keeping, by relative norm."""
    norms = np.linalg.norm(tbl, axis=(1, 2))
    top = norms.max()
    if top == 0.0:
        return []
    keep = np.nonzero(norms > _NORM_CUT * top)[0]
    return [(int(i) - k_max, tbl[i], norms[i]) for i in keep]


def assemble_single_particle(basis: FloquetBasis, rates: RateTable) -> dict:
    """Quasiparticle-exchange part of the generator, one harmonic dict per lead.

    For each spin the eight double-commutator terms are emitted with rate
    arguments -Delta(+-)V_l on the earlier-time factor and complex-conjugated
    partners at +Delta(+-)V_l, organised into harmonics m = k + k'.
    """
    p = basis.params
    k_max = basis.k_max
    out = {}
    tables = {
        "down": basis.fourier_table("c_down", C_DOWN),
        "up": basis.fourier_table("c_up", C_UP),
    }
    for lead in LEADS:
        if p.gamma_lead(lead) == 0.0:
            out[lead] = _Harmonics()
            continue
        vl = p.v_lead(lead)
        ham = _Harmonics()
        keep = {s: _retained(tables[s], k_max) for s in ("down", "up")}
        dkeep = {s: _retained(dagger_table(tables[s]), k_max) for s in ("down", "up")}
        all_k = sorted({k for lst in (*keep.values(), *dkeep.values()) for k, *_ in lst})
        w_fill = {k: rates.rate_matrix(lead, "+", -basis.delta_matrix(k) + vl) for k in all_k}
        w_drain = {k: rates.rate_matrix(lead, "-", -basis.delta_matrix(k) - vl) for k in all_k}
        w_fill_c = {k: np.conj(rates.rate_matrix(lead, "+", basis.delta_matrix(k) + vl))
                    for k in all_k}
        w_drain_c = {k: np.conj(rates.rate_matrix(lead, "-", basis.delta_matrix(k) - vl))
                     for k in all_k}

        for spin in ("down", "up"):
            for k, ak, _ in keep[spin]:
                gm_k = w_drain[k] * ak
                gpc_k = w_fill_c[k] * ak
                for kp, dkp, _ in dkeep[spin]:
                    m = k + kp
                    # c(t) c^dag(t-t') rho  and  rho c(t-t') c^dag(t)
                    ham.add(m, -_kron_left(ak @ (w_fill[kp] * dkp)))
                    ham.add(m, -_kron_right(gpc_k @ dkp))
                    # c(t) rho c^dag(t-t')  and  c(t-t') rho c^dag(t)
                    ham.add(m, _kron_sandwich(ak, w_drain_c[kp] * dkp))
                    ham.add(m, _kron_sandwich(gm_k, dkp))
            for k, dk, _ in dkeep[spin]:
                gp_k = w_fill[k] * dk
                gmc_k = w_drain_c[k] * dk
                for kp, akp, _ in keep[spin]:
                    m = k + kp
                    # c^dag(t) c(t-t') rho  and  rho c^dag(t-t') c(t)
                    ham.add(m, -_kron_left(dk @ (w_drain[kp] * akp)))
                    ham.add(m, -_kron_right(gmc_k @ akp))
                    # c^dag(t) rho c(t-t')  and  c^dag(t-t') rho c(t)
                    ham.add(m, _kron_sandwich(dk, w_fill_c[kp] * akp))
                    ham.add(m, _kron_sandwich(gp_k, akp))
        out[lead] = ham
    return out


def assemble_pair(basis: FloquetBasis, rates: RateTable) -> dict:
    """Anomalous (Cooper-pair correlation) part of the generator, per lead.

    The time factors e^{2 i V_l t} carried by the pair rates shift the
    harmonic index by +-1 at symmetric bias.  Both (down,up) and (up,down)
    orderings are emitted; missing rate entries surface as KeyError rather
    than being zeroed.
    """
    p = basis.params
    k_max = basis.k_max
    a_dn = basis.fourier_table("c_down", C_DOWN)
    a_up = basis.fourier_table("c_up", C_UP)
    d_dn = dagger_table(a_dn)
    d_up = dagger_table(a_up)
    out = {}
    for lead in LEADS:
        ham = _Harmonics()
        if p.gamma_lead(lead) == 0.0:
            out[lead] = ham
            continue
        vl = p.v_lead(lead)
        # e^{2 i V_l t}: harmonic shift of the un-conjugated pair rates
        shift = 1 if vl * p.bias > 0 else -1
        if abs(2.0 * vl) != abs(p.bias):
            raise ValueError("pair drive frequency incompatible with the period")

        def w_pair(ch, k):
            return rates.rate_matrix(lead, ch, -basis.delta_matrix(k) - vl)

        def w_pair_c(ch, k):
            return np.conj(rates.rate_matrix(lead, ch, basis.delta_matrix(k) - vl))

        dn_keep = _retained(a_dn, k_max)
        up_keep = _retained(a_up, k_max)
        ddn_keep = _retained(d_dn, k_max)
        dup_keep = _retained(d_up, k_max)
        all_k = sorted({k for lst in (dn_keep, up_keep, ddn_keep, dup_keep) for k, *_ in lst})
        w1 = {k: w_pair("1", k) for k in all_k}
        w2 = {k: w_pair("2", k) for k in all_k}
        w1c = {k: w_pair_c("1", k) for k in all_k}
        w2c = {k: w_pair_c("2", k) for k in all_k}

        # sign: (down,up) ordering +, (up,down) ordering -
        for sgn, (first, second) in ((1.0, (dn_keep, up_keep)), (-1.0, (up_keep, dn_keep))):
            for k, ak, _ in first:
                for kp, akp, _ in second:
                    m = k + kp + shift
                    # c_s(t) c_s'(t-t') rho
                    ham.add(m, sgn * _kron_left(ak @ (w1[kp] * akp)))
                    # c_s(t) rho c_s'(t-t')
                    ham.add(m, -sgn * _kron_sandwich(ak, w2[kp] * akp))
            # terms with the earlier-time factor on the left of the product
            for k, ak, _ in second:
                g1_k = w1[k] * ak
                g2_k = w2[k] * ak
                for kp, akp, _ in first:
                    m = k + kp + shift
                    # c_s'(t-t') rho c_s(t)
                    ham.add(m, -sgn * _kron_sandwich(g1_k, akp))
                    # rho c_s'(t-t') c_s(t)
                    ham.add(m, sgn * _kron_right(g2_k @ akp))
        for sgn, (first, second) in ((1.0, (ddn_keep, dup_keep)), (-1.0, (dup_keep, ddn_keep))):
            for k, dk, _ in first:
                for kp, dkp, _ in second:
                    m = k + kp - shift
                    # c_s^dag(t) c_s'^dag(t-t') rho
                    ham.add(m, sgn * _kron_left(dk @ (w2c[kp] * dkp)))
                    # c_s^dag(t) rho c_s'^dag(t-t')
                    ham.add(m, -sgn * _kron_sandwich(dk, w1c[kp] * dkp))
            for k, dk, _ in second:
                g2c_k = w2c[k] * dk
                g1c_k = w1c[k] * dk
                for kp, dkp, _ in first:
                    m = k + kp - shift
                    # c_s'^dag(t-t') rho c_s^dag(t)
                    ham.add(m, -sgn * _kron_sandwich(g2c_k, dkp))
                    # rho c_s'^dag(t-t') c_s^dag(t)
                    ham.add(m, sgn * _kron_right(g1c_k @ dkp))
        out[lead] = ham
    return out


def assemble_incoherent(basis: FloquetBasis, gamma_i: float, kind: str) -> _Harmonics:
    """Engineered dissipator gamma_I (2 L rho L^dag - {L^dag L, rho}).

    kind 'loss' uses L = c_s, kind 'dephasing' uses L = c_s^dag c_s, in both
    cases summed over the two spins.  The rates have no spectral dependence.
    """
    if gamma_i < 0:
        raise ValueError("incoherent rate must be non-negative")
    ham = _Harmonics()
    if gamma_i == 0.0:
        return ham
    if kind == "loss":
        ops = (("c_down", C_DOWN), ("c_up", C_UP))
    elif kind == "dephasing":
        ops = (("n_down", N_DOWN), ("n_up", N_UP))
    else:
        raise ValueError(f"unknown incoherent kind {kind!r}")
    k_max = basis.k_max
    for name, op in ops:
        tbl = basis.fourier_table(name, op)
        dtbl = dagger_table(tbl)
        keep = _retained(tbl, k_max)
        dkeep = _retained(dtbl, k_max)
        for k, lk, _ in keep:
            for kp, ldp, _ in dkeep:
                ham.add(k + kp, 2.0 * gamma_i * _kron_sandwich(lk, ldp))
        for k, ldk, _ in dkeep:
            for kp, lkp, _ in keep:
                prod = ldk @ lkp
                ham.add(k + kp, -gamma_i * (_kron_left(prod) + _kron_right(prod)))
    return ham


def _coherent_part(basis: FloquetBasis) -> _Harmonics:
    """Quasienergy drift -i [diag(E), rho] of the co-moving frame."""
    h = np.diag(basis.quasi).astype(complex)
    ham = _Harmonics()
    ham.add(0, -1j * (_kron_left(h) - _kron_right(h)))
    return ham


@dataclass
class PeriodicGenerator:
    """Harmonic components of the vectorised generator, with per-channel parts.

    parts keys: 'coherent', 'lead_L', 'lead_R', 'loss', 'deph'.  The total
    L(t) = sum_m L_m e^{i m V t} is cached on first use.  Immutable after
    assembly by convention; distinct bias points assemble independently.
    """

    basis: FloquetBasis
    parts: dict
    channels: tuple
    _total: dict = field(default=None, repr=False)

    @property
    def harmonics(self) -> dict:
        if self._total is None:
            tot = _Harmonics()
            for part in self.parts.values():
                for m, mat in part.items():
                    tot.add(m, mat)
            self._total = {m: v for m, v in sorted(tot.items()) if np.abs(v).max() > 0.0}
        return self._total

    @property
    def max_harmonic(self) -> int:
        return max((abs(m) for m in self.harmonics), default=0)

    def stacked(self):
        """(ms, stacked 16x16 array) for fast L(t) evaluation."""
        if not self.harmonics:
            return np.zeros(0, dtype=int), np.zeros((0, 16, 16), dtype=complex)
        ms = np.array(sorted(self.harmonics))
        mats = np.stack([self.harmonics[m] for m in ms])
        return ms, mats

    def at_time(self, t: float) -> np.ndarray:
        ms, mats = self.stacked()
        phases = np.exp(1j * ms * self.basis.drive_freq * t)
        return np.tensordot(phases, mats, axes=1)

    def part_stacked(self, key: str):
        part = self.parts.get(key)
        if not part:
            return np.array([], dtype=int), np.zeros((0, 16, 16), dtype=complex)
        ms = np.array(sorted(part))
        return ms, np.stack([part[m] for m in ms])

    def norms(self) -> str:
        lines = []
        for m in sorted(self.harmonics):
            lines.append(f"harmonic {m:+d} norm {np.linalg.norm(self.harmonics[m]):.6e}")
        return "\n".join(lines)


def build_generator(basis: FloquetBasis, rates: RateTable | None = None,
                    include_leads: bool = True,
                    include_pair: bool = True,
                    include_loss: bool = True,
                    include_deph: bool = True) -> PeriodicGenerator:
    """Assemble the full generator for one parameter point."""
    p = basis.params
    if rates is None:
        rates = RateTable(p)
    parts = {"coherent": _coherent_part(basis)}
    channels = ["coherent"]
    if include_leads:
        single = assemble_single_particle(basis, rates)
        pair = assemble_pair(basis, rates) if include_pair else {ld: _Harmonics() for ld in LEADS}
        for lead in LEADS:
            ham = _Harmonics()
            for m, mat in single[lead].items():
                ham.add(m, mat)
            for m, mat in pair[lead].items():
                ham.add(m, mat)
            parts[f"lead_{lead}"] = ham
        channels += ["single", "pair"] if include_pair else ["single"]
    if include_loss and p.gamma_loss > 0:
        parts["loss"] = assemble_incoherent(basis, p.gamma_loss, "loss")
        channels.append("loss")
    if include_deph and p.gamma_deph > 0:
        parts["deph"] = assemble_incoherent(basis, p.gamma_deph, "dephasing")
        channels.append("dephasing")
    return PeriodicGenerator(basis=basis, parts=parts, channels=tuple(channels))


# ---------------------------------------------------------------------------
# static two-terminal reference (g = 0, secular)


def _sigma(i: int, j: int) -> np.ndarray:
    m = np.zeros((4, 4), dtype=complex)
    m[i, j] = 1.0
    return m


def _lindblad_superop(jump: np.ndarray, rate: float) -> np.ndarray:
    jd = jump.conj().T
    anti = jd @ jump
    return rate * (2.0 * _kron_sandwich(jump, jd)
                   - _kron_left(anti) - _kron_right(anti))


@dataclass
class StaticReference:
    """Secular Born-Markov generator of the undriven two-terminal junction."""

    params: JunctionParams
    liouvillian: np.ndarray
    lead_parts: dict

    def steady_state(self) -> np.ndarray:
        a = self.liouvillian.copy()
        # replace the first row with the trace functional
        a[0, :] = 0.0
        a[0, [0, 5, 10, 15]] = 1.0
        b = np.zeros(16, dtype=complex)
        b[0] = 1.0
        sol, *_ = np.linalg.lstsq(a, b, rcond=None)
        rho = sol.reshape(4, 4)
        return 0.5 * (rho + rho.conj().T)

    def lead_current(self, lead: str, rho: np.ndarray) -> float:
        """dN_lead/dt = -Tr[N  D_lead(rho)] at the steady state."""
        from .model import NUMBER_OP

        drho = (self.lead_parts[lead] @ rho.reshape(16)).reshape(4, 4)
        return -float(np.real(np.trace(NUMBER_OP @ drho)))


def build_static_reference(p: JunctionParams, rates: RateTable | None = None) -> StaticReference:
    """Secular master-equation generator for g = 0 in the bare basis.

    The time-dependent pair (proximity) terms are dropped: they oscillate at
    2 V_l and are secular-suppressed for V >> gamma, which is the regime where
    this reference serves as an oracle.
    """
    if p.g_L != 0.0 or p.g_R != 0.0:
        raise ValueError("static reference requires g_l = 0")
    if rates is None:
        rates = RateTable(p)
    w, u = p.omega, p.u_int
    h = np.diag([0.0, w, w, 2.0 * w + u]).astype(complex)
    lead_parts = {}
    total = np.zeros((16, 16), dtype=complex)
    for lead in LEADS:
        vl = p.v_lead(lead)
        part = np.zeros((16, 16), dtype=complex)
        # level shifts (diagonal, enter the commutator)
        shift_fill_0 = rates.omega(lead, "+", -w + vl).real
        shift_drain_0 = rates.omega(lead, "-", w - vl).real
        shift_fill_d = rates.omega(lead, "+", -u - w + vl).real
        shift_drain_d = rates.omega(lead, "-", u + w - vl).real
        for s in (DOWN, UP):
            h[EMPTY, EMPTY] += shift_fill_0
            h[s, s] += shift_drain_0 + shift_fill_d
            h[DOUBLE, DOUBLE] += shift_drain_d
        # dissipators, one jump per spin and direction
        for s in (DOWN, UP):
            part += _lindblad_superop(_sigma(EMPTY, s), rates.gamma(lead, "-", w - vl).real)
            part += _lindblad_superop(_sigma(s, EMPTY), rates.gamma(lead, "+", -w + vl).real)
            part += _lindblad_superop(_sigma(s, DOUBLE), rates.gamma(lead, "-", u + w - vl).real)
            part += _lindblad_superop(_sigma(DOUBLE, s), rates.gamma(lead, "+", -u - w + vl).real)
        lead_parts[lead] = part
        total += part
    total += -1j * (_kron_left(h) - _kron_right(h))
    return StaticReference(params=p, liouvillian=total, lead_parts=lead_parts)
