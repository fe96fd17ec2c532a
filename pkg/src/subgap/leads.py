"""Bath-side scalars: superconducting DOS, Fermi factors, decay rates, shifts.

All complex rates follow the half-Fourier-transform convention
Gamma(E) = gamma(E) + i Omega(E), where gamma is the delta-function (decay)
part and Omega the principal-value (shift) part.  The pair channels satisfy
gamma_1(E) = -gamma_2(-E) and Omega_1(E) = Omega_2(-E) by construction.

The divergences are regularised as in the production runs: the DOS
denominator gets +epsilon^2 and the PV kernels become Re[1/(x + i epsilon)],
with a single epsilon for both, and the shift integrals are cut off at
|omega| = Omega_f.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .model import JunctionParams

CHANNELS = ("+", "-", "1", "2")


def dos(energy, delta: float, epsilon: float):
    """Regularised BCS density of states |E| / (sqrt(E^2 - Delta^2) + eps^2)."""
    e = np.asarray(energy, dtype=float)
    out = np.zeros_like(e)
    mask = np.abs(e) >= delta
    em = np.abs(e[mask])
    out[mask] = em / (np.sqrt(em * em - delta * delta) + epsilon * epsilon)
    if np.isscalar(energy):
        return float(out)
    return out


def fermi(energy, temperature: float):
    """Fermi occupation 1/(1 + e^{E/T}); step with value 1/2 at E=0 when T=0."""
    e = np.asarray(energy, dtype=float)
    if temperature == 0.0:
        out = np.where(e < 0.0, 1.0, np.where(e > 0.0, 0.0, 0.5))
    else:
        # expit(-E/T) is overflow-safe
        from scipy.special import expit

        out = expit(-e / temperature)
    if np.isscalar(energy):
        return float(out)
    return out


def coherence_product(omega_qp, delta: float, phi: float):
    """u*(w) v*(w) = e^{i phi} Delta / (2 w) for quasiparticle energy w >= Delta."""
    w = np.asarray(omega_qp, dtype=float)
    if np.any(w < delta):
        raise ValueError("coherence_product requires omega_qp >= delta")
    out = np.exp(1j * phi) * delta / (2.0 * w)
    if np.isscalar(omega_qp):
        return complex(out)
    return out


# ---------------------------------------------------------------------------
# shift integrals


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to converge for a shift integral."""

    def __init__(self, argument: float, detail: str):
        super().__init__(f"shift quadrature did not converge at E={argument!r}: {detail}")
        self.argument = argument


def _pv_kernel(x, eps):
    return x / (x * x + eps * eps)


_GL_CACHE: dict = {}


def _gl_nodes(n: int):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = leggauss(n)
    return _GL_CACHE[n]


def _gl_eval(f, a: float, b: float, n: int) -> float:
    x, w = _gl_nodes(n)
    half = 0.5 * (b - a)
    vals = f(a + half * (x + 1.0))
    return half * float(np.dot(w, vals))


def _adaptive_panel(f, a: float, b: float, tol: float, arg: float,
                    max_depth: int = 48) -> float:
    """Adaptive bisection with vectorised 16/32-point Gauss-Legendre panels."""
    total = 0.0
    stack = [(a, b, _gl_eval(f, a, b, 16), 0)]
    while stack:
        lo, hi, coarse, depth = stack.pop()
        fine = _gl_eval(f, lo, hi, 32)
        if not math.isfinite(fine):
            raise QuadratureError(arg, f"non-finite value on [{lo},{hi}]")
        if abs(fine - coarse) <= max(tol, 1e-15) or hi - lo < 1e-13 * max(1.0, abs(lo)):
            total += fine
            continue
        if depth >= max_depth:
            raise QuadratureError(arg, f"max refinement depth on [{lo},{hi}]")
        mid = 0.5 * (lo + hi)
        stack.append((lo, mid, _gl_eval(f, lo, mid, 16), depth + 1))
        stack.append((mid, hi, _gl_eval(f, mid, hi, 16), depth + 1))
    return total


def _quad_panels(f, lo: float, hi: float, breaks, arg: float,
                 tol: float = 1e-10) -> float:
    """Integrate f over [lo, hi] with forced panel breaks at singular candidates."""
    pts = sorted({float(b) for b in breaks if lo < b < hi})
    total = 0.0
    edges = [lo, *pts, hi]
    for a, b in zip(edges[:-1], edges[1:]):
        total += _adaptive_panel(f, a, b, tol, arg)
    return total


def _edge_breaks(e_arg: float, delta: float, epsilon: float, s_max: float):
    """Panel breaks in the s = sqrt(w^2 - Delta^2) variable.

    The kernel pole w = +-|E| maps to s = sqrt(E^2 - Delta^2); the regularised
    edge weight s/(s + eps^2) turns over at s ~ eps^2.
    """
    breaks = [epsilon ** 2, 10.0 * epsilon ** 2]
    if abs(e_arg) > delta:
        breaks.append(math.sqrt(e_arg * e_arg - delta * delta))
    return [b for b in breaks if 0.0 < b < s_max]


def shift_single(e_arg: float, delta: float, temperature: float, epsilon: float,
                 cutoff: float) -> float:
    """Normal-channel level shift (per unit gamma_l).

    Integral of D(w) n(w) Re[1/(E + w + i eps)] / pi over [-Omega_f, Omega_f];
    identical for the '+' and '-' channels, which differ only in the argument.
    Evaluated in the variable s = sqrt(w^2 - Delta^2), where the regularised
    DOS weight becomes D(w) dw = s/(s + eps^2) ds exactly.
    """
    eps = epsilon
    s_max = math.sqrt(cutoff * cutoff - delta * delta)
    breaks = _edge_breaks(e_arg, delta, eps, s_max)

    def branch(sign):
        def integrand(s):
            w = sign * np.sqrt(delta * delta + s * s)
            return (s / (s + eps * eps)) * fermi(w, temperature) * _pv_kernel(e_arg + w, eps)
        return integrand

    total = _quad_panels(branch(-1.0), 0.0, s_max, breaks, e_arg)
    if temperature > 0.0:
        total += _quad_panels(branch(+1.0), 0.0, s_max, breaks, e_arg)
    return total / math.pi


def shift_pair(e_arg: float, delta: float, temperature: float, epsilon: float,
               cutoff: float, phi: float) -> complex:
    """Pair-channel level shift (per unit gamma_l), channel 1 convention.

    2/pi * int_Delta^Omega_f D(w) u*v*(w) Re[-n(w)/(E+w+i eps)
                                             + (1-n(w))/(E-w+i eps)] dw,
    in the same edge-resolving variable as shift_single.  Channel 2 follows
    from Omega_2(E) = Omega_1(-E).
    """
    eps = epsilon
    s_max = math.sqrt(cutoff * cutoff - delta * delta)
    breaks = _edge_breaks(e_arg, delta, eps, s_max)

    def integrand(s):
        w = np.sqrt(delta * delta + s * s)
        weight = (s / (s + eps * eps)) * delta / (2.0 * w)
        n = fermi(w, temperature)
        return weight * (-n * _pv_kernel(e_arg + w, eps)
                         + (1.0 - n) * _pv_kernel(e_arg - w, eps))

    total = _quad_panels(integrand, 0.0, s_max, breaks, e_arg)
    return (2.0 / math.pi) * total * np.exp(1j * phi)


# ---------------------------------------------------------------------------
# decay rates (closed form)


def gamma_single(gamma_l: float, e_arg: float, delta: float, temperature: float,
                 epsilon: float) -> float:
    """gamma_{l+-}(E) = gamma_l D(E) [1 - n(E)]; identical for both channels."""
    return gamma_l * dos(e_arg, delta, epsilon) * (1.0 - fermi(e_arg, temperature))


def gamma_pair(gamma_l: float, e_arg: float, delta: float, temperature: float,
               epsilon: float, phi: float) -> complex:
    """gamma_{l1}(E) = 2 gamma_l D(E) u*v*(|E|) [1 - n(E)] sign(E)."""
    if abs(e_arg) < delta:
        return 0.0j
    sign = 1.0 if e_arg > 0 else -1.0 if e_arg < 0 else 0.0
    coh = coherence_product(abs(e_arg), delta, phi)
    return 2.0 * gamma_l * dos(e_arg, delta, epsilon) * coh \
        * (1.0 - fermi(e_arg, temperature)) * sign


# ---------------------------------------------------------------------------
# memoised per-junction rate table

_QUANTUM = 1e-12  # argument quantisation for memoisation


@dataclass
class RateTable:
    """Complex rates Gamma = gamma + i Omega for both leads and all channels.

    Entries are memoised per (lead, channel, E) with E quantised to 1e-12.
    Construction may be called concurrently: inserts of identical keys are
    idempotent, so a plain dict under the GIL is race-free.
    """

    params: JunctionParams
    entries: dict = field(default_factory=dict)

    def _key(self, lead: str, channel: str, e_arg: float):
        return lead, channel, round(e_arg / _QUANTUM)

    def gamma(self, lead: str, channel: str, e_arg: float) -> complex:
        """Decay (delta-function) part of the rate."""
        p = self.params
        gl = p.gamma_lead(lead)
        d = p.delta_lead(lead)
        t = p.temp_lead(lead)
        eps = p.dos_epsilon
        if channel in ("+", "-"):
            return complex(gamma_single(gl, e_arg, d, t, eps))
        if channel == "1":
            return gamma_pair(gl, e_arg, d, t, eps, p.phi_lead(lead))
        if channel == "2":
            return -gamma_pair(gl, -e_arg, d, t, eps, p.phi_lead(lead))
        raise KeyError(channel)

    def omega(self, lead: str, channel: str, e_arg: float) -> complex:
        """Shift (principal-value) part of the rate."""
        p = self.params
        gl = p.gamma_lead(lead)
        if gl == 0.0:
            return 0.0j
        d = p.delta_lead(lead)
        t = p.temp_lead(lead)
        eps = p.dos_epsilon
        if channel in ("+", "-"):
            return complex(gl * shift_single(e_arg, d, t, eps, p.cutoff))
        if channel == "1":
            return gl * shift_pair(e_arg, d, t, eps, p.cutoff, p.phi_lead(lead))
        if channel == "2":
            return gl * shift_pair(-e_arg, d, t, eps, p.cutoff, p.phi_lead(lead))
        raise KeyError(channel)

    def rate(self, lead: str, channel: str, e_arg: float) -> complex:
        """Full complex rate Gamma = gamma + i Omega, memoised."""
        key = self._key(lead, channel, e_arg)
        hit = self.entries.get(key)
        if hit is None:
            hit = self.gamma(lead, channel, e_arg) + 1j * self.omega(lead, channel, e_arg)
            self.entries[key] = hit
        return hit

    def rate_matrix(self, lead: str, channel: str, args: np.ndarray) -> np.ndarray:
        """Vectorised lookup: complex rates for an array of arguments."""
        flat = np.asarray(args, dtype=float).ravel()
        out = np.array([self.rate(lead, channel, float(e)) for e in flat])
        return out.reshape(np.shape(args))

    def to_csv(self, path: str, lead: str, e_grid: np.ndarray) -> None:
        """Dump rate functions vs E for plotting/debugging."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("E,gamma_s,omega_s,re_gamma_1,im_gamma_1,re_omega_1,im_omega_1\n")
            for e in e_grid:
                gs = self.gamma(lead, "+", float(e)).real
                os_ = self.omega(lead, "+", float(e)).real
                g1 = self.gamma(lead, "1", float(e))
                o1 = self.omega(lead, "1", float(e))
                fh.write(f"{e:.12g},{gs:.12g},{os_:.12g},{g1.real:.12g},"
                         f"{g1.imag:.12g},{o1.real:.12g},{o1.imag:.12g}\n")
