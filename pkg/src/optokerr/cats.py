"""Kerr cats, the reduced cavity state under self- and cross-Kerr evolution,
revivals, and small-time coherence estimates.

Conventions: the closed-system evolution is generated by
``H1 = -chi_a n_a^2 + chi_ab n_a n_b - chi_b n_b^2`` (rad/s), so a single-mode
Kerr phase is ``theta = chi t`` and number state ``|n>`` picks up ``exp(i theta n^2)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import sqrtm

from .fock import TOP_LEVEL_TOL, coherent_amplitudes, default_truncation, fidelity_pure, purity
from .params import PhysicalParams


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class CoherentSpec:
    alpha: complex
    beta: complex


@dataclass(frozen=True)
class CoherenceTimes:
    tau_a: float
    tau_b: float
    rate_ratio_a: float  # tau_a^-1 / kappa
    rate_ratio_b: float  # tau_b^-1 / gamma


def _check_truncation(amps: np.ndarray, what: str) -> bool:
    top = abs(amps[-1]) ** 2
    if top >= TOP_LEVEL_TOL:
        warnings.warn(f"{what}: top-level population {top:.2e} >= {TOP_LEVEL_TOL}",
                      TruncationWarning, stacklevel=3)
        return False
    return True


def kerr_cat(amp: complex, theta: float, dim: int | None = None) -> np.ndarray:
    """Coherent state with Kerr phases exp(i theta n^2) applied (normalised)."""
    dim = dim or default_truncation(amp)
    c = coherent_amplitudes(amp, dim)
    _check_truncation(c, "kerr_cat")
    n = np.arange(dim)
    psi = np.exp(1j * theta * (n * n).astype(float)) * c
    return psi / np.linalg.norm(psi)


def yurke_stoler(amp: complex, dim: int | None = None) -> np.ndarray:
    """[e^{i pi/4}|amp> + e^{-i pi/4}|-amp>] / sqrt(2), normalised on the truncation."""
    dim = dim or default_truncation(amp)
    psi = (np.exp(1j * math.pi / 4) * coherent_amplitudes(amp, dim)
           + np.exp(-1j * math.pi / 4) * coherent_amplitudes(-amp, dim)) / math.sqrt(2)
    return psi / np.linalg.norm(psi)


def coherent(amp: complex, dim: int | None = None) -> np.ndarray:
    dim = dim or default_truncation(amp)
    c = coherent_amplitudes(amp, dim)
    return c / np.linalg.norm(c)


def reduced_cavity_dm(spec: CoherentSpec, t: float, chi_a: float, chi_ab: float,
                      overlap: str = "beta2", dim: int | None = None) -> np.ndarray:
    """Cavity density matrix after tracing out the mechanics.

    rho[n, m] = c_n c_m^* exp(i chi_a (n^2 - m^2) t) exp(X (exp(-i chi_ab (n - m) t) - 1))

    with ``X = |beta|^2`` (``overlap="beta2"``, the partial-trace result) or
    ``X = |alpha|^2`` (``overlap="alpha2"``).
    """
    if overlap not in ("beta2", "alpha2"):
        raise ValueError("overlap must be 'beta2' or 'alpha2'")
    dim = dim or default_truncation(spec.alpha)
    c = coherent_amplitudes(spec.alpha, dim)
    _check_truncation(c, "reduced_cavity_dm")
    c = c / np.linalg.norm(c)
    X = abs(spec.beta) ** 2 if overlap == "beta2" else abs(spec.alpha) ** 2
    n = np.arange(dim, dtype=float)
    kerr = np.exp(1j * chi_a * n**2 * t)
    diff = n[:, None] - n[None, :]
    cross = np.exp(X * (np.exp(-1j * chi_ab * diff * t) - 1.0))
    v = c * kerr
    return np.outer(v, v.conj()) * cross


def uhlmann_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    s = sqrtm(rho)
    inner = sqrtm(s @ sigma @ s)
    return float(np.real(np.trace(inner)) ** 2)


@dataclass(frozen=True)
class RevivalReport:
    time: float
    fidelity_plus_alpha: float
    fidelity_minus_alpha: float
    fidelity_ys_cat: float
    purity: float
    mech_phase: float | None = None      # chi_b t mod 2pi at the revival time
    mech_fidelity: float | None = None   # |<beta|Kerr(beta)>|^2 at the revival time


def revival_analysis(spec: CoherentSpec, ratio: float, chi_ab: float = 1.0,
                     chi_b: float | None = None, dim: int | None = None) -> RevivalReport:
    """Cavity state at t = 2pi/chi_ab for chi_a = ratio * chi_ab.

    If ``chi_b`` is given, also reports the residual Kerr phase of the
    mechanical factor and its overlap with the initial |beta>.
    """
    if chi_ab == 0:
        raise ValueError("chi_ab must be nonzero")
    dim = dim or default_truncation(spec.alpha)
    t = 2 * math.pi / chi_ab
    rho = reduced_cavity_dm(spec, t, ratio * chi_ab, chi_ab, dim=dim)
    mech_phase = mech_fid = None
    if chi_b is not None:
        mech_phase = float((chi_b * t) % (2 * math.pi))
        db = default_truncation(spec.beta)
        mech_fid = fidelity_pure(coherent(spec.beta, db), kerr_cat(spec.beta, chi_b * t, db))
    return RevivalReport(
        time=t,
        fidelity_plus_alpha=fidelity_pure(coherent(spec.alpha, dim), rho),
        fidelity_minus_alpha=fidelity_pure(coherent(-spec.alpha, dim), rho),
        fidelity_ys_cat=fidelity_pure(yurke_stoler(spec.alpha, dim), rho),
        purity=purity(rho),
        mech_phase=mech_phase,
        mech_fidelity=mech_fid,
    )


def purity_curve(spec: CoherentSpec, chi_a: float, chi_ab: float, times, dim=None) -> np.ndarray:
    return np.array([purity(reduced_cavity_dm(spec, t, chi_a, chi_ab, dim=dim)) for t in times])


def coherence_times(p: PhysicalParams, spec: CoherentSpec) -> CoherenceTimes:
    """Small-time decoherence times of cavity and mechanical cat states (s)."""
    ang = p.angular()
    kappa, gamma = ang["kappa"], ang["gamma"]
    if kappa <= 0 or gamma <= 0:
        raise ValueError("coherence times need kappa > 0 and gamma > 0")
    na, nb = abs(spec.alpha) ** 2, abs(spec.beta) ** 2
    n_bar = p.n_bar()
    rate_a = 2.0 * kappa * na
    rate_b = 2.0 * gamma * (2.0 * n_bar + 1.0) * nb
    return CoherenceTimes(
        tau_a=math.inf if rate_a == 0 else 1.0 / rate_a,
        tau_b=math.inf if rate_b == 0 else 1.0 / rate_b,
        rate_ratio_a=rate_a / kappa,
        rate_ratio_b=rate_b / gamma,
    )

