"""Laboratory inputs and the derived rotating-frame parameters.

Unit convention
---------------
Frequencies in :class:`PhysicalParams` are *ordinary* frequencies in Hz,
i.e. the ``X/2pi`` numbers quoted for experiments. Everything downstream
(:class:`EffectiveParams`, :class:`DriveParams`, the Fock engine and the
steady-state solver) works in angular units, rad/s. ``hbar = 1`` everywhere
except in :func:`thermal_occupation` and :func:`convert_raw_anharmonicity`,
where SI inputs enter.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

from scipy.constants import hbar, k as k_B

TWO_PI = 2.0 * math.pi

#: Default threshold for max(|g|, |v|, |w|) / Omega below which the
#: second-order averaging is considered trustworthy.
AVERAGING_THRESHOLD = 0.1


class PerturbativeRegimeWarning(UserWarning):
    """Couplings are not small compared to the mechanical frequency."""


def thermal_occupation(mech_freq: float, temperature: float) -> float:
    """Bose-Einstein occupation of a bath mode at ``mech_freq`` (Hz) and ``temperature`` (K)."""
    if mech_freq <= 0:
        raise ValueError(f"mechanical frequency must be positive, got {mech_freq}")
    if temperature < 0:
        raise ValueError(f"temperature must be nonnegative, got {temperature}")
    if temperature == 0:
        return 0.0
    x = hbar * TWO_PI * mech_freq / (k_B * temperature)
    return 1.0 / math.expm1(x)


@dataclass(frozen=True)
class RawAnharmonicity:
    """Potential-energy anharmonic coefficients before zero-point scaling.

    ``v0`` is in J/m^3, ``w0`` in J/m^4 and ``mass`` in kg.
    """

    v0: float
    w0: float
    mass: float

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")


def convert_raw_anharmonicity(raw: RawAnharmonicity, mech_freq: float) -> tuple[float, float]:
    """Scale potential coefficients by the zero-point length.

    Returns ``(v, w)`` as ordinary frequencies (Hz), i.e. energy / h, using
    ``x_zpf**2 = hbar / (2 m Omega)`` with ``Omega = 2 pi mech_freq``.
    """
    if not raw.mass > 0:
        raise ValueError(f"mass must be positive, got {raw.mass}")
    if not mech_freq > 0:
        raise ValueError(f"mechanical frequency must be positive, got {mech_freq}")
    x2 = hbar / (2.0 * raw.mass * TWO_PI * mech_freq)
    h = TWO_PI * hbar
    v = raw.v0 * x2**1.5 / h
    w = raw.w0 * x2**2 / h
    return v, w


@dataclass(frozen=True)
class PhysicalParams:
    """Laboratory-frame parameters, ordinary frequencies in Hz.

    Exactly one of ``bath_temp`` (K) and ``mean_occupation`` must be given.
    """

    mech_freq: float
    coupling: float = 0.0
    cubic_anharm: float = 0.0
    quartic_anharm: float = 0.0
    cavity_decay: float = 0.0
    mech_decay: float = 0.0
    cavity_freq: float | None = None
    bath_temp: float | None = None
    mean_occupation: float | None = None

    def __post_init__(self):
        if not self.mech_freq > 0:
            raise ValueError(f"mech_freq must be positive, got {self.mech_freq}")
        if self.cavity_decay < 0 or self.mech_decay < 0:
            raise ValueError("decay rates must be nonnegative")
        if (self.bath_temp is None) == (self.mean_occupation is None):
            raise ValueError("supply exactly one of bath_temp or mean_occupation")
        if self.bath_temp is not None and self.bath_temp < 0:
            raise ValueError(f"bath_temp must be nonnegative, got {self.bath_temp}")
        if self.mean_occupation is not None and self.mean_occupation < 0:
            raise ValueError(f"mean_occupation must be nonnegative, got {self.mean_occupation}")

    @classmethod
    def from_angular(cls, mech_freq, coupling=0.0, cubic_anharm=0.0, quartic_anharm=0.0,
                     cavity_decay=0.0, mech_decay=0.0, mean_occupation=0.0, **kw):
        """Build from angular rates (rad/s); handy for dimensionless runs with Omega = 1."""
        f = 1.0 / TWO_PI
        return cls(mech_freq=mech_freq * f, coupling=coupling * f,
                   cubic_anharm=cubic_anharm * f, quartic_anharm=quartic_anharm * f,
                   cavity_decay=cavity_decay * f, mech_decay=mech_decay * f,
                   mean_occupation=mean_occupation, **kw)

    def n_bar(self) -> float:
        if self.mean_occupation is not None:
            return float(self.mean_occupation)
        return thermal_occupation(self.mech_freq, self.bath_temp)

    def angular(self) -> dict[str, float]:
        """Omega, g, v, w, kappa, gamma in rad/s."""
        return {
            "Omega": TWO_PI * self.mech_freq,
            "g": TWO_PI * self.coupling,
            "v": TWO_PI * self.cubic_anharm,
            "w": TWO_PI * self.quartic_anharm,
            "kappa": TWO_PI * self.cavity_decay,
            "gamma": TWO_PI * self.mech_decay,
        }

    def smallness(self) -> float:
        return max(abs(self.coupling), abs(self.cubic_anharm), abs(self.quartic_anharm)) / self.mech_freq

    def valid_averaging(self, threshold: float = AVERAGING_THRESHOLD) -> bool:
        return self.smallness() < threshold


@dataclass(frozen=True)
class DriveParams:
    """Drive amplitudes and detunings, all angular (rad/s).

    ``cavity_detuning`` is Delta = omega_c - omega_d and ``mech_detuning`` is
    delta = Omega - Omega_d.
    """

    cavity_amp: float = 0.0
    mech_amp: float = 0.0
    cavity_detuning: float = 0.0
    mech_detuning: float = 0.0

    def __post_init__(self):
        if self.cavity_amp < 0 or self.mech_amp < 0:
            raise ValueError("drive amplitudes must be nonnegative")

    @classmethod
    def from_ratios(cls, p: PhysicalParams, eps_over_kappa=0.0, eta_over_gamma=0.0,
                    Delta_over_Omega=0.0, delta_over_Omega=0.0) -> DriveParams:
        """Drives given as eps/kappa, eta/gamma and detunings as fractions of Omega."""
        ang = p.angular()
        return cls(
            cavity_amp=eps_over_kappa * ang["kappa"],
            mech_amp=eta_over_gamma * ang["gamma"],
            cavity_detuning=Delta_over_Omega * ang["Omega"],
            mech_detuning=delta_over_Omega * ang["Omega"],
        )


@dataclass(frozen=True)
class EffectiveParams:
    """Rotating-frame coefficients of the effective Hamiltonian (rad/s).

    The detunings the shifted frequencies were built from are kept so a
    sweep can move one of them without re-deriving the rest.
    """

    omega_c_tilde: float
    Omega_tilde: float
    chi_a: float
    chi_b: float
    chi_ab: float
    n_bar: float = 0.0
    cavity_detuning: float = 0.0
    mech_detuning: float = 0.0

    def with_mech_detuning(self, delta: float) -> EffectiveParams:
        return replace(self, Omega_tilde=self.Omega_tilde + (delta - self.mech_detuning),
                       mech_detuning=delta)

    def with_cavity_detuning(self, Delta: float) -> EffectiveParams:
        return replace(self, omega_c_tilde=self.omega_c_tilde + (Delta - self.cavity_detuning),
                       cavity_detuning=Delta)

    def with_chi_ab(self, chi_ab: float) -> EffectiveParams:
        return replace(self, chi_ab=chi_ab)


def derive_effective(p: PhysicalParams, d: DriveParams | None = None,
                     threshold: float = AVERAGING_THRESHOLD) -> EffectiveParams:
    """Shifted frequencies and Kerr coefficients from laboratory inputs."""
    d = d or DriveParams()
    ang = p.angular()
    Omega, g, v, w = ang["Omega"], ang["g"], ang["v"], ang["w"]
    if Omega == 0:
        raise ZeroDivisionError("mechanical frequency is zero")
    if not p.valid_averaging(threshold):
        warnings.warn(
            f"max(|g|,|v|,|w|)/Omega = {p.smallness():.3g} exceeds {threshold}; "
            "second-order averaging may be inaccurate",
            PerturbativeRegimeWarning, stacklevel=2)
    v2 = 5.0 * v * v / (6.0 * Omega)
    return EffectiveParams(
        omega_c_tilde=d.cavity_detuning + g * v / Omega,
        Omega_tilde=d.mech_detuning - v2 + w,
        chi_a=g * g / Omega,
        chi_b=v2 - w,
        chi_ab=2.0 * g * v / Omega,
        n_bar=p.n_bar(),
        cavity_detuning=d.cavity_detuning,
        mech_detuning=d.mech_detuning,
    )


def graphene_params() -> tuple[PhysicalParams, DriveParams]:
    """Graphene resonator coupled to a microwave cavity, with drives set for bistability."""
    p = PhysicalParams(
        mech_freq=36.2e6, coupling=0.83, cubic_anharm=1.0, quartic_anharm=0.05,
        cavity_decay=242e3, mech_decay=228.0, cavity_freq=5.9e9, bath_temp=14e-3,
    )
    d = DriveParams.from_ratios(p, eps_over_kappa=8.39e4, Delta_over_Omega=1e-2,
                                delta_over_Omega=-1e-5)
    return p, d


#: Unit for the dimensionless cross-Kerr strength chi_ab_tilde, as chi_ab/2pi in Hz.
CHI_AB_UNIT_HZ = 4.59e-8
#: Cavity occupation held fixed in the bistability sweeps.
GRAPHENE_N_A = 2.83e9
