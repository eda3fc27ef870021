"""Dense two-mode truncated Fock-space engine.

Basis ordering is ``|n_a> (x) |n_b>`` with ``n_b`` varying fastest, so
single-mode operators are embedded with ``np.kron(A, I_b)`` and
``np.kron(I_a, B)``.
"""

from __future__ import annotations

import csv
import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm
from scipy.special import gammaln

from .params import DriveParams, EffectiveParams, PhysicalParams
from .symalg import OperatorPolynomial

log = logging.getLogger(__name__)

DIM_CAP = 4096
TOP_LEVEL_TOL = 1e-8


class TruncationError(ValueError):
    pass


class NormDriftError(RuntimeError):
    pass


class PositivityError(RuntimeError):
    pass


@dataclass(frozen=True)
class FockSpace:
    dim_a: int
    dim_b: int
    cap: int = DIM_CAP

    def __post_init__(self):
        if self.dim_a < 2 or self.dim_b < 2:
            raise TruncationError(f"each mode needs at least 2 levels, got {self.dim_a}x{self.dim_b}")
        if self.dim_a * self.dim_b > self.cap:
            raise TruncationError(
                f"total dimension {self.dim_a * self.dim_b} exceeds cap {self.cap}")

    @property
    def dim(self) -> int:
        return self.dim_a * self.dim_b


def default_truncation(amp: complex) -> int:
    """Poisson-tail heuristic ceil(|amp|^2 + 5|amp| + 10)."""
    n = abs(amp) ** 2
    return int(math.ceil(n + 5.0 * math.sqrt(n) + 10))


@dataclass(frozen=True)
class LindbladSpec:
    kappa: float = 0.0
    gamma: float = 0.0
    n_bar: float = 0.0

    def __post_init__(self):
        if self.kappa < 0 or self.gamma < 0 or self.n_bar < 0:
            raise ValueError("kappa, gamma and n_bar must be nonnegative")


@dataclass(frozen=True)
class ModeOperators:
    a: np.ndarray
    ad: np.ndarray
    b: np.ndarray
    bd: np.ndarray
    n_a: np.ndarray
    n_b: np.ndarray


def ladder(dim: int) -> np.ndarray:
    """Truncated annihilation operator, <n-1|a|n> = sqrt(n)."""
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


@functools.lru_cache(maxsize=32)
def build_mode_operators(sp: FockSpace) -> ModeOperators:
    Ia, Ib = np.eye(sp.dim_a), np.eye(sp.dim_b)
    a = np.kron(ladder(sp.dim_a), Ib)
    b = np.kron(Ia, ladder(sp.dim_b))
    ops = ModeOperators(a=a, ad=a.conj().T, b=b, bd=b.conj().T,
                        n_a=a.conj().T @ a, n_b=b.conj().T @ b)
    for m in (ops.a, ops.ad, ops.b, ops.bd, ops.n_a, ops.n_b):
        m.setflags(write=False)
    return ops


def number_diagonals(sp: FockSpace) -> tuple[np.ndarray, np.ndarray]:
    """n_a and n_b on the diagonal of the product basis."""
    na = np.repeat(np.arange(sp.dim_a, dtype=float), sp.dim_b)
    nb = np.tile(np.arange(sp.dim_b, dtype=float), sp.dim_a)
    return na, nb


# ---------------------------------------------------------------------------
# Hamiltonians
# ---------------------------------------------------------------------------

def build_effective_hamiltonian(ep: EffectiveParams, d: DriveParams | None, sp: FockSpace
                                ) -> np.ndarray:
    """Rotating-frame Kerr / cross-Kerr Hamiltonian with coherent drives."""
    na, nb = number_diagonals(sp)
    diag = (ep.omega_c_tilde * na + ep.Omega_tilde * nb - ep.chi_a * na**2
            + ep.chi_ab * na * nb - ep.chi_b * nb**2)
    H = np.diag(diag).astype(complex)
    if d is not None and (d.cavity_amp or d.mech_amp):
        ops = build_mode_operators(sp)
        H = H + 1j * d.cavity_amp * (ops.ad - ops.a) + 1j * d.mech_amp * (ops.bd - ops.b)
    return H


def _projected_powers(x: np.ndarray, n_max: int, dim: int) -> list[np.ndarray]:
    """P x^n P for n = 0..n_max, computed in a padded space then cut to ``dim``."""
    out, cur = [], np.eye(x.shape[0], dtype=complex)
    for _ in range(n_max + 1):
        out.append(cur[:dim, :dim].copy())
        cur = cur @ x
    return out


def interaction_components(p: PhysicalParams, sp: FockSpace) -> dict[int, np.ndarray]:
    """Harmonic components H_k with H_int(t) = sum_k H_k exp(i k Omega t).

    Matrix elements are exact projections of the untruncated operators.
    """
    ang = p.angular()
    g, v, w = ang["g"], ang["v"], ang["w"]
    pad = sp.dim_b + 4
    bl = ladder(pad)
    bdl = bl.conj().T
    # expand (bd e + b e*)^n by collecting words by their net harmonic
    comps_b: dict[int, dict[int, np.ndarray]] = {1: {1: bdl, -1: bl}}
    for n in (2, 3, 4):
        prev = comps_b[n - 1]
        cur: dict[int, np.ndarray] = {}
        for k, m in prev.items():
            for k1, op in ((1, bdl), (-1, bl)):
                cur[k + k1] = cur.get(k + k1, 0) + m @ op
        comps_b[n] = cur
    Ia = np.eye(sp.dim_a)
    na = np.diag(np.arange(sp.dim_a, dtype=float))
    out: dict[int, np.ndarray] = {}

    def add(k, m):
        out[k] = out.get(k, 0) + m

    for k, m in comps_b[1].items():
        add(k, -g * np.kron(na, m[: sp.dim_b, : sp.dim_b]))
    for k, m in comps_b[3].items():
        add(k, (v / 6.0) * np.kron(Ia, m[: sp.dim_b, : sp.dim_b]))
    for k, m in comps_b[4].items():
        add(k, (w / 6.0) * np.kron(Ia, m[: sp.dim_b, : sp.dim_b]))
    return {k: np.asarray(m, dtype=complex) for k, m in out.items()}


def build_interaction_hamiltonian(t: float, p: PhysicalParams, sp: FockSpace) -> np.ndarray:
    Omega = p.angular()["Omega"]
    comps = interaction_components(p, sp)
    H = np.zeros((sp.dim, sp.dim), dtype=complex)
    for k, m in comps.items():
        H += m * np.exp(1j * k * Omega * t)
    return H


def time_dependent(components: dict[int, np.ndarray], Omega: float) -> Callable[[float], np.ndarray]:
    ks = sorted(components)
    stack = np.stack([components[k] for k in ks])
    kk = np.array(ks, dtype=float)

    def H(t):
        return np.tensordot(np.exp(1j * kk * Omega * t), stack, axes=1)

    H.max_harmonic = int(max(abs(k) for k in ks)) if ks else 0
    H.Omega = Omega
    return H


def poly_to_matrix(P: OperatorPolynomial, sp: FockSpace, omega_t: float = 0.0,
                   symbols: dict | None = None) -> np.ndarray:
    """Render a normal-ordered polynomial on the truncated space at phase Omega*t."""
    if P.is_exact:
        P = P.evaluate(**(symbols or {}))
    ops = build_mode_operators(sp)
    H = np.zeros((sp.dim, sp.dim), dtype=complex)
    mp = np.linalg.matrix_power
    for (p, q, r, s, k), c in P.terms.items():
        m = mp(ops.ad, p) @ mp(ops.a, q) @ mp(ops.bd, r) @ mp(ops.b, s)
        H += complex(c) * np.exp(1j * k * omega_t) * m
    return H


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------

def coherent_amplitudes(amp: complex, dim: int) -> np.ndarray:
    """Number-basis amplitudes of |amp>, truncated (not renormalised)."""
    n = np.arange(dim)
    mag = abs(amp)
    if mag == 0:
        out = np.zeros(dim, dtype=complex)
        out[0] = 1.0
        return out
    logc = -0.5 * mag**2 + n * math.log(mag) - 0.5 * gammaln(n + 1)
    return np.exp(logc) * np.exp(1j * n * np.angle(amp))


def fock_vector(n: int, dim: int) -> np.ndarray:
    out = np.zeros(dim, dtype=complex)
    out[n] = 1.0
    return out


def product_state(psi_a: np.ndarray, psi_b: np.ndarray) -> np.ndarray:
    return np.kron(psi_a, psi_b)


def coherent_state(alpha: complex, beta: complex, sp: FockSpace, normalize: bool = True) -> np.ndarray:
    psi = product_state(coherent_amplitudes(alpha, sp.dim_a), coherent_amplitudes(beta, sp.dim_b))
    return psi / np.linalg.norm(psi) if normalize else psi


def density(psi: np.ndarray) -> np.ndarray:
    return np.outer(psi, psi.conj())


def partial_trace_b(state: np.ndarray, sp: FockSpace) -> np.ndarray:
    """Reduced cavity density matrix from a pure vector or a density matrix."""
    if state.ndim == 1:
        m = state.reshape(sp.dim_a, sp.dim_b)
        return m @ m.conj().T
    r = state.reshape(sp.dim_a, sp.dim_b, sp.dim_a, sp.dim_b)
    return np.einsum("ibjb->ij", r)


def partial_trace_a(state: np.ndarray, sp: FockSpace) -> np.ndarray:
    if state.ndim == 1:
        m = state.reshape(sp.dim_a, sp.dim_b)
        return m.T @ m.conj()
    r = state.reshape(sp.dim_a, sp.dim_b, sp.dim_a, sp.dim_b)
    return np.einsum("iaib->ab", r)


def top_level_populations(state: np.ndarray, sp: FockSpace) -> tuple[float, float]:
    """Occupation of the highest kept level of each mode."""
    rho_a = partial_trace_b(state, sp)
    rho_b = partial_trace_a(state, sp)
    return float(rho_a[-1, -1].real), float(rho_b[-1, -1].real)


def truncation_adequate(state: np.ndarray, sp: FockSpace, tol: float = TOP_LEVEL_TOL) -> bool:
    pa, pb = top_level_populations(state, sp)
    return pa < tol and pb < tol


def fidelity_pure(phi: np.ndarray, state: np.ndarray) -> float:
    """|<phi|psi>|^2 or <phi|rho|phi>, phi normalised inside."""
    phi = phi / np.linalg.norm(phi)
    if state.ndim == 1:
        return float(abs(np.vdot(phi, state)) ** 2)
    return float(np.real(np.vdot(phi, state @ phi)))


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.einsum("ij,ji->", rho, rho)))


# ---------------------------------------------------------------------------
# unitary propagation
# ---------------------------------------------------------------------------

def propagate_unitary(H, psi0: np.ndarray, T: float, dt: float | None = None,
                      norm_tol: float = 1e-8) -> np.ndarray:
    """Propagate a pure state for time T.

    ``H`` is either a constant Hermitian matrix (exact eigen-propagation) or a
    callable ``H(t)``; the latter is advanced with midpoint exponential steps
    ``exp(-i H(t + dt/2) dt)``.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-10:
        raise ValueError("initial state is not normalised")
    if not callable(H):
        H = np.asarray(H)
        if not np.any(H):
            return psi0.copy()
        if np.allclose(H, np.diag(np.diag(H)), atol=0):
            return np.exp(-1j * np.diag(H) * T) * psi0
        E, V = np.linalg.eigh(H)
        return V @ (np.exp(-1j * E * T) * (V.conj().T @ psi0))
    if dt is None:
        raise ValueError("time-dependent propagation needs dt")
    n_steps = max(1, int(math.ceil(T / dt - 1e-12)))
    h = T / n_steps
    Omega = getattr(H, "Omega", None)
    if Omega:
        limit = (2 * math.pi / Omega) / 40
        if h > limit * (1 + 1e-12):
            raise ValueError(f"dt = {h:.3g} exceeds (2pi/Omega)/40 = {limit:.3g}")
    psi = psi0.copy()
    for j in range(n_steps):
        Hm = H((j + 0.5) * h)
        psi = expm(-1j * h * Hm) @ psi
    drift = abs(np.linalg.norm(psi) - 1.0)
    if drift > norm_tol:
        raise NormDriftError(f"norm drift {drift:.2e} after {n_steps} steps of {h:.3g}; reduce dt")
    return psi


# ---------------------------------------------------------------------------
# master equation
# ---------------------------------------------------------------------------

def lindblad_rhs(rho: np.ndarray, H: np.ndarray, L: LindbladSpec, sp: FockSpace) -> np.ndarray:
    """Generator: -i[H, rho] + cavity loss + thermal mechanical damping."""
    if rho.shape != (sp.dim, sp.dim) or H.shape != rho.shape:
        raise ValueError(f"shape mismatch: rho {rho.shape}, H {H.shape}, space {sp.dim}")
    ops = build_mode_operators(sp)
    out = -1j * (H @ rho - rho @ H)
    if L.kappa:
        out += _dissipator(rho, ops.a, ops.ad, ops.n_a, 0.5 * L.kappa)
    if L.gamma:
        out += _dissipator(rho, ops.b, ops.bd, ops.n_b, 0.5 * L.gamma * (L.n_bar + 1.0))
        if L.n_bar:
            bbd = ops.b @ ops.bd
            out += _dissipator(rho, ops.bd, ops.b, bbd, 0.5 * L.gamma * L.n_bar)
    return out


def _dissipator(rho, c, cd, cdc, rate):
    return rate * (2.0 * c @ rho @ cd - cdc @ rho - rho @ cdc)


@dataclass
class Trajectory:
    times: np.ndarray
    a: np.ndarray
    b: np.ndarray
    n_a: np.ndarray
    n_b: np.ndarray
    purity: np.ndarray
    trace_error: np.ndarray
    rho_final: np.ndarray
    top_level: tuple[float, float] = (0.0, 0.0)
    truncation_ok: bool = True
    states: list = field(default_factory=list)

    CSV_COLUMNS = ("t", "re_a", "im_a", "re_b", "im_b", "n_a", "n_b", "purity", "trace_error")

    def rows(self):
        for i, t in enumerate(self.times):
            yield (t, self.a[i].real, self.a[i].imag, self.b[i].real, self.b[i].imag,
                   self.n_a[i], self.n_b[i], self.purity[i], self.trace_error[i])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.CSV_COLUMNS)
            for row in self.rows():
                w.writerow([repr(float(x)) for x in row])


def _check_positive(rho, t, tol):
    herm = 0.5 * (rho + rho.conj().T)
    lam = np.linalg.eigvalsh(herm)[0]
    if lam < -tol:
        raise PositivityError(
            f"density matrix eigenvalue {lam:.3e} at t={t:.6g}; increase truncation or reduce dt")


def integrate_master(rho0: np.ndarray, H: np.ndarray, L: LindbladSpec, sp: FockSpace,
                     T: float, dt: float, method: str = "rk4", samples: int | None = None,
                     rtol: float = 1e-10, atol: float = 1e-12, positivity_tol: float = 1e-6,
                     keep_states: bool = False) -> Trajectory:
    """Integrate the master equation from rho0 over [0, T].

    ``method`` is ``"rk4"`` (fixed step ``dt``) or ``"adaptive"`` (DOP853 with
    the given tolerances, output every ``dt``). Observables are recorded at
    ``samples`` evenly spaced times (default: every step).
    """
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.ndim == 1:
        rho0 = density(rho0)
    tr0 = np.trace(rho0).real
    if abs(tr0 - 1.0) > 1e-8:
        raise ValueError(f"initial trace {tr0} != 1")
    n_steps = max(1, int(math.ceil(T / dt - 1e-12)))
    h = T / n_steps
    if samples is None:
        samples = n_steps + 1
    sample_steps = np.unique(np.round(np.linspace(0, n_steps, samples)).astype(int))
    ops = build_mode_operators(sp)
    rec = {k: [] for k in ("t", "a", "b", "na", "nb", "pur", "tre")}
    states = []

    def record(t, rho):
        _check_positive(rho, t, positivity_tol)
        rec["t"].append(t)
        rec["a"].append(np.trace(ops.a @ rho))
        rec["b"].append(np.trace(ops.b @ rho))
        rec["na"].append(np.trace(ops.n_a @ rho).real)
        rec["nb"].append(np.trace(ops.n_b @ rho).real)
        rec["pur"].append(purity(rho))
        rec["tre"].append(abs(np.trace(rho) - 1.0))
        if keep_states:
            states.append(rho.copy())

    def f(rho):
        return lindblad_rhs(rho, H, L, sp)

    if method == "rk4":
        rho = rho0.copy()
        want = set(sample_steps.tolist())
        if 0 in want:
            record(0.0, rho)
        for j in range(1, n_steps + 1):
            k1 = f(rho)
            k2 = f(rho + 0.5 * h * k1)
            k3 = f(rho + 0.5 * h * k2)
            k4 = f(rho + h * k3)
            rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if j in want:
                record(j * h, rho)
    elif method == "adaptive":
        shape = rho0.shape
        t_eval = sample_steps * h

        def fun(t, y):
            return f(y.reshape(shape)).ravel()

        sol = solve_ivp(fun, (0.0, T), rho0.ravel(), method="DOP853", t_eval=t_eval,
                        rtol=rtol, atol=atol)
        if not sol.success:
            raise RuntimeError(f"adaptive integration failed: {sol.message}")
        for i, t in enumerate(sol.t):
            rho = sol.y[:, i].reshape(shape)
            record(float(t), rho)
    else:
        raise ValueError(f"unknown method {method!r}")

    top = top_level_populations(rho, sp)
    ok = top[0] < TOP_LEVEL_TOL and top[1] < TOP_LEVEL_TOL
    if not ok:
        log.warning("truncation inadequate: top-level populations %.2e, %.2e", *top)
    return Trajectory(
        times=np.array(rec["t"]), a=np.array(rec["a"]), b=np.array(rec["b"]),
        n_a=np.array(rec["na"]), n_b=np.array(rec["nb"]), purity=np.array(rec["pur"]),
        trace_error=np.array(rec["tre"]), rho_final=rho, top_level=top, truncation_ok=ok,
        states=states)


def thermal_state(n_bar: float, dim: int) -> np.ndarray:
    """Geometric (Gibbs) distribution with mean n_bar, truncated and renormalised."""
    if n_bar == 0:
        p = np.zeros(dim)
        p[0] = 1.0
    else:
        r = n_bar / (n_bar + 1.0)
        p = r ** np.arange(dim)
        p /= p.sum()
    return np.diag(p).astype(complex)


def effective_vs_full(p: PhysicalParams, sp: FockSpace, psi0: np.ndarray, T: float,
                      steps_per_period: int = 64) -> dict:
    """Propagate psi0 under the full interaction-picture Hamiltonian and under
    the averaged one; returns both states and the infidelity between them."""
    from .params import derive_effective

    Omega = p.angular()["Omega"]
    Hfull = time_dependent(interaction_components(p, sp), Omega)
    dt = (2 * math.pi / Omega) / steps_per_period
    psi_full = propagate_unitary(Hfull, psi0, T, dt)
    ep = derive_effective(p)
    Heff = build_effective_hamiltonian(ep, None, sp)
    psi_eff = propagate_unitary(Heff, psi0, T)
    return {
        "psi_full": psi_full,
        "psi_eff": psi_eff,
        "infidelity": 1.0 - fidelity_pure(psi_eff, psi_full),
    }


def expectation(op: np.ndarray, state: np.ndarray) -> complex:
    if state.ndim == 1:
        return complex(np.vdot(state, op @ state))
    return complex(np.trace(op @ state))


def commutator_norm(A: np.ndarray, B: np.ndarray) -> float:
    return float(np.linalg.norm(A @ B - B @ A))


