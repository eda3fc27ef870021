"""Semiclassical steady states, stability and hysteresis sweeps.

With the factorisation <a> = alpha, <b> = beta (all third moments
factorised), the mean-field flow is

    d alpha/dt = -i(wc - chi_a) alpha - kappa/2 alpha + 2i chi_a |alpha|^2 alpha
                 - i chi_ab |beta|^2 alpha + eps
    d beta/dt  = -i(Om - chi_b) beta - gamma/2 beta + 2i chi_b |beta|^2 beta
                 - i chi_ab |alpha|^2 beta + eta

and its fixed points satisfy two coupled cubics in n_a = |alpha|^2 and
n_b = |beta|^2. All rates are angular (rad/s).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .params import EffectiveParams

log = logging.getLogger(__name__)

EPS = np.finfo(float).eps
RESIDUAL_TOL = 1e-9


class NoStableBranch(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# cubic n [c2 + (B + k n)^2] = drive2
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CubicRoots:
    roots: tuple[float, ...]
    double: bool = False  # a fold (double root) was detected

    def __len__(self):
        return len(self.roots)

    def __iter__(self):
        return iter(self.roots)

    def __getitem__(self, i):
        return self.roots[i]


def lorentz_residual(n: float, B: float, k: float, c2: float, drive2: float) -> float:
    """Relative residual of n [c2 + (B + k n)^2] = drive2."""
    lhs = n * (c2 + (B + k * n) ** 2)
    scale = max(abs(drive2), abs(lhs))
    return abs(lhs - drive2) / scale if scale > 0 else 0.0


def _polish(n, B, k, c2, drive2, iters=8):
    """Newton steps, accepted only while they reduce the residual (safe at double roots)."""
    def f(x):
        return x * (c2 + (B + k * x) ** 2) - drive2

    fn = f(n)
    for _ in range(iters):
        D = B + k * n
        fp = c2 + D * D + 2.0 * k * n * D
        if fp == 0 or fn == 0:
            break
        n_new = n - fn / fp
        if not math.isfinite(n_new):
            break
        f_new = f(n_new)
        if abs(f_new) >= abs(fn):
            break
        n, fn = n_new, f_new
    return n


def solve_occupation_cubic(B: float, k: float, c2: float, drive2: float) -> CubicRoots:
    """All real nonnegative roots of ``n [c2 + (B + k n)^2] = drive2``.

    Closed-form (trigonometric / Cardano) on a rescaled cubic, followed by a
    Newton polish. Near a vanishing discriminant the double root is reported
    with ``double=True``.
    """
    if drive2 < 0 or c2 < 0:
        raise ValueError("drive2 and c2 must be nonnegative")
    if drive2 == 0:
        roots = [0.0]
        if c2 == 0 and k != 0 and -B / k > 0:
            roots.append(-B / k)
        return CubicRoots(tuple(roots))
    if k == 0:
        den = c2 + B * B
        if den == 0:
            return CubicRoots(())
        return CubicRoots((drive2 / den,))
    # rescale n = s x so that coefficients are O(1)
    s2 = c2 + B * B
    if s2 > 0:
        scale = drive2 / s2
    else:
        scale = (drive2 / (k * k)) ** (1.0 / 3.0)
    kk = k * scale
    # x [c2 + (B + kk x)^2] = drive2/scale  -> monic in x after dividing by kk^2
    A2 = 2.0 * B / kk
    A1 = (c2 + B * B) / (kk * kk)
    A0 = -drive2 / (scale * kk * kk)
    p = A1 - A2 * A2 / 3.0
    q = 2.0 * A2**3 / 27.0 - A2 * A1 / 3.0 + A0
    disc = -(4.0 * p**3 + 27.0 * q * q)
    mag = 4.0 * abs(p) ** 3 + 27.0 * q * q
    shift = -A2 / 3.0
    double = False
    if mag == 0:
        ts = [0.0]
        double = True
    elif abs(disc) <= 10 * EPS * mag:
        double = True
        if p == 0:
            ts = [0.0]
        else:
            ts = [3.0 * q / p, -1.5 * q / p]
    elif disc > 0:
        r = 2.0 * math.sqrt(-p / 3.0)
        arg = (3.0 * q / (2.0 * p)) * math.sqrt(-3.0 / p)
        phi = math.acos(max(-1.0, min(1.0, arg))) / 3.0
        ts = [r * math.cos(phi - 2.0 * math.pi * j / 3.0) for j in range(3)]
    else:
        sq = math.sqrt(q * q / 4.0 + p**3 / 27.0)
        u = -q / 2.0 + sq
        v = -q / 2.0 - sq
        ts = [math.copysign(abs(u) ** (1 / 3), u) + math.copysign(abs(v) ** (1 / 3), v)]
    roots = []
    for t in ts:
        n = (t + shift) * scale
        n = _polish(n, B, k, c2, drive2)
        if n >= 0 and math.isfinite(n):
            roots.append(n)
    roots.sort()
    dedup: list[float] = []
    for n in roots:
        if dedup and abs(n - dedup[-1]) <= 1e-9 * max(abs(n), 1.0):
            double = True
            continue
        dedup.append(n)
    return CubicRoots(tuple(dedup), double)


def _mech_coeffs(ep: EffectiveParams, n_a: float):
    return ep.Omega_tilde - ep.chi_b + ep.chi_ab * n_a, -2.0 * ep.chi_b


def _cav_coeffs(ep: EffectiveParams, n_b: float):
    return ep.omega_c_tilde - ep.chi_a + ep.chi_ab * n_b, -2.0 * ep.chi_a


def mech_cubic_roots(ep: EffectiveParams, gamma: float, eta: float, n_a: float) -> CubicRoots:
    """Mechanical occupations n_b for a fixed cavity occupation n_a."""
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    B, k = _mech_coeffs(ep, n_a)
    return solve_occupation_cubic(B, k, 0.25 * gamma * gamma, eta * eta)


def cavity_cubic_roots(ep: EffectiveParams, kappa: float, eps: float, n_b: float) -> CubicRoots:
    """Cavity occupations n_a for a fixed mechanical occupation n_b."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    B, k = _cav_coeffs(ep, n_b)
    return solve_occupation_cubic(B, k, 0.25 * kappa * kappa, eps * eps)


# ---------------------------------------------------------------------------
# mean-field flow and stability
# ---------------------------------------------------------------------------

def mean_field_rhs(ep: EffectiveParams, kappa, gamma, eps, eta, alpha, beta, n_a_pinned=None):
    na = abs(alpha) ** 2 if n_a_pinned is None else n_a_pinned
    nb = abs(beta) ** 2
    da = (-1j * (ep.omega_c_tilde - ep.chi_a) * alpha - 0.5 * kappa * alpha
          + 2j * ep.chi_a * abs(alpha) ** 2 * alpha - 1j * ep.chi_ab * nb * alpha + eps)
    db = (-1j * (ep.Omega_tilde - ep.chi_b) * beta - 0.5 * gamma * beta
          + 2j * ep.chi_b * nb * beta - 1j * ep.chi_ab * na * beta + eta)
    return da, db


def _real_block(fz, fzc):
    """Real 2x2 Jacobian of f(z, z*) w.r.t. (Re z, Im z)."""
    s, d = fz + fzc, fz - fzc
    return np.array([[s.real, -d.imag], [s.imag, d.real]])


def _mech_block(ep, gamma, na, beta):
    nb = abs(beta) ** 2
    Bb = ep.Omega_tilde - ep.chi_b
    fb_b = -(0.5 * gamma + 1j * Bb) + 4j * ep.chi_b * nb - 1j * ep.chi_ab * na
    fb_bc = 2j * ep.chi_b * beta * beta
    return _real_block(fb_b, fb_bc)


def jacobian(ep: EffectiveParams, kappa, gamma, alpha, beta, pinned: bool = False,
             n_a: float | None = None) -> np.ndarray:
    """Real Jacobian of the mean-field flow in (Re a, Im a, Re b, Im b).

    With ``pinned=True`` only the 2x2 mechanical block is returned, with the
    cavity occupation held at ``n_a`` (default ``|alpha|^2``).
    """
    na = abs(alpha) ** 2 if n_a is None else n_a
    nb = abs(beta) ** 2
    Jbb = _mech_block(ep, gamma, na, beta)
    if pinned:
        return Jbb
    Ba = ep.omega_c_tilde - ep.chi_a
    fa_a = -(0.5 * kappa + 1j * Ba) + 4j * ep.chi_a * na - 1j * ep.chi_ab * nb
    fa_ac = 2j * ep.chi_a * alpha * alpha
    fa_b = -1j * ep.chi_ab * np.conj(beta) * alpha
    fa_bc = -1j * ep.chi_ab * beta * alpha
    fb_a = -1j * ep.chi_ab * np.conj(alpha) * beta
    fb_ac = -1j * ep.chi_ab * alpha * beta
    J = np.zeros((4, 4))
    J[:2, :2] = _real_block(fa_a, fa_ac)
    J[:2, 2:] = _real_block(fa_b, fa_bc)
    J[2:, :2] = _real_block(fb_a, fb_ac)
    J[2:, 2:] = Jbb
    return J


def classify_jacobian(J: np.ndarray, margin: float = 1e-12) -> tuple[str, np.ndarray]:
    lam = np.linalg.eigvals(J)
    scale = max(np.max(np.abs(lam)), 1e-300)
    top = np.max(lam.real)
    if top < -margin * scale:
        return "stable", lam
    if top > margin * scale:
        return "unstable", lam
    return "marginal", lam


def steady_amplitude(drive: float, damping: float, detuning: float, n: float) -> complex:
    """Complex amplitude from 0 = -(damping/2 + i detuning) z + drive."""
    den = 0.5 * damping + 1j * detuning
    if den == 0:
        return complex(math.sqrt(n))
    return drive / den


# ---------------------------------------------------------------------------
# fixed points
# ---------------------------------------------------------------------------

@dataclass
class FixedPoint:
    n_a: float
    n_b: float
    alpha: complex
    beta: complex
    stability: str
    residual_a: float
    residual_b: float
    eigenvalues: np.ndarray = field(default=None, repr=False)


def _residuals(ep, kappa, gamma, eps, eta, na, nb):
    Ba, ka = _cav_coeffs(ep, nb)
    Bb, kb = _mech_coeffs(ep, na)
    return (lorentz_residual(na, Ba, ka, 0.25 * kappa**2, eps**2),
            lorentz_residual(nb, Bb, kb, 0.25 * gamma**2, eta**2))


def make_fixed_point(ep, kappa, gamma, eps, eta, na, nb, pinned=False) -> FixedPoint:
    Da = ep.omega_c_tilde - ep.chi_a - 2 * ep.chi_a * na + ep.chi_ab * nb
    Db = ep.Omega_tilde - ep.chi_b - 2 * ep.chi_b * nb + ep.chi_ab * na
    alpha = steady_amplitude(eps, kappa, Da, na)
    beta = steady_amplitude(eta, gamma, Db, nb)
    ra, rb = _residuals(ep, kappa, gamma, eps, eta, na, nb)
    label, lam = classify_jacobian(jacobian(ep, kappa, gamma, alpha, beta, pinned=pinned))
    return FixedPoint(na, nb, alpha, beta, label, ra, rb, lam)


def classify_stability(fp: FixedPoint, ep: EffectiveParams, kappa: float, gamma: float,
                       pinned: bool = False) -> str:
    label, _ = classify_jacobian(jacobian(ep, kappa, gamma, fp.alpha, fp.beta, pinned=pinned))
    return label


def _newton2(ep, kappa, gamma, eps, eta, na, nb, iters=60):
    """Newton on the two cubic equations, scaled by their drives."""
    ca, cb = 0.25 * kappa**2, 0.25 * gamma**2
    sa, sb = max(eps * eps, 1e-300), max(eta * eta, 1e-300)
    for _ in range(iters):
        Da = ep.omega_c_tilde - ep.chi_a - 2 * ep.chi_a * na + ep.chi_ab * nb
        Db = ep.Omega_tilde - ep.chi_b - 2 * ep.chi_b * nb + ep.chi_ab * na
        Fa = (na * (ca + Da * Da) - eps * eps) / sa
        Fb = (nb * (cb + Db * Db) - eta * eta) / sb
        J = np.array([
            [(ca + Da * Da + na * 2 * Da * (-2 * ep.chi_a)) / sa, na * 2 * Da * ep.chi_ab / sa],
            [nb * 2 * Db * ep.chi_ab / sb, (cb + Db * Db + nb * 2 * Db * (-2 * ep.chi_b)) / sb],
        ])
        try:
            step = np.linalg.solve(J, [Fa, Fb])
        except np.linalg.LinAlgError:
            return None
        na, nb = na - step[0], nb - step[1]
        if not (math.isfinite(na) and math.isfinite(nb)):
            return None
        if abs(step[0]) <= 1e-14 * max(abs(na), 1e-300) and abs(step[1]) <= 1e-14 * max(abs(nb), 1e-300):
            break
    return na, nb


@dataclass
class CoupledResult:
    points: list[FixedPoint]
    discarded: list[dict] = field(default_factory=list)

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)


def coupled_fixed_points(ep: EffectiveParams, kappa: float, gamma: float, eps: float, eta: float,
                         grid: int = 2001, max_iter: int = 500) -> CoupledResult:
    """All fixed points of the coupled cubics.

    Substituting the cavity root branches n_a(n_b) into the mechanical cubic
    leaves one scalar equation per branch in n_b. Sign changes along every
    branch on a grid over the admissible interval bracket the solutions,
    which are then bisected and polished with a 2-D Newton step.
    """
    if eps < 0 or eta < 0:
        raise ValueError("drives must be nonnegative")
    if eta == 0 or eps == 0:
        return _one_drive_off(ep, kappa, gamma, eps, eta)
    if gamma <= 0 or kappa <= 0:
        raise ValueError("coupled solve with nonzero drives needs kappa, gamma > 0")
    nb_max = 4.0 * eta * eta / (gamma * gamma)
    xs = np.linspace(0.0, nb_max, grid)
    cb = 0.25 * gamma**2

    def cav(nb):
        return cavity_cubic_roots(ep, kappa, eps, nb).roots

    def G(nb, na):
        Bb, kb = _mech_coeffs(ep, na)
        return (nb * (cb + (Bb + kb * nb) ** 2) - eta * eta) / (eta * eta)

    # follow each cavity branch along the grid
    tracks: list[list[tuple[int, float]]] = []
    active: list[int] = []
    prev_roots: tuple[float, ...] = ()
    for i, x in enumerate(xs):
        rs = cav(x)
        if i == 0 or not active:
            active = []
            for r in rs:
                tracks.append([(i, r)])
                active.append(len(tracks) - 1)
        elif len(rs) == len(active):
            for t, r in zip(active, rs):
                tracks[t].append((i, r))
        else:
            active = _rematch(tracks, active, prev_roots, rs, i)
        prev_roots = rs

    candidates: list[tuple[float, float]] = []
    for tr in tracks:
        for (i0, r0), (i1, r1) in zip(tr, tr[1:]):
            g0, g1 = G(xs[i0], r0), G(xs[i1], r1)
            if g0 == 0:
                candidates.append((r0, xs[i0]))
            if g0 * g1 < 0:
                x0, x1 = xs[i0], xs[i1]

                def h(x, x0=x0, x1=x1, r0=r0, r1=r1):
                    guess = r0 + (r1 - r0) * (x - x0) / (x1 - x0)
                    rs = cav(x)
                    na = min(rs, key=lambda r: abs(r - guess))
                    return G(x, na)

                try:
                    xr = brentq(h, x0, x1, xtol=1e-14 * max(x1, 1.0), maxiter=max_iter)
                    rs = cav(xr)
                    guess = r0 + (r1 - r0) * (xr - x0) / (x1 - x0)
                    candidates.append((min(rs, key=lambda r: abs(r - guess)), xr))
                except ValueError:
                    pass
        # end of a track: a solution may sit between the last grid point and the fold
        candidates.append((tr[-1][1], xs[tr[-1][0]]))
        candidates.append((tr[0][1], xs[tr[0][0]]))
    return _finalize(ep, kappa, gamma, eps, eta, candidates)


def _rematch(tracks, active, prev_roots, rs, i):
    """Continue tracks across a change in the number of cavity roots."""
    new_active = []
    if len(rs) < len(active):
        # a pair annihilated: survivors continue the nearest tracks
        used = set()
        for r in rs:
            j = min((j for j in range(len(active)) if j not in used),
                    key=lambda j: abs(prev_roots[j] - r))
            used.add(j)
            tracks[active[j]].append((i, r))
            new_active.append(active[j])
        order = sorted(range(len(new_active)), key=lambda j: tracks[new_active[j]][-1][1])
        return [new_active[j] for j in order]
    # a pair was born: existing tracks continue to nearest roots
    used = set()
    assign = {}
    for j, t in enumerate(active):
        m = min((m for m in range(len(rs)) if m not in used), key=lambda m: abs(rs[m] - prev_roots[j]))
        used.add(m)
        assign[m] = t
    for m, r in enumerate(rs):
        if m in assign:
            tracks[assign[m]].append((i, r))
            new_active.append(assign[m])
        else:
            tracks.append([(i, r)])
            new_active.append(len(tracks) - 1)
    return new_active


def _one_drive_off(ep, kappa, gamma, eps, eta):
    cands = []
    if eps == 0 and eta == 0:
        cands.append((0.0, 0.0))
    elif eps == 0:
        for nb in mech_cubic_roots(ep, gamma, eta, 0.0):
            cands.append((0.0, nb))
    else:
        for na in cavity_cubic_roots(ep, kappa, eps, 0.0):
            cands.append((na, 0.0))
    return _finalize(ep, kappa, gamma, eps, eta, cands, polish=False)


def _finalize(ep, kappa, gamma, eps, eta, candidates, polish=True, dedup_tol=1e-6):
    points: list[FixedPoint] = []
    discarded: list[dict] = []
    for na, nb in candidates:
        if polish:
            res = _newton2(ep, kappa, gamma, eps, eta, na, nb)
            if res is None:
                discarded.append({"seed": (na, nb), "reason": "newton diverged"})
                continue
            na, nb = res
        if na < 0 or nb < 0:
            continue
        ra, rb = _residuals(ep, kappa, gamma, eps, eta, na, nb)
        if ra > RESIDUAL_TOL or rb > RESIDUAL_TOL:
            discarded.append({"seed": (na, nb), "reason": f"residuals {ra:.2e}, {rb:.2e}"})
            continue
        if any(_close(na, p.n_a, dedup_tol) and _close(nb, p.n_b, dedup_tol) for p in points):
            continue
        points.append(make_fixed_point(ep, kappa, gamma, eps, eta, na, nb))
    points.sort(key=lambda p: (p.n_b, p.n_a))
    for d in discarded:
        log.debug("discarded candidate %s", d)
    return CoupledResult(points, discarded)


def _close(x, y, tol):
    return abs(x - y) <= tol * max(abs(x), abs(y), 1e-12)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

@dataclass
class Jump:
    index: int          # grid index of the first point after the jump
    location: float     # refined fold position of the sweep variable
    from_value: float
    to_value: float


@dataclass
class BranchTrace:
    variable: str
    direction: str
    values: np.ndarray
    roots: list[tuple[float, ...]]
    stability: list[tuple[str, ...]]
    branch: np.ndarray
    n_a: np.ndarray
    jumps: list[Jump]
    folds: list[int] = field(default_factory=list)  # grid points with a flagged double root

    CSV_COLUMNS = ("sweep_var", "n_b_branch", "n_a", "n_roots", "stability_mask", "jump_flag")

    def rows(self):
        jump_idx = {j.index for j in self.jumps}
        for i, x in enumerate(self.values):
            mask = "".join(s[0].upper() for s in self.stability[i])
            yield (float(x), float(self.branch[i]), float(self.n_a[i]), len(self.roots[i]), mask,
                   int(i in jump_idx))

    def sidecar(self) -> dict:
        return {
            "variable": self.variable,
            "direction": self.direction,
            "points": [
                {"sweep_var": float(x), "roots": [float(r) for r in self.roots[i]],
                 "stability": list(self.stability[i])}
                for i, x in enumerate(self.values)
            ],
            "jumps": [
                {"index": j.index, "location": j.location, "from": j.from_value, "to": j.to_value}
                for j in self.jumps
            ],
        }


def _mech_stabilities(ep, gamma, eta, na, roots):
    out = []
    for nb in roots:
        Db = ep.Omega_tilde - ep.chi_b - 2 * ep.chi_b * nb + ep.chi_ab * na
        beta = steady_amplitude(eta, gamma, Db, nb)
        out.append(classify_jacobian(_mech_block(ep, gamma, na, beta))[0])
    return tuple(out)


def _closest_pair(rs):
    """Index of the lower member of the closest adjacent pair among 3 sorted roots."""
    return 0 if (rs[1] - rs[0]) <= (rs[2] - rs[1]) else 1


def _follow(solve, values, direction, variable, n_a_of):
    """Continuation of the occupied stable branch of a one-parameter cubic family.

    ``solve(x) -> (roots, stabilities, double)``.
    """
    values = np.asarray(values, dtype=float)
    if len(values) == 0:
        raise ValueError("empty sweep grid")
    diffs = np.diff(values)
    if len(diffs) and not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise ValueError("sweep grid must be strictly monotone")
    if direction == "down":
        values = np.sort(values)[::-1]
    elif direction == "up":
        values = np.sort(values)
    else:
        raise ValueError("direction must be 'up' or 'down'")
    all_roots, all_stab, branch, folds, jumps = [], [], [], [], []
    idx = None
    prev = None
    for i, x in enumerate(values):
        rs, st, dbl = solve(x)
        if dbl:
            folds.append(i)
        if not rs:
            raise NoStableBranch(f"no solution at {variable} = {x!r}")
        if idx is None:
            stable = [j for j, s in enumerate(st) if s == "stable"]
            if not stable:
                raise NoStableBranch(f"no stable branch at {variable} = {x!r}")
            idx = stable[0]
        else:
            prs, pst = prev
            jumped = False
            if len(rs) == len(prs):
                pass
            elif len(prs) == 3 and len(rs) == 1:
                lo = _closest_pair(prs)
                if idx in (lo, lo + 1):
                    jumped = True
                idx = 0
            elif len(prs) == 1 and len(rs) == 3:
                lo = _closest_pair(rs)
                idx = 2 if lo == 0 else 0
            else:
                target = prs[idx]
                idx = min(range(len(rs)), key=lambda j: abs(rs[j] - target))
            idx = min(idx, len(rs) - 1)
            if st[idx] == "unstable":
                stable = [j for j, s in enumerate(st) if s == "stable"]
                if not stable:
                    raise NoStableBranch(f"no stable branch at {variable} = {x!r}")
                idx = min(stable, key=lambda j: abs(rs[j] - rs[idx]))
                jumped = True
            if jumped:
                loc = _refine_fold(solve, values[i - 1], x, len(prs))
                jumps.append(Jump(i, loc, float(branch[-1]), float(rs[idx])))
        all_roots.append(tuple(rs))
        all_stab.append(tuple(st))
        branch.append(rs[idx])
        prev = (rs, st)
    return BranchTrace(
        variable=variable, direction=direction, values=values, roots=all_roots,
        stability=all_stab, branch=np.array(branch),
        n_a=np.array([n_a_of(x) for x in values]), jumps=jumps, folds=folds)


def _refine_fold(solve, x0, x1, n0, iters=80, rtol=1e-12):
    """Bisect for the boundary where the root count changes away from n0."""
    for _ in range(iters):
        xm = 0.5 * (x0 + x1)
        if xm in (x0, x1) or abs(x1 - x0) <= rtol * max(abs(x0), abs(x1)):
            break
        if len(solve(xm)[0]) == n0:
            x0 = xm
        else:
            x1 = xm
    return 0.5 * (x0 + x1)


def hysteresis_sweep(ep: EffectiveParams, kappa: float, gamma: float, eps: float,
                     eta_values: Sequence[float], direction: str = "up",
                     pinned_n_a: float | None = None) -> BranchTrace:
    """Follow the occupied stable n_b branch while the mechanical drive eta is swept.

    With ``pinned_n_a`` the cavity occupation is held fixed; otherwise the
    cavity occupation is taken from the stable low-amplitude cavity root at
    each point (self-consistently with n_b).
    """
    if pinned_n_a is not None:
        def solve(eta):
            cr = mech_cubic_roots(ep, gamma, eta, pinned_n_a)
            return cr.roots, _mech_stabilities(ep, gamma, eta, pinned_n_a, cr.roots), cr.double

        return _follow(solve, eta_values, direction, "eta", lambda x: pinned_n_a)
    return _coupled_follow(ep, kappa, gamma, lambda x: (eps, x), eta_values, direction, "eta",
                           lambda x: ep)


def detuning_sweep(ep: EffectiveParams, kappa: float, gamma: float, eps: float, eta: float,
                   delta_values: Sequence[float], direction: str = "up",
                   pinned_n_a: float | None = None) -> BranchTrace:
    """As :func:`hysteresis_sweep` with the mechanical detuning delta (rad/s) swept."""
    if pinned_n_a is not None:
        def solve(delta):
            e = ep.with_mech_detuning(delta)
            cr = mech_cubic_roots(e, gamma, eta, pinned_n_a)
            return cr.roots, _mech_stabilities(e, gamma, eta, pinned_n_a, cr.roots), cr.double

        return _follow(solve, delta_values, direction, "delta", lambda x: pinned_n_a)
    return _coupled_follow(ep, kappa, gamma, lambda x: (eps, eta), delta_values, direction,
                           "delta", lambda x: ep.with_mech_detuning(x))


def _coupled_follow(ep, kappa, gamma, drives_of, values, direction, variable, ep_of):
    """Continuation on fully coupled fixed points, ordered by n_b."""
    cache = {}

    def fps(x):
        if x not in cache:
            eps, eta = drives_of(x)
            cache[x] = coupled_fixed_points(ep_of(x), kappa, gamma, eps, eta).points
        return cache[x]

    def solve(x):
        pts = fps(x)
        return (tuple(p.n_b for p in pts), tuple(p.stability for p in pts), False)

    trace = _follow(solve, values, direction, variable, lambda x: 0.0)
    n_a = []
    for x, nb in zip(trace.values, trace.branch):
        p = min(fps(x), key=lambda p: abs(p.n_b - nb))
        n_a.append(p.n_a)
    trace.n_a = np.array(n_a)
    return trace


def hysteresis_window(up: BranchTrace, down: BranchTrace) -> float | None:
    """Width (up-jump minus down-jump location) of the bistable interval, or None."""
    if not up.jumps or not down.jumps:
        return None
    return up.jumps[0].location - down.jumps[0].location


def integrate_mean_field(ep, kappa, gamma, eps, eta, alpha0, beta0, T, n_a_pinned=None,
                         rtol=1e-10, atol=1e-12, t_eval=None):
    """Time-integrate the mean-field flow; returns the scipy solution object."""
    from scipy.integrate import solve_ivp

    def f(t, y):
        a = y[0] + 1j * y[1]
        b = y[2] + 1j * y[3]
        da, db = mean_field_rhs(ep, kappa, gamma, eps, eta, a, b, n_a_pinned)
        if n_a_pinned is not None:
            da = 0.0
        return [da.real, da.imag, db.real, db.imag]

    y0 = [alpha0.real, alpha0.imag, beta0.real, beta0.imag]
    return solve_ivp(f, (0.0, T), y0, method="DOP853", rtol=rtol, atol=atol, t_eval=t_eval)
