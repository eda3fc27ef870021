"""Acceptance criteria 1-10. Each test records one PASS/FAIL line, printed in
the terminal summary. Run directly with ``python3 tests/test_acceptance.py``."""

import math
import sys
import time

import numpy as np
import pytest

from optokerr.cats import (CoherentSpec, coherence_times, kerr_cat, reduced_cavity_dm,
                           revival_analysis, yurke_stoler)
from optokerr.cli import run
from optokerr.fock import (FockSpace, LindbladSpec, build_effective_hamiltonian,
                           coherent_amplitudes, density, effective_vs_full, fidelity_pure,
                           fock_vector, integrate_master, number_diagonals, partial_trace_b,
                           product_state)
from optokerr.params import (CHI_AB_UNIT_HZ, GRAPHENE_N_A, TWO_PI, DriveParams, EffectiveParams,
                             PhysicalParams, derive_effective, graphene_params, thermal_occupation)
from optokerr.steady import (cavity_cubic_roots, classify_jacobian, coupled_fixed_points,
                             detuning_sweep, hysteresis_sweep, hysteresis_window,
                             integrate_mean_field, jacobian, steady_amplitude)
from optokerr.symalg import (Coef, GaussQ, bogoliubov_effective, interaction_hamiltonian,
                             closed_form_effective_terms)
from fractions import Fraction

ROOT2 = math.sqrt(2.0)


# 1 ---------------------------------------------------------------------------

def test_criterion_1_symbolic_averaging(criterion, tmp_path):
    with criterion("1", budget_s=1.0) as c:
        lines = []
        code = run(["verify-averaging", "--out", str(tmp_path)], echo=lines.append)
        res = bogoliubov_effective(interaction_hamiltonian())
        nf2 = res.second.to_number_form()
        nf1 = res.first.to_number_form()

        def mono(g, v, w, O, q):
            return Coef({(g, v, w, O): GaussQ(Fraction(q))})

        expected2 = {(1, 0): mono(1, 1, 0, -1, 1), (0, 1): mono(0, 2, 0, -1, Fraction(-5, 6)),
                     (2, 0): mono(2, 0, 0, -1, -1), (1, 1): mono(1, 1, 0, -1, 2),
                     (0, 2): mono(0, 2, 0, -1, Fraction(-5, 6))}
        expected1 = {(0, 1): mono(0, 0, 1, 0, 1), (0, 2): mono(0, 0, 1, 0, 1)}
        c.detail = f"cli exit {code}, last line {lines[-1] if lines else None!r}"
        assert code == 0 and lines[-1] == "PASS"
        assert nf2 == expected2
        assert nf1 == expected1
        assert (res.first, res.second) == closed_form_effective_terms()


# 2 ---------------------------------------------------------------------------

def test_criterion_2_parameter_derivation(criterion):
    with criterion("2", budget_s=0.5) as c:
        p, d = graphene_params()
        ep = derive_effective(p, d)
        chi_ab_hz = ep.chi_ab / TWO_PI
        n_bar = thermal_occupation(36.2e6, 14e-3)
        c.detail = f"chi_ab/2pi = {chi_ab_hz:.4e} Hz, N_bar = {n_bar:.4f}"
        assert f"{chi_ab_hz:.2e}" == f"{CHI_AB_UNIT_HZ:.2e}"
        assert abs(n_bar - 7.6) <= 0.1


# 3 ---------------------------------------------------------------------------

def test_criterion_3_coherence_times(criterion):
    with criterion("3", budget_s=0.5) as c:
        p, _ = graphene_params()
        ct = coherence_times(p, CoherentSpec(ROOT2, ROOT2))
        c.detail = (f"tau_a = {ct.tau_a:.4e} s, tau_b = {ct.tau_b:.4e} s, "
                    f"ratios {ct.rate_ratio_a:.3f}, {ct.rate_ratio_b:.3f}")
        assert ct.tau_a == pytest.approx(1.64e-7, rel=0.01)
        assert ct.tau_b == pytest.approx(1.08e-5, rel=0.01)
        assert ct.rate_ratio_a == pytest.approx(4.0, rel=0.01)
        assert ct.rate_ratio_b == pytest.approx(64.5, rel=0.01)


# 4 ---------------------------------------------------------------------------

def test_criterion_4_cavity_occupation(criterion):
    with criterion("4", budget_s=0.5) as c:
        p, d = graphene_params()
        ep = derive_effective(p, d)
        ang = p.angular()
        roots = cavity_cubic_roots(ep, ang["kappa"], d.cavity_amp, 0.0)
        stable = []
        for na in roots:
            Da = ep.omega_c_tilde - ep.chi_a - 2 * ep.chi_a * na
            alpha = steady_amplitude(d.cavity_amp, ang["kappa"], Da, na)
            J = jacobian(ep, ang["kappa"], ang["gamma"], alpha, 0j)
            if classify_jacobian(J)[0] == "stable":
                stable.append(na)
        c.detail = f"roots {list(roots)}, stable {stable}"
        assert len(stable) == 1
        assert stable[0] == pytest.approx(2.83e9, rel=0.02)


# 5 ---------------------------------------------------------------------------

def _graphene_line(chi_tilde):
    p, d = graphene_params()
    ang = p.angular()
    ep = derive_effective(p, d).with_chi_ab(chi_tilde * TWO_PI * CHI_AB_UNIT_HZ)
    return ep, ang["kappa"], ang["gamma"], ang["Omega"]


ETA_OVER_GAMMA = np.linspace(0.0, 80.0, 801)


def _eta_pair(chi_tilde):
    ep, kappa, gamma, _ = _graphene_line(chi_tilde)
    grid = ETA_OVER_GAMMA * gamma
    up = hysteresis_sweep(ep, kappa, gamma, 0.0, grid, "up", GRAPHENE_N_A)
    down = hysteresis_sweep(ep, kappa, gamma, 0.0, grid, "down", GRAPHENE_N_A)
    return up, down, gamma


def test_criterion_5a_no_jump_at_large_cross_kerr(criterion):
    with criterion("5(a)", budget_s=10.0) as c:
        up, down, _ = _eta_pair(1.5)
        c.detail = f"jumps up {len(up.jumps)}, down {len(down.jumps)}"
        assert not up.jumps and not down.jumps
        assert np.all(np.diff(up.branch) > 0)


@pytest.mark.parametrize("chi", [1.0, 0.0, -1.0])
def test_criterion_5b_one_up_one_down_jump(criterion, chi):
    with criterion("5(b)", budget_s=10.0) as c:
        up, down, gamma = _eta_pair(chi)
        c.detail = (f"chi_ab_tilde = {chi:+.0f}: up jumps "
                    f"{[round(float(j.location / gamma), 3) for j in up.jumps]}, down jumps "
                    f"{[round(float(j.location / gamma), 3) for j in down.jumps]}")
        assert len(up.jumps) == 1 and len(down.jumps) == 1
        assert up.jumps[0].location >= down.jumps[0].location


def test_criterion_5c_window_widens_for_negative_cross_kerr(criterion):
    with criterion("5(c)", budget_s=20.0) as c:
        w = {}
        for chi in (-1.0, 1.0):
            up, down, gamma = _eta_pair(chi)
            w[chi] = hysteresis_window(up, down) / gamma
        c.detail = f"window(-1) = {w[-1.0]:.3f} gamma, window(+1) = {w[1.0]:.3f} gamma"
        assert w[-1.0] > w[1.0]


def test_criterion_5d_detuning_bistability_shrinks(criterion):
    with criterion("5(d)", budget_s=20.0) as c:
        widths = {}
        for chi in (0.0, 1.0):
            ep, kappa, gamma, Omega = _graphene_line(chi)
            grid = np.linspace(-2e-5, 0.0, 2001) * Omega
            up = detuning_sweep(ep, kappa, gamma, 0.0, 31.22 * gamma, grid, "up", GRAPHENE_N_A)
            down = detuning_sweep(ep, kappa, gamma, 0.0, 31.22 * gamma, grid, "down", GRAPHENE_N_A)
            assert up.jumps and down.jumps, f"no bistable interval at chi_ab_tilde = {chi}"
            lo, hi = sorted([up.jumps[0].location, down.jumps[0].location])
            widths[chi] = (hi - lo) / Omega
        c.detail = (f"delta-interval width {widths[0.0]:.6e} Omega at 0, "
                    f"{widths[1.0]:.6e} Omega at 1")
        assert widths[1.0] < widths[0.0]


# 6 ---------------------------------------------------------------------------

def _desk_infidelity(scale):
    p = PhysicalParams.from_angular(1.0, coupling=0.02 * scale, cubic_anharm=0.02 * scale,
                                    quartic_anharm=0.01 * scale)
    sp = FockSpace(6, 16)
    beta = coherent_amplitudes(1.0, 16)
    psi0 = product_state(fock_vector(1, 6), beta / np.linalg.norm(beta))
    return effective_vs_full(p, sp, psi0, 200.0)["infidelity"]


@pytest.fixture(scope="module")
def desk_runs():
    t0 = time.perf_counter()
    vals = {s: _desk_infidelity(s) for s in (1.0, 0.5)}
    return vals, time.perf_counter() - t0


def test_criterion_6a_full_vs_effective_infidelity(criterion, desk_runs):
    vals, elapsed = desk_runs
    with criterion("6(a)") as c:
        c.detail = f"infidelity at Omega T = 200: {vals[1.0]:.4e} ({elapsed:.1f}s for two runs)"
        assert elapsed < 60.0
        assert vals[1.0] <= 1e-3


def test_criterion_6b_infidelity_decreases_when_halved(criterion, desk_runs):
    vals, _ = desk_runs
    with criterion("6(b)") as c:
        c.detail = f"infidelity {vals[1.0]:.4e} -> {vals[0.5]:.4e} on halving g, v, w"
        assert vals[0.5] < vals[1.0]


# 7 ---------------------------------------------------------------------------

def test_criterion_7_cat_suite(criterion):
    with criterion("7", budget_s=10.0) as c:
        f_ys = fidelity_pure(yurke_stoler(ROOT2, 32), kerr_cat(ROOT2, math.pi / 2, 32))
        spec = CoherentSpec(ROOT2, ROOT2)
        reps = {r: revival_analysis(spec, r, dim=32) for r in (1.0, 0.5, 0.25)}
        fids = [reps[1.0].fidelity_plus_alpha, reps[0.5].fidelity_minus_alpha,
                reps[0.25].fidelity_ys_cat]
        purities = [reps[r].purity for r in reps]
        c.detail = (f"1-F(YS) = {1 - f_ys:.1e}, revival 1-F = "
                    f"{[f'{1 - f:.1e}' for f in fids]}, purity {[round(x, 12) for x in purities]}")
        assert f_ys >= 1 - 1e-8
        assert all(f >= 1 - 1e-8 for f in fids)
        assert all(abs(x - 1.0) <= 1e-8 for x in purities)


# 8 ---------------------------------------------------------------------------

def test_criterion_8_reduced_state_oracle(criterion):
    with criterion("8", budget_s=10.0) as c:
        chi_a, chi_ab, chi_b = 0.3, 1.0, 0.17
        dim = 24
        sp = FockSpace(dim, dim)
        ca = coherent_amplitudes(ROOT2, dim)
        ca /= np.linalg.norm(ca)
        psi = product_state(ca, ca)
        na, nb = number_diagonals(sp)
        energy = -chi_a * na**2 + chi_ab * na * nb - chi_b * nb**2
        errs_beta, errs_alpha = [], []
        for t in (0.37, 1.91, 4.4):
            ref = partial_trace_b(np.exp(-1j * energy * t) * psi, sp)
            spec = CoherentSpec(ROOT2, ROOT2)
            errs_beta.append(np.max(np.abs(reduced_cavity_dm(spec, t, chi_a, chi_ab, "beta2", dim) - ref)))
            errs_alpha.append(np.max(np.abs(reduced_cavity_dm(spec, t, chi_a, chi_ab, "alpha2", dim) - ref)))
        # unequal amplitudes expose the difference between the two conventions
        sp2 = FockSpace(20, 30)
        cb = coherent_amplitudes(2.0, 30)
        psi2 = product_state(coherent_amplitudes(1.0, 20) / np.linalg.norm(coherent_amplitudes(1.0, 20)),
                             cb / np.linalg.norm(cb))
        na2, nb2 = number_diagonals(sp2)
        ref2 = partial_trace_b(np.exp(-1j * (-chi_a * na2**2 + chi_ab * na2 * nb2) * 0.8) * psi2, sp2)
        spec2 = CoherentSpec(1.0, 2.0)
        alpha_gap = np.max(np.abs(reduced_cavity_dm(spec2, 0.8, chi_a, chi_ab, "alpha2", 20) - ref2))
        beta_gap = np.max(np.abs(reduced_cavity_dm(spec2, 0.8, chi_a, chi_ab, "beta2", 20) - ref2))
        c.detail = (f"|beta|^2 max error {max(errs_beta):.1e}; |alpha|^2 convention error "
                    f"{max(errs_alpha):.1e} at |alpha|=|beta|, {alpha_gap:.2e} at |alpha|=1, "
                    f"|beta|=2 (|beta|^2 there {beta_gap:.1e})")
        assert max(errs_beta) < 1e-8
        assert beta_gap < 1e-8
        assert alpha_gap > 1e-3


# 9 ---------------------------------------------------------------------------

def test_criterion_9_open_system(criterion):
    with criterion("9", budget_s=120.0) as c:
        # trace drift: driven Kerr system with all dissipators, gamma T = 5
        sp = FockSpace(6, 8)
        ep = EffectiveParams(0.4, 0.3, 0.05, 0.04, 0.03)
        H = build_effective_hamiltonian(ep, DriveParams(cavity_amp=0.3, mech_amp=0.2), sp)
        L = LindbladSpec(kappa=1.0, gamma=1.0, n_bar=0.3)
        tr = integrate_master(fock_vector(0, sp.dim), H, L, sp, T=5.0, dt=0.005, samples=51)
        drift = float(np.max(tr.trace_error))

        # relaxation of the undriven mechanical mode to N_bar
        n_bar = 0.5
        sp_r = FockSpace(2, 20)
        tr_r = integrate_master(fock_vector(0, sp_r.dim), np.zeros((sp_r.dim, sp_r.dim)),
                                LindbladSpec(gamma=1.0, n_bar=n_bar), sp_r, T=15.0, dt=0.01,
                                samples=4)
        relax_err = abs(tr_r.n_b[-1] - n_bar) / n_bar

        # cat coherence decay, |beta|^2 = 4, N_bar = 0.5
        beta, gamma = 2.0, 1.0
        sp_c = FockSpace(2, 40)
        cp, cm = coherent_amplitudes(beta, 40), coherent_amplitudes(-beta, 40)
        cat = product_state(fock_vector(0, 2), cp + cm)
        cat /= np.linalg.norm(cat)
        tr_c = integrate_master(cat, np.zeros((sp_c.dim, sp_c.dim)),
                                LindbladSpec(gamma=gamma, n_bar=n_bar), sp_c, T=0.01, dt=1e-4,
                                samples=11, keep_states=True)
        pp = product_state(fock_vector(0, 2), cp)
        pm = product_state(fock_vector(0, 2), cm)
        coh = np.array([abs(np.vdot(pp, r @ pm)) for r in tr_c.states])
        rate = -np.polyfit(tr_c.times, np.log(coh), 2)[1]
        p = PhysicalParams.from_angular(1.0, cavity_decay=1.0, mech_decay=gamma,
                                        mean_occupation=n_bar)
        tau_b = coherence_times(p, CoherentSpec(1.0, beta)).tau_b
        rate_err = abs(rate * tau_b - 1.0)
        c.detail = (f"trace drift {drift:.1e}, <n_b> relative error {relax_err:.1e}, "
                    f"cat decay rate {rate:.3f} vs 1/tau_b {1 / tau_b:.3f} ({rate_err:.1%})")
        assert drift < 1e-8
        assert relax_err < 0.01
        assert rate_err < 0.10


# 10 --------------------------------------------------------------------------

def _draw(rng, bistable):
    if bistable:
        ep = EffectiveParams(omega_c_tilde=rng.uniform(1, 4), Omega_tilde=rng.uniform(1, 4),
                             chi_a=rng.uniform(0.05, 0.15), chi_b=rng.uniform(0.05, 0.15),
                             chi_ab=rng.uniform(-0.1, 0.1))
        drives = rng.uniform(2, 6, size=2)
    else:
        ep = EffectiveParams(omega_c_tilde=rng.uniform(-4, 0), Omega_tilde=rng.uniform(-4, 0),
                             chi_a=rng.uniform(0.0, 0.1), chi_b=rng.uniform(0.0, 0.1),
                             chi_ab=rng.uniform(-0.1, 0.1))
        drives = rng.uniform(0.5, 4, size=2)
    return ep, rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0), drives[0], drives[1]


def test_criterion_10_semiclassical_consistency(criterion):
    with criterion("10", budget_s=60.0) as c:
        rng = np.random.default_rng(2024)
        n_points, n_multi, worst, disagreements = 0, 0, 0.0, []
        for i in range(20):
            ep, kappa, gamma, eps, eta = _draw(rng, bistable=i % 2 == 0)
            fps = coupled_fixed_points(ep, kappa, gamma, eps, eta).points
            n_multi += len(fps) > 1
            for fp in fps:
                n_points += 1
                worst = max(worst, fp.residual_a, fp.residual_b)
                z = np.array([fp.alpha, fp.beta])
                d = 1e-6 * (1 + np.abs(z)) * np.array([1 + 1j, 1 - 1j]) / ROOT2
                sol = integrate_mean_field(ep, kappa, gamma, eps, eta, z[0] + d[0], z[1] + d[1],
                                           T=100 / min(kappa, gamma))
                y = sol.y[:, -1]
                growth = np.linalg.norm(np.array([y[0] + 1j * y[1], y[2] + 1j * y[3]]) - z) \
                    / np.linalg.norm(d)
                if (growth < 1.0) != (fp.stability == "stable"):
                    disagreements.append((i, fp.stability, growth))
        c.detail = (f"{n_points} fixed points over 20 draws ({n_multi} multistable), "
                    f"max residual {worst:.1e}, {len(disagreements)} label disagreements")
        assert worst <= 1e-9
        assert not disagreements
        assert 0 < n_multi < 20


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
