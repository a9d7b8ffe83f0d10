"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines as they complete. The trend criteria (10-13) run full 100-trial
paired sweeps at the production problem sizes and dominate the runtime.
"""

import math

import numpy as np
import pytest

from noisefold.experiments import ExperimentConfig, SweepSpec, run_trials, sweep_trials
from noisefold.sensing import (MixtureSpec, NoiseSpec, bernoulli_ensemble,
                               gaussian_ensemble, gen_low_rank, map_from_matrix,
                               row_orthonormal_ensemble, rng_from_seed,
                               synthesize, vec)
from noisefold.solver import SolverConfig, admm_recover, solve_normal_equations
from noisefold.theory import (NspConstants, check_sandwich, frob_nsp_bound,
                              null_space_basis, stable_nsp_bound,
                              stechkin_check, sv_perturbation_check)
from noisefold.verify import svt_subgradient_violation
from noisefold.whitening import (covariance, mixture_theta, noise_level_l2,
                                 theta, whiten)

PAPER_NOISE = NoiseSpec(sigma=0.01, sigma0=0.05)
ENSEMBLES = {
    "gaussian": gaussian_ensemble,
    "bernoulli": bernoulli_ensemble,
    "row_orthonormal": row_orthonormal_ensemble,
}


def report(num, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} criterion {num}: {detail}")
    assert ok, f"criterion {num}: {detail}"


# ----------------------------------------------------------------- 1

def test_criterion_01_whitening_sandwich():
    lines = []
    ok = True
    for m, n, M in ((30, 30, 750), (40, 40, 200)):
        for name, builder in ENSEMBLES.items():
            amap = builder(m, n, M, seed=(1, m, M))
            system = whiten(amap, np.zeros(M), PAPER_NOISE)
            rep = check_sandwich(amap, system, 1000, seed=(2, m, M))
            ok &= rep.sharp_max_violation <= 1e-9
            tag = f"{name}@({m},{n},{M})"
            if rep.conclusive:
                ok &= rep.max_violation <= 1e-9
                lines.append(f"{tag} viol={rep.max_violation:.1e}")
            else:
                lines.append(f"{tag} delta_eff={rep.delta_eff:.2f}>=1 "
                             f"(inconclusive; sharp viol={rep.sharp_max_violation:.1e})")
    report(1, ok, "whitening sandwich, 1000 X per ensemble/size: " + "; ".join(lines))


# ----------------------------------------------------------------- 2

def test_criterion_02_sigma1_identities():
    worst_eq = 0.0
    worst_inv = 0.0
    for m, n, M in ((30, 30, 750), (40, 40, 200)):
        for name, builder in ENSEMBLES.items():
            amap = builder(m, n, M, seed=(3, m, M))
            th = theta(PAPER_NOISE, m, n, M)
            sig1 = covariance(amap, PAPER_NOISE) / th
            dev = sig1 - np.eye(M)
            lhs = float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (dev + dev.T)))))
            gram_scaled = (M / (m * n)) * (amap.matrix @ amap.matrix.T)
            delta = float(np.max(np.abs(
                np.linalg.eigvalsh(np.eye(M) - 0.5 * (gram_scaled + gram_scaled.T)))))
            rhs = PAPER_NOISE.sigma0**2 * m * n / (th * M) * delta
            worst_eq = max(worst_eq, abs(lhs - rhs) / max(rhs, 1.0))
            if delta < 1.0:
                inv = np.linalg.inv(sig1) - np.eye(M)
                lhs_inv = float(np.max(np.abs(
                    np.linalg.eigvalsh(0.5 * (inv + inv.T)))))
                bound = delta / (1.0 - delta)
                worst_inv = max(worst_inv, (lhs_inv - bound) / bound)
    ok = worst_eq <= 1e-9 and worst_inv <= 1e-9
    report(2, ok, f"||Sigma1-I|| identity rel err {worst_eq:.1e}; "
                  f"inverse bound excess {worst_inv:.1e}")


# ----------------------------------------------------------------- 3

def test_criterion_03_null_space_agreement():
    amap = gaussian_ensemble(10, 10, 60, seed=4)
    system = whiten(amap, np.zeros(60), PAPER_NOISE)
    basis_a = null_space_basis(amap)
    b_norm = float(np.linalg.norm(system.b, 2))
    a_norm = float(np.linalg.norm(amap.matrix, 2))
    worst = 0.0
    for v in basis_a:
        worst = max(worst, float(np.linalg.norm(system.b @ vec(v)))
                    / (b_norm * np.linalg.norm(v)))
    bmap = map_from_matrix(system.b, 10, 10)
    basis_b = null_space_basis(bmap)
    for v in basis_b:
        worst = max(worst, float(np.linalg.norm(amap.matrix @ vec(v)))
                    / (a_norm * np.linalg.norm(v)))
    ok = len(basis_a) == 40 and len(basis_b) == 40 and worst <= 1e-8
    report(3, ok, f"null spaces agree both ways at (10,10,60): "
                  f"{len(basis_a)}+{len(basis_b)} elements, worst {worst:.1e}")


# ----------------------------------------------------------------- 4

def test_criterion_04_noise_folding_variance():
    m = n = 30
    M = 750
    amap = gaussian_ensemble(m, n, M, seed=5)
    system = whiten(amap, np.zeros(M), PAPER_NOISE)
    rng = rng_from_seed((6, 0))
    draws = 10_000
    chunk = 2000
    acc = np.zeros(M)
    acc2 = np.zeros(M)
    for start in range(0, draws, chunk):
        k = min(chunk, draws - start)
        z = PAPER_NOISE.sigma0 * rng.standard_normal((k, m * n))
        w = PAPER_NOISE.sigma * rng.standard_normal((k, M))
        u = (z @ amap.matrix.T + w) @ system.whitener.T
        acc += u.sum(axis=0)
        acc2 += (u * u).sum(axis=0)
    var = acc2 / draws - (acc / draws) ** 2
    worst = float(np.max(np.abs(var - 0.0031)) / 0.0031)
    ok = worst <= 0.10
    report(4, ok, f"Var(u_i) within {worst:.1%} of theta=0.0031 over 10^4 draws")


# ----------------------------------------------------------------- 5

def test_criterion_05_l2_coverage():
    th, M = 0.0031, 750
    eps = noise_level_l2(th, M)
    assert eps == pytest.approx(1.6618879334871381, rel=1e-12)
    rng = rng_from_seed((7, 0))
    draws = 100_000
    hits = 0
    chunk = 5000
    for start in range(0, draws, chunk):
        k = min(chunk, draws - start)
        u2 = th * np.sum(rng.standard_normal((k, M)) ** 2, axis=1)
        hits += int(np.count_nonzero(u2 <= eps**2))
    frac = hits / draws
    target = 1.0 - 1.0 / M - 0.002
    ok = frac >= target
    report(5, ok, f"P(||u||2 <= {eps:.4f}) = {frac:.5f} >= {target:.5f}")


# ----------------------------------------------------------------- 6

def test_criterion_06_mixture_moments():
    noise = NoiseSpec(sigma=0.01, sigma0=0.05,
                      mixture=MixtureSpec(xi=0.1, kappa=100.0, eta=0.0, gamma_mix=1.0))
    thp = mixture_theta(noise, 30, 30, 750)
    assert thp == pytest.approx(4.09e-3, rel=1e-12)
    M = 750
    draws = 100_000
    rng = rng_from_seed((8, 0))
    sums = {1.0: 0.0, 1.5: 0.0, 2.0: 0.0}
    chunk = 5000
    for start in range(0, draws, chunk):
        k = min(chunk, draws - start)
        u = math.sqrt(thp) * rng.standard_normal((k, M))
        au = np.abs(u)
        for p in sums:
            sums[p] += float(np.sum(au**p))
    from noisefold.whitening import mixture_moment_p
    devs = {}
    for p, total in sums.items():
        expect = mixture_moment_p(thp, M, p)
        devs[p] = abs(total / draws - expect) / expect
    # p=2 additionally against the analytic M*theta' within Monte-Carlo error
    se_rel = math.sqrt(2.0 / (draws * M))
    p2_dev = abs(sums[2.0] / draws - M * thp) / (M * thp)
    ok = max(devs.values()) <= 0.02 and p2_dev <= 4.0 * se_rel
    report(6, ok, "E||u||_p^p rel dev: " +
           ", ".join(f"p={p}: {d:.2%}" for p, d in sorted(devs.items())) +
           f"; p=2 vs M*theta': {p2_dev:.2e} (4*SE={4 * se_rel:.2e})")


# ----------------------------------------------------------------- 7

def test_criterion_07_singular_value_inequalities():
    rng = rng_from_seed((9, 0))
    bad_st = bad_sv = 0
    for _ in range(10_000):
        m = int(rng.integers(2, 13))
        n = int(rng.integers(2, 13))
        x = rng.standard_normal((m, n))
        r = int(rng.integers(1, min(m, n) + 1))
        p = float(rng.uniform(1.0, 4.0))
        if not stechkin_check(x, r, p, slack=1e-9):
            bad_st += 1
    for _ in range(10_000):
        m = int(rng.integers(2, 13))
        n = int(rng.integers(2, 13))
        x = rng.standard_normal((m, n))
        y = rng.standard_normal((m, n))
        if not sv_perturbation_check(x, y, slack=1e-9):
            bad_sv += 1
    ok = bad_st == 0 and bad_sv == 0
    report(7, ok, f"tail-decay violations {bad_st}/10000, "
                  f"perturbation violations {bad_sv}/10000 at 1e-9 slack")


# ----------------------------------------------------------------- 8

def test_criterion_08_bound_constants():
    frob = NspConstants(rho=0.5, tau=1.0, r=4, kind="frobenius_robust")
    stab = NspConstants(rho=0.5, tau=1.0, r=4, kind="stable")
    c1 = frob_nsp_bound(frob, 0.0, 2.0, 0.0) * math.sqrt(4) / 2.0
    c2 = frob_nsp_bound(frob, 0.0, 0.0, 1.0)
    d1 = stable_nsp_bound(stab, 0.0, 2.0, 0.0) * math.sqrt(4) / 2.0
    d2 = stable_nsp_bound(stab, 0.0, 0.0, 1.0)
    ok = (c1, c2, d1, d2) == (9.0, 14.0, 12.0, 10.0)
    report(8, ok, f"C1={c1}, C2={c2}, D1={d1}, D2={d2} "
                  "(expected 9, 14, 12, 10)")


# ----------------------------------------------------------------- 9

def test_criterion_09_solver_correctness():
    amap = row_orthonormal_ensemble(4, 4, 16, seed=10)
    x = gen_low_rank(4, 4, 1, seed=11)
    obs = synthesize(amap, x, NoiseSpec(), seed=12)
    system = whiten(amap, obs.y, NoiseSpec())
    res = admm_recover(system, SolverConfig(lam=1e6))
    rel = float(np.linalg.norm(res.x_star - x) / np.linalg.norm(x))

    rng = rng_from_seed((13, 0))
    worst_ne = 0.0
    for _ in range(100):
        b = rng.standard_normal((12, 30))
        rhs = rng.standard_normal(30)
        lam = float(rng.uniform(0.05, 50.0))
        rho1 = float(rng.uniform(1e-4, 2.0))
        got = solve_normal_equations(b, rhs, lam, rho1)
        kmat = lam * (b.T @ b) + rho1 * np.eye(30)
        worst_ne = max(worst_ne, float(
            np.linalg.norm(kmat @ got - rhs) / np.linalg.norm(rhs)))

    worst_svt = 0.0
    for _ in range(100):
        x_p = rng.standard_normal((8, 6))
        tau = float(rng.uniform(0.05, 3.0))
        worst_svt = max(worst_svt, svt_subgradient_violation(x_p, tau))

    ok = rel <= 1e-4 and worst_ne <= 1e-8 and worst_svt <= 1e-8
    report(9, ok, f"fixture rel_err {rel:.1e}; normal-eq residual {worst_ne:.1e} "
                  f"(100 systems); svt subgradient {worst_svt:.1e} (100 prox)")


# ----------------------------------------------------------------- 10

def test_criterion_10_exact_recovery():
    config = ExperimentConfig(
        ensemble="gaussian", m=30, n=30, r=3, M=500,
        noise=NoiseSpec(sigma=0.0, sigma0=0.0),
        reg_lambda=1e-4,  # solver data weight 1e4
        n_trials=100, base_seed=0,
    )
    results = run_trials(config)
    hits = sum(r.rel_err <= 1e-3 for r in results)
    ok = hits >= 95
    report(10, ok, f"noiseless rank-3 recovery at M=500, lam_data=1e4: "
                   f"{hits}/100 seeds with rel_err <= 1e-3")


# ----------------------------------------------------------------- 11

@pytest.fixture(scope="module")
def sigma0_sweep_results():
    out = {}
    for ensemble in ("gaussian", "bernoulli"):
        config = ExperimentConfig(
            ensemble=ensemble, m=30, n=30, r=6, M=750, reg_lambda=0.1,
            noise=NoiseSpec(sigma=0.01, sigma0=0.05), n_trials=100, base_seed=0,
            sweep=SweepSpec(axis="sigma0", grid=(0.05, 0.10, 0.15)),
        )
        out[ensemble] = sweep_trials(config)
    return out


def test_criterion_11_paper_trends(sigma0_sweep_results):
    lines = []
    ok = True
    for ensemble in ("gaussian", "bernoulli"):
        per_point = sigma0_sweep_results[ensemble]
        rels = [float(np.mean([t.rel_err for t in per_point[s0]]))
                for s0 in (0.05, 0.10, 0.15)]
        inc = all(b > a for a, b in zip(rels, rels[1:]))
        ok &= inc
        lines.append(f"{ensemble} sigma0 rel_err {['%.4f' % v for v in rels]} "
                     f"{'inc' if inc else 'NOT inc'}")

        m_cfg = ExperimentConfig(
            ensemble=ensemble, m=30, n=30, r=6, M=750, reg_lambda=0.1,
            noise=NoiseSpec(sigma=0.01, sigma0=0.05), n_trials=100, base_seed=0,
            sweep=SweepSpec(axis="measurements", grid=(720, 760, 800)),
        )
        snrs = [float(np.mean([t.snr_db for t in trials]))
                for _, trials in sorted(sweep_trials(m_cfg).items())]
        nondec = all(b >= a for a, b in zip(snrs, snrs[1:]))
        ok &= nondec
        lines.append(f"{ensemble} M snr {['%.2f' % v for v in snrs]} "
                     f"{'nondec' if nondec else 'NOT nondec'}")

        r_cfg = ExperimentConfig(
            ensemble=ensemble, m=30, n=30, r=6, M=700, reg_lambda=0.5,
            noise=NoiseSpec(sigma=0.01, sigma0=0.05), n_trials=100, base_seed=0,
            sweep=SweepSpec(axis="rank", grid=(4, 5, 6, 7, 8)),
        )
        rels_r = [float(np.mean([t.rel_err for t in trials]))
                  for _, trials in sorted(sweep_trials(r_cfg).items())]
        noninc_drop = all(b >= a for a, b in zip(rels_r, rels_r[1:]))
        ok &= noninc_drop
        lines.append(f"{ensemble} rank rel_err {['%.4f' % v for v in rels_r]} "
                     f"{'inc with r' if noninc_drop else 'NOT monotone'}")
    report(11, ok, "; ".join(lines))


def test_criterion_11b_paired_seed_ordering(sigma0_sweep_results):
    per_point = sigma0_sweep_results["gaussian"]
    lo, hi = per_point[0.05], per_point[0.15]
    wins = sum(a.rel_err <= b.rel_err for a, b in zip(lo, hi))
    ok = wins >= 80
    report("11b (paired-seed design)", ok,
           f"rel_err(0.05) <= rel_err(0.15) for {wins}/100 paired seeds")


def test_criterion_11c_constrained_form_feasibility(sigma0_sweep_results):
    trials = sigma0_sweep_results["gaussian"][0.05]
    th = theta(NoiseSpec(sigma=0.01, sigma0=0.05), 30, 30, 750)
    eps = noise_level_l2(th, 750)
    hits = sum(t.resid_l2 <= eps for t in trials)
    ok = hits >= 90
    report("11c (feasibility link)", ok,
           f"||B vec(X*) - y~||_2 <= {eps:.3f} in {hits}/100 trials")


# ----------------------------------------------------------------- 12

def test_criterion_12_lambda_plateau():
    config = ExperimentConfig(
        ensemble="gaussian", m=30, n=30, r=6, M=750,
        noise=NoiseSpec(sigma=0.01, sigma0=0.05), reg_lambda=1e-3,
        n_trials=100, base_seed=0,
        sweep=SweepSpec(axis="lambda", grid=(1e-9, 1e-6, 1e-3, 1e-1)),
    )
    per_point = sweep_trials(config)
    means = {lam: float(np.mean([t.snr_db for t in trials]))
             for lam, trials in per_point.items()}
    spread = max(means.values()) - min(means.values())
    ok = spread < 3.0
    report(12, ok, "SNR " +
           ", ".join(f"lam={lam:g}: {snr:.2f} dB" for lam, snr in sorted(means.items()))
           + f"; spread {spread:.2f} dB < 3 dB")


# ----------------------------------------------------------------- 13

def test_criterion_13_image_table_trend():
    from noisefold.experiments import image_experiment, synthetic_image
    rows, _ = image_experiment(synthetic_image(), (0.05, 0.10, 0.15, 0.20),
                               reg_lambda=0.5, n_trials=3, base_seed=0)
    psnrs = [row["mean_psnr_db"] for row in rows]
    ssims = [row["mean_ssim"] for row in rows]
    dec_psnr = all(b < a for a, b in zip(psnrs, psnrs[1:]))
    dec_ssim = all(b < a for a, b in zip(ssims, ssims[1:]))
    drop = psnrs[0] - psnrs[-1]
    ok = dec_psnr and dec_ssim and drop >= 4.0
    report(13, ok, f"PSNR {['%.2f' % v for v in psnrs]} dB "
                   f"(drop {drop:.1f} >= 4), SSIM {['%.3f' % v for v in ssims]}")
