"""Acceptance criteria, one PASS/FAIL line each (see the terminal summary).

Criteria that fail are reported as failures: the checks are implemented as
stated and the tests are not relaxed.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy import special

from betasource.charpoly import (
    CharPolyQuery,
    cue_mc_moment,
    cue_moment,
    duality_check_gaussian,
    duality_check_laguerre,
    ensemble_average_quad,
    exact_k_gaussian,
    exact_k_laguerre,
    mc_charpoly_avg,
)
from betasource.combinatorics import (
    DomainError,
    JackParams,
    apply_operator_pointwise,
    enumerate_partitions,
    jack_eval,
    jack_polynomial,
    schur_eval,
)
from betasource.ensembles import EnsembleSpec, Family
from betasource.hyperfun import (
    HypergeometricSpec,
    TruncationPolicy,
    check_1f1_identity,
    haar_mc_0f0,
    hyperg_two_set,
)
from betasource.scalinglimits import (
    crit_b,
    g_duality_sides,
    gauss_g,
    hard_w,
    pearcey_p,
    w_duality_sides,
)
from betasource.transition import ExperimentConfig, render, run_convergence_scan

ALPHAS = (Fraction(1, 2), Fraction(1), Fraction(2))


# --- 1: Jack kernel -------------------------------------------------------------------------


def test_c1_jack_eigen_residual(report):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for alpha in ALPHAS:
        for n in range(1, 5):
            for k in range(0, 7):
                for kappa in enumerate_partitions(k, n):
                    p = jack_polynomial(kappa, JackParams(alpha, n))
                    for _ in range(20):
                        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
                        value = jack_eval(p, x)
                        lhs = apply_operator_pointwise(p, x)
                        rhs = float(p.eigenvalue) * value
                        # eps_kappa vanishes for some kappa at these alpha; scale by |J| there
                        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), abs(value)))
    elapsed = time.perf_counter() - start
    report("C1a Jack eigen-equation residual < 1e-8 (|kappa|<=6, n<=4), <= 60 s",
           worst < 1e-8 and elapsed <= 60, f"max rel residual {worst:.2e}, {elapsed:.1f} s")


def test_c1_schur_cross_check(report):
    rng = np.random.default_rng(7)
    worst = 0.0
    for n in range(1, 5):
        for k in range(1, 7):
            for kappa in enumerate_partitions(k, n):
                p = jack_polynomial(kappa, JackParams(1, n))
                ratios = []
                for _ in range(20):
                    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
                    ratios.append(jack_eval(p, x) / schur_eval(kappa, x))
                ratios = np.array(ratios)
                worst = max(worst, float(np.max(np.abs(ratios - ratios[0]) / abs(ratios[0]))))
    report("C1b alpha=1 Jack/Schur ratio constant to 1e-10", worst < 1e-10, f"max spread {worst:.2e}")


# --- 2: hypergeometric identities ---------------------------------------------------------


def test_c2_hypergeometric_identities(report):
    start = time.perf_counter()
    rng = np.random.default_rng(11)
    policy = TruncationPolicy(40)
    worst = {"zero-x": 0.0, "constant-y": 0.0, "1F1": 0.0}
    for beta in (1, 2, 4):
        for n in (2, 4):
            spec = HypergeometricSpec((), (), beta / 2, n)
            for _ in range(5):
                y = rng.uniform(-1, 1, n)
                x = rng.uniform(-1, 1, n)
                c = rng.uniform(-1, 1)
                v0 = hyperg_two_set(spec, np.zeros(n), y, policy).value
                worst["zero-x"] = max(worst["zero-x"], abs(v0 - 1))
                v1 = hyperg_two_set(spec, x, c * np.ones(n), policy).value
                worst["constant-y"] = max(worst["constant-y"], abs(v1 / math.exp(c * x.sum()) - 1))
                worst["1F1"] = max(worst["1F1"], check_1f1_identity(beta, n, y, policy))
    elapsed = time.perf_counter() - start
    ok = all(v < 1e-8 for v in worst.values()) and elapsed <= 60
    report("C2 hypergeometric identities at 1e-8 (beta in {1,2,4}, n in {2,4}), <= 60 s", ok,
           ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f", {elapsed:.1f} s")


# --- 3: Haar oracle -----------------------------------------------------------------------


def test_c3_haar_oracle(report):
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    rates = {}
    for N in (2, 3):
        hits = 0
        for trial in range(100):
            x = rng.uniform(-1, 1, N)
            f = rng.uniform(-1, 1, N)
            series = hyperg_two_set(HypergeometricSpec((), (), 1.0, N), x, f).value
            est = haar_mc_0f0(N, x, f, samples=100_000, seed=1000 * N + trial)
            hits += est.within(series)
        rates[N] = hits / 100
    elapsed = time.perf_counter() - start
    ok = all(r >= 0.99 for r in rates.values()) and elapsed <= 300
    report("C3 Haar MC vs series within 3 stderr in >= 99% of 100 trials (N=2,3), <= 5 min", ok,
           f"rates {rates}, {elapsed:.0f} s")


# --- 4: density normalisation --------------------------------------------------------------


def test_c4_density_normalises(report):
    worst = 0.0
    for family in Family:
        for beta in (1, 2, 4):
            for N, f in ((1, (0.7,)), (2, (1.0, 0.3))):
                a = 1.5 if family is Family.LAGUERRE else None
                val, _ = ensemble_average_quad(family, beta, N, 0.6, f, lambda xs: np.ones(len(xs)), a=a, rtol=1e-8)
                worst = max(worst, abs(val - 1))
    report("C4 density integrates to 1 +- 1e-4 (N<=2, both families, beta in {1,2,4})", worst <= 1e-4,
           f"max |mass - 1| {worst:.1e}")


# --- 5: duality ----------------------------------------------------------------------------

DUALITY_CASES = {
    (1, 1): ((0.7,), (0.3,)),
    (1, 2): ((0.7,), (0.3, 0.9)),
    (2, 3): ((0.5, 0.9), (0.2, 0.5, 1.0)),
}


def test_c5_duality(report):
    start = time.perf_counter()
    details, ok = [], True
    for beta in (1, 2):
        for (n, N), (s, f) in DUALITY_CASES.items():
            res_g = duality_check_gaussian(n, N, beta, 1.0, s, f, samples=100_000, seed=17)
            res_l = duality_check_laguerre(n, N, 1.0, beta, 1.0, s, f, samples=100_000, seed=19)
            for name, res in (("G", res_g), ("L", res_l)):
                good = res.consistent(nsigma=3, quad_tol=1e-6)
                ok &= good
                tag = f"{res.lhs_method}/{res.rhs_method}"
                if tag == "quad/quad":
                    gap = f"rel diff {abs(res.difference) / max(1.0, abs(res.rhs.mean)):.1e}"
                else:
                    gap = f"{abs(res.difference) / (res.lhs.stderr + res.rhs.stderr):.2f} sigma"
                details.append(f"{name} b{beta} ({n},{N}) {tag} {gap}")
    elapsed = time.perf_counter() - start
    ok &= elapsed <= 600
    report("C5 duality identities (both families, beta in {1,2}), <= 10 min", ok,
           "; ".join(details) + f"; {elapsed:.0f} s")


# --- 6: exact K vs direct MC ---------------------------------------------------------------


def _theorem_source(family, N, b=1.0, beta=2):
    if family is Family.GAUSSIAN:
        c = math.sqrt(beta / 2) * b
        return (c,) * (N // 2) + (-c,) * (N // 2)
    return (beta * b / 2,) * N


def test_c6_exact_k_vs_mc(report):
    details, ok = [], True
    t, b, y = 2.0, 1.0, 0.5
    for family in Family:
        for N in (2, 4):
            f = _theorem_source(family, N, b)
            if family is Family.GAUSSIAN:
                s = t / math.sqrt(t - b**2) * y / N
                spec = EnsembleSpec(family, 2, N, t / N, f)
                exact = exact_k_gaussian(CharPolyQuery((s,), spec))
            else:
                s = t**2 / (t - b) * y / N**2
                spec = EnsembleSpec(family, 2, N, t / N, f, p_dim=N + 1)
                exact = exact_k_laguerre(CharPolyQuery((s,), spec))
            est = mc_charpoly_avg(CharPolyQuery((s,), spec), samples=100_000, seed=23 + N)
            nsig = abs(est.mean - exact) / est.stderr
            ok &= nsig <= 3
            details.append(f"{family.value[0].upper()} N={N} {nsig:.2f} sigma")
    report("C6 exact-K identity vs direct MC within 3 stderr (n=1, N in {2,4})", ok, "; ".join(details))


# --- 7: limit-function identities ----------------------------------------------------------


def test_c7a_g_and_w_identically_one(report):
    grid = np.linspace(-3, 3, 13)
    worst = 0.0
    for alpha in (0.5, 1.0, 2.0):
        for y in grid:
            worst = max(worst, abs(gauss_g(alpha, [y]).value - 1), abs(hard_w(1.0, alpha, [y]).value - 1))
    report("C7a G_{1,0} == 1 and W_{1,0} == 1 to 1e-8 on y-grids", worst < 1e-8, f"max dev {worst:.1e}")


def test_c7b_duality_relations_as_stated(report):
    worst = 0.0
    for alpha in (0.5, 2.0):
        for y, sigma in ((0.3, 0.8), (-0.6, 0.2)):
            g = g_duality_sides(alpha, [y], [sigma], form="printed")
            w = w_duality_sides(1.2, alpha, [y], [sigma], form="printed")
            worst = max(worst, abs(g[0] - g[1]), abs(w[0] - w[1]))
    report("C7b G- and W-duality relations as stated, (n,m)=(1,1), to 1e-6", worst < 1e-6,
           f"max gap {worst:.2e}")


def test_c7b_duality_relations_corrected(report):
    worst = 0.0
    for alpha in (0.5, 2.0):
        for y, sigma in ((0.3, 0.8), (-0.6, 0.2)):
            g = g_duality_sides(alpha, [y], [sigma], form="corrected")
            w = w_duality_sides(1.2, alpha, [y], [sigma], form="corrected")
            worst = max(worst, abs(g[0] - g[1]), abs(w[0] - w[1]))
    report("C7b' G/W duality with prefactor (i/sqrt(alpha))^{mn} and a' = a alpha, to 1e-6", worst < 1e-6,
           f"max gap {worst:.2e}")


def test_c7c_all_four_at_zero(report):
    values = {
        "P": pearcey_p(1.0, 0.0, [0.0]).value,
        "G": gauss_g(1.0, [0.0]).value,
        "B": crit_b(1.0, 1.0, 0.0, [0.0]).value,
        "W": hard_w(1.0, 1.0, [0.0]).value,
    }
    ok = all(abs(v - 1) < 1e-8 for v in values.values())
    report("C7c P, G, B, W all equal 1 at zero arguments to 1e-8", ok,
           ", ".join(f"{k}={v.real:.6f}" for k, v in values.items()))


# --- 8: CUE moments ------------------------------------------------------------------------


def test_c8_cue(report):
    exact_ok = all(cue_moment(N, 1, exact=True) == N + 1 for N in range(1, 51))
    mc = [cue_mc_moment(N, 1, samples=100_000, seed=N) for N in (1, 2)]
    mc_ok = all(est.within(N + 1) for N, est in zip((1, 2), mc))
    asym_ok = all(abs(cue_moment(N, 1) / N - 1) <= 2 / N for N in range(2, 200))
    report("C8 CUE moments: exact N+1 (N<=50), Haar MC U(1),U(2), asymptotic bound",
           exact_ok and mc_ok and asym_ok,
           f"exact {exact_ok}, MC {[f'{e.mean.real:.4f}+-{e.stderr:.4f}' for e in mc]}, asymptotic {asym_ok}")


# --- 9: phase-transition convergence -------------------------------------------------------

N_LIST = (16, 64, 256)


def _scan(**kw):
    start = time.perf_counter()
    rows = run_convergence_scan(ExperimentConfig(N_list=N_LIST, **kw))
    return rows, time.perf_counter() - start


def _converged(rows, elapsed, tol=0.05):
    final, first = rows[-1], rows[0]
    rel = final.abs_error / abs(final.limit_value)
    ok = final.status == "ok" and rel <= tol and final.abs_error < first.abs_error and elapsed <= 600
    detail = ", ".join(f"N={r.N} ratio={r.ratio.real:.5f}" for r in rows)
    return ok, f"{detail}, limit={final.limit_value.real:.5f}, rel err {rel:.2%}, {elapsed:.0f} s"


def test_c9a_gaussian_subcritical_n1(report):
    try:
        ExperimentConfig(family="gaussian", beta=2, n=1, b=1.0, t=2.0, N_list=N_LIST, y_grid=[[0.5]])
        ok, detail = False, "unexpectedly accepted"
    except DomainError as exc:
        ok, detail = False, f"not computable: {exc}"
    report("C9a Gaussian subcritical t=2, n=1, within 5% at N=256", ok, detail)


def test_c9a_gaussian_subcritical_n2_derived(report):
    rows, elapsed = _scan(family="gaussian", beta=2, n=2, b=1.0, t=2.0, y_grid=[[0.5, -0.3]], const_form="derived")
    ok, detail = _converged(rows, elapsed)
    report("C9a' Gaussian subcritical t=2, n=2, rederived constant", ok, detail)


def test_c9a_gaussian_subcritical_n2_printed(report):
    rows, elapsed = _scan(family="gaussian", beta=2, n=2, b=1.0, t=2.0, y_grid=[[0.5, -0.3]], const_form="printed")
    ok, detail = _converged(rows, elapsed)
    report("C9a'' Gaussian subcritical t=2, n=2, constant as stated", ok, detail)


def test_c9b_gaussian_critical(report):
    rows, elapsed = _scan(family="gaussian", beta=2, n=1, b=1.0, regime="critical", tau=0.0, y_grid=[[0.0]])
    ok, detail = _converged(rows, elapsed)
    target = special.gamma(0.25) / (2 * math.sqrt(math.pi))
    ok &= abs(rows[-1].ratio - target) <= 0.05 * target
    report("C9b Gaussian critical tau=0, y=0 vs Gamma(1/4)/(2 sqrt(pi))", ok, detail)


def test_c9c_gaussian_supercritical(report):
    rows, elapsed = _scan(family="gaussian", beta=2, n=1, b=1.0, t=0.5, y_grid=[[0.6]])
    ok, detail = _converged(rows, elapsed)
    report("C9c Gaussian supercritical t=1/2 vs G_{1,0} = 1", ok, detail)


def test_c9d_laguerre_subcritical(report):
    rows, elapsed = _scan(family="laguerre", beta=2, n=1, a=1.0, b=1.0, t=2.0, y_grid=[[0.5]])
    ok, detail = _converged(rows, elapsed)
    report("C9d Laguerre subcritical t=2 vs 0F1", ok, detail)


def test_c9e_laguerre_critical(report):
    rows, elapsed = _scan(family="laguerre", beta=2, n=1, a=1.0, b=1.0, regime="critical", tau=0.0, y_grid=[[0.0]])
    ok, detail = _converged(rows, elapsed)
    report("C9e Laguerre critical tau=0, y=0 vs B_{1,0}", ok, detail)


def test_c9f_laguerre_supercritical(report):
    rows, elapsed = _scan(family="laguerre", beta=2, n=1, a=1.0, b=1.0, t=0.5, y_grid=[[0.5]])
    ok, detail = _converged(rows, elapsed)
    report("C9f Laguerre supercritical t=1/2 vs W_{1,0} = 1", ok, detail)


# --- 10: reproducibility -------------------------------------------------------------------


def _cli_bytes(args, tmp_path, workers):
    from betasource.cli import main

    out = tmp_path / f"w{workers}-{args[0]}.csv"
    assert main([*args, "--workers", str(workers), "--out", str(out)]) == 0
    return out.read_bytes()


def test_c10_reproducible_bytes(report, tmp_path):
    quad_cfg = ExperimentConfig(family="gaussian", beta=2, n=1, b=1.0, regime="critical", tau=0.3,
                                N_list=(16, 32, 64), y_grid=[[0.0], [0.4], [0.8]], seed=5)
    mc_cfg = ExperimentConfig(family="gaussian", beta=2, n=4, b=1.0, t=2.0, N_list=(4, 8),
                              y_grid=[[0.2, -0.1, 0.3, 0.0]], samples=20_000, seed=5)
    same = True
    sizes = []
    for cfg in (quad_cfg, mc_cfg):
        outputs = [render(run_convergence_scan(cfg, workers=w)) for w in (1, 4, 8)]
        same &= len(set(outputs)) == 1
        sizes.append(len(outputs[0]))
    commands = (
        ["sample", "--family", "laguerre", "--beta", "1.5", "--a", "1", "--t", "1", "--N", "3",
         "--f", "0.5,1,2", "--sampler", "sde", "--samples", "400", "--seed", "9"],
        ["kavg", "--family", "gaussian", "--beta", "2", "--t", "1", "--f", "0.5,0,-0.5,1",
         "--s", "0.3", "--method", "mc", "--samples", "50000", "--seed", "9"],
    )
    for args in commands:
        outputs = [_cli_bytes(args, tmp_path, w) for w in (1, 4, 8)]
        same &= len(set(outputs)) == 1
        sizes.append(len(outputs[0]))
    report("C10 identical CSV bytes for workers 1, 4, 8 (scans, SDE samples, MC average)", same, f"CSV sizes {sizes}")
