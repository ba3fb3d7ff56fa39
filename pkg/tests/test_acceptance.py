"""Acceptance suite: one test per criterion, tolerances pinned.

The asymptotic chaos statements are not quantitatively reproducible at
desk scale, so the criteria below are exact analytic checks, oracle
equivalences, and statistical property gates with fixed seeds.  Each
test prints a PASS line with its headline numbers.
"""

import json
import math
import sys

import numpy as np
import pytest

from conftest import random_mixture, random_step_cdf
from parisphere.chaos import frsb_coupling_demo
from parisphere.functional import certify, cs_value, krsb_search
from parisphere.measures import StepCDF
from parisphere.mixture import MixtureSpec, parse_mixture, xi_derivative, xi_eval
from parisphere.montecarlo import (
    McmcParams,
    SimConfig,
    chaos_experiment,
    covariance_selftest,
    mcmc_run,
    permutation_ks_test,
    sample_disorder,
    uniform_sphere_sample,
)
from parisphere.solver import frsb_solve, onersb_ratio_x, onersb_solve, parisi_solve, rs_check

SPEC2 = parse_mixture("2:1")
SPEC4 = parse_mixture("4:1")
MIX07 = MixtureSpec({2: math.sqrt(0.93), 4: math.sqrt(0.07)})


def _pass(n, msg):
    # bypass capture so one line per criterion always reaches the terminal
    print(f"[acceptance] criterion {n} PASS: {msg}", file=sys.__stdout__)


# ----------------------------------------------------------------- 1


def test_criterion_1_shat_invariance():
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(100):
        alpha = random_step_cdf(rng)
        spec = random_mixture(rng)
        beta = float(rng.uniform(0.2, 2.5))
        top = float(alpha.locations[-1])
        vals = [
            cs_value(spec, beta, alpha, shat=float(s))
            for s in (top, top + 0.4 * (1 - top), top + 0.95 * (1 - top))
        ]
        worst = max(worst, max(vals) - min(vals))
    assert worst <= 1e-10
    _pass(1, f"max |dQ| over shat choices = {worst:.2e} <= 1e-10")


# ----------------------------------------------------------------- 2


def test_criterion_2_rs_closed_value():
    rng = np.random.default_rng(102)
    d0 = StepCDF.delta_zero()
    worst = 0.0
    for _ in range(20):
        spec = random_mixture(rng)
        beta = float(rng.uniform(0.1, 2.0))
        worst = max(worst, abs(cs_value(spec, beta, d0) - beta**2 * xi_eval(spec, 1.0) / 2))
    assert worst <= 1e-14
    _pass(2, f"max |Q(delta_0) - beta^2 xi(1)/2| = {worst:.2e} <= 1e-14")


# ----------------------------------------------------------------- 3


def _onersb_value_bruteforce(p: int, beta: float) -> float:
    """Independent oracle: dense grid + local refinement of the two-atom value.

    Uses the directly-derived two-parameter form of the functional for
    alpha = m on [0, q), 1 on [q, 1] (computed by hand, not via the
    piecewise machinery):
        Q(m, q) = (1/2) [ beta^2 (xi(1) - (1-m) xi(q))
                          + log((1-q+mq)/(1-q)) / m + log(1-q) ]
    """
    b2 = beta * beta

    def q_val(m, q):
        xi_q = q**p
        d = 1.0 - q + m * q
        return 0.5 * (b2 * (1.0 - (1.0 - m) * xi_q) + np.log(d / (1.0 - q)) / m + np.log(1.0 - q))

    lo_m, hi_m, lo_q, hi_q = 1e-6, 1.0 - 1e-6, 1e-6, 1.0 - 1e-6
    best = (np.inf, 0.5, 0.5)
    for _ in range(4):
        ms = np.linspace(lo_m, hi_m, 500)
        qs = np.linspace(lo_q, hi_q, 500)
        mm, qq = np.meshgrid(ms, qs, indexing="ij")
        vals = q_val(mm, qq)
        idx = np.unravel_index(np.argmin(vals), vals.shape)
        best = (float(vals[idx]), float(mm[idx]), float(qq[idx]))
        dm, dq = ms[1] - ms[0], qs[1] - qs[0]
        lo_m, hi_m = max(1e-9, best[1] - 2 * dm), min(1 - 1e-9, best[1] + 2 * dm)
        lo_q, hi_q = max(1e-9, best[2] - 2 * dq), min(1 - 1e-9, best[2] + 2 * dq)
    return best[0]


@pytest.mark.parametrize("p", [4, 6])
@pytest.mark.parametrize("beta", [1.5, 2.0, 3.0])
def test_criterion_3_onersb_stationarity(p, beta):
    spec = MixtureSpec({p: 1.0})
    check = rs_check(spec, beta)
    assert not check.is_rs, f"(p={p}, beta={beta}) must be non-RS (sup = {check.sup_value:.3e})"
    sol = onersb_solve(spec, beta)
    res = max(abs(sol.residuals[0]), abs(sol.residuals[1]))
    assert res <= 1e-8
    cert = certify(spec, beta, sol.measure)
    assert cert.sup_f <= 1e-6
    value = cs_value(spec, beta, sol.measure)
    brute = _onersb_value_bruteforce(p, beta)
    assert abs(value - brute) <= 1e-6
    _pass(3, f"p={p} beta={beta}: residual={res:.1e}, sup f={cert.sup_f:.1e}, |Q - grid|={abs(value - brute):.1e}")


# ----------------------------------------------------------------- 4


def test_criterion_4_x_equation_consistency():
    worst_rhs = 0.0
    worst_mq = 0.0
    for p in range(3, 11):
        x = onersb_ratio_x(p)
        rhs = ((1 + x) * math.log1p(x) - x) / (x * x)
        worst_rhs = max(worst_rhs, abs(rhs - 1.0 / p))
        spec = MixtureSpec({p: 1.0})
        sx = onersb_solve(spec, 2.5, method="xpath")
        sn = onersb_solve(spec, 2.5, method="newton")
        worst_mq = max(worst_mq, abs(sx.m - sn.m), abs(sx.q - sn.q))
    assert worst_rhs <= 1e-12
    assert worst_mq <= 1e-8
    _pass(4, f"max |RHS - 1/p| = {worst_rhs:.1e}, max x-path vs Newton gap = {worst_mq:.1e}")


# ----------------------------------------------------------------- 5


def test_criterion_5_temperature_separation():
    betas = [1.5 + 0.1 * i for i in range(11)]
    sols = {b: onersb_solve(SPEC4, b) for b in betas}
    worst_q = math.inf
    worst_bm = math.inf
    for b1, b2 in zip(betas[:-1], betas[1:]):
        s1, s2 = sols[b1], sols[b2]
        worst_q = min(worst_q, abs(s1.q - s2.q))
        worst_bm = min(worst_bm, abs(b1 * s1.m - b2 * s2.m))
    assert worst_q >= 1e-6
    assert worst_bm >= 1e-6
    _pass(5, f"10 pairs: min |q1-q2| = {worst_q:.2e}, min |b1 m1 - b2 m2| = {worst_bm:.2e}")


# ----------------------------------------------------------------- 6


@pytest.mark.parametrize("beta", [1.0, 1.5])
def test_criterion_6ab_frsb_closed_form(beta):
    sol = frsb_solve(MIX07, beta)
    q = sol.measure.q
    resid = abs(1.0 / (beta * math.sqrt(xi_derivative(MIX07, q, 2))) - (1.0 - q))
    assert resid <= 1e-12
    cert = certify(MIX07, beta, sol.measure, grid=10_000)
    assert cert.sup_f <= 1e-6
    assert cert.max_abs_f_on_support <= 1e-6
    _pass(6, f"(a,b) beta={beta}: residual={resid:.1e}, sup f={cert.sup_f:.1e}, |f| on support={cert.max_abs_f_on_support:.1e}")


@pytest.mark.parametrize("beta", [1.0, 1.5])
def test_criterion_6c_krsb_ladder(beta):
    sol = frsb_solve(MIX07, beta)
    target = cs_value(MIX07, beta, sol.measure.discretize(4000))
    vals = [krsb_search(MIX07, beta, k=k, restarts=8, seed=0).value for k in (1, 2, 5, 10, 20)]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:])), vals
    assert abs(vals[-1] - target) <= 1e-4
    _pass(6, f"(c) beta={beta}: k-ladder monotone, |Q(k=20) - Q(closed form)| = {abs(vals[-1]-target):.1e} <= 1e-4")


# ----------------------------------------------------------------- 7


def test_criterion_7_coupling_violation_demo():
    rep = frsb_coupling_demo(0.07, 4, 1.0, 1.5)
    q1, q2 = rep.witnesses["q1"], rep.witnesses["q2"]
    assert 0.0 < q1 < q2
    assert rep.witnesses["scaled_cdf_max_gap_below_q1"] <= 1e-10
    lhs, rhs = rep.witnesses["scaled_cdf_at_q1"]
    assert lhs > rhs
    assert rep.uncoupled is False
    _pass(7, f"0 < q1={q1:.6f} < q2={q2:.6f}, cdf gap below q1 <= 1e-10, strict split at q1, uncoupled=False")


# ----------------------------------------------------------------- 8


def test_criterion_8_pure_2spin():
    sol = parisi_solve(SPEC2, 1.0)
    q = sol.measure.jumps[0][0]
    assert abs(q - (1.0 - 1.0 / math.sqrt(2.0))) <= 1e-12
    assert sol.measure.k == 1
    assert sol.certificate.verdict
    _pass(8, f"single atom at q = {q:.12f} (= 1 - 1/sqrt(2)), certificate passes")


# ----------------------------------------------------------------- 9


def test_criterion_9_covariance_selftest():
    rep = covariance_selftest(parse_mixture("4:1,2:0.5"), 16, n_pairs=20, n_disorder=20_000, seed=2026)
    assert rep["max_abs_z"] <= 4.0
    assert rep["path_check_max_abs_diff"] <= 1e-9
    _pass(9, f"20 pairs x 2e4 draws: max standardized deviation = {rep['max_abs_z']:.2f} <= 4")


# ----------------------------------------------------------------- 10


@pytest.mark.filterwarnings("ignore::UserWarning")
def test_criterion_10a_beta_zero_matches_uniform():
    n = 8
    disorder = sample_disorder(SPEC2, n, seed=3)
    params = McmcParams(burn_in=200, thin=25, n_samples=400, proposal_step=0.5)
    samples, _ = mcmc_run(disorder, SPEC2, 0.0, params, np.random.default_rng(10))
    chain_marginal = np.array([s.coords[0] for s in samples]) / math.sqrt(n)
    rng = np.random.default_rng(11)
    iid_marginal = np.array([uniform_sphere_sample(n, rng).coords[0] for _ in range(400)]) / math.sqrt(n)
    res = permutation_ks_test(chain_marginal, iid_marginal, n_perm=500, seed=12)
    assert not res["reject_95"], res
    _pass(10, f"(a) beta=0 chain vs uniform: KS = {res['statistic']:.4f} below 95% threshold {res['threshold_95']:.4f}")


@pytest.mark.filterwarnings("ignore::UserWarning")
def test_criterion_10b_rs_cross_overlap_decreases_with_n():
    means, ses = [], []
    for n in (8, 16, 32):
        cfg = SimConfig(
            spec=SPEC2,
            n=n,
            betas=(0.3, 0.5),
            mcmc=McmcParams(burn_in=300, thin=5, n_samples=120, proposal_step=0.5),
            n_disorder=6,
            master_seed=42,
        )
        assert rs_check(SPEC2, 0.3).is_rs and rs_check(SPEC2, 0.5).is_rs
        stats = chaos_experiment(cfg, include_predictions=False)
        means.append(stats.cross_abs_mean)
        ses.append(stats.cross_abs_se)
    assert means[0] > means[1] > means[2]
    assert means[0] - means[1] > -(ses[0] + ses[1])
    assert means[1] - means[2] > -(ses[1] + ses[2])
    _pass(10, f"(b) mean cross |R| decreasing over N in (8,16,32): {[f'{m:.3f}' for m in means]}")


@pytest.mark.filterwarnings("ignore::UserWarning")
def test_criterion_10c_reruns_bit_identical():
    cfg = SimConfig(
        spec=SPEC2,
        n=8,
        betas=(0.3, 0.5),
        mcmc=McmcParams(burn_in=100, thin=5, n_samples=60, proposal_step=0.5),
        n_disorder=3,
        master_seed=7,
    )
    a = json.dumps(chaos_experiment(cfg).to_json_dict(), sort_keys=True)
    b = json.dumps(chaos_experiment(cfg).to_json_dict(), sort_keys=True)
    assert a == b
    _pass(10, "(c) identical configs produce byte-identical serialized reports")


# ----------------------------------------------------------------- 11


@pytest.mark.filterwarnings("ignore::UserWarning")
def test_criterion_11_non_reproducibility_flag():
    cfg = SimConfig(
        spec=SPEC4,
        n=10,
        betas=(2.0, 3.0),
        mcmc=McmcParams(burn_in=100, thin=5, n_samples=40, proposal_step=0.3),
        n_disorder=2,
        master_seed=1,
    )
    stats = chaos_experiment(cfg)
    assert stats.flags["asymptotic_overlay_only"] is True
    assert "not reproducible" in stats.flags["non_reproducibility"]
    # predicted atoms are emitted as overlays, never as pass/fail gates
    assert stats.predicted_atoms["cross"] is not None
    _pass(11, "report carries the non-reproducibility flag; predictions are overlays only")
