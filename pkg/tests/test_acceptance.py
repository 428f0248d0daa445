"""Acceptance gate: one test per criterion, one printed PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as they
are produced.  Every tolerance is fixed here; nothing is calibrated at run
time.
"""

import math

import numpy as np
from scipy import integrate, stats

from pexsurv.cli import main as cli_main
from pexsurv.data import SurvivalDataset, SurvivalRecord, load_kidney
from pexsurv.diagnostics import summarize
from pexsurv.distribution import PiecewiseExponential, TimeGrid
from pexsurv.mcmc import McmcConfig, run_chains
from pexsurv.models import (
    FAMILY_GAMMA_CHAIN,
    FAMILY_LOGNORMAL_RW,
    FAMILY_SIMPLE,
    ModelSpec,
    default_grid,
    initial_state,
    joint_log_density,
    log_likelihood,
    sufficient_stats,
    zeros_trick_loglik,
)

S1_GRID = TimeGrid((0.0, 2.0, 3.0, 5.0))
S1_RATES = (0.3, 0.6, 0.8, 1.3)


def _report(num, ok, detail=""):
    line = f"[criterion {num}] {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" - {detail}"
    print(line)
    assert ok, line


def _s1_dataset(n, seed):
    pe = PiecewiseExponential(S1_GRID, S1_RATES)
    times = pe.sample(n, rng=np.random.default_rng(seed))
    return SurvivalDataset([SurvivalRecord(i + 1, 1, float(t), 1) for i, t in enumerate(times)])


def test_criterion_1_analytic_anchors():
    pe = PiecewiseExponential(S1_GRID, S1_RATES)
    ok = pe.hazard(3.483) == 0.8 and abs(pe.cum_hazard(3.483) - 1.5864) <= 1e-12
    _report(1, ok, f"hazard={pe.hazard(3.483)}, cum_hazard={pe.cum_hazard(3.483)!r}")


def test_criterion_2_round_trip_suite():
    rng = np.random.default_rng(2024)
    worst_q, worst_e = 0.0, 0.0
    for _ in range(1000):
        m = int(rng.integers(1, 8))
        cuts = np.concatenate(([0.0], np.sort(rng.uniform(0.1, 12.0, m - 1))))
        rates = rng.uniform(0.05, 4.0, m)
        d = PiecewiseExponential(cuts, rates)
        # stay below H ~ 10: past that the probability scale saturates in
        # float64 and the identity is unrecoverable by construction
        t = None
        for _ in range(100):
            cand = rng.uniform(0.01, cuts[-1] + 3.0)
            if d.cum_hazard(cand) <= 10.0:
                t = cand
                break
        if t is None:
            t = float(d.quantile(0.99))
        worst_q = max(worst_q, abs(d.quantile(d.cdf(t)) - t) / t)
        # constant-rate reduction to the exponential closed form
        c = rng.uniform(0.05, 3.0)
        e = PiecewiseExponential(cuts, np.full(m, c))
        tt = rng.uniform(0.01, cuts[-1] + 2.0)
        worst_e = max(
            worst_e,
            abs(e.cum_hazard(tt) - c * tt) / (c * tt),
            abs(e.survival(tt) - math.exp(-c * tt)) / math.exp(-c * tt),
            abs(e.quantile(0.5) - math.log(2) / c) / (math.log(2) / c),
        )
    ok = worst_q < 1e-9 and worst_e < 1e-12
    _report(2, ok, f"max round-trip rel err={worst_q:.2e}, max exponential rel err={worst_e:.2e}")


def test_criterion_3_sampler_calibration():
    pe = PiecewiseExponential(S1_GRID, S1_RATES)
    draws = pe.sample(100_000, rng=np.random.default_rng(7))
    props = np.bincount(pe.grid.interval_index(draws) - 1, minlength=4) / draws.size
    surv = np.exp(-np.array([0.0, 0.3 * 2, 0.3 * 2 + 0.6, 0.3 * 2 + 0.6 + 0.8 * 2]))
    expected = np.append(-np.diff(surv), surv[-1])
    prop_ok = np.all(np.abs(props - expected) <= 0.01)

    trunc = pe.sample(100_000, rng=np.random.default_rng(8), lower=1.0, upper=2.0)
    f1, f2 = pe.cdf(1.0), pe.cdf(2.0)
    res = stats.kstest(trunc, lambda t: (pe.cdf(t) - f1) / (f2 - f1))
    ks_ok = res.pvalue > 0.001
    _report(
        3,
        prop_ok and ks_ok,
        f"max proportion err={np.max(np.abs(props - expected)):.4f}, KS p={res.pvalue:.3f}",
    )


def test_criterion_4_zeros_trick_equivalence():
    rng = np.random.default_rng(404)
    spreads = []
    # simulated, uncensored, simple family
    sim = _s1_dataset(300, 1)
    spec_sim = ModelSpec(FAMILY_SIMPLE, S1_GRID)
    state = initial_state(spec_sim, sim)
    diffs = []
    for _ in range(100):
        state.rates = rng.gamma(2.0, 0.5, 4)
        diffs.append(
            log_likelihood(state, spec_sim, sim) - zeros_trick_loglik(state, spec_sim, sim)
        )
    spreads.append(max(diffs) - min(diffs))
    # kidney, censored records included, frailty family
    kidney = load_kidney()
    spec_k = ModelSpec(FAMILY_GAMMA_CHAIN, default_grid(562.0, 10))
    s = initial_state(spec_k, kidney)
    diffs = []
    for _ in range(100):
        s.rates = rng.gamma(2.0, 0.01, 10)
        s.beta = np.array([rng.uniform(-2, 2), rng.uniform(-0.05, 0.05)])
        s.z = rng.gamma(4.0, 0.25, kidney.n_subjects)
        s.eta = rng.gamma(4.0, 0.5)
        diffs.append(log_likelihood(s, spec_k, kidney) - zeros_trick_loglik(s, spec_k, kidney))
    spreads.append(max(diffs) - min(diffs))
    ok = all(sp < 1e-10 for sp in spreads)
    _report(4, ok, f"spreads: simulated={spreads[0]:.2e}, kidney={spreads[1]:.2e}")


def _grid_moments(xs, log_vals):
    log_vals = log_vals - log_vals.max()
    w = np.exp(log_vals)
    z = integrate.simpson(w, x=xs)
    m1 = integrate.simpson(w * xs, x=xs) / z
    m2 = integrate.simpson(w * xs * xs, x=xs) / z
    return m1, m2 - m1 * m1


def test_criterion_5_conjugate_update_oracle():
    rng = np.random.default_rng(505)
    worst = 0.0
    spec = ModelSpec(FAMILY_SIMPLE, S1_GRID)
    for _ in range(10):  # rate conditionals, simple family
        data = _s1_dataset(int(rng.integers(40, 150)), int(rng.integers(1, 10_000)))
        state = initial_state(spec, data)
        state.rates = rng.gamma(2.0, 0.5, 4)
        st = sufficient_stats(state, spec, data)
        candidates = [j for j in range(4) if st.d[j] >= 2]
        j = int(rng.choice(candidates))
        shape, rate = 0.01 + st.d[j], 0.01 + st.exposure[j]
        xs = np.linspace(
            stats.gamma.ppf(1e-12, shape, scale=1 / rate),
            stats.gamma.ppf(1 - 1e-12, shape, scale=1 / rate),
            4001,
        )
        probe, vals = state.copy(), np.empty(xs.size)
        for i, v in enumerate(xs):
            probe.rates[j] = v
            vals[i] = joint_log_density(probe, spec, data)
        mean, var = _grid_moments(xs, vals)
        worst = max(worst, abs(mean - shape / rate) / (shape / rate),
                    abs(var - shape / rate**2) / (shape / rate**2))

    kidney = load_kidney()
    spec_k = ModelSpec(FAMILY_GAMMA_CHAIN, default_grid(562.0, 10))
    for _ in range(10):  # frailty conditionals
        s = initial_state(spec_k, kidney)
        s.rates = rng.gamma(2.0, 0.01, 10)
        s.beta = np.array([rng.uniform(-2, 0), rng.uniform(-0.02, 0.02)])
        s.z = rng.gamma(4.0, 0.25, kidney.n_subjects)
        s.eta = rng.uniform(1.0, 5.0)
        i = int(rng.integers(0, kidney.n_subjects))
        pe = PiecewiseExponential(spec_k.grid, s.rates)
        exposure = np.exp(kidney.design_matrix @ s.beta) * pe.cum_hazard(s.times)
        a_i = exposure[kidney.subject_positions == i].sum()
        shape, rate = s.eta + 2.0, s.eta + a_i
        xs = np.linspace(
            stats.gamma.ppf(1e-12, shape, scale=1 / rate),
            stats.gamma.ppf(1 - 1e-12, shape, scale=1 / rate),
            4001,
        )
        probe, vals = s.copy(), np.empty(xs.size)
        for n_, v in enumerate(xs):
            probe.z[i] = v
            vals[n_] = joint_log_density(probe, spec_k, kidney, augmented=True)
        mean, var = _grid_moments(xs, vals)
        worst = max(worst, abs(mean - shape / rate) / (shape / rate),
                    abs(var - shape / rate**2) / (shape / rate**2))
    _report(5, worst < 1e-4, f"worst relative moment error={worst:.2e}")


def test_criterion_6_simulation_regression():
    data = _s1_dataset(1000, 42)
    spec = ModelSpec(FAMILY_SIMPLE, S1_GRID)
    cfg = McmcConfig(n_chains=2, burn_in=1000, n_iter=2000, thin=1, seed=11)
    summ = summarize(run_chains(spec, data, cfg))
    truth = np.array(S1_RATES)
    covered = [bool(s.hpd_low <= tv <= s.hpd_high) for s, tv in zip(summ, truth)]
    sds = np.array([s.sd for s in summ])
    ordering = bool(np.all(np.diff(sds) > 0))
    reported = np.array([0.013, 0.037, 0.050, 0.165])
    factor_two = bool(np.all((sds > reported / 2) & (sds < reported * 2)))
    ok = all(covered) and ordering and factor_two
    _report(
        6,
        ok,
        f"covered={covered}, sds={np.round(sds, 4).tolist()} (ordered={ordering}, within 2x={factor_two})",
    )


def test_criterion_7_kidney_regression():
    kidney = load_kidney()
    grid = default_grid(562.0, 10)
    cfg = McmcConfig(n_chains=2, burn_in=10_000, n_iter=10_000, thin=1, seed=5)
    failures = []
    details = []
    for family in (FAMILY_GAMMA_CHAIN, FAMILY_LOGNORMAL_RW):
        summ = {s.name: s for s in summarize(run_chains(ModelSpec(family, grid), kidney, cfg))}
        bs, ba, kp = summ["beta_sex"], summ["beta_age"], summ["kappa"]
        lam_sds = [summ[f"lambda[{j}]"].sd for j in range(1, 11)]
        details.append(
            f"{family}: beta_sex={bs.mean:.3f} hpd=({bs.hpd_low:.2f},{bs.hpd_high:.2f}), "
            f"beta_age hpd=({ba.hpd_low:.4f},{ba.hpd_high:.4f}), kappa={kp.mean:.3f}"
        )
        if not -2.0 < bs.mean < -1.0:
            failures.append(f"{family}: beta_sex mean {bs.mean:.3f} outside (-2, -1)")
        if not bs.hpd_high < 0.0:
            failures.append(f"{family}: beta_sex HPD does not exclude 0")
        if not ba.hpd_low < 0.0 < ba.hpd_high:
            failures.append(f"{family}: beta_age HPD does not contain 0")
        # Independent checks (marginal-likelihood optimization and an
        # importance-sampling pass over the frailty-marginalized posterior)
        # both place the posterior mean of kappa near 0.12 for this data and
        # model; the historical (0.3, 0.7) target window is asserted as-is
        # and is expected to fail.
        if not 0.3 < kp.mean < 0.7:
            failures.append(f"{family}: kappa mean {kp.mean:.3f} outside (0.3, 0.7)")
        if int(np.argmax(lam_sds)) != 9:
            failures.append(f"{family}: sd(lambda[10]) is not the maximum")
    _report(7, not failures, "; ".join(failures) if failures else "; ".join(details))


def test_criterion_8_cli_determinism(tmp_path):
    fit_args = ["fit", "--model", "frailty-gamma", "--data", "kidney", "--m", "5",
                "--chains", "2", "--burnin", "100", "--iters", "200", "--seed", "13"]
    sim_args = ["simulate", "--scenario", "s1", "--n", "80", "--reps", "2", "--seed", "29"]
    mismatches = []
    for label, args, files in (
        ("fit", fit_args, ["summary.csv", "summary.txt", "chain_1.csv", "chain_2.csv"]),
        ("simulate", sim_args, ["results.csv"]),
    ):
        a, b = tmp_path / f"{label}_a", tmp_path / f"{label}_b"
        assert cli_main(args + ["--out", str(a)]) == 0
        assert cli_main(args + ["--out", str(b)]) == 0
        for name in files:
            if (a / name).read_bytes() != (b / name).read_bytes():
                mismatches.append(f"{label}/{name}")
    _report(8, not mismatches, "byte-identical" if not mismatches else f"differs: {mismatches}")
