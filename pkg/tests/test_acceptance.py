"""Acceptance gate: one test per shipped guarantee, at stated tolerances.

Every test prints a single [PASS] line with its measured numbers so a
plain `pytest -v -s tests/test_acceptance.py` run reads as a checklist.
Oracles here are deliberately independent of the library internals:
conjugate gradients for the closed-form fit, quadrature for the t tail,
literal sign enumeration for the Wilcoxon p, plain lstsq for the RBF
output layer.
"""

import json
import subprocess
import sys
import time
from fractions import Fraction
from math import comb

import jsonschema
import mpmath as mp
import numpy as np
import pytest

from lagcast import polynomial as poly
from lagcast import rbf
from lagcast.data import TimeSeries, make_windows, synth_ar, synth_seasonal, synth_random_walk
from lagcast.harness import COMPARISON_REPORT_SCHEMA, windowed_split
from lagcast.metrics import cv_rmse, mae, rmse
from lagcast.polynomial import enumerate_monomials
from lagcast.rbf import RbfNetwork, RbfTrainConfig
from lagcast.stats import paired_t_test, student_t_sf, wilcoxon_signed_rank


class Budget:
    """Wall-clock guard for one criterion."""

    def __init__(self, seconds):
        self.limit = seconds
        self.start = time.perf_counter()

    def done(self, label):
        elapsed = time.perf_counter() - self.start
        assert elapsed < self.limit, f"{label} took {elapsed:.1f}s, budget {self.limit}s"
        return elapsed


# ---------------------------------------------------------------- criterion 1

def test_basis_cardinality_matches_binomial():
    budget = Budget(1.0)
    for d in range(1, 7):
        for k in range(1, 6):
            got = len(enumerate_monomials(d, k).exponents)
            assert got == comb(d + k, k), (d, k, got)
    took = budget.done("basis cardinality")
    print(f"\n[PASS] basis cardinality == C(d+K,K) for d in 1..6, K in 1..5 "
          f"({took:.2f}s)")


# ---------------------------------------------------------------- criterion 2

def _monomial_features(inputs, exponents):
    X = np.ones((inputs.shape[0], len(exponents)))
    for j, expts in enumerate(exponents):
        for axis, e in enumerate(expts):
            if e:
                X[:, j] *= inputs[:, axis] ** e
    return X


def _cg_least_squares(X, y, rounds=4):
    """Minimize 0.5*||Xw - y||^2 using only gradient information.

    Conjugate-gradient steps on the residual gradient X^T(Xw - y); no
    matrix factorization, so it shares nothing with the Cholesky path
    under test.  Restarted a few times to shake off float drift.
    """
    w = np.zeros(X.shape[1])
    for _ in range(rounds):
        r = X.T @ (y - X @ w)
        p = r.copy()
        rs = float(r @ r)
        if rs == 0.0:
            break
        for _ in range(X.shape[1]):
            Xp = X @ p
            denom = float(Xp @ Xp)
            if denom == 0.0:
                break
            alpha = rs / denom
            w = w + alpha * p
            r = r - alpha * (X.T @ Xp)
            rs_new = float(r @ r)
            if rs_new < 1e-32 * max(1.0, float(y @ y)):
                break
            p = r + (rs_new / rs) * p
            rs = rs_new
    return w


def test_closed_form_fit_matches_gradient_descent():
    budget = Budget(30.0)
    rng_combo = np.random.default_rng(1234)
    worst = 0.0
    for seed in range(50):
        d = int(rng_combo.integers(1, 7))
        k = int(rng_combo.integers(1, 4))
        n_rows = min(200, max(2 * comb(d + k, k), 40))
        rng = np.random.default_rng(seed)
        series = TimeSeries(name="noise", values=rng.normal(size=n_rows + d))
        data = make_windows(series, d)
        model = poly.fit(data, degree_k=k)
        X = _monomial_features(data.inputs, model.basis.exponents)
        w = _cg_least_squares(X, data.targets)
        worst = max(worst, float(np.max(np.abs(w - model.weights))))
    assert worst <= 1e-6, worst
    took = budget.done("closed-form vs gradient descent")
    print(f"\n[PASS] closed-form fit matches CG minimizer on 50 datasets, "
          f"worst max-abs weight diff {worst:.2e} <= 1e-6 ({took:.1f}s)")


# ---------------------------------------------------------------- criterion 3

def test_exact_class_recovery():
    budget = Budget(5.0)
    # noiseless linear series: the lag design is collinear, so the fit
    # legitimately reports its minimum-norm fallback; predictions must
    # still be exact
    linear = TimeSeries(name="line", values=0.5 + 0.25 * np.arange(60.0))
    train, test = windowed_split(linear, d=2, train_fraction=0.8)
    with pytest.warns(UserWarning, match="minimum-norm"):
        model = poly.fit(train, degree_k=1)
    test_mae = mae(test.targets, poly.rolling_forecast(model, test))
    assert test_mae < 1e-6, test_mae

    ar = synth_ar([0.6, 0.3], n=2000, noise_sd=0.05, seed=0)
    data = make_windows(ar, d=2)
    ar_model = poly.fit(data, degree_k=1)
    # window rows run oldest to newest: weight 2 multiplies the latest lag
    recent, older = ar_model.weights[2], ar_model.weights[1]
    assert abs(recent - 0.6) <= 0.05, recent
    assert abs(older - 0.3) <= 0.05, older
    took = budget.done("exact-class recovery")
    print(f"\n[PASS] noiseless-linear test MAE {test_mae:.2e} < 1e-6; "
          f"AR weights ({recent:.3f}, {older:.3f}) within 0.05 of (0.6, 0.3) "
          f"({took:.1f}s)")


# ---------------------------------------------------------------- criterion 4

def test_rbf_trained_layer_near_convex_optimum():
    budget = Budget(60.0)
    series = synth_seasonal(n=240, period=12, amplitude=1.0, noise_sd=0.05,
                            seed=0)
    data = make_windows(series, d=12)
    cfg = RbfTrainConfig(units=24, epochs=15000, batch_size=len(data),
                         learning_rate=0.002, seed=0)
    net, _ = rbf.fit_fixed(data.inputs, data.targets, cfg)
    trained_mse = float(np.mean((rbf.batch_forward(net, data.inputs)
                                 - data.targets) ** 2))

    # least-squares optimum over the exact activations the net uses
    phi = np.column_stack([
        np.exp(-((data.inputs[:, None, :] - net.centers[None, :, :]) ** 2).sum(2)
               / (2.0 * net.widths ** 2)),
        np.ones(len(data)),
    ])
    w_star, *_ = np.linalg.lstsq(phi, data.targets, rcond=None)
    optimum_mse = float(np.mean((phi @ w_star - data.targets) ** 2))
    ratio = trained_mse / optimum_mse
    assert ratio <= 1.05, ratio
    took = budget.done("RBF convex-oracle gap")
    print(f"\n[PASS] trained output layer MSE within 5% of least-squares "
          f"optimum: ratio {ratio:.4f} <= 1.05 ({took:.1f}s)")


# ---------------------------------------------------------------- criterion 5

def test_analytic_gradient_against_central_differences():
    budget = Budget(10.0)
    worst = 0.0
    for trial in range(20):
        rng = np.random.default_rng(1000 + trial)
        m = int(rng.integers(2, 6))
        d = int(rng.integers(1, 4))
        n = int(rng.integers(10, 40))
        centers = rng.standard_normal((m, d))
        widths = np.abs(rng.standard_normal(m)) + 0.5
        inputs = rng.standard_normal((n, d))
        targets = rng.standard_normal(n)
        params = rng.standard_normal(m + 1)

        net = RbfNetwork(centers=centers, widths=widths,
                         out_weights=params[:-1], bias=float(params[-1]))
        _, analytic = rbf.loss_gradient(net, inputs, targets)

        def loss_at(p):
            probe = RbfNetwork(centers=centers, widths=widths,
                               out_weights=p[:-1], bias=float(p[-1]))
            e = rbf.batch_forward(probe, inputs) - targets
            return float(np.mean(e ** 2))

        h = 1e-6
        numeric = np.empty_like(params)
        for i in range(params.size):
            up, down = params.copy(), params.copy()
            up[i] += h
            down[i] -= h
            numeric[i] = (loss_at(up) - loss_at(down)) / (2 * h)
        rel = np.max(np.abs(analytic - numeric)
                     / np.maximum(1.0, np.abs(analytic)))
        worst = max(worst, float(rel))
    assert worst <= 1e-4, worst
    took = budget.done("gradient check")
    print(f"\n[PASS] analytic MSE gradient vs central differences on 20 "
          f"instances, worst rel err {worst:.2e} <= 1e-4 ({took:.1f}s)")


# ---------------------------------------------------------------- criterion 6

def _brute_force_wilcoxon(diffs):
    """Literal 2^n enumeration of sign assignments."""
    mags = np.abs(diffs)
    order = np.argsort(mags, kind="stable")
    ranks = np.empty(len(mags))
    ranks[order] = np.arange(1, len(mags) + 1)
    signs_obs = diffs > 0
    w_plus_obs = int(ranks[signs_obs].sum())
    w_minus_obs = int(ranks[~signs_obs].sum())
    stat = min(w_plus_obs, w_minus_obs)

    n = len(diffs)
    hits = 0
    for mask in range(2 ** n):
        w_plus = 0
        for i in range(n):
            if mask & (1 << i):
                w_plus += int(ranks[i])
        if min(w_plus, int(ranks.sum()) - w_plus) <= stat:
            hits += 1
    return min(Fraction(1), Fraction(hits, 2 ** n))


def test_wilcoxon_exact_p_equals_enumeration():
    budget = Budget(10.0)
    rng = np.random.default_rng(77)
    checked = 0
    while checked < 200:
        n = int(rng.integers(4, 13))
        d = rng.normal(size=n)
        mags = np.abs(d)
        if np.any(mags == 0) or len(np.unique(mags)) != n:
            continue
        res = wilcoxon_signed_rank(d, np.zeros(n))
        assert res.method == "wilcoxon_exact"
        want = _brute_force_wilcoxon(d)
        assert res.p_exact == want, (d, res.p_exact, want)
        assert (res.p_exact.numerator == want.numerator
                and res.p_exact.denominator == want.denominator)
        checked += 1
    took = budget.done("wilcoxon exactness")
    print(f"\n[PASS] exact Wilcoxon p bitwise-equals 2^n enumeration on 200 "
          f"tie-free instances, n <= 12 ({took:.1f}s)")


# ---------------------------------------------------------------- criterion 7

def test_t_tail_against_numerical_integration():
    budget = Budget(5.0)
    mp.mp.dps = 30

    def sf_by_quadrature(t, df):
        df_m = mp.mpf(df)
        const = (mp.gamma((df_m + 1) / 2)
                 / (mp.sqrt(df_m * mp.pi) * mp.gamma(df_m / 2)))
        density = lambda u: const * (1 + u * u / df_m) ** (-(df_m + 1) / 2)
        return float(mp.quad(density, [mp.mpf(t), mp.inf]))

    worst = 0.0
    for df in (1, 2, 3, 5, 8, 12, 30, 100, 400, 1000):
        for t in (0.0, 0.5, 1.0, 1.96, 3.5):
            err = abs(student_t_sf(t, df) - sf_by_quadrature(t, df))
            worst = max(worst, err)
    assert worst <= 1e-8, worst
    # df=1 closed form: sf(1) = 1/2 - arctan(1)/pi = 1/4
    cauchy_err = abs(student_t_sf(1.0, 1) - 0.25)
    assert cauchy_err <= 1e-12, cauchy_err
    took = budget.done("t tail accuracy")
    print(f"\n[PASS] student_t_sf within 1e-8 of quadrature at 50 grid "
          f"points (worst {worst:.2e}); sf(1, df=1) = 0.25 + {cauchy_err:.1e} "
          f"({took:.1f}s)")


# ---------------------------------------------------------------- criterion 8

def test_null_rejection_rates_calibrated():
    budget = Budget(60.0)
    rng = np.random.default_rng(20260818)
    reps = 2000
    t_rej = w_rej = 0
    for _ in range(reps):
        a = rng.normal(size=30)
        b = rng.normal(size=30)
        t_rej += paired_t_test(a, b).p_value < 0.05
        w_rej += wilcoxon_signed_rank(a, b).p_value < 0.05
    t_rate, w_rate = t_rej / reps, w_rej / reps
    assert 0.03 <= t_rate <= 0.07, t_rate
    assert 0.03 <= w_rate <= 0.07, w_rate
    took = budget.done("null calibration")
    print(f"\n[PASS] null rejection rates at alpha=0.05 over {reps} sims: "
          f"t {t_rate:.4f}, wilcoxon {w_rate:.4f}, both in [0.03, 0.07] "
          f"({took:.1f}s)")


# ------------------------------------------------------- criteria 9 and 10

def _seasonal_fixture(seed):
    base = synth_seasonal(n=240, period=12, amplitude=1.0, noise_sd=0.1,
                          seed=seed)
    # constant offset keeps CV(RMSE) well-defined without adding drift
    return TimeSeries(name=f"sine12-{seed}", values=base.values + 10.0)


def test_seasonal_trend_rbf_beats_degree_one():
    budget = Budget(300.0)
    wins = 0
    for seed in range(10):
        train, test = windowed_split(_seasonal_fixture(seed), d=2,
                                     train_fraction=0.8)
        pc = poly.fit(train, degree_k=1)
        pc_cv = cv_rmse(test.targets, poly.rolling_forecast(pc, test))
        cfg = RbfTrainConfig(units=12, epochs=1500, batch_size=32,
                             learning_rate=0.02, seed=seed)
        net, _ = rbf.fit_fixed(train.inputs, train.targets, cfg)
        rbf_cv = cv_rmse(test.targets, rbf.batch_forward(net, test.inputs))
        wins += rbf_cv < pc_cv
    assert wins >= 7, wins
    took = budget.done("seasonal trend")
    print(f"\n[PASS] RBFNN CV(RMSE) < PC CV(RMSE) on {wins}/10 seasonal "
          f"fixtures (need >= 7) ({took:.1f}s)")


def test_nonseasonal_trend_pc_wins_and_is_faster():
    budget = Budget(300.0)
    cv_wins = time_wins = 0
    for seed in range(10):
        series = synth_random_walk(n=300, drift=1.0, noise_sd=0.5, seed=seed)
        train, test = windowed_split(series, d=8, train_fraction=0.8)

        t0 = time.perf_counter()
        pc = poly.fit(train, degree_k=1)
        pc_pred = poly.rolling_forecast(pc, test)
        pc_seconds = time.perf_counter() - t0
        pc_cv = cv_rmse(test.targets, pc_pred)

        cfg = RbfTrainConfig(units=16, epochs=60, batch_size=32,
                             learning_rate=0.01, seed=seed)
        t0 = time.perf_counter()
        net, _ = rbf.fit_fixed(train.inputs, train.targets, cfg)
        rbf_pred = rbf.batch_forward(net, test.inputs)
        rbf_seconds = time.perf_counter() - t0
        rbf_cv = cv_rmse(test.targets, rbf_pred)

        cv_wins += pc_cv <= rbf_cv
        time_wins += pc_seconds < rbf_seconds
    assert cv_wins >= 7, cv_wins
    assert time_wins == 10, time_wins
    took = budget.done("non-seasonal trend")
    print(f"\n[PASS] PC CV(RMSE) <= RBFNN on {cv_wins}/10 random walks "
          f"(need >= 7); PC faster {time_wins}/10 ({took:.1f}s)")


# --------------------------------------------------------------- criterion 11

def test_degree_five_overfits_noisy_sinusoid():
    budget = Budget(30.0)
    series = synth_seasonal(n=120, period=12, amplitude=1.0, noise_sd=0.3,
                            seed=0)
    train, test = windowed_split(series, d=3, train_fraction=0.8)
    scores = {}
    for k in (1, 5):
        model = poly.fit(train, degree_k=k)
        scores[k] = rmse(test.targets, poly.rolling_forecast(model, test))
    assert scores[5] > scores[1], scores
    took = budget.done("degree overfitting trend")
    print(f"\n[PASS] degree-5 test RMSE {scores[5]:.4f} > degree-1 "
          f"{scores[1]:.4f} on the noisy sinusoid ({took:.1f}s)")


# --------------------------------------------------------------- criterion 12

def test_metric_identities_and_formatting():
    budget = Budget(5.0)
    rng = np.random.default_rng(5)
    for _ in range(1000):
        n = int(rng.integers(2, 40))
        obs = rng.normal(size=n)
        pred = rng.normal(size=n)
        assert mae(obs, pred) <= rmse(obs, pred) + 1e-15

    hand = rmse([0.0, 0.0], [3.0, 4.0])
    assert abs(hand - np.sqrt(12.5)) <= 1e-12, hand

    from lagcast.harness import ComparisonReport, ModelRow, render_comparison
    from lagcast.metrics import MetricReport
    report = ComparisonReport(
        dataset="gold",
        models=(ModelRow(model="PC", exec_seconds=0.15,
                         metrics=MetricReport(mae=23.4758, rmse=30.5953,
                                              cv_rmse_pct=1.66031, n=50),
                         detail={}),
                ModelRow(model="RBFNN", exec_seconds=0.3,
                         metrics=MetricReport(mae=24.0, rmse=31.0,
                                              cv_rmse_pct=1.7, n=50),
                         detail={})),
        t_test=None, wilcoxon=None, verdict="no_significant_difference",
        degenerate=True, alpha=0.05, metadata={},
    )
    text = render_comparison(report, "markdown")
    assert "PC | 0.15 | 23.4758 | 30.5953 | 1.6603" in text
    took = budget.done("metric identities")
    print(f"\n[PASS] mae <= rmse on 1000 pairs; rmse hand case sqrt(12.5) "
          f"to 1e-12; CV cell renders 1.6603 ({took:.1f}s)")


# --------------------------------------------------------------- criterion 13

def test_cli_pipeline_end_to_end(tmp_path):
    budget = Budget(60.0)

    def cli(*argv):
        return subprocess.run([sys.executable, "-m", "lagcast", *argv],
                              capture_output=True, text=True)

    data = str(tmp_path / "series.csv")
    r = cli("synth", "--kind", "seasonal", "--n", "160", "--noise-sd", "0.05",
            "--out", data)
    assert r.returncode == 0, r.stderr

    r = cli("sweep", "--data", data, "--column", "v", "--window", "6",
            "--degrees", "1..3", "--format", "markdown")
    assert r.returncode == 0, r.stderr

    out = str(tmp_path / "report.json")
    r = cli("compare", "--data", data, "--column", "v", "--window", "6",
            "--rbf-units", "8", "--rbf-epochs", "10", "--rbf-batch", "16",
            "--rbf-lr", "0.01", "--format", "json", "--out", out)
    assert r.returncode == 0, r.stderr
    doc = json.loads(open(out).read())
    jsonschema.validate(doc, COMPARISON_REPORT_SCHEMA)
    assert [m["model"] for m in doc["models"]] == ["PC", "RBFNN"]
    assert doc["verdict"] in ("PC_better", "RBFNN_better",
                              "no_significant_difference")
    took = budget.done("CLI end to end")
    print(f"\n[PASS] synth -> sweep -> compare pipeline exits 0 and emits "
          f"schema-valid JSON with verdict {doc['verdict']!r} ({took:.1f}s)")
