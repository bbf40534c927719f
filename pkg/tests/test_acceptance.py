"""End-to-end acceptance suite.

Each test evaluates one stated criterion at its pinned tolerance and prints a
single PASS/FAIL line (run pytest with ``-s`` to see them).  Training budgets
and hyperparameters inside each criterion follow the shipped experiment
configs; tolerances are asserted exactly as stated.
"""

import json
import math
import os
import time

import numpy as np
import pytest

from entrokit.boost import (
    boost_report,
    evaluate_discriminator,
    kl_lower_bounds,
    sample_mixture,
    train_discriminator,
)
from entrokit.bounds import log_argument, bound_inputs_from_lipschitz, scan_schedule
from entrokit.cli import EXIT_OK, main
from entrokit.conditional import mi_estimate
from entrokit.density import KernelMixtureParams
from entrokit.harness import run_experiment
from entrokit.synth import TriangleMixtureSpec, gauss_entropy, sample_correlated_gauss
from entrokit.training import TrainConfig, fit_entropy

pytestmark = pytest.mark.acceptance

SEEDS_20 = list(range(20))


def report(criterion, passed, detail):
    print("[%s] criterion %s: %s" % ("PASS" if passed else "FAIL", criterion, detail))
    return passed


def paper_protocol_config(dim, modes, seeds):
    return {
        "experiment": "gauss-entropy",
        "dim": dim,
        "modes": modes,
        "seeds": seeds,
        "train": {
            "learning_rate": 0.01,
            "batch_size": 128,
            "kernel_size": 128,
            "iterations_per_epoch": 200,
            "epochs": 1,
        },
    }


def test_criterion_1_gaussian_entropy_d10():
    t0 = time.perf_counter()
    result = run_experiment(paper_protocol_config(10, ["adaptive"], SEEDS_20), quiet=True)
    elapsed = time.perf_counter() - t0
    median = result["summary"]["modes"]["adaptive"]["median_abs_error"]
    ok = median <= 0.15 and elapsed <= 120.0
    assert report(
        1, ok, "d=10 median |H_hat - 14.1894| = %.4f (<= 0.15), runtime %.0f s (<= 120)" % (median, elapsed)
    )


def test_criterion_2_gaussian_entropy_d64():
    result = run_experiment(paper_protocol_config(64, ["adaptive", "single_gauss"], SEEDS_20), quiet=True)
    med_a = result["summary"]["modes"]["adaptive"]["median_abs_error"]
    med_g = result["summary"]["modes"]["single_gauss"]["median_abs_error"]
    ok = med_a <= 1.0 and med_a <= med_g + 0.05
    assert report(
        2, ok, "d=64 adaptive median = %.4f (<= 1.0), single-Gaussian median = %.4f (adaptive <= single + 0.05)" % (med_a, med_g)
    )


def test_criterion_3_shrinking_variance_tracking():
    # nine seeds and a 200k evaluation set: the epoch-0 and epoch-4 errors
    # whose ratio is being tested are ~0.05-0.08 nat, so the per-epoch
    # medians need Monte-Carlo noise well below that scale
    cfg = {
        "experiment": "gauss-shrink",
        "dim": 64,
        "shrink": 0.5,
        "modes": ["adaptive", "schraudolph"],
        "seeds": list(range(9)),
        "train": {
            "learning_rate": 0.01,
            "batch_size": 128,
            "kernel_size": 128,
            "iterations_per_epoch": 1000,
            "epochs": 5,
            "eval_size": 200_000,
        },
    }
    result = run_experiment(cfg, quiet=True)
    med_a = result["summary"]["modes"]["adaptive"]["epoch_abs_error_median"]
    med_s = result["summary"]["modes"]["schraudolph"]["epoch_abs_error_median"]
    adaptive_ok = all(med_a[str(e)] <= 2.0 * med_a["0"] for e in range(1, 5))
    schrau_ok = med_s["4"] >= 3.0 * med_s["0"]
    ok = adaptive_ok and schrau_ok
    assert report(
        3,
        ok,
        "adaptive per-epoch medians %s (all <= 2x epoch-0), fixed-center epoch-4/epoch-0 = %.1fx (>= 3x)"
        % ([round(med_a[str(e)], 3) for e in range(5)], med_s["4"] / med_s["0"]),
    )


def test_criterion_4_triangle_mixture_8d():
    cfg = {
        "experiment": "triangle-8d",
        "dim": 8,
        "components": 2,
        "spec_seed": 14,
        "modes": ["adaptive", "single_gauss"],
        "seeds": list(range(10)),
        "train": {
            "learning_rate": 0.001,
            "batch_size": 128,
            "kernel_size": 128,
            "iterations_per_epoch": 1000,
            "epochs": 20,
        },
    }
    result = run_experiment(cfg, quiet=True)
    med_a = result["summary"]["modes"]["adaptive"]["median_abs_error"]
    med_g = result["summary"]["modes"]["single_gauss"]["median_abs_error"]
    ok = med_a <= 0.5 and med_g >= 2.0 * med_a
    assert report(
        4, ok, "adaptive median = %.4f (<= 0.5), single-Gaussian median = %.4f (>= 2x adaptive)" % (med_a, med_g)
    )


def _staircase_config(experiment):
    return {
        "experiment": experiment,
        "dim": 10,
        "levels": [2.0, 4.0, 6.0, 8.0],
        "hidden": 64,
        "seeds": [0, 1, 2],
        "train": {
            "learning_rate": 0.001,
            "batch_size": 128,
            "kernel_size": 128,
            "iterations_per_epoch": 1500,
            "theta_lr_multiplier": 1000.0,
        },
    }


def test_criterion_5_mi_staircase_and_cubic():
    stair = run_experiment(_staircase_config("mi-gauss-staircase"), quiet=True)
    per_level = stair["summary"]["per_level_abs_error_median"]
    stair_ok = all(v <= 0.5 for v in per_level.values())
    cubic = run_experiment(_staircase_config("mi-cubic"), quiet=True)
    per_level_cubic = cubic["summary"]["per_level_abs_error_median"]
    cubic_ok = all(v <= 0.7 for v in per_level_cubic.values())
    ok = stair_ok and cubic_ok
    assert report(
        5,
        ok,
        "staircase medians %s (<= 0.5), cubic medians %s (<= 0.7)"
        % (
            [round(v, 3) for v in per_level.values()],
            [round(v, 3) for v in per_level_cubic.values()],
        ),
    )


def test_criterion_6_independence():
    d, n = 5, 50_000
    estimates = []
    for seed in range(5):
        ss = np.random.SeedSequence((seed, 77))
        data_rng, eval_rng = (np.random.default_rng(s) for s in ss.spawn(2))
        pair = sample_correlated_gauss(d, 0.0, n, data_rng)
        eval_pair = sample_correlated_gauss(d, 0.0, n, eval_rng)
        cfg = TrainConfig(
            seed=seed, learning_rate=0.001, iterations_per_epoch=1500, epochs=1,
            theta_lr_multiplier=1000.0,
        )
        estimates.append(mi_estimate(pair, cfg=cfg, hidden=64, eval_pair=eval_pair).final_estimate)
    median = float(np.median(np.abs(estimates)))
    ok = median < 0.15
    assert report(6, ok, "independent pairs d=5: median |I_hat| = %.4f (< 0.15)" % median)


def test_criterion_7_gradient_suite():
    t0 = time.perf_counter()
    result = run_experiment({"experiment": "gradcheck", "seeds": [0], "instances": 100}, quiet=True)
    elapsed = time.perf_counter() - t0
    worst = result["summary"]["max_relative_error"]
    ok = worst < 1e-5 and elapsed < 30.0
    assert report(
        7, ok, "100 instances: max relative error %.2e (< 1e-5) in %.1f s (< 30)" % (worst, elapsed)
    )


def test_criterion_8_bound_schedule_and_log_inequality():
    n_values = [int(v) for v in np.logspace(2, 6, 9)]
    scan = scan_schedule(n_values, d=1, delta=0.05, lipschitz=0.01)
    flags_ok = all((e["eps"] is None) == (e["log_argument"] <= 0.0) for e in scan)
    # cross-check the flag against an independent evaluation of the argument
    for e, n in zip(scan, n_values):
        b = bound_inputs_from_lipschitz(float(n), float(n) ** 5.0, float(n) ** -1.1, 1, 0.05, 0.01)
        assert (log_argument(b) <= 0.0) == (e["eps"] is None)
    feasible = [e["eps"] for e in scan if e["eps"] is not None]
    monotone_ok = len(feasible) >= 2 and all(b < a for a, b in zip(feasible, feasible[1:]))

    rng = np.random.default_rng(2024)
    trials = 100_000
    a = rng.uniform(1e-3, 1.0 - 1e-3, trials)
    delta = a * rng.uniform(0.0, 0.999, trials)
    y = a + rng.exponential(1.0, trials)
    x = y + rng.uniform(-1.0, 1.0, trials) * delta
    violations = int(np.sum(np.abs(np.log(x) - np.log(y)) > -np.log1p(-delta / a) + 1e-12))
    ok = flags_ok and monotone_ok and violations == 0
    assert report(
        8,
        ok,
        "%d/%d feasible, monotone=%s, infeasibility flags exact=%s, log-inequality violations %d/100000"
        % (len(feasible), len(scan), monotone_ok, flags_ok, violations),
    )


def test_criterion_9_boost_validity_and_improvement():
    # (a) bounds never exceed the true KL by more than 0.05 on Gaussian pairs
    valid = True
    details = []
    for mu, kl in ((0.5, 0.125), (1.0, 0.5), (2.0, 2.0)):
        phat = KernelMixtureParams(np.zeros(1), np.array([[mu]]), np.zeros((1, 1)), True)
        cfg = TrainConfig(seed=3, iterations_per_epoch=600, learning_rate=0.01)
        disc = train_discriminator(phat, lambda rng, n, e: rng.standard_normal((n, 1)), cfg=cfg)
        rng = np.random.default_rng(99)
        pe, ce = evaluate_discriminator(
            disc, rng.standard_normal((50_000, 1)), sample_mixture(phat, 50_000, rng)
        )
        bounds = kl_lower_bounds(pe, ce)
        worst = max(bounds.as_tuple())
        valid = valid and all(v <= kl + 0.05 for v in bounds.as_tuple())
        details.append("KL=%.3f max_bound=%.3f" % (kl, worst))

    # (b) with a perfectly fitted density all bounds sit near zero
    phat = KernelMixtureParams(np.zeros(1), np.zeros((1, 1)), np.zeros((1, 1)), True)
    cfg = TrainConfig(seed=3, iterations_per_epoch=600, learning_rate=0.01)
    disc = train_discriminator(phat, lambda rng, n, e: rng.standard_normal((n, 1)), cfg=cfg)
    rng = np.random.default_rng(5)
    pe, ce = evaluate_discriminator(
        disc, rng.standard_normal((50_000, 1)), sample_mixture(phat, 50_000, rng)
    )
    near_zero = all(v <= 0.05 for v in kl_lower_bounds(pe, ce).as_tuple())

    # (c) correcting a single-Gaussian fit of a bimodal mixture helps
    spec = TriangleMixtureSpec.random(2, 1, np.random.default_rng(7))
    truth = spec.entropy()
    sampler = lambda rng_, n, epoch: spec.sample(n, rng_)
    improvements = []
    for seed in range(5):
        fit_cfg = TrainConfig(seed=seed, iterations_per_epoch=500, learning_rate=0.01)
        fit = fit_entropy(sampler, mode="single_gauss", cfg=fit_cfg)
        disc = train_discriminator(fit.final_params, sampler, cfg=fit_cfg)
        ss = np.random.SeedSequence((seed, 1))
        eval_rng, fake_rng = (np.random.default_rng(s) for s in ss.spawn(2))
        rep = boost_report(fit.final_params, spec.sample(20_000, eval_rng), disc, rng=fake_rng)
        improvements.append(
            abs(rep.boosted_entropy_quadratic - truth) < abs(rep.plugin_entropy - truth)
        )
    improves = float(np.median([float(v) for v in improvements])) > 0.5
    ok = valid and near_zero and improves
    assert report(
        9,
        ok,
        "bounds valid on %s, near-zero at perfect fit=%s, misfit correction improves (median of 5)=%s"
        % ("; ".join(details), near_zero, improves),
    )


def test_criterion_10_bitwise_determinism(tmp_path):
    cfg = {
        "experiment": "triangle-1d",
        "components": 10,
        "spec_seed": 7,
        "modes": ["adaptive", "schraudolph"],
        "seeds": [0, 1],
        "train": {"learning_rate": 0.1, "batch_size": 128, "kernel_size": 128,
                  "iterations_per_epoch": 100, "epochs": 2, "eval_size": 2000},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    blobs = []
    for name in ("first", "second"):
        out = str(tmp_path / name)
        assert main(["run", str(path), "--out", out, "--quiet"]) == EXIT_OK
        blobs.append(open(os.path.join(out, "results.csv"), "rb").read())
    ok = blobs[0] == blobs[1] and len(blobs[0]) > 0
    assert report(10, ok, "repeated run produced byte-identical results.csv (%d bytes)" % len(blobs[0]))
