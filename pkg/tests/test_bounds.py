import math

import numpy as np
import pytest

from entrokit.bounds import (
    BoundInputs,
    bound_inputs_from_lipschitz,
    derived_constants,
    epsilon_bound,
    lemma_pointwise_bound,
    log_argument,
    scan_schedule,
)
from entrokit.errors import ParameterError
from entrokit.synth import TriangleMixtureSpec


def inputs(**kw):
    base = dict(n=1e3, m=1e19, w=1e-4, d=1, delta=0.05, lipschitz=0.01, k_max=0.4, c1=0.55, c2=0.008)
    base.update(kw)
    return BoundInputs(**base)


class TestEpsilonBound:
    def test_infeasible_region_is_exactly_nonpositive_log_argument(self):
        b = inputs(n=100.0, m=10.0, w=0.01, d=2)
        assert log_argument(b) <= 0.0
        assert epsilon_bound(b) is None

    def test_value_matches_formula_when_feasible(self):
        b = inputs()
        arg = log_argument(b)
        assert arg > 0.0
        expect = -math.log(arg) + math.sqrt(3.0 * b.c1 / (b.n * b.delta))
        assert epsilon_bound(b) == pytest.approx(expect, rel=1e-14)

    def test_halving_delta_increases_epsilon(self):
        lo = epsilon_bound(inputs(delta=0.05))
        hi = epsilon_bound(inputs(delta=0.025))
        assert hi > lo

    def test_monotone_in_support_size(self):
        vals = [epsilon_bound(inputs(m=m)) for m in (1e19, 1e20, 1e21)]
        assert all(v is not None for v in vals)
        assert vals[0] > vals[1] > vals[2]

    def test_boundary_blowup(self):
        # eps -> +inf as the log argument -> 0+
        b0 = inputs()
        arg = log_argument(b0)
        # scale c2 so the argument approaches zero from above
        slack = arg / (3.0 * b0.n * b0.w / b0.delta)
        vals = []
        for frac in (0.9, 0.99, 0.999):
            b = inputs(c2=b0.c2 + frac * slack)
            assert log_argument(b) > 0.0
            vals.append(epsilon_bound(b))
        assert vals[0] < vals[1] < vals[2] and vals[2] > 6.0

    def test_input_validation(self):
        with pytest.raises(ParameterError):
            inputs(delta=1.5)
        with pytest.raises(ParameterError):
            inputs(w=-0.1)
        with pytest.raises(ParameterError):
            inputs(d=0)


class TestScanSchedule:
    def test_schedule_monotone_and_feasibility_flagging(self):
        n_values = [int(v) for v in np.logspace(2, 6, 9)]
        scan = scan_schedule(n_values, d=1, delta=0.05, lipschitz=0.01)
        for entry in scan:
            assert (entry["eps"] is None) == (entry["log_argument"] <= 0.0)
        feasible = [e["eps"] for e in scan if e["eps"] is not None]
        assert len(feasible) >= 2
        assert all(b < a for a, b in zip(feasible, feasible[1:]))

    def test_theorem_limit_to_zero(self):
        # w = N^-1.1, M = N^5 satisfies the printed conditions at d=1; the
        # N w = N^-0.1 term decays slowly, so push N very far out
        scan = scan_schedule([1e9, 1e15, 1e21, 1e27, 1e30], d=1, delta=0.05, lipschitz=0.01)
        vals = [e["eps"] for e in scan]
        assert all(v is not None for v in vals)
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 1e-3


class TestLemmaPointwise:
    def test_monotone_decreasing_in_m(self):
        vals = [lemma_pointwise_bound(m, 0.1, 1, 0.1, 0.4, 0.02) for m in (1e4, 1e6, 1e8)]
        assert vals[0] > vals[1] > vals[2]

    def test_delta_to_one_limit(self):
        m, w, d, k_max, c2 = 1e6, 0.1, 1, 0.4, 0.02
        val = lemma_pointwise_bound(m, w, d, 1.0 - 1e-12, k_max, c2)
        expect = c2 * w + (k_max / w) * math.sqrt(math.log(2.0) / (2.0 * m))
        assert val == pytest.approx(expect, rel=1e-6)

    def test_theorem_composition(self):
        # the theorem's inner term is the lemma at confidence delta / 3N
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = float(rng.uniform(10, 1e5))
            m = float(rng.uniform(1e2, 1e9))
            w = float(rng.uniform(0.01, 0.9))
            delta = float(rng.uniform(0.01, 0.9))
            k_max, c2 = float(rng.uniform(0.1, 1.0)), float(rng.uniform(1e-4, 0.1))
            lem = lemma_pointwise_bound(m, w, 1, delta / (3.0 * n), k_max, c2)
            b = BoundInputs(n, m, w, 1, delta, 1.0, k_max, 1.0, c2)
            inner = 1.0 - log_argument(b)
            assert inner == pytest.approx(lem * 3.0 * n / delta, rel=1e-12)


class TestDerivedConstants:
    def test_lipschitz_two(self):
        p_max, c1, _, _ = derived_constants(2.0, 1)
        assert p_max == 1.0
        assert c1 == pytest.approx(4.0 * math.exp(-2.0), abs=1e-15)
        assert c1 == pytest.approx(0.5413, abs=5e-5)

    def test_small_lipschitz(self):
        p_max, c1, _, _ = derived_constants(0.1, 1)
        assert p_max == pytest.approx(0.05)
        # max(0.05 log^2 0.05, 4 e^-2) = 4 e^-2 since 0.05 * 8.97 = 0.449
        assert c1 == pytest.approx(4.0 * math.exp(-2.0), abs=1e-15)

    def test_gaussian_kernel_constants(self):
        _, _, c2, k_max = derived_constants(1.0, 1, "gauss")
        assert k_max == pytest.approx(1.0 / math.sqrt(2.0 * math.pi), abs=1e-15)
        assert c2 == pytest.approx(math.sqrt(2.0 / math.pi), abs=1e-15)
        _, _, c2_3, k_max_3 = derived_constants(1.0, 3, "gauss")
        assert k_max_3 == pytest.approx((2.0 * math.pi) ** -1.5, abs=1e-15)
        assert c2_3 == pytest.approx(3.0 * math.sqrt(2.0 / math.pi), abs=1e-12)

    def test_truncated_gaussian_constants_by_quadrature(self):
        from entrokit.integrate import adaptive_simpson

        _, _, c2, k_max = derived_constants(1.0, 1, "trunc_gauss")
        phi = lambda t: np.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)
        z1 = adaptive_simpson(phi, -0.5, 0.5, tol=1e-12)
        assert k_max == pytest.approx(phi(np.array([0.0]))[0] / z1, rel=1e-10)
        moment = adaptive_simpson(lambda t: np.abs(t) * phi(t), -0.5, 0.5, tol=1e-12) / z1
        assert c2 == pytest.approx(moment, rel=1e-9)

    def test_unknown_kernel_rejected(self):
        with pytest.raises(ParameterError):
            derived_constants(1.0, 1, "box")


class TestLemmaLogInequality:
    def test_holds_on_random_trials(self):
        # |log x - log y| <= -log(1 - delta/a) under the lemma's preconditions
        rng = np.random.default_rng(123)
        n = 100_000
        a = rng.uniform(1e-3, 1.0 - 1e-3, n)
        delta = a * rng.uniform(0.0, 0.999, n)
        y = a + rng.exponential(1.0, n)
        x = y + rng.uniform(-1.0, 1.0, n) * delta
        lhs = np.abs(np.log(x) - np.log(y))
        rhs = -np.log1p(-delta / a)
        violations = int(np.sum(lhs > rhs + 1e-12))
        assert violations == 0

    def test_small_density_probability_bound(self):
        # Pr[p(X) <= a] <= a for a density on a unit-volume support
        spec = TriangleMixtureSpec.random(2, 1, np.random.default_rng(9))
        scale = float(spec.components)  # map [1, 1+c] onto [0, 1]
        rng = np.random.default_rng(10)
        z = (spec.sample(200_000, rng).ravel() - 1.0) / scale
        dens = scale * spec.pdf1(1.0 + scale * z)
        for a in (0.01, 0.1, 0.5):
            freq = float(np.mean(dens <= a))
            assert freq <= a + 3.0 * math.sqrt(a * (1 - a) / z.size) + 1e-6


class TestConvenienceConstructor:
    def test_fills_constants(self):
        b = bound_inputs_from_lipschitz(1e4, 1e12, 0.05, 1, 0.05, 2.0)
        _, c1, c2, k_max = derived_constants(2.0, 1)
        assert (b.c1, b.c2, b.k_max) == (c1, c2, k_max)
