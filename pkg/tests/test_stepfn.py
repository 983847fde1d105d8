"""Distribution and quantile functions under a capacity."""

import numpy as np
import pytest

from choquetrisk import (
    Position,
    SampleSpace,
    StepFunction,
    distribution_function,
    quantiles,
    uniform_capacity,
)
from choquetrisk.errors import InvalidValue, SpaceMismatch
from choquetrisk.sampling import random_capacity, random_position, random_space


class TestStepFunction:
    def test_right_continuous(self):
        f = StepFunction((0.0, 1.0), (0.0, 0.5, 1.0))
        assert f(-1.0) == 0.0
        assert f(0.0) == 0.5
        assert f(1.0) == 1.0
        assert f.left_limit(1.0) == 0.5
        assert f.right_limit(0.0) == 0.5

    def test_left_continuous(self):
        f = StepFunction((0.0, 1.0), (0.0, 0.5, 1.0), right_continuous=False)
        assert f(0.0) == 0.0
        assert f(0.5) == 0.5
        assert f(1.0) == 0.5
        assert f(1.5) == 1.0

    def test_evaluate_many_matches_scalar(self):
        f = StepFunction((0.0, 1.0, 2.5), (0.0, 0.2, 0.7, 1.0), right_continuous=False)
        xs = np.array([-1.0, 0.0, 0.3, 1.0, 2.5, 7.0])
        assert f.evaluate_many(xs).tolist() == [f(x) for x in xs.tolist()]

    def test_plateaus(self):
        f = StepFunction((1.0,), (0.0, 1.0))
        assert f.plateaus() == [(-np.inf, 1.0, 0.0), (1.0, np.inf, 1.0)]

    @pytest.mark.parametrize(
        "breakpoints,values",
        [((0.0,), (0.0,)), ((1.0, 0.0), (0.0, 0.5, 1.0)), ((0.0,), (1.0, 0.0))],
    )
    def test_rejects_malformed(self, breakpoints, values):
        with pytest.raises(InvalidValue):
            StepFunction(breakpoints, values)


class TestDistributionFunction:
    def test_uniform_plateaus(self, uniform4, x3110):
        g = distribution_function(x3110, uniform4)
        assert g.breakpoints == (0.0, 1.0, 3.0)
        assert g.values == (0.0, 0.25, 0.75, 1.0)
        assert g(0.5) == 0.25
        assert g(1.0) == 0.75
        assert g.left_limit(1.0) == 0.25

    def test_distorted_plateaus(self, squared4, x3110):
        g = distribution_function(x3110, squared4)
        assert g.values == (0.0, 0.4375, 0.9375, 1.0)

    def test_constant_position(self, abcd, uniform4):
        g = distribution_function(Position.constant(abcd, 2.0), uniform4)
        assert g.breakpoints == (2.0,)
        assert g.values == (0.0, 1.0)

    def test_space_mismatch(self, uniform4):
        other = SampleSpace.of("wxyz")
        with pytest.raises(SpaceMismatch):
            distribution_function(Position.of(other, [1, 2, 3, 4]), uniform4)

    def test_limits_and_monotonicity_on_random_inputs(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            space = random_space(rng)
            c = random_capacity(rng, space)
            x = random_position(rng, space)
            g = distribution_function(x, c)
            assert g.lower_limit == 0.0
            assert g.upper_limit == 1.0
            assert all(a <= b for a, b in zip(g.values, g.values[1:]))
            assert g(x.max) == 1.0


class TestQuantiles:
    def test_uniform(self, uniform4, x3110):
        r = quantiles(x3110, uniform4)
        assert r.r_minus(0.25) == 0.0
        assert r.r_plus(0.25) == 1.0
        assert r.r_minus(0.5) == 1.0
        assert r.r_plus(0.5) == 1.0
        assert r.r_minus(0.75) == 1.0
        assert r.r_plus(0.75) == 3.0
        assert r.at_zero == 0.0
        assert r.at_one == 3.0
        assert r.r_minus(0.0) == 0.0
        assert r.r_plus(1.0) == 3.0

    def test_upper_integral_is_expectation(self, uniform4, x3110):
        r = quantiles(x3110, uniform4)
        assert r.upper_integral(0.0, 1.0) == pytest.approx(1.25)
        assert r.upper_integral(0.75, 1.0) == pytest.approx(0.75)

    def test_quantiles_bracket(self):
        rng = np.random.default_rng(5)
        for _ in range(40):
            space = random_space(rng)
            c = random_capacity(rng, space)
            x = random_position(rng, space)
            r = quantiles(x, c)
            for t in rng.uniform(0.0, 1.0, size=10).tolist():
                assert x.min <= r.r_minus(t) <= r.r_plus(t) <= x.max

    def test_constant_position_has_flat_quantiles(self):
        space = SampleSpace.of("ab")
        c = uniform_capacity(space)
        r = quantiles(Position.of(space, [5.0, 5.0]), c)
        assert r.at_zero == r.at_one == r.r_minus(0.5) == 5.0


def test_quantiles_invert_the_distribution_function():
    rng = np.random.default_rng(17)
    grid = (np.arange(1, 1000) / 1000).tolist()
    for _ in range(60):
        space = random_space(rng)
        c = random_capacity(rng, space)
        x = random_position(rng, space)
        g = distribution_function(x, c)
        r = quantiles(x, c)
        for t in grid:
            for q in (r.r_minus(t), r.r_plus(t)):
                assert g.left_limit(q) <= t <= g(q)
            # the lower quantile is the smallest point reaching t
            assert g.left_limit(r.r_minus(t)) < t
