"""Extraction of a random distortion from a risk measure, axioms and verification."""

import sys
import textwrap
import time

import numpy as np
import pytest

from conftest import indicator_capacity

from choquetrisk import (
    AVaR,
    BlockPartition,
    BuiltFromDistortion,
    CallableRiskMeasure,
    ChoquetConfig,
    ConditionalExpectation,
    GridDistortion,
    Identity,
    PluginError,
    PluginRiskMeasure,
    Position,
    VaR,
    build_nested_chain,
    builtin_distortion,
    check_axioms,
    extract_distortion,
    probability_capacity,
    reset_config,
    set_config,
    validate_capacity,
    verify_representation,
)
from choquetrisk.errors import (
    ExtractionMissing,
    InvalidRanking,
    InvalidValue,
    NotNormalized,
    PartitionMismatch,
    WellDefinednessViolation,
)
from choquetrisk.representation import evaluate_many
from choquetrisk.sampling import random_capacity, random_distortion, random_partition, random_space

P4 = (0.4, 0.3, 0.2, 0.1)


@pytest.fixture
def trivial(abcd):
    return BlockPartition.trivial(abcd)


@pytest.fixture
def halves(abcd):
    return BlockPartition.from_labels(abcd, {"A": ["a", "b"], "Ac": ["c", "d"]})


@pytest.fixture
def weighted(abcd):
    return probability_capacity(abcd, P4)


class TestRiskMeasures:
    def test_conditional_expectation(self, abcd, halves):
        rho = ConditionalExpectation(abcd, halves, P4)
        v = rho.evaluate(Position.of(abcd, [1, 2, 3, 0]))
        assert v.values == pytest.approx((1.0 / 0.7, 2.0))

    def test_zero_mass_block_uses_plain_mean(self, abcd, halves):
        rho = ConditionalExpectation(abcd, halves, (0.5, 0.5, 0.0, 0.0))
        assert rho.evaluate(Position.of(abcd, [0, 0, 2, 4]))["Ac"] == 3.0

    def test_callable(self, abcd, trivial):
        rho = CallableRiskMeasure(abcd, trivial, lambda v: [float(v.max())])
        assert not rho.pure
        assert rho.evaluate(Position.of(abcd, [1, 7, 3, 0])).values == (7.0,)

    def test_evaluate_many_keeps_order(self, abcd, trivial, uniform4):
        rho = BuiltFromDistortion(uniform4, builtin_distortion(trivial, [Identity()]))
        positions = [Position.constant(abcd, float(k)) for k in range(12)]
        assert [v.values[0] for v in evaluate_many(rho, positions)] == list(range(12))


def plugin_script(tmp_path, body):
    script = tmp_path / "plugin.py"
    script.write_text(textwrap.dedent(body))
    return [sys.executable, str(script)]


MEAN_PLUGIN = """
    import json, sys
    for line in sys.stdin:
        req = json.loads(line)
        index = {a: i for i, a in enumerate(req["atoms"])}
        out = []
        for members in req["partition"].values():
            vals = [req["values"][index[a]] for a in members]
            out.append(sum(vals) / len(vals))
        print(json.dumps({"values": out}), flush=True)
"""


class TestPlugin:
    def test_round_trip(self, tmp_path, abcd, halves):
        with PluginRiskMeasure(plugin_script(tmp_path, MEAN_PLUGIN), abcd, halves) as rho:
            assert rho.evaluate(Position.of(abcd, [1, 3, 0, 4])).as_dict() == {"A": 2.0, "Ac": 2.0}
            assert rho.evaluate(Position.of(abcd, [0, 0, 0, 0])).values == (0.0, 0.0)

    def test_wrong_length(self, tmp_path, abcd, halves):
        body = """
            import sys
            for line in sys.stdin:
                print("[1.0]", flush=True)
        """
        with PluginRiskMeasure(plugin_script(tmp_path, body), abcd, halves) as rho:
            with pytest.raises(PluginError):
                rho.evaluate(Position.of(abcd, [1, 2, 3, 4]))

    def test_plugin_exits(self, tmp_path, abcd, halves):
        with PluginRiskMeasure(plugin_script(tmp_path, "pass\n"), abcd, halves) as rho:
            with pytest.raises(PluginError):
                rho.evaluate(Position.of(abcd, [1, 2, 3, 4]))

    def test_silent_plugin_times_out(self, tmp_path, abcd, halves):
        body = """
            import sys, time
            for line in sys.stdin:
                time.sleep(60)
        """
        with PluginRiskMeasure(plugin_script(tmp_path, body), abcd, halves, timeout=0.5) as rho:
            start = time.monotonic()
            with pytest.raises(PluginError, match="did not reply"):
                rho.evaluate(Position.of(abcd, [1, 2, 3, 4]))
            assert time.monotonic() - start < 10.0
            with pytest.raises(PluginError, match="cleaned up"):
                rho.evaluate(Position.of(abcd, [1, 2, 3, 4]))

    def test_timeout_defaults_to_config(self, tmp_path, abcd, halves):
        set_config(ChoquetConfig(plugin_timeout=2.5))
        try:
            with PluginRiskMeasure(plugin_script(tmp_path, MEAN_PLUGIN), abcd, halves) as rho:
                assert rho.timeout == 2.5
                assert rho.evaluate(Position.of(abcd, [2, 2, 0, 0])).values == (2.0, 0.0)
        finally:
            reset_config()
        with pytest.raises(ValueError):
            PluginRiskMeasure(plugin_script(tmp_path, MEAN_PLUGIN), abcd, halves, timeout=0.0)

    def test_missing_command(self, abcd, halves):
        with pytest.raises(PluginError):
            PluginRiskMeasure(["/nonexistent/choquet-plugin"], abcd, halves)

    def test_cleanup_is_idempotent(self, tmp_path, abcd, halves):
        rho = PluginRiskMeasure(plugin_script(tmp_path, MEAN_PLUGIN), abcd, halves)
        rho.cleanup()
        rho.cleanup()
        with pytest.raises(PluginError):
            rho.evaluate(Position.of(abcd, [1, 2, 3, 4]))


class TestNestedChain:
    def test_grid(self, abcd, weighted):
        chain = build_nested_chain(weighted, ["d", "c", "b", "a"])
        assert chain.events == (0, 0b1000, 0b1100, 0b1110, 0b1111)
        assert chain.grid == pytest.approx((0.0, 0.1, 0.3, 0.6, 1.0))
        assert chain.levels()[0] == 0.0 and chain.levels()[-1] == 1.0

    def test_counting_grids(self, abcd, uniform4, squared4):
        assert build_nested_chain(uniform4, "cadb").grid == (0.0, 0.25, 0.5, 0.75, 1.0)
        assert build_nested_chain(squared4, "abcd").grid == (0.0, 0.0625, 0.25, 0.5625, 1.0)

    def test_necessity_grid(self, abcd):
        necessity = validate_capacity(abcd, [0.0] * abcd.full + [1.0])
        assert build_nested_chain(necessity, "abcd").grid == (0.0, 0.0, 0.0, 0.0, 1.0)

    @pytest.mark.parametrize("ranking", [["a", "b", "c"], ["a", "b", "c", "c"], ["a", "b", "c", "z"]])
    def test_invalid_ranking(self, weighted, ranking):
        with pytest.raises(InvalidRanking):
            build_nested_chain(weighted, ranking)


class TestExtraction:
    @pytest.mark.parametrize("gamma,alpha", [(0.5, 0.3), (0.5, 0.6), (0.7, 0.3), (0.2, 0.9)])
    def test_var_on_indicator_capacity(self, abcd, trivial, gamma, alpha):
        c = indicator_capacity(abcd, abcd.event("ab"), gamma)
        rho = BuiltFromDistortion(c, builtin_distortion(trivial, [VaR(alpha)]))
        chain = build_nested_chain(c, "abcd")
        grid = extract_distortion(rho, chain, trivial, probe_events=True, capacity=c)
        assert grid.grid == (0.0, gamma, 1.0)
        assert grid.block_values(0) == (0.0, 1.0 if gamma > 1.0 - alpha else 0.0, 1.0)

    def test_recovers_curves_on_grid(self, abcd, halves, weighted):
        d = builtin_distortion(halves, [VaR(0.3), AVaR(0.5)])
        rho = BuiltFromDistortion(weighted, d)
        chain = build_nested_chain(weighted, "abcd")
        grid = extract_distortion(rho, chain, halves)
        for b, curve in enumerate(d.curves):
            assert grid.block_values(b) == tuple(curve(t) for t in grid.grid)
        assert grid.as_dict()["values"]["Ac"] == list(grid.block_values("Ac"))

    def test_well_definedness_violation(self, abcd, trivial, uniform4):
        rho = ConditionalExpectation(abcd, trivial, P4)
        chain = build_nested_chain(uniform4, "abcd")
        grid = extract_distortion(rho, chain, trivial)
        assert grid.block_values(0)[1] == pytest.approx(0.4)
        with pytest.raises(WellDefinednessViolation) as exc:
            extract_distortion(rho, chain, trivial, probe_events=True, capacity=uniform4)
        assert exc.value.block == "Omega"

    def test_probe_needs_capacity(self, abcd, trivial, uniform4):
        rho = BuiltFromDistortion(uniform4, builtin_distortion(trivial, [Identity()]))
        with pytest.raises(InvalidValue):
            extract_distortion(rho, build_nested_chain(uniform4, "abcd"), trivial, probe_events=True)

    def test_not_normalized(self, abcd, trivial, uniform4):
        rho = CallableRiskMeasure(abcd, trivial, lambda v: [2.0 * float(v.max())])
        with pytest.raises(NotNormalized):
            extract_distortion(rho, build_nested_chain(uniform4, "abcd"), trivial)

    def test_partition_mismatch(self, abcd, trivial, halves, uniform4):
        rho = BuiltFromDistortion(uniform4, builtin_distortion(trivial, [Identity()]))
        with pytest.raises(PartitionMismatch):
            extract_distortion(rho, build_nested_chain(uniform4, "abcd"), halves)


class TestGridDistortion:
    def test_lifts(self, trivial):
        grid = GridDistortion(trivial, (0.0, 0.5, 1.0), ((0.0, 0.8, 1.0),))
        linear = grid.lift("linear").curve(0)
        step = grid.lift("step").curve(0)
        assert linear(0.25) == pytest.approx(0.4)
        assert step(0.25) == 0.8
        assert step(0.0) == 0.0
        assert step(0.75) == 1.0
        with pytest.raises(InvalidValue):
            grid.lift("cubic")

    def test_concave_consistency(self, abcd, trivial):
        concave = GridDistortion(trivial, (0.0, 0.25, 0.5, 0.75, 1.0), ((0.0, 0.5, 0.8, 0.95, 1.0),))
        convex = GridDistortion(trivial, (0.0, 0.25, 0.5, 0.75, 1.0), ((0.0, 0.05, 0.2, 0.5, 1.0),))
        assert concave.concave_consistent()
        assert not convex.concave_consistent()


class TestAxioms:
    def test_built_measure_passes(self, halves, squared4):
        rho = BuiltFromDistortion(squared4, builtin_distortion(halves, [VaR(0.4), AVaR(0.2)]))
        report = check_axioms(rho, squared4, trials=40, seed=1)
        assert report.all_passed
        assert set(report) == {
            "normalization",
            "translation_invariance",
            "positive_homogeneity",
            "comonotonic_additivity",
            "st_consistency",
            "sl_consistency",
        }
        assert not report["sl_consistency"].required

    def test_expectation_breaks_st_consistency(self, abcd, trivial, uniform4):
        rho = ConditionalExpectation(abcd, trivial, P4)
        report = check_axioms(rho, uniform4, trials=40, seed=2)
        assert not report["st_consistency"].passed
        assert report["st_consistency"].counterexample is not None
        assert report["comonotonic_additivity"].passed
        assert not report.all_passed
        assert report.as_dict()["st_consistency"]["passed"] is False

    def test_non_normalized_measure(self, abcd, trivial, uniform4):
        rho = CallableRiskMeasure(abcd, trivial, lambda v: [float(v.max()) + 1.0])
        report = check_axioms(rho, uniform4, trials=5)
        assert not report["normalization"].passed

    def test_trials(self, abcd, trivial, uniform4):
        rho = BuiltFromDistortion(uniform4, builtin_distortion(trivial, [Identity()]))
        with pytest.raises(InvalidValue):
            check_axioms(rho, uniform4, trials=0)


class TestVerification:
    def test_concavity_needs_stop_loss_evidence(self, uniform4, trivial):
        chain = build_nested_chain(uniform4, "abcd")
        rho = BuiltFromDistortion(uniform4, builtin_distortion(trivial, [VaR(0.4)]))
        failing = check_axioms(rho, uniform4, trials=30, seed=1)
        assert not failing["sl_consistency"].passed
        assert verify_representation(rho, uniform4, chain, trivial, 10, axioms=failing).concave_consistent is None

        rho = BuiltFromDistortion(uniform4, builtin_distortion(trivial, [AVaR(0.4)]))
        passing = check_axioms(rho, uniform4, trials=30, seed=1)
        assert passing["sl_consistency"].passed
        report = verify_representation(rho, uniform4, chain, trivial, 10, axioms=passing)
        assert report.concave_consistent is True
        assert report.as_dict()["concave_consistent"] is True

    def test_var_needs_adapted_positions(self, trivial, weighted):
        rho = BuiltFromDistortion(weighted, builtin_distortion(trivial, [VaR(0.65)]))
        chain = build_nested_chain(weighted, "abcd")
        report = verify_representation(rho, weighted, chain, trivial, trials=50)
        assert report.adapted_error <= 1e-9
        assert report.arbitrary_error >= 0.75 - 1e-9
        assert report.as_dict()["lift"] == "linear"

    def test_supplied_grid_must_match_chain(self, trivial, weighted):
        rho = BuiltFromDistortion(weighted, builtin_distortion(trivial, [Identity()]))
        other = extract_distortion(rho, build_nested_chain(weighted, "dcba"), trivial)
        with pytest.raises(ExtractionMissing):
            verify_representation(rho, weighted, build_nested_chain(weighted, "abcd"), trivial, grid=other)

    def test_failed_extraction(self, abcd, trivial, uniform4):
        rho = CallableRiskMeasure(abcd, trivial, lambda v: [2.0 * float(v.max())])
        with pytest.raises(ExtractionMissing):
            verify_representation(rho, uniform4, build_nested_chain(uniform4, "abcd"), trivial)

    def test_round_trip_on_random_instances(self):
        rng = np.random.default_rng(300)
        for _ in range(100):
            space = random_space(rng, 2, 6)
            c = random_capacity(rng, space)
            concave = bool(rng.random() < 0.5)
            d = random_distortion(rng, random_partition(rng, space), concave=concave)
            rho = BuiltFromDistortion(c, d)
            chain = build_nested_chain(c, [space.atoms[i] for i in rng.permutation(space.n)])
            grid = extract_distortion(rho, chain, d.partition)
            for b, curve in enumerate(d.curves):
                assert grid.block_values(b)[1:-1] == tuple(curve(t) for t in grid.grid[1:-1])
            report = verify_representation(rho, c, chain, d.partition, trials=20, grid=grid)
            assert report.adapted_error <= 1e-9
            assert report.concave_consistent is None
            if concave:
                axioms = check_axioms(rho, c, trials=5, seed=int(rng.integers(1000)))
                assert axioms["sl_consistency"].passed
                report = verify_representation(
                    rho, c, chain, d.partition, trials=5, grid=grid, axioms=axioms
                )
                assert report.concave_consistent is True
