import math

import numpy as np
import pytest

from helpers import random_dataset, random_learning_system
from transferlab.errors import EmptyDataset, UnknownElement
from transferlab.learning import (
    AlgorithmSpec,
    Dataset,
    EvaluationContext,
    HypothesisClass,
    LearningSystem,
    LossSpec,
    as_goal_seeking,
    empirical_risk,
    evaluate,
    full_function_class,
    generalization_error,
    run_algorithm,
    selection_objective,
    verify_learning_axioms,
)
from transferlab.measures import EmpiricalMeasure
from transferlab.relations import (
    FiniteSet,
    FiniteSystem,
    GoalSeekingSpec,
    check_goal_seeking,
)


def two_theta_system():
    x = FiniteSet("X", ("x0", "x1", "x2"))
    y = FiniteSet("Y", (0, 1))
    thetas = FiniteSet("T", ("t0", "t1"))
    table = {
        ("t0", "x0"): 0, ("t0", "x1"): 1, ("t0", "x2"): 0,
        ("t1", "x0"): 1, ("t1", "x1"): 0, ("t1", "x2"): 0,
    }
    return LearningSystem(x, y, HypothesisClass(thetas, table))


class TestEmpiricalRisk:
    def test_perfect_hypothesis(self):
        sys = two_theta_system()
        d = Dataset((("x0", 0), ("x1", 1), ("x2", 0)))
        assert empirical_risk(d, "t0", sys) == 0.0

    def test_one_error_in_four(self):
        sys = two_theta_system()
        d = Dataset((("x0", 0), ("x1", 1), ("x2", 0), ("x0", 1)))
        assert empirical_risk(d, "t0", sys) == 0.25

    def test_squared_loss_matches_direct_sum(self):
        x = FiniteSet("X", ("x0", "x1", "x2"))
        y = FiniteSet("Y", (0, 1, 2, 3))
        thetas = FiniteSet("T", ("t0",))
        table = {("t0", "x0"): 1, ("t0", "x1"): 3, ("t0", "x2"): 0}
        sys = LearningSystem(x, y, HypothesisClass(thetas, table), LossSpec("squared"))
        d = Dataset((("x0", 3), ("x1", 0), ("x2", 2)))
        expected = ((3 - 1) ** 2 + (0 - 3) ** 2 + (2 - 0) ** 2) / 3
        assert empirical_risk(d, "t0", sys) == pytest.approx(expected)

    def test_empty_dataset(self):
        with pytest.raises(EmptyDataset):
            empirical_risk(Dataset(()), "t0", two_theta_system())


class TestRunAlgorithm:
    def test_lower_risk_wins(self):
        sys = two_theta_system()
        d = Dataset((("x0", 0), ("x1", 0), ("x0", 0)))
        risks = {t: empirical_risk(d, t, sys) for t in ("t0", "t1")}
        assert risks["t0"] == pytest.approx(1 / 3)
        assert risks["t1"] == pytest.approx(2 / 3)
        assert run_algorithm(d, sys) == "t0"

    def test_tie_breaks_to_first_parameter(self):
        sys = two_theta_system()
        d = Dataset((("x2", 0),))  # both hypotheses agree here
        assert run_algorithm(d, sys) == "t0"

    def test_penalized_empty_data_returns_anchor(self):
        base = two_theta_system()
        sys = LearningSystem(
            base.x_set, base.y_set, base.hypotheses,
            base.loss, AlgorithmSpec("penalized", anchor="t1"),
        )
        assert run_algorithm(Dataset(()), sys) == "t1"

    def test_erm_empty_data_raises(self):
        with pytest.raises(EmptyDataset):
            run_algorithm(Dataset(()), two_theta_system())

    def test_penalized_pulls_toward_anchor(self):
        base = two_theta_system()
        sys = LearningSystem(
            base.x_set, base.y_set, base.hypotheses,
            base.loss, AlgorithmSpec("penalized", anchor="t1", weight=10.0),
        )
        d = Dataset((("x0", 0),))  # plain risk prefers t0, heavy penalty overrides
        assert run_algorithm(d, base) != run_algorithm(d, sys)
        assert run_algorithm(d, sys) == "t1"


class TestEvaluate:
    def test_lookup(self):
        assert evaluate(two_theta_system(), "t0", "x1") == 1

    def test_unknown_input(self):
        with pytest.raises(UnknownElement):
            evaluate(two_theta_system(), "t0", "zz")

    def test_full_sweep_covers_table_once(self):
        sys = two_theta_system()
        seen = {
            (t, x): evaluate(sys, t, x)
            for t in sys.theta_set.elements
            for x in sys.x_set.elements
        }
        assert seen == dict(sys.hypotheses.table)


class TestGeneralizationError:
    def test_exact_match_is_zero(self):
        sys = two_theta_system()
        ctx = EvaluationContext({"x0": 0, "x1": 1, "x2": 0})
        assert generalization_error(sys, "t0", ctx) == 0.0

    def test_quarter_error_uniform(self):
        x = FiniteSet("X", ("a", "b", "c", "d"))
        y = FiniteSet("Y", (0, 1))
        hc = full_function_class(x, y)
        sys = LearningSystem(x, y, hc)
        truth = {"a": 0, "b": 0, "c": 0, "d": 0}
        theta = next(
            t for t in hc.theta_set.elements
            if hc.output_vector(t, x.elements) == (0, 0, 0, 1)
        )
        assert generalization_error(sys, theta, EvaluationContext(truth)) == 0.25

    def test_weighted_expectation(self):
        sys = two_theta_system()
        ctx = EvaluationContext({"x0": 0, "x1": 0, "x2": 0})
        weight = EmpiricalMeasure(sys.x_set, (0.1, 0.6, 0.3))
        # t0 errs only on x1 under this truth
        assert generalization_error(sys, "t0", ctx, weight) == pytest.approx(0.6)

    def test_holdout_mode(self):
        sys = two_theta_system()
        held = Dataset((("x0", 0), ("x1", 0)))
        ctx = EvaluationContext(held)
        assert ctx.mode == "holdout"
        assert generalization_error(sys, "t0", ctx) == pytest.approx(0.5)

    def test_zero_one_error_bounded(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            sys = random_learning_system(rng)
            theta = sys.theta_set.elements[0]
            truth = {x: sys.y_set.elements[0] for x in sys.x_set.elements}
            err = generalization_error(sys, theta, EvaluationContext(truth))
            assert 0.0 <= err <= 1.0


class TestAxioms:
    def test_random_exact_erm_systems_pass(self):
        rng = np.random.default_rng(17)
        for _ in range(25):
            sys = random_learning_system(rng)
            datasets = [
                random_dataset(rng, sys, int(rng.integers(1, 8)), f"d{j}")
                for j in range(3)
            ]
            assert verify_learning_axioms(sys, datasets).passed

    def test_corrupted_functional_system_fails_with_witness(self):
        rng = np.random.default_rng(23)
        sys = random_learning_system(rng)
        d = random_dataset(rng, sys, 5)
        selected = run_algorithm(d, sys)
        x0 = sys.x_set.elements[0]
        wrong = next(
            y for y in sys.y_set.elements if y != sys.hypotheses.output(selected, x0)
        )
        tuples = [
            (t, x, wrong if (t, x) == (selected, x0) else sys.hypotheses.output(t, x))
            for t in sys.theta_set.elements
            for x in sys.x_set.elements
        ]
        corrupt = FiniteSystem(
            (sys.theta_set, sys.x_set, sys.y_set), tuple(tuples), ((0, 1), (2,))
        )
        report = verify_learning_axioms(sys, [d], functional_system=corrupt)
        assert not report.passed
        assert any(w[0] == "d0" and w[1] == x0 for w in report.cascade_violations)

    def test_argmax_seeking_fails(self):
        sys = two_theta_system()
        d = Dataset((("x0", 0), ("x1", 1), ("x2", 1)))
        inductive, gs = as_goal_seeking(sys, [d])
        worst = max(
            sys.theta_set.elements, key=lambda t: selection_objective(d, t, sys)
        )
        argmax_version = GoalSeekingSpec(
            gs.value_set,
            gs.goal,
            frozenset({("d0", gs.goal[("d0", worst)], worst)}),
        )
        assert check_goal_seeking(None, inductive, gs).passed
        assert not check_goal_seeking(None, inductive, argmax_version).passed

    def test_goal_seek_export_passes_relations_check(self):
        rng = np.random.default_rng(31)
        sys = random_learning_system(rng)
        datasets = [random_dataset(rng, sys, 4, f"d{j}") for j in range(2)]
        inductive, gs = as_goal_seeking(sys, datasets)
        assert check_goal_seeking(None, inductive, gs).passed


class TestAlgorithmProperties:
    def test_argmin_optimality_exhaustive(self):
        rng = np.random.default_rng(41)
        for _ in range(20):
            sys = random_learning_system(rng)
            d = random_dataset(rng, sys, int(rng.integers(1, 10)))
            best = run_algorithm(d, sys)
            best_risk = empirical_risk(d, best, sys)
            for theta in sys.theta_set.elements:
                assert best_risk <= empirical_risk(d, theta, sys) + 1e-12

    def test_determinism(self):
        rng = np.random.default_rng(43)
        sys = random_learning_system(rng)
        d = random_dataset(rng, sys, 6)
        assert run_algorithm(d, sys) == run_algorithm(d, sys)

    def test_permutation_invariance_up_to_ties(self):
        rng = np.random.default_rng(47)
        for _ in range(10):
            sys = random_learning_system(rng)
            d = random_dataset(rng, sys, 5)
            perm = list(sys.theta_set.elements)
            rng.shuffle(perm)
            permuted = LearningSystem(
                sys.x_set,
                sys.y_set,
                HypothesisClass(FiniteSet("T", tuple(perm)), dict(sys.hypotheses.table)),
                sys.loss,
                sys.algorithm,
            )
            risk_a = empirical_risk(d, run_algorithm(d, sys), sys)
            risk_b = empirical_risk(d, run_algorithm(d, permuted), permuted)
            assert risk_a == pytest.approx(risk_b, abs=1e-12)
