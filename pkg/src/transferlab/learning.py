"""Learning systems over finite carriers.

A learning system couples a finite hypothesis table with an algorithm
that selects a parameter from data by exact exhaustive minimization of
an objective (plain empirical risk, or risk penalized by distance to an
anchor parameter).  Because every carrier is finite, the defining
biconditionals of the construction are checkable by enumeration, which
is what :func:`verify_learning_axioms` does.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .errors import (
    CapExceeded,
    EmptyDataset,
    SupportMismatch,
    UnknownElement,
    ValidationError,
)
from .measures import ConditionalMeasure, EmpiricalMeasure
from .relations import (
    Atom,
    FiniteSet,
    FiniteSystem,
    GoalSeekingSpec,
    GoalSeekReport,
    cascade,
    check_goal_seeking,
)


@dataclass(frozen=True)
class Dataset:
    """A finite multiset of input-output pairs with a provenance tag."""

    pairs: tuple[tuple[Atom, Atom], ...]
    source_tag: str = "data"

    def __post_init__(self) -> None:
        object.__setattr__(self, "pairs", tuple(tuple(p) for p in self.pairs))
        for p in self.pairs:
            if len(p) != 2:
                raise ValidationError(f"dataset pair {p!r} is not a 2-tuple")

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def validate_against(self, x_set: FiniteSet, y_set: FiniteSet) -> None:
        for x, y in self.pairs:
            if x not in x_set:
                raise UnknownElement(f"data input {x!r} not in set {x_set.name!r}")
            if y not in y_set:
                raise UnknownElement(f"data output {y!r} not in set {y_set.name!r}")


@dataclass(frozen=True)
class LossSpec:
    """A per-pair loss: zero-one for symbolic labels, squared for numeric."""

    kind: str = "zero_one"

    def __post_init__(self) -> None:
        if self.kind not in ("zero_one", "squared"):
            raise ValidationError(f"unknown loss kind {self.kind!r}")

    def loss(self, y: Atom, prediction: Atom) -> float:
        if self.kind == "zero_one":
            return 0.0 if y == prediction else 1.0
        try:
            diff = float(y) - float(prediction)
        except (TypeError, ValueError):
            raise ValidationError(
                f"squared loss needs numeric labels, got {y!r} and {prediction!r}"
            ) from None
        return diff * diff


ZERO_ONE = LossSpec("zero_one")
SQUARED = LossSpec("squared")


@dataclass(frozen=True)
class HypothesisClass:
    """A total table mapping (parameter, input) to an output."""

    theta_set: FiniteSet
    table: Mapping[tuple[Atom, Atom], Atom]

    def __post_init__(self) -> None:
        object.__setattr__(self, "table", dict(self.table))

    def output(self, theta: Atom, x: Atom) -> Atom:
        try:
            return self.table[(theta, x)]
        except KeyError:
            raise UnknownElement(f"hypothesis table has no entry for {(theta, x)!r}") from None

    def output_vector(self, theta: Atom, xs: Sequence[Atom]) -> tuple[Atom, ...]:
        return tuple(self.output(theta, x) for x in xs)

    def validate_against(self, x_set: FiniteSet, y_set: FiniteSet) -> None:
        for theta in self.theta_set.elements:
            for x in x_set.elements:
                if (theta, x) not in self.table:
                    raise ValidationError(
                        f"hypothesis table is not total: missing {(theta, x)!r}"
                    )
                y = self.table[(theta, x)]
                if y not in y_set:
                    raise UnknownElement(
                        f"hypothesis output {y!r} not in set {y_set.name!r}"
                    )


def full_function_class(
    x_set: FiniteSet,
    y_set: FiniteSet,
    prefix: str = "h",
    max_size: int = 4096,
) -> HypothesisClass:
    """Every function from the input set to the output set, canonically indexed."""
    count = len(y_set) ** len(x_set)
    if count > max_size:
        raise CapExceeded(
            f"{count} functions from {x_set.name} to {y_set.name} exceed cap {max_size}"
        )
    width = max(len(str(count - 1)), 1)
    names = []
    table: dict[tuple[Atom, Atom], Atom] = {}
    for i, outputs in enumerate(itertools.product(y_set.elements, repeat=len(x_set))):
        name = f"{prefix}{i:0{width}d}"
        names.append(name)
        for x, y in zip(x_set.elements, outputs):
            table[(name, x)] = y
    return HypothesisClass(FiniteSet(f"{prefix}_params", tuple(names)), table)


@dataclass(frozen=True)
class AlgorithmSpec:
    """How a parameter is selected from data.

    ``erm`` minimizes empirical risk exactly over the parameter set.
    ``penalized`` adds ``weight`` times the normalized Hamming distance
    between the candidate's output vector and the anchor's; with empty
    data it returns the anchor itself.
    """

    kind: str = "erm"
    anchor: Atom | None = None
    weight: float = 0.1

    def __post_init__(self) -> None:
        if self.kind not in ("erm", "penalized"):
            raise ValidationError(f"unknown algorithm kind {self.kind!r}")
        if self.kind == "penalized" and self.anchor is None:
            raise ValidationError("penalized selection needs an anchor parameter")
        if self.weight < 0:
            raise ValidationError("penalty weight must be non-negative")


@dataclass(frozen=True)
class LearningSystem:
    """Finite input/output sets, a hypothesis table, a loss, an algorithm."""

    x_set: FiniteSet
    y_set: FiniteSet
    hypotheses: HypothesisClass
    loss: LossSpec = ZERO_ONE
    algorithm: AlgorithmSpec = AlgorithmSpec()

    def __post_init__(self) -> None:
        self.hypotheses.validate_against(self.x_set, self.y_set)
        if self.algorithm.kind == "penalized":
            if self.algorithm.anchor not in self.hypotheses.theta_set:
                raise UnknownElement(
                    f"anchor {self.algorithm.anchor!r} is not a parameter"
                )

    @property
    def theta_set(self) -> FiniteSet:
        return self.hypotheses.theta_set


@dataclass(frozen=True)
class EvaluationContext:
    """What to evaluate against: a declared truth table or held-out data.

    ``truth`` is either a total mapping from inputs to outputs
    (synthetic mode) or a :class:`Dataset` (hold-out mode); the mode in
    force is echoed in every report that uses the context.
    """

    truth: Mapping[Atom, Atom] | Dataset
    epsilon_star: float = math.inf

    def __post_init__(self) -> None:
        if not isinstance(self.truth, Dataset):
            object.__setattr__(self, "truth", dict(self.truth))

    @property
    def mode(self) -> str:
        return "holdout" if isinstance(self.truth, Dataset) else "truth-table"


@dataclass(frozen=True)
class SystemPack:
    """A learning system bundled with its empirical context.

    Declared measures and the truth table are optional; analyses that
    need them raise :class:`~transferlab.errors.MissingMeasure` when
    absent.
    """

    system: LearningSystem
    dataset: Dataset
    marginal: EmpiricalMeasure | None = None
    posterior: ConditionalMeasure | None = None
    truth: Mapping[Atom, Atom] | None = None
    tag: str = "pack"

    def __post_init__(self) -> None:
        self.dataset.validate_against(self.system.x_set, self.system.y_set)
        if self.truth is not None:
            truth = dict(self.truth)
            for x in self.system.x_set.elements:
                if x not in truth:
                    raise ValidationError(f"truth table undefined on {x!r}")
                if truth[x] not in self.system.y_set:
                    raise UnknownElement(f"truth value {truth[x]!r} outside outputs")
            object.__setattr__(self, "truth", truth)

    def context(self, epsilon_star: float = math.inf) -> EvaluationContext:
        if self.truth is None:
            raise ValidationError(f"pack {self.tag!r} declares no truth table")
        return EvaluationContext(self.truth, epsilon_star)


# -- core operations -----------------------------------------------------------

def _pair_counts(pairs: Sequence[tuple[Atom, Atom]]) -> dict[tuple[Atom, Atom], int]:
    counts: dict[tuple[Atom, Atom], int] = {}
    for p in pairs:
        counts[p] = counts.get(p, 0) + 1
    return counts


def empirical_risk(data: Dataset, theta: Atom, system: LearningSystem) -> float:
    """Mean loss of the hypothesis indexed by ``theta`` on the data."""
    if len(data) == 0:
        raise EmptyDataset("empirical risk needs at least one pair")
    counts = _pair_counts(data.pairs)
    loss = system.loss.loss
    h = system.hypotheses.output
    total = math.fsum(c * loss(y, h(theta, x)) for (x, y), c in counts.items())
    return total / len(data)


def output_distance(system: LearningSystem, theta: Atom, anchor: Atom) -> float:
    """Normalized Hamming distance between two hypotheses' output vectors."""
    xs = system.x_set.elements
    h = system.hypotheses.output
    differing = sum(1 for x in xs if h(theta, x) != h(anchor, x))
    return differing / len(xs)


def selection_objective(data: Dataset, theta: Atom, system: LearningSystem) -> float:
    """The quantity the system's algorithm minimizes for this data."""
    algo = system.algorithm
    if algo.kind == "erm":
        return empirical_risk(data, theta, system)
    penalty = algo.weight * output_distance(system, theta, algo.anchor)
    if len(data) == 0:
        return penalty
    return empirical_risk(data, theta, system) + penalty


def run_algorithm(data: Dataset, system: LearningSystem) -> Atom:
    """Exact argmin of the selection objective over the parameter set.

    Ties break toward the smallest parameter index in canonical order.
    With empty data a penalized algorithm returns its anchor; plain ERM
    raises :class:`EmptyDataset`.
    """
    algo = system.algorithm
    if len(data) == 0:
        if algo.kind == "penalized":
            return algo.anchor
        raise EmptyDataset("exact risk minimization needs data")
    best_theta = None
    best_value = math.inf
    for theta in system.theta_set.elements:
        value = selection_objective(data, theta, system)
        if value < best_value:
            best_value = value
            best_theta = theta
    return best_theta


def evaluate(system: LearningSystem, theta: Atom, x: Atom) -> Atom:
    """Look up the hypothesis output; membership is validated."""
    if theta not in system.theta_set:
        raise UnknownElement(f"{theta!r} is not a parameter of the system")
    if x not in system.x_set:
        raise UnknownElement(f"{x!r} is not an input of the system")
    return system.hypotheses.output(theta, x)


def prediction_error(
    predict: Callable[[Atom], Atom],
    ctx: EvaluationContext,
    loss: LossSpec,
    weight: EmpiricalMeasure | None = None,
    x_set: FiniteSet | None = None,
) -> float:
    """Expected loss of an arbitrary predictor against a context.

    In truth-table mode the expectation runs over the declared inputs,
    uniformly unless ``weight`` supplies a measure on them.  In hold-out
    mode it is the mean loss over the held-out pairs and ``weight`` is
    ignored.
    """
    if isinstance(ctx.truth, Dataset):
        pairs = ctx.truth.pairs
        if not pairs:
            raise EmptyDataset("hold-out evaluation needs at least one pair")
        return math.fsum(loss.loss(y, predict(x)) for x, y in pairs) / len(pairs)

    xs = tuple(ctx.truth.keys()) if x_set is None else x_set.elements
    for x in xs:
        if x not in ctx.truth:
            raise ValidationError(f"truth table undefined on {x!r}")
    if weight is None:
        w = {x: 1.0 / len(xs) for x in xs}
    else:
        if not frozenset(weight.support.elements) == frozenset(xs):
            raise SupportMismatch("weight measure must live on the evaluated inputs")
        w = weight.as_dict()
    return math.fsum(w[x] * loss.loss(ctx.truth[x], predict(x)) for x in xs)


def generalization_error(
    system: LearningSystem,
    theta: Atom,
    ctx: EvaluationContext,
    weight: EmpiricalMeasure | None = None,
) -> float:
    """Expected loss of the hypothesis ``theta`` against the context."""
    return prediction_error(
        lambda x: evaluate(system, theta, x), ctx, system.loss, weight, system.x_set
    )


# -- axiom verification ---------------------------------------------------------

@dataclass(frozen=True)
class AxiomReport:
    """Violations found by the decomposition / goal-seeking / optimality checks."""

    cascade_violations: tuple[tuple[Atom, ...], ...]
    seeking: GoalSeekReport
    optimality_violations: tuple[tuple[Atom, ...], ...]
    dataset_names: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return (
            not self.cascade_violations
            and self.seeking.passed
            and not self.optimality_violations
        )


def _dataset_atom_names(datasets: Sequence[Dataset]) -> tuple[str, ...]:
    names = []
    for i, d in enumerate(datasets):
        name = f"d{i}"
        names.append(name)
    return tuple(names)


def verify_decomposition(
    x_set: FiniteSet,
    y_set: FiniteSet,
    theta_set: FiniteSet,
    output_fn: Callable[[Atom, Atom], Atom],
    datasets: Sequence[Dataset],
    select_fn: Callable[[Dataset], Atom],
    objective_fn: Callable[[Dataset, Atom], float],
    functional_system: FiniteSystem | None = None,
    inductive_system: FiniteSystem | None = None,
) -> AxiomReport:
    """Check that selection plus hypothesis lookup form one coherent relation.

    Three checks run over the sampled datasets:

    1. the composition of the inductive relation (data -> parameter)
       with the functional relation (parameter, input -> output) through
       the shared parameter set reproduces the direct input-output
       relation, tuple for tuple;
    2. the goal/seeking pair built from the objective is consistent with
       the inductive relation (both directions of the biconditional);
    3. the selected parameter attains the minimum objective, and
       re-selection is deterministic.

    ``functional_system`` / ``inductive_system`` override the derived
    relations so hand-built (possibly corrupted) representations can be
    audited against the system's behavior.
    """
    if not datasets:
        raise EmptyDataset("axiom verification needs at least one sampled dataset")
    names = _dataset_atom_names(datasets)
    d_set = FiniteSet("datasets", names)
    by_name = dict(zip(names, datasets))
    selected = {name: select_fn(by_name[name]) for name in names}

    if inductive_system is None:
        inductive_system = FiniteSystem(
            (d_set, theta_set),
            tuple((name, selected[name]) for name in names),
            ((0,), (1,)),
        )
    if functional_system is None:
        functional_system = FiniteSystem(
            (theta_set, x_set, y_set),
            tuple(
                (theta, x, output_fn(theta, x))
                for theta in theta_set.elements
                for x in x_set.elements
            ),
            ((0, 1), (2,)),
        )

    composed = cascade(inductive_system, functional_system, (1, 0))
    direct = frozenset(
        (name, x, output_fn(selected[name], x))
        for name in names
        for x in x_set.elements
    )
    cascade_violations = tuple(
        sorted(direct.symmetric_difference(composed.tuple_set), key=repr)
    )

    goal: dict[tuple[Atom, ...], float] = {}
    for name in names:
        for theta in theta_set.elements:
            goal[(name, theta)] = objective_fn(by_name[name], theta)
    value_order: list[float] = []
    for v in goal.values():
        if v not in value_order:
            value_order.append(v)
    gs = GoalSeekingSpec(
        FiniteSet("objective_values", tuple(value_order)),
        goal,
        frozenset(
            (name, goal[(name, selected[name])], selected[name]) for name in names
        ),
    )
    seeking = check_goal_seeking(None, inductive_system, gs)

    optimality: list[tuple[Atom, ...]] = []
    for name in names:
        chosen = selected[name]
        chosen_value = goal[(name, chosen)]
        for theta in theta_set.elements:
            if goal[(name, theta)] < chosen_value - 1e-12:
                optimality.append((name, theta))
        if select_fn(by_name[name]) != chosen:
            optimality.append((name, "nondeterministic"))

    return AxiomReport(cascade_violations, seeking, tuple(optimality), names)


def verify_learning_axioms(
    system: LearningSystem,
    sample_datasets: Sequence[Dataset],
    functional_system: FiniteSystem | None = None,
    inductive_system: FiniteSystem | None = None,
) -> AxiomReport:
    """Run the decomposition checks on a learning system directly."""
    for d in sample_datasets:
        d.validate_against(system.x_set, system.y_set)
    return verify_decomposition(
        system.x_set,
        system.y_set,
        system.theta_set,
        system.hypotheses.output,
        sample_datasets,
        lambda d: run_algorithm(d, system),
        lambda d, theta: selection_objective(d, theta, system),
        functional_system=functional_system,
        inductive_system=inductive_system,
    )


def as_goal_seeking(
    system: LearningSystem, sample_datasets: Sequence[Dataset]
) -> tuple[FiniteSystem, GoalSeekingSpec]:
    """Materialize the inductive relation and its goal/seeking pair.

    The returned pieces feed :func:`transferlab.relations.check_goal_seeking`
    directly: dataset atoms form the base carrier, the goal assigns each
    (data, parameter) its selection objective, and seeking contains
    exactly the selections the algorithm makes.
    """
    for d in sample_datasets:
        d.validate_against(system.x_set, system.y_set)
    names = _dataset_atom_names(sample_datasets)
    by_name = dict(zip(names, sample_datasets))
    selected = {name: run_algorithm(by_name[name], system) for name in names}
    inductive = FiniteSystem(
        (FiniteSet("datasets", names), system.theta_set),
        tuple((name, selected[name]) for name in names),
        ((0,), (1,)),
    )
    goal = {
        (name, theta): selection_objective(by_name[name], theta, system)
        for name in names
        for theta in system.theta_set.elements
    }
    value_order: list[float] = []
    for v in goal.values():
        if v not in value_order:
            value_order.append(v)
    gs = GoalSeekingSpec(
        FiniteSet("objective_values", tuple(value_order)),
        goal,
        frozenset((name, goal[(name, selected[name])], selected[name]) for name in names),
    )
    return inductive, gs
