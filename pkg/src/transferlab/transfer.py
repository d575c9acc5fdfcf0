"""Transfer between learning systems.

A transfer system carries knowledge selected from a source system
(data instances, a trained parameter, or both) into the training of a
target-facing hypothesis.  Four composition rules are built in:

* ``instance``: exact risk minimization on the pooled data;
* ``parameter``: risk on target data penalized by distance to the
  source-trained anchor (with no target data the anchor is returned);
* ``instance_parameter``: the pooled variant of the penalized rule;
* ``feature_representation``: data is mapped into a latent learning
  system where selection happens, and answers are mapped back to the
  target's output set.

Every rule is an exact argmin of an explicit objective, so the claim
that the result is itself a learning system is checkable by enumeration
(:func:`verify_transfer_is_learning_system`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from .errors import (
    CapExceeded,
    EmptyDataset,
    IncompatibleSupport,
    MissingMeasure,
    MissingSourceArtifact,
    UnknownElement,
    ValidationError,
)
from .learning import (
    AxiomReport,
    Dataset,
    HypothesisClass,
    LearningSystem,
    SystemPack,
    empirical_risk,
    output_distance,
    run_algorithm,
    verify_decomposition,
)
from .measures import total_variation
from .relations import Atom, FiniteSet

APPROACHES = ("instance", "parameter", "instance_parameter", "feature_representation")

#: Tolerance for declared-measure equality when classifying a setting.
MEASURE_EQUALITY_TOL = 1e-9


@dataclass(frozen=True)
class Knowledge:
    """What the source contributes: data instances, parameters, or both."""

    instances: Dataset | None = None
    parameters: tuple[Atom, ...] | None = None

    def __post_init__(self) -> None:
        if self.parameters is not None:
            object.__setattr__(self, "parameters", tuple(self.parameters))
        if self.instances is None and self.parameters is None:
            raise ValidationError("knowledge must carry instances or parameters")


def select_knowledge(
    source: LearningSystem,
    source_data: Dataset | None,
    source_theta: Atom | None,
    kind: str,
) -> Knowledge:
    """Pick the knowledge pieces an approach consumes from the source."""
    if kind in ("instance", "feature_representation"):
        if source_data is None:
            raise MissingSourceArtifact(f"{kind} transfer needs source data")
        source_data.validate_against(source.x_set, source.y_set)
        return Knowledge(instances=source_data)
    if kind == "parameter":
        if source_theta is None:
            raise MissingSourceArtifact("parameter transfer needs a source parameter")
        if source_theta not in source.theta_set:
            raise UnknownElement(f"{source_theta!r} is not a source parameter")
        return Knowledge(parameters=(source_theta,))
    if kind == "instance_parameter":
        if source_data is None or source_theta is None:
            raise MissingSourceArtifact(
                "instance_parameter transfer needs source data and a parameter"
            )
        source_data.validate_against(source.x_set, source.y_set)
        if source_theta not in source.theta_set:
            raise UnknownElement(f"{source_theta!r} is not a source parameter")
        return Knowledge(instances=source_data, parameters=(source_theta,))
    raise ValidationError(f"unknown transfer approach {kind!r}")


@dataclass(frozen=True)
class FeatureRepSpec:
    """Maps into and out of a latent learning system.

    ``pair_map_target`` and ``pair_map_source`` translate target/source
    data pairs into latent pairs; ``input_map`` translates target inputs
    and ``output_map`` latent outputs back to target outputs.  All maps
    are total on their declared domains.
    """

    latent_system: LearningSystem
    pair_map_target: Mapping[tuple[Atom, Atom], tuple[Atom, Atom]]
    pair_map_source: Mapping[tuple[Atom, Atom], tuple[Atom, Atom]]
    input_map: Mapping[Atom, Atom]
    output_map: Mapping[Atom, Atom]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "pair_map_target", {tuple(k): tuple(v) for k, v in self.pair_map_target.items()}
        )
        object.__setattr__(
            self, "pair_map_source", {tuple(k): tuple(v) for k, v in self.pair_map_source.items()}
        )
        object.__setattr__(self, "input_map", dict(self.input_map))
        object.__setattr__(self, "output_map", dict(self.output_map))

    def target_pair_is_identity(self) -> bool:
        return all(k == v for k, v in self.pair_map_target.items())

    def source_pair_is_identity(self) -> bool:
        return all(k == v for k, v in self.pair_map_source.items())

    def validate_against(self, source: LearningSystem, target: LearningSystem) -> None:
        latent = self.latent_system
        for x in target.x_set.elements:
            if x not in self.input_map:
                raise ValidationError(f"input map undefined on target input {x!r}")
            if self.input_map[x] not in latent.x_set:
                raise UnknownElement(f"input map image {self.input_map[x]!r} not latent")
        for y in latent.y_set.elements:
            if y not in self.output_map:
                raise ValidationError(f"output map undefined on latent output {y!r}")
            if self.output_map[y] not in target.y_set:
                raise UnknownElement(
                    f"output map image {self.output_map[y]!r} not a target output"
                )
        for x in target.x_set.elements:
            for y in target.y_set.elements:
                if (x, y) not in self.pair_map_target:
                    raise ValidationError(f"target pair map undefined on {(x, y)!r}")
        for x in source.x_set.elements:
            for y in source.y_set.elements:
                if (x, y) not in self.pair_map_source:
                    raise ValidationError(f"source pair map undefined on {(x, y)!r}")
        for image in list(self.pair_map_target.values()) + list(
            self.pair_map_source.values()
        ):
            if image[0] not in latent.x_set or image[1] not in latent.y_set:
                raise UnknownElement(f"pair map image {image!r} outside latent space")


def _composite_hypotheses(
    latent: FeatureRepSpec, target: LearningSystem
) -> HypothesisClass:
    """The target-facing table induced by the latent system and its maps."""
    table: dict[tuple[Atom, Atom], Atom] = {}
    lat = latent.latent_system
    for theta in lat.theta_set.elements:
        for x in target.x_set.elements:
            latent_y = lat.hypotheses.output(theta, latent.input_map[x])
            table[(theta, x)] = latent.output_map[latent_y]
    return HypothesisClass(lat.theta_set, table)


@dataclass(frozen=True)
class TransferSystem:
    """Source and target systems plus a knowledge-consuming composition rule.

    ``hypotheses_tr`` defaults to the target's own class (instance and
    parameter rules) or to the composite latent table (feature rule);
    either way its outputs land in the target output set, which is
    enforced at construction.
    """

    source: LearningSystem
    target: LearningSystem
    knowledge: Knowledge
    approach: str = "instance"
    hypotheses_tr: HypothesisClass | None = None
    latent: FeatureRepSpec | None = None
    penalty_weight: float = 0.1
    pool_weight: float = 1.0

    def __post_init__(self) -> None:
        if self.approach not in APPROACHES:
            raise ValidationError(f"unknown transfer approach {self.approach!r}")
        if self.pool_weight <= 0:
            raise ValidationError("pool weight must be positive")

        needs_instances = self.approach in (
            "instance",
            "instance_parameter",
            "feature_representation",
        )
        needs_parameters = self.approach in ("parameter", "instance_parameter")
        if needs_instances and self.knowledge.instances is None:
            raise MissingSourceArtifact(f"{self.approach} transfer needs source instances")
        if needs_parameters and self.knowledge.parameters is None:
            raise MissingSourceArtifact(f"{self.approach} transfer needs a source parameter")
        if self.knowledge.instances is not None:
            self.knowledge.instances.validate_against(
                self.source.x_set, self.source.y_set
            )
        if self.knowledge.parameters is not None:
            for theta in self.knowledge.parameters:
                if theta not in self.source.theta_set:
                    raise UnknownElement(f"{theta!r} is not a source parameter")

        if self.approach == "feature_representation":
            if self.latent is None:
                raise ValidationError("feature-representation transfer needs latent maps")
            self.latent.validate_against(self.source, self.target)
            derived = _composite_hypotheses(self.latent, self.target)
            if self.hypotheses_tr is None:
                object.__setattr__(self, "hypotheses_tr", derived)
        else:
            if self.latent is not None:
                raise ValidationError(
                    f"latent maps are only consumed by feature-representation transfer"
                )
            if self.hypotheses_tr is None:
                object.__setattr__(self, "hypotheses_tr", self.target.hypotheses)
            if needs_parameters:
                anchor = self.knowledge.parameters[0]
                if anchor not in self.hypotheses_tr.theta_set:
                    raise ValidationError(
                        f"anchor {anchor!r} does not index the transfer hypotheses"
                    )
        self.hypotheses_tr.validate_against(self.target.x_set, self.target.y_set)

    @property
    def theta_tr_set(self) -> FiniteSet:
        return self.hypotheses_tr.theta_set

    def predict(self, theta_tr: Atom, x: Atom) -> Atom:
        if x not in self.target.x_set:
            raise UnknownElement(f"{x!r} is not a target input")
        return self.hypotheses_tr.output(theta_tr, x)


def pool_data(
    knowledge: Knowledge,
    target_data: Dataset,
    target: LearningSystem | None = None,
) -> Dataset:
    """Multiset union of target data and source instances, target first.

    When the target system is supplied the source instances must lie in
    its sample space (no latent alignment happens here); otherwise
    pooling is purely syntactic.
    """
    if knowledge.instances is None:
        raise MissingSourceArtifact("pooling needs instance knowledge")
    if target is not None:
        for x, y in knowledge.instances.pairs:
            if x not in target.x_set or y not in target.y_set:
                raise IncompatibleSupport(
                    f"source pair {(x, y)!r} lies outside the target sample space"
                )
    tag = f"pooled({target_data.source_tag}+{knowledge.instances.source_tag})"
    return Dataset(target_data.pairs + knowledge.instances.pairs, tag)


@dataclass(frozen=True)
class TransferTrace:
    """Intermediate artifacts of one transfer run."""

    approach: str
    n_target: int
    zero_shot: bool
    pooled: Dataset | None
    latent_data: Dataset | None
    objective: Mapping[Atom, float]
    selected: Atom


def _weighted_pool_objective(
    ts: TransferSystem, target_data: Dataset, theta: Atom, pooled: Dataset
) -> float:
    counts_t: dict[tuple[Atom, Atom], int] = {}
    for p in target_data.pairs:
        counts_t[p] = counts_t.get(p, 0) + 1
    counts_s: dict[tuple[Atom, Atom], int] = {}
    for p in ts.knowledge.instances.pairs:
        counts_s[p] = counts_s.get(p, 0) + 1
    loss = ts.target.loss.loss
    h = ts.hypotheses_tr.output
    w = ts.pool_weight
    num = math.fsum(
        c * loss(y, h(theta, x)) for (x, y), c in counts_t.items()
    ) + w * math.fsum(c * loss(y, h(theta, x)) for (x, y), c in counts_s.items())
    denom = len(target_data) + w * len(ts.knowledge.instances)
    return num / denom


def latent_dataset(ts: TransferSystem, target_data: Dataset) -> Dataset:
    """Pooled data pushed through the latent pair maps."""
    spec = ts.latent
    mapped = [spec.pair_map_target[p] for p in target_data.pairs]
    mapped += [spec.pair_map_source[p] for p in ts.knowledge.instances.pairs]
    return Dataset(tuple(mapped), "latent")


def transfer_objective(ts: TransferSystem, target_data: Dataset, theta: Atom) -> float:
    """The quantity the transfer rule minimizes over its parameter set."""
    if ts.approach == "instance":
        pooled = pool_data(ts.knowledge, target_data, ts.target)
        if len(pooled) == 0:
            raise EmptyDataset("instance transfer needs pooled data")
        return _weighted_pool_objective(ts, target_data, theta, pooled)
    if ts.approach == "parameter":
        anchor = ts.knowledge.parameters[0]
        penalized = LearningSystem(
            ts.target.x_set,
            ts.target.y_set,
            ts.hypotheses_tr,
            ts.target.loss,
        )
        penalty = ts.penalty_weight * output_distance(penalized, theta, anchor)
        if len(target_data) == 0:
            return penalty
        return empirical_risk(target_data, theta, penalized) + penalty
    if ts.approach == "instance_parameter":
        pooled = pool_data(ts.knowledge, target_data, ts.target)
        if len(pooled) == 0:
            raise EmptyDataset("pooled penalized transfer needs data")
        anchor = ts.knowledge.parameters[0]
        penalized = LearningSystem(
            ts.target.x_set, ts.target.y_set, ts.hypotheses_tr, ts.target.loss
        )
        penalty = ts.penalty_weight * output_distance(penalized, theta, anchor)
        return _weighted_pool_objective(ts, target_data, theta, pooled) + penalty
    # feature_representation
    data = latent_dataset(ts, target_data)
    if len(data) == 0:
        raise EmptyDataset("feature-representation transfer needs mapped data")
    return empirical_risk(data, theta, ts.latent.latent_system)


def run_transfer(ts: TransferSystem, target_data: Dataset) -> tuple[Atom, TransferTrace]:
    """Execute the transfer rule and trace every intermediate artifact."""
    target_data.validate_against(ts.target.x_set, ts.target.y_set)
    n = len(target_data)
    zero_shot = n == 0
    pooled = None
    latent_d = None

    if ts.approach == "parameter" and zero_shot:
        anchor = ts.knowledge.parameters[0]
        trace = TransferTrace(ts.approach, 0, True, None, None, {}, anchor)
        return anchor, trace

    if ts.approach in ("instance", "instance_parameter"):
        pooled = pool_data(ts.knowledge, target_data, ts.target)
        if len(pooled) == 0:
            raise EmptyDataset("no data to pool")
    if ts.approach == "feature_representation":
        latent_d = latent_dataset(ts, target_data)
        if len(latent_d) == 0:
            raise EmptyDataset("no data reaches the latent system")

    objective = {
        theta: transfer_objective(ts, target_data, theta)
        for theta in ts.theta_tr_set.elements
    }
    selected = min(
        ts.theta_tr_set.elements,
        key=lambda t: (objective[t], ts.theta_tr_set.index(t)),
    )
    trace = TransferTrace(ts.approach, n, zero_shot, pooled, latent_d, objective, selected)
    return selected, trace


def latent_path_prediction(ts: TransferSystem, theta: Atom, x: Atom) -> Atom:
    """Predict by explicitly routing through the latent maps.

    This is the composed route (input map, latent hypothesis, output
    map); it must agree with :meth:`TransferSystem.predict` on every
    input, which is what the construction guarantees and the test suite
    checks.
    """
    if ts.latent is None:
        raise ValidationError("no latent maps on this transfer system")
    lat = ts.latent
    latent_y = lat.latent_system.hypotheses.output(theta, lat.input_map[x])
    return lat.output_map[latent_y]


# -- classification -------------------------------------------------------------

def classify_approach(ts: TransferSystem) -> str:
    """Label the rule by which knowledge pieces and maps it consumes."""
    if ts.latent is not None:
        return "feature_representation"
    has_instances = ts.knowledge.instances is not None
    has_parameters = ts.knowledge.parameters is not None
    if has_instances and has_parameters:
        return "instance_parameter"
    if has_instances:
        return "instance"
    return "parameter"


@dataclass(frozen=True)
class SettingClassification:
    """Structural and behavioral equality flags plus the derived label."""

    structural: str  # homogeneous | heterogeneous
    input_structural_eq: bool
    output_structural_eq: bool
    marginal_eq: bool
    posterior_eq: bool
    label: str  # trivial | transductive | inductive | both | none


def _measures_equal(p, q, tol: float) -> bool:
    if not p.support.same_elements(q.support):
        return False
    return all(abs(p.prob(el) - q.prob(el)) <= tol for el in p.support.elements)


def _posteriors_equal(p, q, tol: float) -> bool:
    if not p.given.same_elements(q.given):
        return False
    if not p.output_support.same_elements(q.output_support):
        return False
    return all(_measures_equal(p.row(x), q.row(x), tol) for x in p.given.elements)


def classify_setting(
    source: SystemPack,
    target: SystemPack,
    tol: float = MEASURE_EQUALITY_TOL,
) -> SettingClassification:
    """Compare declared structure and behavior of a source/target pair.

    Structure compares the sample spaces exactly; behavior compares the
    declared marginals and posteriors within ``tol``.  The label is
    ``trivial`` when everything agrees, ``transductive`` when only the
    input behavior differs, ``inductive`` when the output set or the
    posterior differs, and ``both`` when the two kinds of difference
    coincide.
    """
    if source.marginal is None or source.posterior is None:
        raise MissingMeasure(f"pack {source.tag!r} declares no measures")
    if target.marginal is None or target.posterior is None:
        raise MissingMeasure(f"pack {target.tag!r} declares no measures")

    input_eq = source.system.x_set.same_elements(target.system.x_set)
    output_eq = source.system.y_set.same_elements(target.system.y_set)
    marginal_eq = _measures_equal(source.marginal, target.marginal, tol)
    posterior_eq = _posteriors_equal(source.posterior, target.posterior, tol)

    structural = "homogeneous" if (input_eq and output_eq) else "heterogeneous"
    transductive = not marginal_eq
    inductive = (not output_eq) or (not posterior_eq)
    if input_eq and output_eq and marginal_eq and posterior_eq:
        label = "trivial"
    elif transductive and not inductive:
        label = "transductive"
    elif inductive and not transductive:
        label = "inductive"
    elif transductive and inductive:
        label = "both"
    else:
        label = "none"
    return SettingClassification(
        structural, input_eq, output_eq, marginal_eq, posterior_eq, label
    )


def n_shot(ts: TransferSystem, target_data: Dataset) -> tuple[int, bool]:
    """Shot count of a run and whether it is a zero-shot use of knowledge.

    Zero-shot means the rule provably consumes source knowledge only;
    with an empty target multiset every built-in rule does (the pooled
    data reduces to the source instances, the penalized rule returns its
    anchor, and the latent route maps source pairs only).
    """
    n = len(target_data)
    return n, n == 0


def verify_transfer_is_learning_system(
    ts: TransferSystem,
    target_datasets: Sequence[Dataset],
    cap: int = 8,
    functional_system=None,
    inductive_system=None,
) -> AxiomReport:
    """Re-express the transfer system over its own sextuple and audit it.

    The components are the sampled pooled-data atoms, the transfer
    parameter set, the transfer hypothesis table and the target sample
    space; the checks are the same decomposition, goal-seeking and
    optimality audits used for plain learning systems.
    """
    for carrier, label in (
        (ts.target.x_set, "target inputs"),
        (ts.target.y_set, "target outputs"),
        (ts.theta_tr_set, "transfer parameters"),
    ):
        if len(carrier) > cap:
            raise CapExceeded(f"{label} carrier exceeds cap {cap}")
    if len(target_datasets) > cap:
        raise CapExceeded(f"more than {cap} sampled datasets")
    for d in target_datasets:
        d.validate_against(ts.target.x_set, ts.target.y_set)
    return verify_decomposition(
        ts.target.x_set,
        ts.target.y_set,
        ts.theta_tr_set,
        ts.hypotheses_tr.output,
        target_datasets,
        lambda d: run_transfer(ts, d)[0],
        lambda d, theta: transfer_objective(ts, d, theta),
        functional_system=functional_system,
        inductive_system=inductive_system,
    )


# -- latent case analysis ---------------------------------------------------------

@dataclass(frozen=True)
class LatentCaseReport:
    """Which latent maps are identities and the space equalities they imply."""

    target_map_identity: bool
    source_map_identity: bool
    latent_equals_target_space: bool
    latent_equals_source_space: bool
    implies_homogeneous: bool


def latent_case(ts: TransferSystem) -> LatentCaseReport:
    """Relate identity structure of the pair maps to sample-space equalities.

    When the target pair map is the identity the latent space is the
    target sample space; when the source pair map is, it is the source
    sample space; when both are, source and target spaces coincide and
    the transfer is homogeneous.
    """
    if ts.latent is None:
        raise ValidationError("no latent maps on this transfer system")
    lat = ts.latent.latent_system
    t_id = ts.latent.target_pair_is_identity()
    s_id = ts.latent.source_pair_is_identity()
    eq_target = lat.x_set.same_elements(ts.target.x_set) and lat.y_set.same_elements(
        ts.target.y_set
    )
    eq_source = lat.x_set.same_elements(ts.source.x_set) and lat.y_set.same_elements(
        ts.source.y_set
    )
    return LatentCaseReport(t_id, s_id, eq_target, eq_source, t_id and s_id)
