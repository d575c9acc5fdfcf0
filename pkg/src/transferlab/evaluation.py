"""Negative transfer, transferability neighborhoods, generalists.

Comparative evaluation runs the same pipeline twice per seed (with and
without transferred knowledge), always against the same reference, and
aggregates per-seed outcomes.  Per-seed randomness is derived from a
root key plus the seed index (and, when scanning a universe, the member
index), so concurrent evaluation and re-runs are bit-for-bit stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .behavioral import behavioral_transferability, transfer_distance
from .errors import (
    MissingMeasure,
    TransferLabError,
    ValidationError,
)
from .learning import (
    Dataset,
    EvaluationContext,
    LearningSystem,
    SystemPack,
    prediction_error,
    run_algorithm,
)
from .measures import total_variation
from .scenarios import resample_pack
from .structural import structural_transferability
from .transfer import (
    FeatureRepSpec,
    Knowledge,
    TransferSystem,
    run_transfer,
    select_knowledge,
)


def build_transfer_system(
    source: SystemPack,
    target: SystemPack,
    approach: str = "instance",
    penalty_weight: float = 0.1,
    pool_weight: float = 1.0,
    latent: FeatureRepSpec | None = None,
) -> TransferSystem:
    """Assemble a transfer system from two packs, training the source once."""
    theta_s = None
    if approach in ("parameter", "instance_parameter"):
        theta_s = run_algorithm(source.dataset, source.system)
    kind = "instance" if approach == "feature_representation" else approach
    knowledge = select_knowledge(source.system, source.dataset, theta_s, kind)
    return TransferSystem(
        source.system,
        target.system,
        knowledge,
        approach,
        latent=latent,
        penalty_weight=penalty_weight,
        pool_weight=pool_weight,
    )


@dataclass(frozen=True)
class TransferOutcome:
    """Mean and per-seed errors of transfer versus target-alone training.

    ``negative`` follows the strict inequality on the means: training
    without the transferred knowledge did strictly better.
    """

    epsilon_with: float
    epsilon_without: float
    negative: bool
    margin: float
    per_seed_with: tuple[float, ...]
    per_seed_without: tuple[float, ...]
    per_seed_negative: tuple[bool, ...]
    seeds: int
    root_key: tuple[int, ...]
    error_mode: str


def _split_holdout(data: Dataset, rng: np.random.Generator) -> tuple[Dataset, Dataset]:
    order = rng.permutation(len(data))
    half = len(data) // 2
    train = tuple(data.pairs[i] for i in order[:half])
    held = tuple(data.pairs[i] for i in order[half:])
    return Dataset(train, data.source_tag), Dataset(held, "holdout")


def detect_negative_transfer(
    source: SystemPack,
    target: SystemPack,
    ts: TransferSystem,
    ctx: EvaluationContext | None = None,
    seeds: int = 1,
    root_key: tuple[int, ...] = (0,),
    resample: bool = True,
) -> TransferOutcome:
    """Train with and without the source knowledge and compare errors.

    Per seed, fresh datasets of the packs' declared sizes are drawn from
    their declared measures (``resample=False`` reuses the packs' own
    data in a single run).  Both pipelines are evaluated against the
    same reference: the target truth table under the target marginal
    when one is declared (or supplied via ``ctx``), otherwise a seeded
    50% hold-out split of the target data.
    """
    if seeds < 1:
        raise ValidationError("at least one seed is required")
    if not resample:
        seeds = 1

    declared_truth = ctx.truth if ctx is not None else target.truth
    holdout_mode = declared_truth is None or isinstance(declared_truth, Dataset)
    error_mode = "holdout" if holdout_mode else "truth-table"

    eps_with: list[float] = []
    eps_without: list[float] = []
    for i in range(seeds):
        rng = np.random.default_rng(np.random.SeedSequence(root_key + (i,)))
        if resample:
            d_s = resample_pack(source, len(source.dataset), rng, "source")
            d_t = resample_pack(target, len(target.dataset), rng, "target")
        else:
            d_s, d_t = source.dataset, target.dataset

        if holdout_mode:
            if isinstance(declared_truth, Dataset):
                train_t, eval_ctx = d_t, EvaluationContext(declared_truth)
            else:
                train_t, held = _split_holdout(d_t, rng)
                eval_ctx = EvaluationContext(held)
            weight = None
        else:
            train_t = d_t
            eval_ctx = EvaluationContext(declared_truth)
            weight = target.marginal

        theta_s = None
        if ts.approach in ("parameter", "instance_parameter"):
            theta_s = run_algorithm(d_s, source.system)
        kind = "instance" if ts.approach == "feature_representation" else ts.approach
        knowledge = select_knowledge(source.system, d_s, theta_s, kind)
        ts_i = replace(ts, knowledge=knowledge)

        theta_tr, _ = run_transfer(ts_i, train_t)
        eps_with.append(
            prediction_error(
                lambda x: ts_i.predict(theta_tr, x),
                eval_ctx,
                ts.target.loss,
                weight=weight,
                x_set=ts.target.x_set,
            )
        )

        theta_alone = run_algorithm(train_t, target.system)
        eps_without.append(
            prediction_error(
                lambda x: target.system.hypotheses.output(theta_alone, x),
                eval_ctx,
                target.system.loss,
                weight=weight,
                x_set=target.system.x_set,
            )
        )

    mean_with = math.fsum(eps_with) / seeds
    mean_without = math.fsum(eps_without) / seeds
    return TransferOutcome(
        epsilon_with=mean_with,
        epsilon_without=mean_without,
        negative=mean_without < mean_with,
        margin=mean_with - mean_without,
        per_seed_with=tuple(eps_with),
        per_seed_without=tuple(eps_without),
        per_seed_negative=tuple(w > wo for w, wo in zip(eps_with, eps_without)),
        seeds=seeds,
        root_key=tuple(root_key),
        error_mode=error_mode,
    )


# -- transferability neighborhoods ---------------------------------------------------

@dataclass(frozen=True)
class NeighborhoodReport:
    """Members of a finite universe within reach of a system.

    The universe is an explicit argument of every scan: the counts are
    only meaningful relative to it, and the criterion block records the
    thresholds, mode and seeds needed to reproduce them.
    """

    role: str
    mode: str
    members: tuple[int, ...]
    cardinality: int
    criterion: Mapping[str, object]
    values: Mapping[int, float]
    skipped: tuple[int, ...]
    equivalence_mode: str = "raw"


def _signature_clusters(packs: Sequence[SystemPack], tau: float) -> list[int]:
    """Greedy clustering of packs whose declared measures are tau-close."""
    reps: list[int] = []
    labels: list[int] = []
    for i, pack in enumerate(packs):
        if pack.marginal is None or pack.posterior is None:
            raise MissingMeasure(f"pack {pack.tag!r} declares no measures")
        assigned = None
        for cluster, rep_idx in enumerate(reps):
            rep = packs[rep_idx]
            if not rep.marginal.support.same_elements(pack.marginal.support):
                continue
            if total_variation(rep.marginal, pack.marginal) > tau:
                continue
            row_gap = max(
                total_variation(rep.posterior.row(x), pack.posterior.row(x))
                for x in rep.posterior.given.elements
            )
            if row_gap > tau:
                continue
            assigned = cluster
            break
        if assigned is None:
            reps.append(i)
            assigned = len(reps) - 1
        labels.append(assigned)
    return labels


def transferability(
    pack: SystemPack,
    universe: Sequence[SystemPack],
    role: str,
    ctx: EvaluationContext,
    mode: str = "empirical",
    approach: str = "instance",
    seeds: int = 10,
    root_seed: int = 0,
    epsilon_star: float | str | None = None,
    equivalence_mode: str = "raw",
    tau: float = 1e-6,
    distance_kind: str = "tv",
    behavioral_mode: str = "bound",
    size_bound: int = 3,
    penalty_weight: float = 0.1,
    pool_weight: float = 1.0,
):
    """Count universe members to or from which transfer generalizes.

    ``empirical`` mode actually runs every pairwise transfer
    (per-member randomness keyed by ``(root_seed, member_index)``) and
    admits members whose mean transferred error is at most the
    threshold; passing ``epsilon_star="target-alone"`` instead admits
    members where transfer was not negative, turning the neighborhood
    into the positive-transfer set.  ``structural`` and ``behavioral``
    modes delegate to the corresponding analyses, and ``all`` returns
    the three reports side by side.
    """
    if role not in ("source", "target"):
        raise ValidationError(f"role must be source or target, got {role!r}")
    if mode == "all":
        return {
            m: transferability(
                pack, universe, role, ctx, m, approach, seeds, root_seed,
                epsilon_star, equivalence_mode, tau, distance_kind,
                behavioral_mode, size_bound, penalty_weight, pool_weight,
            )
            for m in ("empirical", "structural", "behavioral")
        }

    threshold = ctx.epsilon_star if epsilon_star is None else epsilon_star

    if mode == "structural":
        rep = structural_transferability(pack, universe, role, ctx, size_bound)
        return NeighborhoodReport(
            role, mode, rep.members, rep.cardinality,
            {"epsilon_star": ctx.epsilon_star, "size_bound": size_bound},
            dict(rep.best_errors), (),
        )
    if mode == "behavioral":
        if isinstance(threshold, str):
            raise ValidationError("behavioral mode needs a numeric threshold")
        rep = behavioral_transferability(
            pack, universe, role, threshold, behavioral_mode, distance_kind
        )
        return NeighborhoodReport(
            role, mode, rep.members, rep.cardinality,
            {"threshold": threshold, "mode": behavioral_mode, "kind": distance_kind},
            dict(rep.values), rep.skipped,
        )
    if mode != "empirical":
        raise ValidationError(f"unknown transferability mode {mode!r}")

    members: list[int] = []
    values: dict[int, float] = {}
    skipped: list[int] = []
    for idx, member in enumerate(universe):
        src, tgt = (pack, member) if role == "source" else (member, pack)
        try:
            ts = build_transfer_system(
                src, tgt, approach, penalty_weight, pool_weight
            )
            outcome = detect_negative_transfer(
                src, tgt, ts,
                ctx=None,
                seeds=seeds,
                root_key=(root_seed, idx),
            )
        except TransferLabError:
            skipped.append(idx)
            continue
        values[idx] = outcome.epsilon_with
        if threshold == "target-alone":
            qualifies = not outcome.negative
        else:
            qualifies = outcome.epsilon_with <= threshold
        if qualifies:
            members.append(idx)

    if equivalence_mode == "behavior-signature":
        labels = _signature_clusters(list(universe), tau)
        cardinality = len({labels[i] for i in members})
    elif equivalence_mode == "raw":
        cardinality = len(members)
    else:
        raise ValidationError(f"unknown equivalence mode {equivalence_mode!r}")

    return NeighborhoodReport(
        role,
        mode,
        tuple(members),
        cardinality,
        {
            "epsilon_star": threshold,
            "approach": approach,
            "seeds": seeds,
            "root_seed": root_seed,
            "tau": tau if equivalence_mode == "behavior-signature" else None,
        },
        values,
        tuple(skipped),
        equivalence_mode,
    )


# -- generalists -----------------------------------------------------------------------

@dataclass(frozen=True)
class GeneralistReport:
    is_generalist: bool
    qualifying: tuple[int, ...]
    required: int
    shot_budget: int
    evidence: Mapping[int, float]


def is_generalist(
    pack: SystemPack,
    universe: Sequence[SystemPack],
    n: int,
    t: int,
    ctx: EvaluationContext,
    approach: str = "instance",
    penalty_weight: float = 0.1,
    pool_weight: float = 1.0,
) -> GeneralistReport:
    """Does the pack transfer to at least ``t`` targets within ``n`` shots?

    Each member's own dataset is truncated to its first ``n`` pairs (the
    nesting makes shot budgets monotone), the transfer runs once,
    deterministically, and the member qualifies when the measured target
    error is strictly below the context threshold.
    """
    qualifying: list[int] = []
    evidence: dict[int, float] = {}
    for idx, member in enumerate(universe):
        if member.truth is None:
            raise MissingMeasure(f"universe member {idx} declares no truth table")
        try:
            ts = build_transfer_system(pack, member, approach, penalty_weight, pool_weight)
            shots = Dataset(member.dataset.pairs[:n], f"{member.dataset.source_tag}[:{n}]")
            theta_tr, _ = run_transfer(ts, shots)
        except TransferLabError:
            continue
        error = prediction_error(
            lambda x: ts.predict(theta_tr, x),
            EvaluationContext(member.truth),
            member.system.loss,
            weight=member.marginal,
            x_set=member.system.x_set,
        )
        evidence[idx] = error
        if error < ctx.epsilon_star:
            qualifying.append(idx)
    return GeneralistReport(
        is_generalist=len(qualifying) >= t,
        qualifying=tuple(qualifying),
        required=t,
        shot_budget=n,
        evidence=evidence,
    )
