"""On-disk document format: parse, resolve, validate, emit.

Documents are versioned JSON with one named block per object kind
(sets, relations, morphisms, measures, conditionals, datasets, learning
systems, packs, transfer systems, a scenario, and analysis configs).
Probabilities travel as decimal strings so fixtures stay diffable and
bit-stable; vectors are aligned to the canonical order of the set they
refer to, which keeps atom types (including integer labels) intact.

Failures are staged: malformed structure raises :class:`ParseError`,
dangling or unknown references raise :class:`ResolutionError`, and
construction invariants of the resolved objects raise
:class:`InvariantViolation`.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Mapping

from .errors import (
    InvariantViolation,
    ParseError,
    ResolutionError,
    TransferLabError,
    UnknownElement,
)
from .learning import (
    AlgorithmSpec,
    Dataset,
    HypothesisClass,
    LearningSystem,
    LossSpec,
    SystemPack,
)
from .measures import ConditionalMeasure, EmpiricalMeasure
from .relations import FiniteSet, FiniteSystem, Morphism, as_input_output, make_system
from .scenarios import ScenarioSpec
from .transfer import FeatureRepSpec, Knowledge, TransferSystem

SCHEMA_VERSION = 1

_TOP_LEVEL_KEYS = {
    "version",
    "sets",
    "relations",
    "morphisms",
    "measures",
    "conditionals",
    "datasets",
    "learning",
    "packs",
    "transfer",
    "scenario",
    "analysis",
}


@dataclass
class SpecDocument:
    """A parsed document: the normalized dict plus resolved objects."""

    raw: dict
    sets: dict[str, FiniteSet] = field(default_factory=dict)
    relations: dict[str, FiniteSystem] = field(default_factory=dict)
    morphisms: dict[str, Morphism] = field(default_factory=dict)
    measures: dict[str, EmpiricalMeasure] = field(default_factory=dict)
    conditionals: dict[str, ConditionalMeasure] = field(default_factory=dict)
    datasets: dict[str, Dataset] = field(default_factory=dict)
    learning: dict[str, LearningSystem] = field(default_factory=dict)
    packs: dict[str, SystemPack] = field(default_factory=dict)
    transfer: dict[str, TransferSystem] = field(default_factory=dict)
    scenario: ScenarioSpec | None = None
    analysis: dict[str, dict] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


def _check_keys(block: Mapping, allowed: set[str], where: str, strict: bool, warnings: list[str]) -> None:
    unknown = set(block) - allowed
    if unknown:
        msg = f"unknown field(s) {sorted(unknown)} in {where}"
        if strict:
            raise ParseError(msg)
        warnings.append(msg)


def _prob(value) -> float:
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            raise ParseError(f"bad probability literal {value!r}") from None
    if isinstance(value, (int, float)):
        return float(value)
    raise ParseError(f"bad probability value {value!r}")


def _ref(block: Mapping[str, Any], name, where: str):
    if name not in block:
        raise ResolutionError(f"{where}: reference {name!r} does not resolve")
    return block[name]


def _pair_list_to_map(entries, where: str) -> dict:
    mapping = {}
    for entry in entries:
        if not isinstance(entry, list) or len(entry) != 2:
            raise ParseError(f"{where}: map entries must be [key, value] pairs")
        key, value = entry
        key = tuple(key) if isinstance(key, list) else key
        value = tuple(value) if isinstance(value, list) else value
        mapping[key] = value
    return mapping


def parse_document(text: str, strict: bool = False) -> SpecDocument:
    """Parse and resolve a document from JSON text."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError("the document root must be an object")

    doc = SpecDocument(raw=raw)
    _check_keys(raw, _TOP_LEVEL_KEYS, "document root", strict, doc.warnings)
    version = raw.get("version")
    if version != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema version {version!r}")

    def construct(builder, where: str):
        try:
            return builder()
        except (ParseError, ResolutionError):
            raise
        except UnknownElement as exc:
            raise ResolutionError(f"{where}: {exc}") from exc
        except TransferLabError as exc:
            raise InvariantViolation(f"{where}: {exc}") from exc
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ParseError(f"{where}: malformed block ({exc})") from exc

    for name, block in (raw.get("sets") or {}).items():
        where = f"sets.{name}"
        _check_keys(block, {"elements"}, where, strict, doc.warnings)
        doc.sets[name] = construct(
            lambda: FiniteSet(name, tuple(block["elements"])), where
        )

    for name, block in (raw.get("relations") or {}).items():
        where = f"relations.{name}"
        _check_keys(block, {"components", "tuples", "inputs"}, where, strict, doc.warnings)

        def build_relation(block=block, where=where):
            comps = [_ref(doc.sets, ref, where) for ref in block["components"]]
            system = make_system(comps, [tuple(t) for t in block["tuples"]])
            if "inputs" in block and block["inputs"] is not None:
                system = as_input_output(system, tuple(block["inputs"]))
            return system

        doc.relations[name] = construct(build_relation, where)

    for name, block in (raw.get("morphisms") or {}).items():
        where = f"morphisms.{name}"
        _check_keys(block, {"source", "target", "x_map", "y_map"}, where, strict, doc.warnings)

        def build_morphism(block=block, where=where):
            src = _ref(doc.relations, block["source"], where)
            tgt = _ref(doc.relations, block["target"], where)
            return Morphism(
                _pair_list_to_map(block["x_map"], where),
                _pair_list_to_map(block["y_map"], where),
                src.x_values(),
                src.y_values(),
                tgt.x_values(),
                tgt.y_values(),
            )

        doc.morphisms[name] = construct(build_morphism, where)

    for name, block in (raw.get("measures") or {}).items():
        where = f"measures.{name}"
        _check_keys(block, {"support", "probs"}, where, strict, doc.warnings)

        def build_measure(block=block, where=where):
            support = _ref(doc.sets, block["support"], where)
            return EmpiricalMeasure(support, tuple(_prob(p) for p in block["probs"]))

        doc.measures[name] = construct(build_measure, where)

    for name, block in (raw.get("conditionals") or {}).items():
        where = f"conditionals.{name}"
        _check_keys(block, {"given", "over", "rows"}, where, strict, doc.warnings)

        def build_conditional(block=block, where=where):
            given = _ref(doc.sets, block["given"], where)
            over = _ref(doc.sets, block["over"], where)
            rows_raw = block["rows"]
            if len(rows_raw) != len(given):
                raise InvariantViolation(f"{where}: one row per conditioning element")
            rows = {
                x: EmpiricalMeasure(over, tuple(_prob(p) for p in row))
                for x, row in zip(given.elements, rows_raw)
            }
            return ConditionalMeasure(given, rows)

        doc.conditionals[name] = construct(build_conditional, where)

    for name, block in (raw.get("datasets") or {}).items():
        where = f"datasets.{name}"
        _check_keys(block, {"pairs", "tag"}, where, strict, doc.warnings)
        doc.datasets[name] = construct(
            lambda block=block: Dataset(
                tuple(tuple(p) for p in block["pairs"]), block.get("tag", "data")
            ),
            where,
        )

    for name, block in (raw.get("learning") or {}).items():
        where = f"learning.{name}"
        _check_keys(
            block,
            {"inputs", "outputs", "thetas", "table", "loss", "algorithm"},
            where,
            strict,
            doc.warnings,
        )

        def build_learning(block=block, where=where):
            x_set = _ref(doc.sets, block["inputs"], where)
            y_set = _ref(doc.sets, block["outputs"], where)
            thetas = FiniteSet(f"{where}.thetas", tuple(block["thetas"]))
            table = {}
            for theta in thetas.elements:
                if theta not in block["table"]:
                    raise InvariantViolation(f"{where}: no table row for {theta!r}")
                row = block["table"][theta]
                if len(row) != len(x_set):
                    raise InvariantViolation(
                        f"{where}: row for {theta!r} must align with {x_set.name!r}"
                    )
                for x, y in zip(x_set.elements, row):
                    table[(theta, x)] = y
            algo_block = block.get("algorithm") or {"kind": "erm"}
            algorithm = AlgorithmSpec(
                algo_block.get("kind", "erm"),
                algo_block.get("anchor"),
                float(algo_block.get("weight", 0.1)),
            )
            return LearningSystem(
                x_set,
                y_set,
                HypothesisClass(thetas, table),
                LossSpec(block.get("loss", "zero_one")),
                algorithm,
            )

        doc.learning[name] = construct(build_learning, where)

    for name, block in (raw.get("packs") or {}).items():
        where = f"packs.{name}"
        _check_keys(
            block,
            {"learning", "dataset", "marginal", "posterior", "truth", "tag"},
            where,
            strict,
            doc.warnings,
        )

        def build_pack(block=block, where=where, name=name):
            system = _ref(doc.learning, block["learning"], where)
            dataset = _ref(doc.datasets, block["dataset"], where)
            marginal = (
                _ref(doc.measures, block["marginal"], where)
                if block.get("marginal")
                else None
            )
            posterior = (
                _ref(doc.conditionals, block["posterior"], where)
                if block.get("posterior")
                else None
            )
            truth = None
            if block.get("truth") is not None:
                row = block["truth"]
                if len(row) != len(system.x_set):
                    raise InvariantViolation(
                        f"{where}: truth must align with the input set"
                    )
                truth = dict(zip(system.x_set.elements, row))
            return SystemPack(
                system, dataset, marginal, posterior, truth, block.get("tag", name)
            )

        doc.packs[name] = construct(build_pack, where)

    for name, block in (raw.get("transfer") or {}).items():
        where = f"transfer.{name}"
        _check_keys(
            block,
            {
                "source",
                "target",
                "approach",
                "knowledge",
                "penalty_weight",
                "pool_weight",
                "latent",
            },
            where,
            strict,
            doc.warnings,
        )

        def build_transfer(block=block, where=where):
            source = _ref(doc.learning, block["source"], where)
            target = _ref(doc.learning, block["target"], where)
            know_block = block.get("knowledge") or {}
            _check_keys(
                know_block, {"instances", "parameters"}, f"{where}.knowledge", strict, doc.warnings
            )
            knowledge = Knowledge(
                instances=(
                    _ref(doc.datasets, know_block["instances"], where)
                    if know_block.get("instances")
                    else None
                ),
                parameters=(
                    tuple(know_block["parameters"])
                    if know_block.get("parameters")
                    else None
                ),
            )
            latent = None
            if block.get("latent") is not None:
                lat = block["latent"]
                _check_keys(
                    lat,
                    {
                        "learning",
                        "pair_map_target",
                        "pair_map_source",
                        "input_map",
                        "output_map",
                    },
                    f"{where}.latent",
                    strict,
                    doc.warnings,
                )
                latent = FeatureRepSpec(
                    _ref(doc.learning, lat["learning"], where),
                    _pair_list_to_map(lat["pair_map_target"], where),
                    _pair_list_to_map(lat["pair_map_source"], where),
                    _pair_list_to_map(lat["input_map"], where),
                    _pair_list_to_map(lat["output_map"], where),
                )
            return TransferSystem(
                source,
                target,
                knowledge,
                block.get("approach", "instance"),
                latent=latent,
                penalty_weight=float(block.get("penalty_weight", 0.1)),
                pool_weight=float(block.get("pool_weight", 1.0)),
            )

        doc.transfer[name] = construct(build_transfer, where)

    if raw.get("scenario") is not None:
        block = raw["scenario"]
        where = "scenario"
        _check_keys(
            block,
            {
                "grid_size",
                "grid_arity",
                "label_count",
                "marginal_shift",
                "posterior_flip",
                "structural_edit",
                "sample_sizes",
                "seed",
                "hypothesis_cap",
                "ladder",
            },
            where,
            strict,
            doc.warnings,
        )
        doc.scenario = construct(
            lambda: ScenarioSpec(
                grid_size=int(block.get("grid_size", 4)),
                grid_arity=int(block.get("grid_arity", 1)),
                label_count=int(block.get("label_count", 2)),
                marginal_shift=float(block.get("marginal_shift", 0.0)),
                posterior_flip=float(block.get("posterior_flip", 0.0)),
                structural_edit=block.get("structural_edit"),
                sample_sizes=tuple(block.get("sample_sizes", (40, 10))),
                seed=int(block.get("seed", 0)),
                hypothesis_cap=int(block.get("hypothesis_cap", 4096)),
            ),
            where,
        )

    analysis = raw.get("analysis") or {}
    if not isinstance(analysis, dict):
        raise ParseError("analysis must be an object keyed by analysis kind")
    doc.analysis = analysis
    return doc


def load_document(path: str, strict: bool = False) -> SpecDocument:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_document(handle.read(), strict)


# -- emission -----------------------------------------------------------------------

def _prob_str(p: float) -> str:
    return repr(float(p))


def _map_to_pair_list(mapping: Mapping) -> list:
    return [
        [list(k) if isinstance(k, tuple) else k, list(v) if isinstance(v, tuple) else v]
        for k, v in mapping.items()
    ]


def document_dict(doc: SpecDocument) -> dict:
    """Serialize resolved objects back to a normalized document dict."""
    out: dict[str, Any] = {"version": SCHEMA_VERSION}
    if doc.sets:
        out["sets"] = {
            name: {"elements": list(s.elements)} for name, s in doc.sets.items()
        }
    if doc.relations:
        out["relations"] = {
            name: {
                "components": [c.name for c in rel.components],
                "tuples": [list(t) for t in rel.tuples],
                **(
                    {"inputs": list(rel.io_partition[0])}
                    if rel.io_partition is not None
                    else {}
                ),
            }
            for name, rel in doc.relations.items()
        }
    if doc.morphisms:
        out["morphisms"] = {}
        for name, m in doc.morphisms.items():
            src_name = next(
                (
                    rname
                    for rname, rel in doc.relations.items()
                    if rel.x_values() == tuple(m.source_x)
                    and rel.y_values() == tuple(m.source_y)
                ),
                None,
            )
            tgt_name = next(
                (
                    rname
                    for rname, rel in doc.relations.items()
                    if rel.x_values() == tuple(m.target_x)
                    and rel.y_values() == tuple(m.target_y)
                ),
                None,
            )
            out["morphisms"][name] = {
                "source": src_name,
                "target": tgt_name,
                "x_map": _map_to_pair_list(m.x_map),
                "y_map": _map_to_pair_list(m.y_map),
            }
    if doc.measures:
        out["measures"] = {
            name: {
                "support": m.support.name,
                "probs": [_prob_str(p) for p in m.probs],
            }
            for name, m in doc.measures.items()
        }
    if doc.conditionals:
        out["conditionals"] = {
            name: {
                "given": c.given.name,
                "over": c.output_support.name,
                "rows": [
                    [_prob_str(p) for p in c.row(x).probs] for x in c.given.elements
                ],
            }
            for name, c in doc.conditionals.items()
        }
    if doc.datasets:
        out["datasets"] = {
            name: {"pairs": [list(p) for p in d.pairs], "tag": d.source_tag}
            for name, d in doc.datasets.items()
        }
    if doc.learning:
        out["learning"] = {}
        for name, sys_ in doc.learning.items():
            algo: dict[str, Any] = {"kind": sys_.algorithm.kind}
            if sys_.algorithm.kind == "penalized":
                algo["anchor"] = sys_.algorithm.anchor
                algo["weight"] = sys_.algorithm.weight
            out["learning"][name] = {
                "inputs": sys_.x_set.name,
                "outputs": sys_.y_set.name,
                "thetas": list(sys_.theta_set.elements),
                "table": {
                    theta: [
                        sys_.hypotheses.output(theta, x) for x in sys_.x_set.elements
                    ]
                    for theta in sys_.theta_set.elements
                },
                "loss": sys_.loss.kind,
                "algorithm": algo,
            }
    if doc.packs:
        out["packs"] = {}
        learning_names = {id(sys_): n for n, sys_ in doc.learning.items()}
        dataset_names = {id(d): n for n, d in doc.datasets.items()}
        measure_names = {id(m): n for n, m in doc.measures.items()}
        conditional_names = {id(c): n for n, c in doc.conditionals.items()}
        for name, pack in doc.packs.items():
            out["packs"][name] = {
                "learning": learning_names.get(id(pack.system)),
                "dataset": dataset_names.get(id(pack.dataset)),
                "marginal": measure_names.get(id(pack.marginal)),
                "posterior": conditional_names.get(id(pack.posterior)),
                "truth": (
                    [pack.truth[x] for x in pack.system.x_set.elements]
                    if pack.truth is not None
                    else None
                ),
                "tag": pack.tag,
            }
    if doc.transfer:
        out["transfer"] = {}
        learning_names = {id(sys_): n for n, sys_ in doc.learning.items()}
        dataset_names = {id(d): n for n, d in doc.datasets.items()}
        for name, ts in doc.transfer.items():
            block: dict[str, Any] = {
                "source": learning_names.get(id(ts.source)),
                "target": learning_names.get(id(ts.target)),
                "approach": ts.approach,
                "knowledge": {
                    "instances": dataset_names.get(id(ts.knowledge.instances)),
                    "parameters": (
                        list(ts.knowledge.parameters)
                        if ts.knowledge.parameters is not None
                        else None
                    ),
                },
                "penalty_weight": ts.penalty_weight,
                "pool_weight": ts.pool_weight,
            }
            if ts.latent is not None:
                block["latent"] = {
                    "learning": learning_names.get(id(ts.latent.latent_system)),
                    "pair_map_target": _map_to_pair_list(ts.latent.pair_map_target),
                    "pair_map_source": _map_to_pair_list(ts.latent.pair_map_source),
                    "input_map": _map_to_pair_list(ts.latent.input_map),
                    "output_map": _map_to_pair_list(ts.latent.output_map),
                }
            out["transfer"][name] = block
    if doc.scenario is not None:
        sc = doc.scenario
        out["scenario"] = {
            "grid_size": sc.grid_size,
            "grid_arity": sc.grid_arity,
            "label_count": sc.label_count,
            "marginal_shift": sc.marginal_shift,
            "posterior_flip": sc.posterior_flip,
            "structural_edit": sc.structural_edit,
            "sample_sizes": list(sc.sample_sizes),
            "seed": sc.seed,
        }
        if "ladder" in (doc.raw.get("scenario") or {}):
            out["scenario"]["ladder"] = doc.raw["scenario"]["ladder"]
    if doc.analysis:
        out["analysis"] = doc.analysis
    return out


def dump_document(doc: SpecDocument) -> str:
    return json.dumps(document_dict(doc), sort_keys=True, indent=2) + "\n"


def document_digest(doc: SpecDocument) -> str:
    canonical = json.dumps(document_dict(doc), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
