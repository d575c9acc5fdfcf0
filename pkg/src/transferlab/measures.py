"""Probability tables over finite supports: estimation and divergences.

Measures are plain probability vectors aligned to a named finite
support.  Divergences between two measures require a shared support;
aligning measures over different supports is the caller's job (see the
feature-representation pushforward helpers in :mod:`transferlab.behavioral`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence

from .errors import (
    EmptyDataset,
    EstimationError,
    MissingKernel,
    MissingOrder,
    SupportMismatch,
    UnknownElement,
    ValidationError,
)
from .relations import Atom, FiniteSet

NORMALIZATION_TOL = 1e-12

#: Which divergence kinds are metrics on the simplex (symmetry, identity
#: of indiscernibles, triangle inequality).  KL is a divergence only.
DIVERGENCE_IS_METRIC = {
    "tv": True,
    "hellinger": True,
    "w1": True,
    "mmd": True,
    "kl": False,
}


@dataclass(frozen=True)
class EmpiricalMeasure:
    """A probability vector aligned to the canonical order of a support."""

    support: FiniteSet
    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "probs", probs)
        if len(probs) != len(self.support):
            raise ValidationError(
                f"{len(probs)} probabilities for {len(self.support)} support elements"
            )
        if any(p < 0 for p in probs):
            raise ValidationError("probabilities must be non-negative")
        total = math.fsum(probs)
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValidationError(f"probabilities sum to {total!r}, not 1")

    def prob(self, element: Atom) -> float:
        return self.probs[self.support.index(element)]

    def as_dict(self) -> dict[Atom, float]:
        return dict(zip(self.support.elements, self.probs))

    @cached_property
    def _nonzero(self) -> tuple[Atom, ...]:
        return tuple(e for e, p in zip(self.support.elements, self.probs) if p > 0)

    @staticmethod
    def uniform(support: FiniteSet) -> "EmpiricalMeasure":
        n = len(support)
        return EmpiricalMeasure(support, tuple(1.0 / n for _ in range(n)))

    @staticmethod
    def point_mass(support: FiniteSet, element: Atom) -> "EmpiricalMeasure":
        idx = support.index(element)
        return EmpiricalMeasure(
            support, tuple(1.0 if i == idx else 0.0 for i in range(len(support)))
        )

    @staticmethod
    def from_weights(support: FiniteSet, weights: Sequence[float]) -> "EmpiricalMeasure":
        weights = [float(w) for w in weights]
        if len(weights) != len(support):
            raise ValidationError("one weight per support element required")
        if any(w < 0 for w in weights):
            raise ValidationError("weights must be non-negative")
        total = math.fsum(weights)
        if total <= 0:
            raise ValidationError("weights must have positive total mass")
        return EmpiricalMeasure(support, tuple(w / total for w in weights))

    @staticmethod
    def from_counts(
        support: FiniteSet,
        counts: Mapping[Atom, float],
        smoothing: float = 0.0,
    ) -> "EmpiricalMeasure":
        """Relative frequencies with optional additive smoothing per cell."""
        for el in counts:
            if el not in support:
                raise UnknownElement(f"count key {el!r} outside support {support.name!r}")
        n = math.fsum(counts.values())
        k = len(support)
        denom = n + k * smoothing
        if denom <= 0:
            raise EstimationError("no observations and no smoothing")
        return EmpiricalMeasure(
            support,
            tuple((counts.get(el, 0) + smoothing) / denom for el in support.elements),
        )

    def mix(self, other: "EmpiricalMeasure", weight: float) -> "EmpiricalMeasure":
        """Convex combination ``(1-weight)*self + weight*other``."""
        if self.support != other.support:
            raise SupportMismatch("mixture components need an identical support")
        return EmpiricalMeasure(
            self.support,
            tuple((1 - weight) * p + weight * q for p, q in zip(self.probs, other.probs)),
        )


@dataclass(frozen=True)
class ConditionalMeasure:
    """One probability row per conditioning element, all on one support."""

    given: FiniteSet
    rows: Mapping[Atom, EmpiricalMeasure]

    def __post_init__(self) -> None:
        rows = dict(self.rows)
        object.__setattr__(self, "rows", rows)
        missing = [x for x in self.given.elements if x not in rows]
        if missing:
            raise ValidationError(f"no conditional row for {missing[0]!r}")
        supports = {row.support.elements for row in rows.values()}
        if len(supports) > 1:
            raise ValidationError("conditional rows must share one output support")

    @property
    def output_support(self) -> FiniteSet:
        return next(iter(self.rows.values())).support

    def row(self, x: Atom) -> EmpiricalMeasure:
        try:
            return self.rows[x]
        except KeyError:
            raise UnknownElement(f"no conditional row for {x!r}") from None


def joint_measure(
    marginal: EmpiricalMeasure, conditional: ConditionalMeasure
) -> EmpiricalMeasure:
    """The product measure P(x, y) = P(x) * P(y | x) over pair atoms."""
    if marginal.support.elements != conditional.given.elements:
        raise SupportMismatch("marginal and conditional disagree on the input support")
    ys = conditional.output_support.elements
    pairs = tuple((x, y) for x in marginal.support.elements for y in ys)
    probs = tuple(
        marginal.prob(x) * conditional.row(x).prob(y)
        for x in marginal.support.elements
        for y in ys
    )
    support = FiniteSet(f"{marginal.support.name}*{conditional.output_support.name}", pairs)
    return EmpiricalMeasure(support, probs)


def output_marginal(
    marginal: EmpiricalMeasure, conditional: ConditionalMeasure
) -> EmpiricalMeasure:
    """P(y) obtained by summing P(x) * P(y | x) over x."""
    if marginal.support.elements != conditional.given.elements:
        raise SupportMismatch("marginal and conditional disagree on the input support")
    out = conditional.output_support
    probs = [0.0] * len(out)
    for x in marginal.support.elements:
        px = marginal.prob(x)
        row = conditional.row(x)
        for j, y in enumerate(out.elements):
            probs[j] += px * row.prob(y)
    total = math.fsum(probs)
    return EmpiricalMeasure(out, tuple(p / total for p in probs))


def pushforward(
    measure: EmpiricalMeasure,
    mapping: Mapping[Atom, Atom],
    support: FiniteSet | None = None,
) -> EmpiricalMeasure:
    """Image measure under a map defined on every positive-mass element."""
    masses: dict[Atom, float] = {}
    order: list[Atom] = []
    for el, p in zip(measure.support.elements, measure.probs):
        if p == 0 and el not in mapping:
            continue
        if el not in mapping:
            raise UnknownElement(f"pushforward map undefined on {el!r}")
        image = mapping[el]
        if image not in masses:
            masses[image] = 0.0
            order.append(image)
        masses[image] += p
    if support is None:
        support = FiniteSet(f"{measure.support.name}->", tuple(order))
    probs = tuple(masses.get(el, 0.0) for el in support.elements)
    if abs(math.fsum(probs) - 1.0) > NORMALIZATION_TOL:
        raise SupportMismatch("pushforward images fall outside the given support")
    return EmpiricalMeasure(support, probs)


# -- estimation ---------------------------------------------------------------

def _extract_pairs(data) -> tuple[tuple[Atom, Atom], ...]:
    pairs = tuple(getattr(data, "pairs", data))
    return pairs


def estimate_measure(
    data,
    over: str = "x",
    smoothing: float = 0.0,
    support: FiniteSet | tuple[FiniteSet, FiniteSet] | None = None,
):
    """Relative-frequency estimate from input-output pairs.

    ``data`` is a dataset object carrying ``pairs`` or a raw pair
    sequence.  ``over`` selects the estimated table: ``"x"``, ``"y"``,
    ``"xy"`` give an :class:`EmpiricalMeasure`; ``"y_given_x"`` gives a
    :class:`ConditionalMeasure`.  Without an explicit support the
    observed values (in first appearance order) form it.  Each cell
    receives ``smoothing`` additive mass before renormalization.
    """
    pairs = _extract_pairs(data)
    if not pairs:
        raise EmptyDataset("cannot estimate a measure from an empty dataset")

    def observed(values: Iterable[Atom], name: str) -> FiniteSet:
        seen: list[Atom] = []
        for v in values:
            if v not in seen:
                seen.append(v)
        return FiniteSet(name, tuple(seen))

    if over == "x":
        sup = support or observed((p[0] for p in pairs), "x")
        counts: dict[Atom, float] = {}
        for x, _ in pairs:
            counts[x] = counts.get(x, 0) + 1
        return EmpiricalMeasure.from_counts(sup, counts, smoothing)

    if over == "y":
        sup = support or observed((p[1] for p in pairs), "y")
        counts = {}
        for _, y in pairs:
            counts[y] = counts.get(y, 0) + 1
        return EmpiricalMeasure.from_counts(sup, counts, smoothing)

    if over == "xy":
        if support is None:
            sup = observed(((x, y) for x, y in pairs), "xy")
        elif isinstance(support, FiniteSet):
            sup = support
        else:
            sx, sy = support
            sup = FiniteSet(
                f"{sx.name}*{sy.name}",
                tuple((x, y) for x in sx.elements for y in sy.elements),
            )
        counts = {}
        for pair in pairs:
            counts[tuple(pair)] = counts.get(tuple(pair), 0) + 1
        return EmpiricalMeasure.from_counts(sup, counts, smoothing)

    if over == "y_given_x":
        if support is None:
            sup_x = observed((p[0] for p in pairs), "x")
            sup_y = observed((p[1] for p in pairs), "y")
        else:
            sup_x, sup_y = support  # type: ignore[misc]
        by_x: dict[Atom, dict[Atom, float]] = {x: {} for x in sup_x.elements}
        for x, y in pairs:
            if x not in by_x:
                raise UnknownElement(f"observed input {x!r} outside support")
            by_x[x][y] = by_x[x].get(y, 0) + 1
        rows = {}
        for x in sup_x.elements:
            if not by_x[x] and smoothing <= 0:
                raise EstimationError(
                    f"no observations for {x!r} and no smoothing to fall back on"
                )
            rows[x] = EmpiricalMeasure.from_counts(sup_y, by_x[x], smoothing)
        return ConditionalMeasure(sup_x, rows)

    raise ValidationError(f"unknown estimation target {over!r}")


# -- divergences ---------------------------------------------------------------

def _aligned(p: EmpiricalMeasure, q: EmpiricalMeasure) -> tuple[tuple[float, ...], tuple[float, ...]]:
    if not p.support.same_elements(q.support):
        raise SupportMismatch(
            f"supports {p.support.name!r} and {q.support.name!r} differ"
        )
    q_aligned = tuple(q.prob(el) for el in p.support.elements)
    return p.probs, q_aligned


def _numeric_coords(support: FiniteSet) -> dict[Atom, float]:
    coords = {}
    for el in support.elements:
        if isinstance(el, bool) or not isinstance(el, (int, float)):
            raise MissingOrder(
                f"support element {el!r} has no numeric coordinate; pass coords="
            )
        coords[el] = float(el)
    return coords


def kl_divergence(p: EmpiricalMeasure, q: EmpiricalMeasure) -> float:
    """Relative entropy; +inf when q lacks mass somewhere p has it."""
    ps, qs = _aligned(p, q)
    total = 0.0
    for pi, qi in zip(ps, qs):
        if pi == 0:
            continue
        if qi == 0:
            return math.inf
        total += pi * math.log(pi / qi)
    return max(total, 0.0)


def hellinger_distance(p: EmpiricalMeasure, q: EmpiricalMeasure) -> float:
    """sqrt(1/2 * sum (sqrt(p) - sqrt(q))^2); ranges over [0, 1]."""
    ps, qs = _aligned(p, q)
    acc = math.fsum((math.sqrt(pi) - math.sqrt(qi)) ** 2 for pi, qi in zip(ps, qs))
    return math.sqrt(0.5 * acc)


def total_variation(p: EmpiricalMeasure, q: EmpiricalMeasure) -> float:
    """1/2 * sum |p - q|; ranges over [0, 1]."""
    ps, qs = _aligned(p, q)
    return 0.5 * math.fsum(abs(pi - qi) for pi, qi in zip(ps, qs))


def wasserstein1(
    p: EmpiricalMeasure,
    q: EmpiricalMeasure,
    coords: Mapping[Atom, float] | None = None,
) -> float:
    """Exact 1-Wasserstein distance on a line.

    The support must carry a total order through real coordinates;
    numeric atoms supply their own, otherwise ``coords`` is required.
    Computed as the integral of |CDF_p - CDF_q| between consecutive
    coordinates, which is the minimum-cost transport on the line.
    """
    ps, qs = _aligned(p, q)
    if coords is None:
        coords = _numeric_coords(p.support)
    else:
        missing = [el for el in p.support.elements if el not in coords]
        if missing:
            raise MissingOrder(f"no coordinate for support element {missing[0]!r}")
    order = sorted(range(len(ps)), key=lambda i: coords[p.support.elements[i]])
    total = 0.0
    cum = 0.0
    for pos in range(len(order) - 1):
        i, j = order[pos], order[pos + 1]
        cum += ps[i] - qs[i]
        gap = coords[p.support.elements[j]] - coords[p.support.elements[i]]
        total += abs(cum) * gap
    return total


def match_kernel(a: Atom, b: Atom) -> float:
    """Exact-match kernel for symbolic supports: 1 iff the atoms agree."""
    return 1.0 if a == b else 0.0


def squared_exponential_kernel(
    coords: Mapping[Atom, float], bandwidth: float
) -> Callable[[Atom, Atom], float]:
    if bandwidth <= 0:
        raise MissingKernel("bandwidth must be positive")

    def kernel(a: Atom, b: Atom) -> float:
        d = coords[a] - coords[b]
        return math.exp(-0.5 * d * d / (bandwidth * bandwidth))

    return kernel


def _median_bandwidth(coords: Mapping[Atom, float], elements) -> float:
    gaps = sorted(
        abs(coords[a] - coords[b])
        for i, a in enumerate(elements)
        for b in elements[i + 1 :]
        if coords[a] != coords[b]
    )
    if not gaps:
        return 1.0
    mid = len(gaps) // 2
    return gaps[mid] if len(gaps) % 2 else 0.5 * (gaps[mid - 1] + gaps[mid])


def mmd_distance(
    p: EmpiricalMeasure,
    q: EmpiricalMeasure,
    kernel: Callable[[Atom, Atom], float] | str | None = None,
    coords: Mapping[Atom, float] | None = None,
) -> float:
    """Maximum mean discrepancy between two finite measures.

    The population quantity sqrt(E_pp k + E_qq k - 2 E_pq k) computed
    exactly on the shared support.  ``kernel`` may be a callable, the
    name ``"match"`` (exact-match kernel, the default for symbolic
    supports) or ``"rbf"`` (squared-exponential over declared or numeric
    coordinates with median-gap bandwidth).
    """
    ps, qs = _aligned(p, q)
    elements = p.support.elements
    if kernel is None:
        kernel = "rbf" if coords is not None else "match"
    if kernel == "match":
        kfn = match_kernel
    elif kernel == "rbf":
        if coords is None:
            try:
                coords = _numeric_coords(p.support)
            except MissingOrder as exc:
                raise MissingKernel(
                    "an rbf kernel needs coordinates for the support"
                ) from exc
        kfn = squared_exponential_kernel(coords, _median_bandwidth(coords, elements))
    elif callable(kernel):
        kfn = kernel
    else:
        raise MissingKernel(f"unknown kernel spec {kernel!r}")

    diff = [pi - qi for pi, qi in zip(ps, qs)]
    acc = 0.0
    for i, a in enumerate(elements):
        if diff[i] == 0:
            continue
        for j, b in enumerate(elements):
            if diff[j] == 0:
                continue
            acc += diff[i] * diff[j] * kfn(a, b)
    return math.sqrt(max(acc, 0.0))


_DIVERGENCES = {
    "kl": lambda p, q, coords, kernel: kl_divergence(p, q),
    "hellinger": lambda p, q, coords, kernel: hellinger_distance(p, q),
    "tv": lambda p, q, coords, kernel: total_variation(p, q),
    "w1": lambda p, q, coords, kernel: wasserstein1(p, q, coords),
    "mmd": lambda p, q, coords, kernel: mmd_distance(p, q, kernel, coords),
}


def divergence(
    p: EmpiricalMeasure,
    q: EmpiricalMeasure,
    kind: str = "tv",
    coords: Mapping[Atom, float] | None = None,
    kernel: Callable[[Atom, Atom], float] | str | None = None,
) -> float:
    """Dispatch to one of kl / hellinger / tv / w1 / mmd."""
    try:
        fn = _DIVERGENCES[kind.lower()]
    except KeyError:
        raise ValidationError(f"unknown divergence kind {kind!r}") from None
    return fn(p, q, coords, kernel)
