"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np

from transferlab.learning import (
    AlgorithmSpec,
    Dataset,
    HypothesisClass,
    LearningSystem,
    LossSpec,
)
from transferlab.relations import FiniteSet, FiniteSystem


def io_system(pairs, x_name="X", y_name="Y", xs=None, ys=None) -> FiniteSystem:
    """A 2-component input-output relation from explicit pairs."""
    if xs is None:
        xs = []
        for x, _ in pairs:
            if x not in xs:
                xs.append(x)
    if ys is None:
        ys = []
        for _, y in pairs:
            if y not in ys:
                ys.append(y)
    return FiniteSystem(
        (FiniteSet(x_name, tuple(xs)), FiniteSet(y_name, tuple(ys))),
        tuple(pairs),
        ((0,), (1,)),
    )


def random_io_system(rng: np.random.Generator, nx: int, ny: int, name="s") -> FiniteSystem:
    xs = tuple(f"{name}x{i}" for i in range(nx))
    ys = tuple(range(ny))
    pairs = [
        (x, y) for x in xs for y in ys if rng.random() < 0.5
    ]
    if not pairs:
        pairs = [(xs[0], ys[0])]
    return io_system(pairs, f"{name}_x", f"{name}_y", xs, ys)


def random_learning_system(
    rng: np.random.Generator,
    max_x: int = 6,
    max_y: int = 6,
    max_theta: int = 6,
    loss_kind: str = "zero_one",
) -> LearningSystem:
    nx = int(rng.integers(1, max_x + 1))
    ny = int(rng.integers(2, max_y + 1))
    nt = int(rng.integers(1, max_theta + 1))
    x_set = FiniteSet("X", tuple(f"x{i}" for i in range(nx)))
    y_set = FiniteSet("Y", tuple(range(ny)))
    thetas = FiniteSet("T", tuple(f"t{i}" for i in range(nt)))
    table = {
        (t, x): int(rng.integers(ny)) for t in thetas.elements for x in x_set.elements
    }
    return LearningSystem(
        x_set, y_set, HypothesisClass(thetas, table), LossSpec(loss_kind), AlgorithmSpec()
    )


def random_dataset(rng: np.random.Generator, system: LearningSystem, n: int, tag="d") -> Dataset:
    xs = system.x_set.elements
    ys = system.y_set.elements
    pairs = tuple(
        (xs[int(rng.integers(len(xs)))], ys[int(rng.integers(len(ys)))]) for _ in range(n)
    )
    return Dataset(pairs, tag)
