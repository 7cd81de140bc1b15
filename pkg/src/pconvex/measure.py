"""Finite models of measure spaces.

A :class:`MeasureSpace` is a list of weighted atoms followed by ``M`` cells of
equal weight standing in for the non-atomic part.  A :class:`CopiedSpace` is
the disjoint union of ``N`` copies of a base space, the truncated surrogate of
the countable-copy space.  Coordinates are ordered canonically: atoms first,
then cells; for copied spaces, copy-major.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np


class DegenerateSubsetError(ValueError):
    pass


class InsufficientResolutionError(ValueError):
    pass


@dataclass(frozen=True)
class MeasureSpace:
    """Atoms plus ``cell_count`` equal cells of weight ``cell_weight``.

    ``convenient`` defaults to ``True`` exactly for atomless models with at
    least two cells.  It may be declared explicitly, but declaring a model with
    fewer than two cells convenient is rejected.
    """

    atoms: tuple = ()
    cell_count: int = 0
    cell_weight: float = 1.0
    convenient: bool | None = None

    def __post_init__(self):
        atoms = tuple((str(lbl), float(w)) for lbl, w in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if any(not (w > 0 and np.isfinite(w)) for _, w in atoms):
            raise ValueError("atom weights must be strictly positive")
        if int(self.cell_count) != self.cell_count or self.cell_count < 0:
            raise ValueError("cell_count must be a non-negative integer")
        object.__setattr__(self, "cell_count", int(self.cell_count))
        if self.cell_count and not (self.cell_weight > 0 and np.isfinite(self.cell_weight)):
            raise ValueError("cell_weight must be strictly positive")
        if len(atoms) + self.cell_count < 1:
            raise ValueError("a measure space needs at least one coordinate")
        if self.convenient is None:
            object.__setattr__(self, "convenient", not atoms and self.cell_count >= 2)
        elif self.convenient and self.cell_count < 2:
            raise ValueError("convenient flag requires at least two cells")

    @property
    def dim(self) -> int:
        return len(self.atoms) + self.cell_count

    @property
    def weights(self) -> np.ndarray:
        w = [w for _, w in self.atoms] + [self.cell_weight] * self.cell_count
        return np.asarray(w, dtype=float)

    @property
    def labels(self) -> list[str]:
        return [lbl for lbl, _ in self.atoms] + [f"cell{i}" for i in range(self.cell_count)]

    @property
    def total_measure(self) -> float:
        return float(self.weights.sum())

    def full(self) -> "MeasurableSubset":
        return MeasurableSubset(self, range(self.dim))

    def subset(self, indices: Iterable[int]) -> "MeasurableSubset":
        return MeasurableSubset(self, indices)

    def to_dict(self) -> dict:
        return {
            "atoms": [{"label": lbl, "weight": w} for lbl, w in self.atoms],
            "cells": {"count": self.cell_count, "weight": self.cell_weight},
            "convenient": self.convenient,
        }


@dataclass(frozen=True)
class CopiedSpace:
    """``copies`` disjoint copies of ``base``; coordinate ``(j, i)`` sits at ``j*base.dim + i``."""

    base: "Space"
    copies: int

    def __post_init__(self):
        if int(self.copies) != self.copies or self.copies < 1:
            raise ValueError("copies must be a positive integer")
        object.__setattr__(self, "copies", int(self.copies))

    convenient = True

    @property
    def dim(self) -> int:
        return self.copies * self.base.dim

    @property
    def weights(self) -> np.ndarray:
        return np.tile(self.base.weights, self.copies)

    @property
    def labels(self) -> list[str]:
        return [f"{lbl}@{j}" for j in range(self.copies) for lbl in self.base.labels]

    @property
    def total_measure(self) -> float:
        return float(self.weights.sum())

    def index(self, copy: int, i: int) -> int:
        if not (0 <= copy < self.copies and 0 <= i < self.base.dim):
            raise IndexError((copy, i))
        return copy * self.base.dim + i

    def block(self, copy: int) -> slice:
        d = self.base.dim
        return slice(copy * d, (copy + 1) * d)

    def full(self) -> "MeasurableSubset":
        return MeasurableSubset(self, range(self.dim))

    def subset(self, indices: Iterable[int]) -> "MeasurableSubset":
        return MeasurableSubset(self, indices)

    def to_dict(self) -> dict:
        return {"base": self.base.to_dict(), "copies": self.copies}


Space = Union[MeasureSpace, CopiedSpace]


@dataclass(frozen=True)
class MeasurableSubset:
    space: Space
    indices: frozenset = field(default_factory=frozenset)

    def __init__(self, space: Space, indices: Iterable[int] = ()):
        idx = frozenset(int(i) for i in indices)
        if any(i < 0 or i >= space.dim for i in idx):
            raise IndexError("subset index outside the space")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "indices", idx)

    @property
    def measure(self) -> float:
        if not self.indices:
            return 0.0
        return float(self.space.weights[sorted(self.indices)].sum())

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.space.dim, dtype=bool)
        m[sorted(self.indices)] = True
        return m

    def sorted(self) -> list[int]:
        return sorted(self.indices)

    def isdisjoint(self, other: "MeasurableSubset") -> bool:
        return self.indices.isdisjoint(other.indices)

    def __len__(self):
        return len(self.indices)


def check_disjoint(subsets: Sequence[MeasurableSubset]) -> None:
    """Raise ``ValueError`` unless the subsets are pairwise disjoint and non-null."""
    seen: set[int] = set()
    for Z in subsets:
        if Z.measure <= 0:
            raise DegenerateSubsetError("degenerate subset: zero measure")
        if seen & Z.indices:
            raise ValueError("subsets overlap")
        seen |= Z.indices


def normalized_indicator(space: Space, Z: MeasurableSubset, p: float):
    """Indicator of ``Z`` scaled to unit norm in ``L_p(space)``."""
    from .lpcore import LpVector

    mu = Z.measure
    if mu <= 0:
        raise DegenerateSubsetError("degenerate subset: zero measure")
    coef = np.zeros(space.dim)
    coef[Z.sorted()] = mu ** (-1.0 / p)
    return LpVector(space, p, coef)


def disjoint_family(space: Space, n: int, seed: int | None = None) -> list[MeasurableSubset]:
    """``n`` pairwise disjoint subsets of positive measure.

    Without a seed the first ``n`` singletons are returned.  With a seed the
    coordinates are shuffled and a random number of them is cut into ``n``
    non-empty groups, so independent seeds give genuinely different families.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > space.dim:
        raise InsufficientResolutionError(
            f"insufficient resolution: {n} disjoint subsets requested from {space.dim} coordinates"
        )
    if seed is None:
        return [MeasurableSubset(space, [i]) for i in range(n)]
    rng = np.random.default_rng(seed)
    perm = rng.permutation(space.dim)
    used = int(rng.integers(n, space.dim + 1))
    cuts = np.sort(rng.choice(np.arange(1, used), size=n - 1, replace=False)) if n > 1 else []
    groups = np.split(perm[:used], cuts)
    return [MeasurableSubset(space, g) for g in groups]


def copy_isometries(cs: CopiedSpace):
    """Embeddings of the base space onto each copy, as operators base -> cs."""
    from .lpcore import LpOperator

    d = cs.base.dim
    ops = []
    for j in range(cs.copies):
        m = np.zeros((cs.dim, d))
        m[cs.block(j), :] = np.eye(d)
        ops.append(LpOperator(m, domain=cs.base, codomain=cs, tag=("proper-isometry", j)))
    return ops


def copy_subsets(cs: CopiedSpace) -> list[MeasurableSubset]:
    return [MeasurableSubset(cs, range(cs.block(j).start, cs.block(j).stop)) for j in range(cs.copies)]
