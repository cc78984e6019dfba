"""Finite probability tables, information measures and weak typicality.

Everything is computed in nats; ``LogBase.BITS`` converts on the way out.
Probabilities below ``ZERO_PROB`` are treated as exact zeros, with
``0 log 0 = 0``.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError

ZERO_PROB = 1e-15
MASS_TOL = 1e-9
# Stand-in for -log 0 so that vectorised sums stay finite; any sequence
# touching a zero-probability symbol lands far outside every typical set.
ZERO_SURPRISAL = 1e9


class LogBase(enum.Enum):
    BITS = "bits"
    NATS = "nats"

    @classmethod
    def parse(cls, value: "LogBase | str") -> "LogBase":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValidationError(f"unknown unit {value!r}; expected 'bits' or 'nats'") from None

    def from_nats(self, value):
        return value / math.log(2) if self is LogBase.BITS else value

    def to_nats(self, value):
        return value * math.log(2) if self is LogBase.BITS else value


def _check_table(probs: np.ndarray, what: str) -> np.ndarray:
    arr = np.array(probs, dtype=float)
    if arr.size == 0:
        raise ValidationError(f"{what}: empty table")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{what}: non-finite entry")
    if np.any(arr < 0):
        raise ValidationError(f"{what}: negative entry {arr.min():g}")
    total = arr.sum()
    if abs(total - 1.0) > MASS_TOL:
        raise ValidationError(f"{what}: total mass {total!r} differs from 1")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Pmf:
    """Distribution on ``{0, ..., alphabet_size - 1}``."""

    probs: np.ndarray

    def __post_init__(self):
        arr = _check_table(self.probs, "pmf")
        if arr.ndim != 1:
            raise ValidationError(f"pmf must be one-dimensional, got shape {arr.shape}")
        object.__setattr__(self, "probs", arr)

    @property
    def alphabet_size(self) -> int:
        return self.probs.shape[0]

    @classmethod
    def uniform(cls, size: int) -> "Pmf":
        return cls(np.full(size, 1.0 / size))

    @classmethod
    def point(cls, size: int, symbol: int) -> "Pmf":
        p = np.zeros(size)
        p[symbol] = 1.0
        return cls(p)

    def __repr__(self):
        return f"Pmf({np.array2string(self.probs, precision=4)})"


@dataclass(frozen=True, eq=False)
class JointPmf:
    """Dense joint distribution; axis ``i`` ranges over ``dims[i]`` symbols."""

    probs: np.ndarray

    def __post_init__(self):
        arr = _check_table(self.probs, "joint pmf")
        if arr.ndim < 2:
            raise ValidationError(f"joint pmf needs rank >= 2, got shape {arr.shape}")
        object.__setattr__(self, "probs", arr)

    @property
    def rank(self) -> int:
        return self.probs.ndim

    @property
    def dims(self) -> tuple[int, ...]:
        return self.probs.shape

    @classmethod
    def product(cls, *marginals: Pmf) -> "JointPmf":
        out = marginals[0].probs
        for m in marginals[1:]:
            out = np.multiply.outer(out, m.probs)
        return cls(out)

    @cached_property
    def typicality_tables(self) -> "SubsetTables":
        return SubsetTables(self.probs)

    def __repr__(self):
        return f"JointPmf(dims={self.dims})"


def _xlogx_sum(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > ZERO_PROB]
    return float(-np.sum(p * np.log(p)))


def entropy(p: Pmf | JointPmf, base: LogBase | str = LogBase.NATS) -> float:
    """Shannon entropy of a (joint) pmf."""
    if not isinstance(p, (Pmf, JointPmf)):
        p = Pmf(p)
    return LogBase.parse(base).from_nats(max(_xlogx_sum(p.probs), 0.0))


def marginalize(j: JointPmf, keep_axes: Iterable[int]) -> Pmf | JointPmf:
    """Sum out every axis not in ``keep_axes``; axes keep their original order."""
    keep = sorted(set(int(a) for a in keep_axes))
    if not keep:
        raise ValidationError("marginalize: keep_axes is empty")
    if keep[0] < 0 or keep[-1] >= j.rank:
        raise ValidationError(f"marginalize: axes {keep} out of range for rank {j.rank}")
    drop = tuple(a for a in range(j.rank) if a not in keep)
    out = j.probs.sum(axis=drop) if drop else np.array(j.probs)
    if len(keep) == 1:
        return Pmf(out)
    return JointPmf(out)


def _mi_nats(table: np.ndarray) -> float:
    """I(A;B) for a 2-D table, as H(A) + H(B) - H(A,B)."""
    h = _xlogx_sum(table.sum(axis=1)) + _xlogx_sum(table.sum(axis=0)) - _xlogx_sum(table)
    return max(h, 0.0)


def mutual_information(j: JointPmf, base: LogBase | str = LogBase.NATS) -> float:
    if j.rank != 2:
        raise ValidationError(f"mutual_information needs a rank-2 joint, got rank {j.rank}")
    return LogBase.parse(base).from_nats(_mi_nats(j.probs))


def conditional_mutual_information(
    j: JointPmf, conditioning_axis: int, base: LogBase | str = LogBase.NATS
) -> float:
    """I(A;B|C) for a rank-3 joint, where C is ``conditioning_axis``.

    Computed as H(A,C) + H(B,C) - H(A,B,C) - H(C).
    """
    if j.rank != 3:
        raise ValidationError(f"conditional_mutual_information needs rank 3, got {j.rank}")
    if conditioning_axis not in (0, 1, 2):
        raise ValidationError(f"conditioning axis {conditioning_axis} out of range")
    a, b = (ax for ax in range(3) if ax != conditioning_axis)
    p = j.probs
    h_ac = _xlogx_sum(p.sum(axis=b))
    h_bc = _xlogx_sum(p.sum(axis=a))
    h_c = _xlogx_sum(p.sum(axis=(a, b)))
    h_abc = _xlogx_sum(p)
    return LogBase.parse(base).from_nats(max(h_ac + h_bc - h_abc - h_c, 0.0))


def joint_mutual_information(j: JointPmf, target_axis: int, base: LogBase | str = LogBase.NATS) -> float:
    """I(all other axes ; target_axis) for any rank >= 2."""
    if not 0 <= target_axis < j.rank:
        raise ValidationError(f"target axis {target_axis} out of range")
    moved = np.moveaxis(j.probs, target_axis, -1)
    return LogBase.parse(base).from_nats(_mi_nats(moved.reshape(-1, moved.shape[-1])))


def surprisal_table(p: np.ndarray) -> np.ndarray:
    """-log p with zeros mapped to ``ZERO_SURPRISAL``."""
    p = np.asarray(p, dtype=float)
    out = np.full(p.shape, ZERO_SURPRISAL)
    pos = p > ZERO_PROB
    out[pos] = -np.log(p[pos])
    return out


class SubsetTables:
    """Marginal surprisal tables and entropies for every non-empty axis subset."""

    def __init__(self, probs: np.ndarray):
        rank = probs.ndim
        self.rank = rank
        self.subsets: list[tuple[int, ...]] = []
        self.surprisal: dict[tuple[int, ...], np.ndarray] = {}
        self.entropy: dict[tuple[int, ...], float] = {}
        for size in range(1, rank + 1):
            for subset in itertools.combinations(range(rank), size):
                drop = tuple(a for a in range(rank) if a not in subset)
                marg = probs.sum(axis=drop) if drop else probs
                self.subsets.append(subset)
                self.surprisal[subset] = surprisal_table(marg)
                self.entropy[subset] = _xlogx_sum(marg)


def _eps_nats(epsilon: float, base: LogBase | str) -> float:
    if not epsilon > 0:
        raise ValidationError(f"epsilon must be positive, got {epsilon}")
    return LogBase.parse(base).to_nats(float(epsilon))


def is_jointly_typical(
    sequences: Sequence[Sequence[int]],
    reference: JointPmf | Pmf,
    epsilon: float,
    base: LogBase | str = LogBase.NATS,
) -> bool:
    """Weak joint typicality over every non-empty subset of the axes.

    For each subset ``S`` the empirical rate ``-(1/n) log p_S(x_S^n)`` must be
    within ``epsilon`` of the entropy ``H(X_S)``. A symbol of probability
    zero makes the tuple atypical.
    """
    eps = _eps_nats(epsilon, base)
    if isinstance(reference, Pmf):
        probs = reference.probs
        tables = SubsetTables(probs)
    else:
        probs = reference.probs
        tables = reference.typicality_tables
    seqs = [np.asarray(s, dtype=np.int64) for s in sequences]
    if len(seqs) != probs.ndim:
        raise ValidationError(f"expected {probs.ndim} sequences, got {len(seqs)}")
    n = seqs[0].shape[0]
    if n < 1 or any(s.ndim != 1 or s.shape[0] != n for s in seqs):
        raise ValidationError("sequences must be one-dimensional with equal positive length")
    for axis, s in enumerate(seqs):
        if s.min() < 0 or s.max() >= probs.shape[axis]:
            raise ValidationError(f"symbol out of range on axis {axis}")
    for subset in tables.subsets:
        table = tables.surprisal[subset]
        vals = table[tuple(seqs[a] for a in subset)]
        if np.any(vals >= ZERO_SURPRISAL):
            return False
        if abs(vals.sum() / n - tables.entropy[subset]) > eps:
            return False
    return True


def binary_entropy(p: float, base: LogBase | str = LogBase.NATS) -> float:
    return entropy(Pmf(np.array([p, 1.0 - p])), base)
