"""Vectorised weak-typicality tests for whole codeword lists.

``typical_mask`` scores every candidate (or every pair of candidates from two
lists) against fixed observed sequences in one pass. Single-list sums go
through exact integer joint-type counts; pair sums go through one matrix
product per symbol of the second list.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np

from ..errors import ValidationError
from ..prob import ZERO_SURPRISAL, JointPmf, Pmf, SubsetTables, surprisal_table


class SequenceList:
    """Read-only ``(count, n)`` array of symbols with cached indicator matrices."""

    def __init__(self, seqs: np.ndarray, alphabet_size: int):
        arr = np.ascontiguousarray(seqs, dtype=np.int8 if alphabet_size <= 127 else np.int32)
        if arr.ndim != 2:
            raise ValidationError(f"sequence list must be 2-D, got shape {arr.shape}")
        arr.setflags(write=False)
        self.seqs = arr
        self.alphabet_size = alphabet_size

    def __len__(self):
        return self.seqs.shape[0]

    @property
    def n(self) -> int:
        return self.seqs.shape[1]

    def __getitem__(self, k):
        return self.seqs[k]

    @cached_property
    def indicators(self) -> list[np.ndarray]:
        """float32 0/1 matrices, one per symbol."""
        return [(self.seqs == a).astype(np.float32) for a in range(self.alphabet_size)]

    def sub(self, start: int, stop: int) -> "SequenceList":
        return SequenceList(self.seqs[start:stop], self.alphabet_size)


def _fixed_index(fixed_axes, fixed, dims, n):
    """Mixed-radix index of the fixed symbols at each position."""
    if not fixed_axes:
        return np.zeros(n, dtype=np.int64), 1
    idx = np.zeros(n, dtype=np.int64)
    size = 1
    for a in fixed_axes:
        idx = idx * dims[a] + fixed[a]
        size *= dims[a]
    return idx, size


def list_sums(table: np.ndarray, cands: SequenceList, f_idx: np.ndarray, f_size: int) -> np.ndarray:
    """sum_t table[c_kt, f_t] for every candidate k; ``table`` is (A, f_size)."""
    n = cands.n
    onehot = np.zeros((n, f_size), dtype=np.float32)
    onehot[np.arange(n), f_idx] = 1.0
    per_f = onehot.sum(axis=0).astype(np.float64)
    counts = [ind @ onehot for ind in cands.indicators[1:]]
    c0 = per_f[None, :] - sum(c.astype(np.float64) for c in counts) if counts else np.broadcast_to(per_f, (len(cands), f_size))
    total = c0 @ table[0]
    for a, c in enumerate(counts, start=1):
        total = total + c.astype(np.float64) @ table[a]
    return total


def pair_sums(table: np.ndarray, c1: SequenceList, c2: SequenceList, f_idx: np.ndarray) -> np.ndarray:
    """sum_t table[a_it, b_jt, f_t] for every pair (i, j); ``table`` is (A, B, F)."""
    out = np.zeros((len(c1), len(c2)))
    s1 = c1.seqs.astype(np.int64)
    for b, ind in enumerate(c2.indicators):
        g = table[s1, b, f_idx[None, :]]
        out += g @ ind.T.astype(np.float64)
    return out


def typical_mask(
    reference: JointPmf | Pmf,
    epsilon_nats: float,
    lists: dict[int, SequenceList],
    fixed: dict[int, np.ndarray] | None = None,
) -> np.ndarray:
    """Joint typicality over every non-empty subset of the reference axes.

    ``lists`` maps one or two axes to candidate lists; ``fixed`` maps the
    remaining axes to observed sequences. Returns a boolean array of shape
    ``(len(list),)`` or ``(len(list_a), len(list_b))`` with the list axes in
    increasing order.
    """
    fixed = {a: np.asarray(s, dtype=np.int64) for a, s in (fixed or {}).items()}
    probs = reference.probs
    rank = probs.ndim
    if sorted(list(lists) + list(fixed)) != list(range(rank)):
        raise ValidationError(f"axes {sorted(lists)} + {sorted(fixed)} do not cover rank {rank}")
    if not 1 <= len(lists) <= 2:
        raise ValidationError("typical_mask supports one or two candidate lists")
    lengths = {l.n for l in lists.values()} | {s.shape[0] for s in fixed.values()}
    if len(lengths) != 1:
        raise ValidationError(f"sequence lengths differ: {sorted(lengths)}")
    n = lengths.pop()
    list_axes = sorted(lists)
    shape = tuple(len(lists[a]) for a in list_axes)
    ok = np.ones(shape, dtype=bool)
    tables = SubsetTables(probs) if isinstance(reference, Pmf) else reference.typicality_tables
    dims = probs.shape

    for subset in tables.subsets:
        table = tables.surprisal[subset]
        h = tables.entropy[subset]
        in_list = [a for a in subset if a in lists]
        f_axes = [a for a in subset if a not in lists]
        f_idx, f_size = _fixed_index(f_axes, fixed, dims, n)
        # reorder table axes as (list axes..., fixed axes...) then flatten fixed
        order = [subset.index(a) for a in in_list] + [subset.index(a) for a in f_axes]
        t = np.transpose(table, order).reshape([dims[a] for a in in_list] + [f_size])
        if not in_list:
            total = t.reshape(-1)[f_idx].sum()
            dev = np.abs(total / n - h)
            if not dev <= epsilon_nats:
                ok[...] = False
                return ok
            continue
        if len(in_list) == 1:
            sums = list_sums(t, lists[in_list[0]], f_idx, f_size)
            good = np.abs(sums / n - h) <= epsilon_nats
            if len(list_axes) == 1:
                ok &= good
            elif in_list[0] == list_axes[0]:
                ok &= good[:, None]
            else:
                ok &= good[None, :]
        else:
            sums = pair_sums(t, lists[list_axes[0]], lists[list_axes[1]], f_idx)
            ok &= np.abs(sums / n - h) <= epsilon_nats
    return ok


def loglik_sums(cond_table: np.ndarray, cands: SequenceList, fixed_seq: np.ndarray) -> np.ndarray:
    """sum_t log p(fixed_t | c_kt) for a conditional table indexed (c, fixed)."""
    neg = surprisal_table(cond_table)
    sums = list_sums(neg, cands, np.asarray(fixed_seq, dtype=np.int64), cond_table.shape[1])
    return -sums


def unique_index(mask: np.ndarray):
    """Index of the single True entry, or None when there are zero or several."""
    hits = np.flatnonzero(mask.ravel())
    if hits.size != 1:
        return None
    return np.unravel_index(hits[0], mask.shape) if mask.ndim > 1 else int(hits[0])


__all__ = ["SequenceList", "typical_mask", "list_sums", "pair_sums", "loglik_sums", "unique_index", "ZERO_SURPRISAL"]
