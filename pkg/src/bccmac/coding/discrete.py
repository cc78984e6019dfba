"""Random codes for the discrete cascade.

Broadcast side: two lists of typical auxiliary sequences cut into equal cells,
one cell per message; the encoder picks the first jointly typical (u, v) pair
in the cell product and draws x from p(x|u,v) until (u, v, x) is typical.
Uplink side: one independent random codebook per decoded broadcast message.
"""
from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .. import rng as rngmod
from ..channels import BccChannel
from ..errors import ConfigurationError, ValidationError
from ..prob import JointPmf, Pmf, entropy, mutual_information, surprisal_table
from ..regions import broadcast_joints
from .typicality import SequenceList, list_sums, loglik_sums, pair_sums, typical_mask, unique_index

# A list or codebook may hold at most this many symbols (count * n).
SYMBOL_BUDGET = 2**24
# Exhaustive uplink decoding visits at most this many codeword pairs.
PAIR_CAP = 2**20
REJECTION_CAP = 1000
X_RETRY_CAP = 1000


def message_count(rate_nats: float, n: int) -> int:
    """floor(e^{n R}) with a guard against rounding just below an integer."""
    if rate_nats < 0:
        raise ValidationError(f"rate must be non-negative, got {rate_nats}")
    val = math.exp(n * rate_nats)
    return max(1, int(math.floor(val * (1 + 1e-12))))


def fmt_count(c: int) -> str:
    """Exact below a billion, scientific notation above."""
    return str(c) if c < 10**9 else f"{float(c):.3g}"


def cell_width(mi: float, rate: float, eps: float, n: int) -> int:
    return int(math.floor(math.exp(n * (mi - rate - eps)) * (1 + 1e-12)))


class _Lru(OrderedDict):
    def __init__(self, size: int):
        super().__init__()
        self.size = size

    def get_or(self, key, make):
        if key in self:
            self.move_to_end(key)
            return self[key]
        val = make()
        self[key] = val
        if len(self) > self.size:
            self.popitem(last=False)
        return val


def typical_list(p: Pmf, count: int, n: int, eps: float, g: np.random.Generator) -> tuple[SequenceList, int]:
    """``count`` i.i.d. sequences from p, each redrawn until eps-typical.

    Returns the list and the number of entries that stayed atypical after
    ``REJECTION_CAP`` attempts (those keep their closest draw).
    """
    probs = p.probs
    size = probs.shape[0]
    surpr = surprisal_table(probs)
    h = entropy(p)
    seqs = g.choice(size, size=(count, n), p=probs).astype(np.int8 if size <= 127 else np.int32)
    dev = np.abs(surpr[seqs].sum(axis=1) / n - h)
    todo = np.flatnonzero(dev > eps)
    for _ in range(REJECTION_CAP - 1):
        if todo.size == 0:
            break
        fresh = g.choice(size, size=(todo.size, n), p=probs).astype(seqs.dtype)
        fdev = np.abs(surpr[fresh].sum(axis=1) / n - h)
        better = fdev < dev[todo]
        seqs[todo[better]] = fresh[better]
        dev[todo[better]] = fdev[better]
        todo = todo[dev[todo] > eps]
    return SequenceList(seqs, size), int(todo.size)


@dataclass(frozen=True)
class BccEncoding:
    """Result of encoding one message pair; ``x`` is None on encode failure."""

    x: np.ndarray | None
    k: int | None
    l: int | None
    failure: str | None = None


class DiscreteBccCodebook:
    """Binned list code for the broadcast stage (messages are 1-based, 0 = miss)."""

    def __init__(self, p_uvx: JointPmf, bcc: BccChannel, r1_id: float, r2_id: float,
                 n: int, epsilon: float, seed: int = rngmod.DEFAULT_SEED):
        if n < 1:
            raise ValidationError(f"block length must be positive, got {n}")
        if not epsilon > 0:
            raise ValidationError(f"epsilon must be positive, got {epsilon}")
        self.p_uvx, self.bcc, self.n, self.epsilon, self.seed = p_uvx, bcc, n, float(epsilon), seed
        self.r1_id, self.r2_id = float(r1_id), float(r2_id)
        p_uy1, p_vy2, p_uv = broadcast_joints(p_uvx, bcc)
        self.ref_uy1, self.ref_vy2, self.ref_uv = JointPmf(p_uy1), JointPmf(p_vy2), JointPmf(p_uv)
        self.mi_u = mutual_information(self.ref_uy1)
        self.mi_v = mutual_information(self.ref_vy2)
        for name, mi, r in (("R1_ID", self.mi_u, self.r1_id), ("R2_ID", self.mi_v, self.r2_id)):
            if not mi > r + self.epsilon:
                which = "I(U;Y1)" if name == "R1_ID" else "I(V;Y2)"
                raise ConfigurationError(
                    f"{which} = {mi:.6g} nats is not above {name} + epsilon = {r + self.epsilon:.6g}; "
                    "cells would be narrower than one sequence"
                )
        self.messages = (message_count(self.r1_id, n), message_count(self.r2_id, n))
        self.widths = (cell_width(self.mi_u, self.r1_id, self.epsilon, n),
                       cell_width(self.mi_v, self.r2_id, self.epsilon, n))
        sizes = (int(math.floor(math.exp(n * (self.mi_u - self.epsilon)) * (1 + 1e-12))),
                 int(math.floor(math.exp(n * (self.mi_v - self.epsilon)) * (1 + 1e-12))))
        sizes = tuple(max(s, m * w) for s, m, w in zip(sizes, self.messages, self.widths))
        for which, s in zip(("U", "V"), sizes):
            if s * n > SYMBOL_BUDGET:
                raise ConfigurationError(
                    f"{which} list would hold {fmt_count(s)} sequences of length {n} "
                    f"({fmt_count(s * n)} symbols > budget {SYMBOL_BUDGET}); lower n or the rates"
                )
        p_u = Pmf(p_uvx.probs.sum(axis=(1, 2)))
        p_v = Pmf(p_uvx.probs.sum(axis=(0, 2)))
        self.u_list, self.u_atypical = typical_list(p_u, sizes[0], n, self.epsilon, rngmod.stream(seed, rngmod.BCC_LIST, n, 1))
        self.v_list, self.v_atypical = typical_list(p_v, sizes[1], n, self.epsilon, rngmod.stream(seed, rngmod.BCC_LIST, n, 2))
        p = p_uvx.probs
        with np.errstate(invalid="ignore", divide="ignore"):
            self._x_given_uv = np.nan_to_num(p / p.sum(axis=2, keepdims=True))
        self._cache = _Lru(4096)
        self._static = {}

    @property
    def list_sizes(self) -> tuple[int, int]:
        return len(self.u_list), len(self.v_list)

    def cell_range(self, branch: int, w: int) -> tuple[int, int]:
        """0-based half-open index range of cell ``w``; the last cell takes the remainder."""
        m, width = self._branch(branch)
        if not 1 <= w <= m:
            raise ValidationError(f"message {w} outside 1..{m}")
        total = len(self.u_list if branch == 1 else self.v_list)
        stop = total if w == m else w * width
        return (w - 1) * width, stop

    def cell_of(self, branch: int, k: int) -> int:
        m, width = self._branch(branch)
        total = len(self.u_list if branch == 1 else self.v_list)
        if not 0 <= k < total:
            raise ValidationError(f"list index {k} outside 0..{total - 1}")
        return min(m, k // width + 1)

    def _branch(self, branch: int) -> tuple[int, int]:
        if branch not in (1, 2):
            raise ValidationError(f"branch must be 1 or 2, got {branch}")
        return self.messages[branch - 1], self.widths[branch - 1]

    def encode(self, w1: int, w2: int) -> BccEncoding:
        for b, w in ((1, w1), (2, w2)):
            if not 1 <= w <= self.messages[b - 1]:
                raise ValidationError(f"message w{b}={w} outside 1..{self.messages[b - 1]}")
        return self._cache.get_or((w1, w2), lambda: self._encode(w1, w2))

    def _first_typical_pair(self, w1: int, w2: int):
        a0, a1 = self.cell_range(1, w1)
        b0, b1 = self.cell_range(2, w2)
        vs = self.v_list.sub(b0, b1)
        block = max(1, PAIR_CAP // max(1, b1 - b0))
        for start in range(a0, a1, block):
            us = self.u_list.sub(start, min(a1, start + block))
            mask = typical_mask(self.ref_uv, self.epsilon, {0: us, 1: vs})
            hits = np.flatnonzero(mask.ravel())
            if hits.size:
                i, j = divmod(int(hits[0]), len(vs))
                return start + i, b0 + j
        return None

    def _encode(self, w1: int, w2: int) -> BccEncoding:
        pair = self._first_typical_pair(w1, w2)
        if pair is None:
            return BccEncoding(None, None, None, "no jointly typical (u, v) pair in cell product")
        k, l = pair
        u, v = self.u_list[k].astype(np.int64), self.v_list[l].astype(np.int64)
        rows = self._x_given_uv[u, v]
        cdf = np.cumsum(rows, axis=1)
        g = rngmod.stream(self.seed, rngmod.BCC_X, self.n, w1, w2)
        x_size = rows.shape[1]
        for _ in range(X_RETRY_CAP):
            x = np.minimum((g.random(self.n)[:, None] >= cdf).sum(axis=1), x_size - 1)
            xs = SequenceList(x[None, :], x_size)
            if typical_mask(self.p_uvx, self.epsilon, {2: xs}, {0: u, 1: v})[0]:
                return BccEncoding(x, k, l)
        return BccEncoding(None, k, l, "no x jointly typical with (u, v) within retry cap")

    def _static_ok(self, branch: int) -> np.ndarray:
        """Marginal typicality of every list entry (independent of the output)."""
        if branch not in self._static:
            lst = self.u_list if branch == 1 else self.v_list
            ref = self.ref_uy1 if branch == 1 else self.ref_vy2
            self._static[branch] = typical_mask(Pmf(ref.probs.sum(axis=1)), self.epsilon, {0: lst})
        return self._static[branch]

    def decode(self, branch: int, y_seq) -> int:
        """Unique list entry jointly typical with the output, mapped to its cell."""
        lst = self.u_list if branch == 1 else self.v_list
        ref = self.ref_uy1 if branch == 1 else self.ref_vy2
        y = np.asarray(y_seq, dtype=np.int64)
        if y.shape != (self.n,):
            raise ValidationError(f"output must have length {self.n}")
        mask = self._joint_mask(lst, ref, y) & self._static_ok(branch)
        k = unique_index(mask)
        return 0 if k is None else self.cell_of(branch, k)

    def _joint_mask(self, lst: SequenceList, ref: JointPmf, y: np.ndarray) -> np.ndarray:
        # the {y} and {aux, y} subsets; the {aux} subset is cached in _static_ok
        tables = ref.typicality_tables
        n = self.n
        hy = tables.entropy[(1,)]
        if not abs(tables.surprisal[(1,)][y].sum() / n - hy) <= self.epsilon:
            return np.zeros(len(lst), dtype=bool)
        sums = list_sums(tables.surprisal[(0, 1)], lst, y, ref.dims[1])
        return np.abs(sums / n - tables.entropy[(0, 1)]) <= self.epsilon

    def decode_ml(self, branch: int, y_seq) -> int:
        """Maximum-likelihood list entry under p(y|aux), mapped to its cell."""
        lst = self.u_list if branch == 1 else self.v_list
        ref = self.ref_uy1 if branch == 1 else self.ref_vy2
        p = ref.probs
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = np.nan_to_num(p / p.sum(axis=1, keepdims=True))
        ll = loglik_sums(cond, lst, np.asarray(y_seq, dtype=np.int64))
        return self.cell_of(branch, int(np.argmax(ll)))


def build_discrete_bcc_codebook(p_uvx, bcc, r1_id, r2_id, n, epsilon, seed=rngmod.DEFAULT_SEED) -> DiscreteBccCodebook:
    return DiscreteBccCodebook(p_uvx, bcc, r1_id, r2_id, n, epsilon, seed)


def bcc_encode_discrete(cb: DiscreteBccCodebook, w1: int, w2: int) -> np.ndarray | None:
    return cb.encode(w1, w2).x


def bcc_decode_discrete(cb: DiscreteBccCodebook, branch: int, y_seq) -> int:
    return cb.decode(branch, y_seq)


class NestedMacCodebook:
    """One random codebook per broadcast message, each generated from its own stream."""

    def __init__(self, unit: int, p_q: Pmf, rate: float, id_count: int, n: int, seed: int = rngmod.DEFAULT_SEED):
        if unit not in (1, 2):
            raise ValidationError(f"unit must be 1 or 2, got {unit}")
        if id_count < 1:
            raise ValidationError(f"id_count must be >= 1, got {id_count}")
        self.unit, self.p_q, self.rate, self.id_count, self.n, self.seed = unit, p_q, float(rate), id_count, n, seed
        self.size = message_count(self.rate, n)
        if self.size * n > SYMBOL_BUDGET:
            raise ConfigurationError(
                f"unit {unit} uplink codebook would hold {fmt_count(self.size)} codewords of length {n} "
                f"({fmt_count(self.size * n)} symbols > budget {SYMBOL_BUDGET})"
            )
        self._cache = _Lru(64)

    def codebook(self, w: int) -> SequenceList:
        if not 1 <= w <= self.id_count:
            raise ValidationError(f"nested codebook index {w} outside 1..{self.id_count}")

        def make():
            g = rngmod.stream(self.seed, rngmod.MAC_BOOK, self.n, self.unit, w)
            q = self.p_q.probs
            return SequenceList(g.choice(q.shape[0], size=(self.size, self.n), p=q), q.shape[0])

        return self._cache.get_or(w, make)


def build_nested_mac_codebooks(p_q1: Pmf, p_q2: Pmf, r1_data: float, r2_data: float,
                               id_counts: tuple[int, int], n: int, seed: int = rngmod.DEFAULT_SEED):
    cb1 = NestedMacCodebook(1, p_q1, r1_data, id_counts[0], n, seed)
    cb2 = NestedMacCodebook(2, p_q2, r2_data, id_counts[1], n, seed)
    if cb1.size * cb2.size > PAIR_CAP:
        raise ConfigurationError(
            f"uplink decoder would search {fmt_count(cb1.size)} x {fmt_count(cb2.size)} = {fmt_count(cb1.size * cb2.size)} pairs "
            f"> cap {PAIR_CAP}"
        )
    return cb1, cb2


def mac_encode(cb: NestedMacCodebook, w_hat: int, m: int) -> np.ndarray:
    if w_hat == 0:
        raise ValidationError("a unit that missed its broadcast message has no nested codebook")
    book = cb.codebook(w_hat)
    if not 1 <= m <= len(book):
        raise ValidationError(f"uplink message {m} outside 1..{len(book)}")
    return book[m - 1]


def mac_decode(cb1: NestedMacCodebook, cb2: NestedMacCodebook, w1: int, w2: int, s_seq,
               reference: JointPmf, epsilon: float) -> tuple[int, int]:
    """Unique jointly typical codeword pair from the books of the true (w1, w2)."""
    b1, b2 = cb1.codebook(w1), cb2.codebook(w2)
    if len(b1) * len(b2) > PAIR_CAP:
        raise ConfigurationError(f"uplink search space {len(b1) * len(b2)} exceeds cap {PAIR_CAP}")
    mask = typical_mask(reference, epsilon, {0: b1, 1: b2}, {2: np.asarray(s_seq, dtype=np.int64)})
    hit = unique_index(mask)
    if hit is None:
        return 0, 0
    return int(hit[0]) + 1, int(hit[1]) + 1


def mac_decode_ml(cb1: NestedMacCodebook, cb2: NestedMacCodebook, w1: int, w2: int, s_seq,
                  reference: JointPmf) -> tuple[int, int]:
    """Maximum-likelihood pair under the induced p(s|q1,q2)."""
    b1, b2 = cb1.codebook(w1), cb2.codebook(w2)
    p = reference.probs
    with np.errstate(invalid="ignore", divide="ignore"):
        cond = np.nan_to_num(p / p.sum(axis=2, keepdims=True))
    s = np.asarray(s_seq, dtype=np.int64)
    nll = pair_sums(surprisal_table(cond), b1, b2, s)
    i, j = np.unravel_index(int(np.argmin(nll)), nll.shape)
    return int(i) + 1, int(j) + 1
