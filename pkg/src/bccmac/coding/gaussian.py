"""Superposition coding for the Gaussian cascade.

The transceiver sends x = x1(w1) + x2(w2). Unit 2 decodes w2 treating x1 as
noise; unit 1 decodes w2 first, subtracts it and then decodes w1. Uplink
codebooks are nested per broadcast message as in the discrete case.
Typicality for real sequences compares empirical second moments with the
reference covariance.
"""
from __future__ import annotations

import math

import numpy as np

from .. import rng as rngmod
from ..channels import GaussianSystem
from ..errors import ConfigurationError, ValidationError
from .discrete import PAIR_CAP, SYMBOL_BUDGET, _Lru, fmt_count, message_count


def _moments(seqs: np.ndarray) -> np.ndarray:
    return seqs @ seqs.T / seqs.shape[1]


def gaussian_typicality(sequences, cov, epsilon: float) -> bool:
    """Second-moment typicality of real sequences against a zero-mean covariance.

    Every empirical power must lie within ``epsilon * K_ii`` of ``K_ii`` and
    every empirical cross moment within ``epsilon * sqrt(K_ii K_jj)`` of ``K_ij``.
    """
    seqs = [np.asarray(s, dtype=float) for s in sequences]
    k = np.asarray(cov, dtype=float)
    if len({s.shape for s in seqs}) != 1 or seqs[0].ndim != 1 or seqs[0].size == 0:
        raise ValidationError("sequences must be one-dimensional with equal positive length")
    if k.shape != (len(seqs), len(seqs)):
        raise ValidationError(f"covariance shape {k.shape} does not match {len(seqs)} sequences")
    if not epsilon > 0:
        raise ValidationError(f"epsilon must be positive, got {epsilon}")
    m = _moments(np.vstack(seqs))
    d = np.sqrt(np.outer(np.diag(k), np.diag(k)))
    return bool(np.all(np.abs(m - k) <= epsilon * d))


def _check_pair_moments(book: np.ndarray, powers: np.ndarray, y: np.ndarray,
                        var_x: float, var_y: float, cov_xy: float, eps: float) -> np.ndarray:
    """Vectorised typicality of each codeword with one output sequence."""
    n = y.shape[0]
    py = float(y @ y) / n
    if abs(py - var_y) > eps * var_y:
        return np.zeros(book.shape[0], dtype=bool)
    cross = book @ y / n
    return (np.abs(powers - var_x) <= eps * var_x) & (np.abs(cross - cov_xy) <= eps * math.sqrt(var_x * var_y))


def _unique(mask: np.ndarray) -> int:
    hits = np.flatnonzero(mask)
    return int(hits[0]) + 1 if hits.size == 1 else 0


def _budget(count: int, n: int, what: str):
    if count * n > SYMBOL_BUDGET:
        raise ConfigurationError(
            f"{what} would hold {fmt_count(count)} codewords of length {n} "
            f"({fmt_count(count * n)} symbols > budget {SYMBOL_BUDGET}); lower n or the rates"
        )


class GaussianSuperpositionCodebook:
    """Broadcast codebooks C1, C2 and the nested uplink codebooks."""

    def __init__(self, sys: GaussianSystem, alpha: float, r1_id: float, r2_id: float,
                 r1_data: float, r2_data: float, n: int, epsilon: float, seed: int = rngmod.DEFAULT_SEED):
        if not 0 <= alpha <= 1:
            raise ValidationError(f"alpha must lie in [0, 1], got {alpha}")
        if n < 1:
            raise ValidationError(f"block length must be positive, got {n}")
        if not epsilon > 0:
            raise ValidationError(f"epsilon must be positive, got {epsilon}")
        self.sys, self.alpha, self.n, self.epsilon, self.seed = sys, float(alpha), n, float(epsilon), seed
        self.p1, self.p2 = alpha * sys.P, (1 - alpha) * sys.P
        self.var_x1 = self.p1 - epsilon / 2
        self.var_x2 = self.p2 - epsilon / 2
        self.var_q1 = sys.alpha1 * self.p1 - epsilon
        self.var_q2 = sys.alpha2 * self.p2 - epsilon
        for name, v in (("alpha P - eps/2", self.var_x1), ("(1 - alpha) P - eps/2", self.var_x2),
                        ("alpha1 alpha P - eps", self.var_q1), ("alpha2 (1 - alpha) P - eps", self.var_q2)):
            if v <= 0:
                raise ConfigurationError(f"codeword variance {name} = {v:.6g} is not positive")
        self.messages = (message_count(r1_id, n), message_count(r2_id, n))
        self.data_sizes = (message_count(r1_data, n), message_count(r2_data, n))
        _budget(self.messages[0], n, "broadcast codebook 1")
        _budget(self.messages[1], n, "broadcast codebook 2")
        _budget(self.data_sizes[0], n, "uplink codebook 1")
        _budget(self.data_sizes[1], n, "uplink codebook 2")
        if self.data_sizes[0] * self.data_sizes[1] > PAIR_CAP:
            raise ConfigurationError(
                f"uplink decoder would search {fmt_count(self.data_sizes[0])} x {fmt_count(self.data_sizes[1])} = "
                f"{fmt_count(self.data_sizes[0] * self.data_sizes[1])} pairs > cap {PAIR_CAP}"
            )
        g1 = rngmod.stream(seed, rngmod.GAUSS_BCC_BOOK, n, 1)
        g2 = rngmod.stream(seed, rngmod.GAUSS_BCC_BOOK, n, 2)
        self.c1 = math.sqrt(self.var_x1) * g1.standard_normal((self.messages[0], n))
        self.c2 = math.sqrt(self.var_x2) * g2.standard_normal((self.messages[1], n))
        self.c1_power = np.einsum("ij,ij->i", self.c1, self.c1) / n
        self.c2_power = np.einsum("ij,ij->i", self.c2, self.c2) / n
        self._mac = _Lru(64)

    # broadcast side
    def encode(self, w1: int, w2: int) -> np.ndarray | None:
        """x1(w1) + x2(w2), or None when the block power exceeds P."""
        for b, w in ((1, w1), (2, w2)):
            if not 1 <= w <= self.messages[b - 1]:
                raise ValidationError(f"message w{b}={w} outside 1..{self.messages[b - 1]}")
        x = self.c1[w1 - 1] + self.c2[w2 - 1]
        return None if float(x @ x) / self.n > self.sys.P else x

    def decode_unit2(self, y2, epsilon: float | None = None) -> int:
        eps = self.epsilon if epsilon is None else epsilon
        y = self._seq(y2)
        var_y = self.var_x1 + self.var_x2 + self.sys.N2
        return _unique(_check_pair_moments(self.c2, self.c2_power, y, self.var_x2, var_y, self.var_x2, eps))

    def decode_unit1(self, y1, epsilon: float | None = None) -> tuple[int, int]:
        """Successive decoding; returns (w1_hat, w2_hat)."""
        eps = self.epsilon if epsilon is None else epsilon
        y = self._seq(y1)
        var_y = self.var_x1 + self.var_x2 + self.sys.N1
        w2 = _unique(_check_pair_moments(self.c2, self.c2_power, y, self.var_x2, var_y, self.var_x2, eps))
        if w2 == 0:
            return 0, 0
        rest = y - self.c2[w2 - 1]
        var_r = self.var_x1 + self.sys.N1
        w1 = _unique(_check_pair_moments(self.c1, self.c1_power, rest, self.var_x1, var_r, self.var_x1, eps))
        return w1, w2

    def decode_unit2_ml(self, y2) -> int:
        y = self._seq(y2)
        return int(np.argmin(self.c2_power - 2 * (self.c2 @ y) / self.n)) + 1

    def decode_unit1_ml(self, y1) -> tuple[int, int]:
        y = self._seq(y1)
        w2 = int(np.argmin(self.c2_power - 2 * (self.c2 @ y) / self.n)) + 1
        rest = y - self.c2[w2 - 1]
        w1 = int(np.argmin(self.c1_power - 2 * (self.c1 @ rest) / self.n)) + 1
        return w1, w2

    # uplink side
    def mac_book(self, unit: int, w: int) -> tuple[np.ndarray, np.ndarray]:
        if unit not in (1, 2):
            raise ValidationError(f"unit must be 1 or 2, got {unit}")
        if not 1 <= w <= self.messages[unit - 1]:
            raise ValidationError(f"nested codebook index {w} outside 1..{self.messages[unit - 1]}")

        def make():
            g = rngmod.stream(self.seed, rngmod.MAC_BOOK, self.n, unit, w, 1)
            var = self.var_q1 if unit == 1 else self.var_q2
            book = math.sqrt(var) * g.standard_normal((self.data_sizes[unit - 1], self.n))
            return book, np.einsum("ij,ij->i", book, book) / self.n

        return self._mac.get_or((unit, w), make)

    def mac_encode(self, unit: int, w_hat: int, m: int) -> np.ndarray | None:
        """Codeword q(m) of nested book w_hat, or None when it breaks the unit's power limit."""
        if w_hat == 0:
            raise ValidationError("a unit that missed its broadcast message has no nested codebook")
        book, power = self.mac_book(unit, w_hat)
        if not 1 <= m <= book.shape[0]:
            raise ValidationError(f"uplink message {m} outside 1..{book.shape[0]}")
        limit = self.sys.alpha1 * self.p1 if unit == 1 else self.sys.alpha2 * self.p2
        return None if power[m - 1] > limit else book[m - 1]

    def mac_decode(self, w1: int, w2: int, s, epsilon: float | None = None) -> tuple[int, int]:
        """Unique pair (q1, q2) second-moment typical with s, from the books of the true (w1, w2)."""
        eps = self.epsilon if epsilon is None else epsilon
        s = self._seq(s)
        n = self.n
        b1, p1 = self.mac_book(1, w1)
        b2, p2 = self.mac_book(2, w2)
        v1, v2 = self.var_q1, self.var_q2
        vs = v1 + v2 + self.sys.N3
        ok1 = _check_pair_moments(b1, p1, s, v1, vs, v1, eps)
        ok2 = _check_pair_moments(b2, p2, s, v2, vs, v2, eps)
        i1, i2 = np.flatnonzero(ok1), np.flatnonzero(ok2)
        if i1.size == 0 or i2.size == 0:
            return 0, 0
        cross = b1[i1] @ b2[i2].T / n
        mask = np.abs(cross) <= eps * math.sqrt(v1 * v2)
        hits = np.argwhere(mask)
        if hits.shape[0] != 1:
            return 0, 0
        return int(i1[hits[0, 0]]) + 1, int(i2[hits[0, 1]]) + 1

    def mac_decode_ml(self, w1: int, w2: int, s) -> tuple[int, int]:
        s = self._seq(s)
        b1, p1 = self.mac_book(1, w1)
        b2, p2 = self.mac_book(2, w2)
        # ||s - q1 - q2||^2 up to a constant
        cost = (p1 - 2 * (b1 @ s) / self.n)[:, None] + (p2 - 2 * (b2 @ s) / self.n)[None, :] + 2 * (b1 @ b2.T) / self.n
        i, j = np.unravel_index(int(np.argmin(cost)), cost.shape)
        return int(i) + 1, int(j) + 1

    def _seq(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.n,):
            raise ValidationError(f"sequence must have length {self.n}, got shape {y.shape}")
        return y


def build_gaussian_codebook(sys, alpha, rates, n, epsilon, seed=rngmod.DEFAULT_SEED) -> GaussianSuperpositionCodebook:
    return GaussianSuperpositionCodebook(sys, alpha, *rates.as_tuple(), n, epsilon, seed)


def gaussian_bcc_encode(cb: GaussianSuperpositionCodebook, w1: int, w2: int):
    return cb.encode(w1, w2)


def gaussian_bcc_decode_unit1(cb: GaussianSuperpositionCodebook, y_seq, epsilon: float | None = None) -> int:
    return cb.decode_unit1(y_seq, epsilon)[0]


def gaussian_bcc_decode_unit2(cb: GaussianSuperpositionCodebook, y_seq, epsilon: float | None = None) -> int:
    return cb.decode_unit2(y_seq, epsilon)

