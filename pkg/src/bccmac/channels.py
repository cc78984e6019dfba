"""Discrete channels of the cascade, the Gaussian system, and their samplers."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .prob import MASS_TOL, JointPmf, Pmf


def _conditional(cond, n_inputs: int, what: str) -> np.ndarray:
    """Validate a conditional table whose first ``n_inputs`` axes are inputs."""
    arr = np.array(cond, dtype=float)
    if arr.ndim <= n_inputs:
        raise ValidationError(f"{what}: expected more than {n_inputs} axes, got shape {arr.shape}")
    if arr.size == 0 or not np.all(np.isfinite(arr)):
        raise ValidationError(f"{what}: empty or non-finite table")
    if np.any(arr < 0):
        raise ValidationError(f"{what}: negative transition probability")
    sums = arr.reshape(arr.shape[:n_inputs] + (-1,)).sum(axis=-1)
    bad = np.argwhere(np.abs(sums - 1.0) > MASS_TOL)
    if bad.size:
        idx = tuple(int(i) for i in bad[0])
        raise ValidationError(f"{what}: row {idx} sums to {sums[idx]!r}, expected 1")
    arr.setflags(write=False)
    return arr


def symmetric_matrix(size: int, crossover: float) -> np.ndarray:
    """q-ary symmetric channel: keep w.p. 1-p, else uniform over the other symbols."""
    if not 0 <= crossover <= 1:
        raise ValidationError(f"crossover {crossover} outside [0, 1]")
    if size == 1:
        return np.ones((1, 1))
    m = np.full((size, size), crossover / (size - 1))
    np.fill_diagonal(m, 1.0 - crossover)
    return m


@dataclass(frozen=True, eq=False)
class BccChannel:
    """p(y1, y2 | x), indexed ``cond[x, y1, y2]``."""

    cond: np.ndarray

    def __post_init__(self):
        arr = _conditional(self.cond, 1, "bcc")
        if arr.ndim != 3:
            raise ValidationError(f"bcc: expected shape (x, y1, y2), got {arr.shape}")
        object.__setattr__(self, "cond", arr)

    @property
    def x_size(self) -> int:
        return self.cond.shape[0]

    @property
    def y1_size(self) -> int:
        return self.cond.shape[1]

    @property
    def y2_size(self) -> int:
        return self.cond.shape[2]

    @classmethod
    def independent(cls, branch1, branch2) -> "BccChannel":
        """Two branches p(y1|x), p(y2|x) that are conditionally independent given x."""
        b1 = np.asarray(branch1, dtype=float)
        b2 = np.asarray(branch2, dtype=float)
        return cls(b1[:, :, None] * b2[:, None, :])

    @classmethod
    def bsc_pair(cls, p1: float, p2: float) -> "BccChannel":
        return cls.independent(symmetric_matrix(2, p1), symmetric_matrix(2, p2))

    def branch(self, which: int) -> np.ndarray:
        """Marginal conditional p(y_which | x)."""
        if which == 1:
            return self.cond.sum(axis=2)
        if which == 2:
            return self.cond.sum(axis=1)
        raise ValidationError(f"branch must be 1 or 2, got {which}")


@dataclass(frozen=True, eq=False)
class ImperfectionChannel:
    """p(qhat | q), indexed ``cond[q, qhat]``. Rectangular tables are allowed."""

    cond: np.ndarray

    def __post_init__(self):
        arr = _conditional(self.cond, 1, "imperfection")
        if arr.ndim != 2:
            raise ValidationError(f"imperfection: expected shape (q, qhat), got {arr.shape}")
        object.__setattr__(self, "cond", arr)

    @property
    def q_size(self) -> int:
        return self.cond.shape[0]

    @property
    def qhat_size(self) -> int:
        return self.cond.shape[1]

    @classmethod
    def identity(cls, size: int) -> "ImperfectionChannel":
        return cls(np.eye(size))

    @classmethod
    def symmetric(cls, size: int, crossover: float) -> "ImperfectionChannel":
        return cls(symmetric_matrix(size, crossover))


@dataclass(frozen=True, eq=False)
class MacChannel:
    """p(s | qhat1, qhat2), indexed ``cond[qhat1, qhat2, s]``."""

    cond: np.ndarray

    def __post_init__(self):
        arr = _conditional(self.cond, 2, "mac")
        if arr.ndim != 3:
            raise ValidationError(f"mac: expected shape (qhat1, qhat2, s), got {arr.shape}")
        object.__setattr__(self, "cond", arr)

    @property
    def qhat1_size(self) -> int:
        return self.cond.shape[0]

    @property
    def qhat2_size(self) -> int:
        return self.cond.shape[1]

    @property
    def s_size(self) -> int:
        return self.cond.shape[2]

    @classmethod
    def deterministic(cls, fn, sizes: tuple[int, int], s_size: int) -> "MacChannel":
        cond = np.zeros((sizes[0], sizes[1], s_size))
        for a in range(sizes[0]):
            for b in range(sizes[1]):
                cond[a, b, fn(a, b)] = 1.0
        return cls(cond)

    @classmethod
    def adder(cls, size1: int = 2, size2: int = 2) -> "MacChannel":
        return cls.deterministic(lambda a, b: a + b, (size1, size2), size1 + size2 - 1)

    @classmethod
    def xor(cls) -> "MacChannel":
        return cls.deterministic(lambda a, b: a ^ b, (2, 2), 2)

    @classmethod
    def xor_erasure(cls, erasure: float) -> "MacChannel":
        """Binary XOR observed through an erasure channel; symbol 2 is the erasure."""
        if not 0 <= erasure <= 1:
            raise ValidationError(f"erasure probability {erasure} outside [0, 1]")
        cond = np.zeros((2, 2, 3))
        for a in range(2):
            for b in range(2):
                cond[a, b, a ^ b] = 1.0 - erasure
                cond[a, b, 2] = erasure
        return cls(cond)


@dataclass(frozen=True)
class GaussianSystem:
    """Power and noise parameters of the Gaussian cascade.

    ``P`` is the transceiver power, ``N1 < N2`` the broadcast noise variances,
    ``N3`` the uplink noise variance and ``alpha1``, ``alpha2`` the fractions
    of received power each mobile unit can spend on its uplink codeword.
    """

    P: float
    N1: float
    N2: float
    N3: float
    alpha1: float
    alpha2: float
    allow_alpha_one: bool = False

    def __post_init__(self):
        for name in ("P", "N1", "N2", "N3", "alpha1", "alpha2"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise ValidationError(f"gaussian system: {name} must be a finite number, got {v!r}")
            object.__setattr__(self, name, float(v))
        for name in ("P", "N1", "N2", "N3"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"gaussian system: {name} must be positive")
        if not self.N1 < self.N2:
            raise ValidationError(f"gaussian system: need N1 < N2, got N1={self.N1}, N2={self.N2}")
        top = 1.0 if self.allow_alpha_one else None
        for name in ("alpha1", "alpha2"):
            a = getattr(self, name)
            ok = 0 <= a <= 1 if top else 0 <= a < 1
            if not ok:
                rng = "[0, 1]" if top else "[0, 1) (pass allow_alpha_one for 1)"
                raise ValidationError(f"gaussian system: {name}={a} outside {rng}")

    def as_dict(self) -> dict:
        return {
            "P": self.P, "N1": self.N1, "N2": self.N2, "N3": self.N3,
            "alpha1": self.alpha1, "alpha2": self.alpha2,
        }


def induced_mac_joint(
    p_q1: Pmf,
    p_q2: Pmf,
    imp1: ImperfectionChannel,
    imp2: ImperfectionChannel,
    mac: MacChannel,
) -> JointPmf:
    """p(q1, q2, s) = sum over qhat of p(s|qhat1,qhat2) p(qhat1|q1) p(qhat2|q2) p(q1) p(q2)."""
    if imp1.q_size != p_q1.alphabet_size or imp2.q_size != p_q2.alphabet_size:
        raise ValidationError(
            f"imperfection inputs ({imp1.q_size}, {imp2.q_size}) do not match "
            f"codeword alphabets ({p_q1.alphabet_size}, {p_q2.alphabet_size})"
        )
    if (imp1.qhat_size, imp2.qhat_size) != (mac.qhat1_size, mac.qhat2_size):
        raise ValidationError(
            f"imperfection outputs ({imp1.qhat_size}, {imp2.qhat_size}) do not match "
            f"mac inputs ({mac.qhat1_size}, {mac.qhat2_size})"
        )
    joint = np.einsum("a,b,ac,bd,cds->abs", p_q1.probs, p_q2.probs, imp1.cond, imp2.cond, mac.cond)
    return JointPmf(joint)


def _check_symbols(seq, size: int, what: str) -> np.ndarray:
    arr = np.asarray(seq)
    if arr.ndim != 1:
        raise ValidationError(f"{what}: expected a one-dimensional sequence")
    if arr.size and (not np.issubdtype(arr.dtype, np.integer) or arr.min() < 0 or arr.max() >= size):
        raise ValidationError(f"{what}: symbol outside alphabet of size {size}")
    return arr.astype(np.int64, copy=False)


def _draw(rows: np.ndarray, inputs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One draw per position from ``rows[inputs[k]]`` (inverse-CDF)."""
    cdf = np.cumsum(rows, axis=1)
    u = rng.random(inputs.shape[0])
    out = (u[:, None] >= cdf[inputs]).sum(axis=1)
    return np.minimum(out, rows.shape[1] - 1)


def sample_bcc(ch: BccChannel, x_seq, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    x = _check_symbols(x_seq, ch.x_size, "sample_bcc")
    flat = ch.cond.reshape(ch.x_size, -1)
    joint = _draw(flat, x, rng)
    return joint // ch.y2_size, joint % ch.y2_size


def sample_imperfection(ch: ImperfectionChannel, q_seq, rng: np.random.Generator) -> np.ndarray:
    q = _check_symbols(q_seq, ch.q_size, "sample_imperfection")
    return _draw(ch.cond, q, rng)


def sample_mac(ch: MacChannel, qhat1_seq, qhat2_seq, rng: np.random.Generator) -> np.ndarray:
    a = _check_symbols(qhat1_seq, ch.qhat1_size, "sample_mac")
    b = _check_symbols(qhat2_seq, ch.qhat2_size, "sample_mac")
    if a.shape != b.shape:
        raise ValidationError("sample_mac: input sequences differ in length")
    flat = ch.cond.reshape(-1, ch.s_size)
    return _draw(flat, a * ch.qhat2_size + b, rng)


def sample_gaussian_bcc(sys: GaussianSystem, x_seq, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Y1 = x + Z1, Y2 = x + Z2 with independent Z1 ~ N(0, N1), Z2 ~ N(0, N2)."""
    x = np.asarray(x_seq, dtype=float)
    z = rng.standard_normal((2,) + x.shape)
    return x + math.sqrt(sys.N1) * z[0], x + math.sqrt(sys.N2) * z[1]


def sample_gaussian_mac(sys: GaussianSystem, q1_seq, q2_seq, rng: np.random.Generator) -> np.ndarray:
    """S = q1 + q2 + Z3 with Z3 ~ N(0, N3)."""
    q1 = np.asarray(q1_seq, dtype=float)
    q2 = np.asarray(q2_seq, dtype=float)
    if q1.shape != q2.shape:
        raise ValidationError("sample_gaussian_mac: input sequences differ in length")
    return q1 + q2 + math.sqrt(sys.N3) * rng.standard_normal(q1.shape)


def sample_gaussian_links(sys: GaussianSystem, inputs, rng: np.random.Generator):
    """Noisy outputs of either stage: ``x`` gives (y1, y2); ``(q1, q2)`` gives s."""
    if isinstance(inputs, tuple):
        return sample_gaussian_mac(sys, inputs[0], inputs[1], rng)
    return sample_gaussian_bcc(sys, inputs, rng)
