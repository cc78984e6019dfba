"""Rate regions: the discrete achievable region and the Gaussian capacity region.

Regions are open sets; every membership test uses strict inequalities with no
slack. All rates are in nats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import rng as rngmod
from .channels import BccChannel, GaussianSystem, ImperfectionChannel, MacChannel, induced_mac_joint
from .errors import ValidationError
from .prob import (
    JointPmf,
    Pmf,
    conditional_mutual_information,
    joint_mutual_information,
    mutual_information,
)


@dataclass(frozen=True)
class RateQuadruple:
    r1_id: float
    r2_id: float
    r1_data: float
    r2_data: float

    def __post_init__(self):
        for name in ("r1_id", "r2_id", "r1_data", "r2_data"):
            v = getattr(self, name)
            if not isinstance(v, (int, float, np.floating, np.integer)) or not math.isfinite(v) or v < 0:
                raise ValidationError(f"rate {name} must be a finite non-negative number, got {v!r}")
            object.__setattr__(self, name, float(v))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.r1_id, self.r2_id, self.r1_data, self.r2_data)

    def scaled(self, factor: float) -> "RateQuadruple":
        return RateQuadruple(*(factor * v for v in self.as_tuple()))

    def replace(self, **kw) -> "RateQuadruple":
        vals = dict(zip(("r1_id", "r2_id", "r1_data", "r2_data"), self.as_tuple()))
        vals.update(kw)
        return RateQuadruple(**vals)

    def dominates(self, other: "RateQuadruple") -> bool:
        a, b = self.as_tuple(), other.as_tuple()
        return all(x >= y for x, y in zip(a, b)) and a != b


class DiscreteBounds(NamedTuple):
    """The six right-hand sides of the discrete region, in nats."""

    id1: float  # I(U;Y1)
    id2: float  # I(V;Y2)
    id_sum: float  # I(U;Y1) + I(V;Y2) - I(U;V)
    data1: float  # I(Q1;S|Q2)
    data2: float  # I(Q2;S|Q1)
    data_sum: float  # I(Q1,Q2;S)


class GaussianBounds(NamedTuple):
    id1: float
    id2: float
    data1: float
    data2: float
    data_sum: float

    @property
    def id_sum(self) -> float:
        # no joint constraint on the broadcast side
        return self.id1 + self.id2


@dataclass(frozen=True)
class DiscreteSystem:
    """The three discrete channel stages of the cascade."""

    bcc: BccChannel
    imp1: ImperfectionChannel
    imp2: ImperfectionChannel
    mac: MacChannel

    def __post_init__(self):
        if (self.imp1.qhat_size, self.imp2.qhat_size) != (self.mac.qhat1_size, self.mac.qhat2_size):
            raise ValidationError(
                f"imperfection outputs ({self.imp1.qhat_size}, {self.imp2.qhat_size}) do not match "
                f"mac inputs ({self.mac.qhat1_size}, {self.mac.qhat2_size})"
            )


@dataclass(frozen=True, eq=False)
class DiscreteRegionWitness:
    p_uvx: JointPmf
    p_q1: Pmf
    p_q2: Pmf
    bounds: DiscreteBounds = field(default=None)


def broadcast_joints(p_uvx: JointPmf, bcc: BccChannel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """p(u, y1), p(v, y2) and p(u, v) induced by p(u,v,x) p(y1,y2|x)."""
    if p_uvx.rank != 3:
        raise ValidationError(f"p(u,v,x) must have rank 3, got {p_uvx.rank}")
    if p_uvx.dims[2] != bcc.x_size:
        raise ValidationError(f"p(u,v,x) has |X|={p_uvx.dims[2]} but the bcc expects {bcc.x_size}")
    p = p_uvx.probs
    p_uy1 = np.einsum("uvx,xab->ua", p, bcc.cond)
    p_vy2 = np.einsum("uvx,xab->vb", p, bcc.cond)
    return p_uy1, p_vy2, p.sum(axis=2)


def discrete_bounds(
    p_uvx: JointPmf,
    bcc: BccChannel,
    p_q1: Pmf,
    p_q2: Pmf,
    imp1: ImperfectionChannel,
    imp2: ImperfectionChannel,
    mac: MacChannel,
) -> DiscreteBounds:
    p_uy1, p_vy2, p_uv = broadcast_joints(p_uvx, bcc)
    i_u = mutual_information(JointPmf(p_uy1))
    i_v = mutual_information(JointPmf(p_vy2))
    i_uv = mutual_information(JointPmf(p_uv))
    j = induced_mac_joint(p_q1, p_q2, imp1, imp2, mac)
    return DiscreteBounds(
        id1=i_u,
        id2=i_v,
        id_sum=i_u + i_v - i_uv,
        data1=conditional_mutual_information(j, conditioning_axis=1),
        data2=conditional_mutual_information(j, conditioning_axis=0),
        data_sum=joint_mutual_information(j, target_axis=2),
    )


def system_bounds(system: DiscreteSystem, p_uvx: JointPmf, p_q1: Pmf, p_q2: Pmf) -> DiscreteBounds:
    return discrete_bounds(p_uvx, system.bcc, p_q1, p_q2, system.imp1, system.imp2, system.mac)


def within_bounds(r: RateQuadruple, b: DiscreteBounds | GaussianBounds) -> bool:
    """All strict inequalities of the region for fixed bounds."""
    return (
        r.r1_id < b.id1
        and r.r2_id < b.id2
        and r.r1_id + r.r2_id < b.id_sum
        and r.r1_data < b.data1
        and r.r2_data < b.data2
        and r.r1_data + r.r2_data < b.data_sum
    )


def discrete_membership(
    r: RateQuadruple, system: DiscreteSystem, p_uvx: JointPmf, p_q1: Pmf, p_q2: Pmf
) -> bool:
    return within_bounds(r, system_bounds(system, p_uvx, p_q1, p_q2))


def _pentagon_corner(b1: float, b2: float, bsum: float, w1: float, w2: float) -> tuple[float, float]:
    """Vertex of {0 <= r, r_i <= b_i, r1 + r2 <= bsum} maximising w1 r1 + w2 r2."""
    b1, b2, bsum = max(b1, 0.0), max(b2, 0.0), max(bsum, 0.0)
    if w1 >= w2:
        r1 = min(b1, bsum)
        return r1, min(b2, bsum - r1)
    r2 = min(b2, bsum)
    return min(b1, bsum - r2), r2


def corner_point(b: DiscreteBounds | GaussianBounds, weights: Sequence[float]) -> RateQuadruple:
    r1, r2 = _pentagon_corner(b.id1, b.id2, b.id_sum, weights[0], weights[1])
    d1, d2 = _pentagon_corner(b.data1, b.data2, b.data_sum, weights[2], weights[3])
    return RateQuadruple(r1, r2, d1, d2)


def inner_point(b: DiscreteBounds | GaussianBounds, scale: float) -> RateQuadruple:
    """``scale`` times a boundary point of the region.

    Each rate starts at ``scale`` times its individual bound; when a pair
    breaks the scaled sum bound both rates of the pair shrink in proportion.
    """

    def pair(b1, b2, bsum):
        r1, r2 = scale * max(b1, 0.0), scale * max(b2, 0.0)
        cap = scale * max(bsum, 0.0)
        if r1 + r2 > cap:
            f = cap / (r1 + r2)
            r1, r2 = r1 * f, r2 * f
        return r1, r2

    r1, r2 = pair(b.id1, b.id2, b.id_sum)
    d1, d2 = pair(b.data1, b.data2, b.data_sum)
    return RateQuadruple(r1, r2, d1, d2)


def pareto_filter(points: list) -> list:
    """Drop points whose quadruple is dominated; input order is not significant."""
    ordered = sorted(points, key=lambda p: tuple(-v for v in p[0].as_tuple()))
    kept = []
    for cand in ordered:
        if any(k[0].dominates(cand[0]) or k[0].as_tuple() == cand[0].as_tuple() for k in kept):
            continue
        kept.append(cand)
    return kept


# coordinate-ascent evaluations spent on each random restart
EVALS_PER_RESTART = 48
# relative shrink that moves a vertex strictly inside the open region
INTERIOR_SHRINK = 1e-9


def _move_mass(p: np.ndarray, rng: np.random.Generator, step: float) -> np.ndarray:
    flat = p.ravel()
    i, j = rng.choice(flat.size, size=2, replace=False)
    t = rng.uniform(-flat[i], flat[j]) * step
    out = flat.copy()
    out[i] += t
    out[j] -= t
    out = np.clip(out, 0.0, None)
    return (out / out.sum()).reshape(p.shape)


def discrete_frontier_search(
    system: DiscreteSystem,
    aux_cards: tuple[int, int] | None = None,
    budget: int = 512,
    seed: int = rngmod.DEFAULT_SEED,
) -> list[tuple[RateQuadruple, DiscreteRegionWitness]]:
    """Random-restart coordinate ascent over the input simplices.

    Each restart draws a random weight vector over the four rates and climbs
    the weighted rate of the best vertex of the region for its witness. The
    returned points all lie strictly inside their witness's region and no
    returned point dominates another. There is no claim of global optimality.
    """
    if budget < 1:
        raise ValidationError(f"budget must be >= 1, got {budget}")
    x_size = system.bcc.x_size
    u_size, v_size = aux_cards if aux_cards is not None else (x_size, x_size)
    if u_size < 1 or v_size < 1:
        raise ValidationError(f"auxiliary cardinalities must be positive, got {aux_cards}")
    q1_size, q2_size = system.imp1.q_size, system.imp2.q_size
    shape = (u_size, v_size, x_size)

    def evaluate(params, weights):
        # witnesses with a non-empty (strict) region rank above all others
        p_uvx, p_q1, p_q2 = params
        b = system_bounds(system, JointPmf(p_uvx), Pmf(p_q1), Pmf(p_q2))
        return (min(b) > 0, float(np.dot(weights, corner_point(b, weights).as_tuple()))), b

    points = []
    remaining = budget
    restart = 0
    while remaining > 0:
        evals = min(EVALS_PER_RESTART, remaining)
        remaining -= evals
        g = rngmod.stream(seed, rngmod.SEARCH, restart)
        restart += 1
        weights = g.dirichlet(np.ones(4))
        # start from independent U and V: I(U;V) = 0 keeps the ID sum bound positive
        p_u, p_v = g.dirichlet(np.ones(u_size)), g.dirichlet(np.ones(v_size))
        x_given = g.dirichlet(np.ones(x_size), size=(u_size, v_size))
        params = [
            p_u[:, None, None] * p_v[None, :, None] * x_given,
            g.dirichlet(np.ones(q1_size)),
            g.dirichlet(np.ones(q2_size)),
        ]
        best, bounds = evaluate(params, weights)
        step = 1.0
        for _ in range(evals - 1):
            block = int(g.integers(3))
            if params[block].size < 2:
                continue
            trial = list(params)
            trial[block] = _move_mass(params[block], g, step)
            val, b = evaluate(trial, weights)
            if val > best:
                params, best, bounds = trial, val, b
            else:
                step = max(step * 0.7, 0.05)
        witness = DiscreteRegionWitness(JointPmf(params[0]), Pmf(params[1]), Pmf(params[2]), bounds)
        r = corner_point(bounds, weights).scaled(1.0 - INTERIOR_SHRINK)
        if within_bounds(r, bounds):
            points.append((r, witness))
    return pareto_filter(points)


def gaussian_bounds(sys: GaussianSystem, alpha: float) -> GaussianBounds:
    if not 0.0 <= alpha <= 1.0:
        raise ValidationError(f"alpha must lie in [0, 1], got {alpha}")
    P, a = sys.P, float(alpha)
    return GaussianBounds(
        id1=0.5 * math.log1p(a * P / sys.N1),
        id2=0.5 * math.log1p((1.0 - a) * P / (sys.N2 + a * P)),
        data1=0.5 * math.log1p(a * sys.alpha1 * P / sys.N3),
        data2=0.5 * math.log1p((1.0 - a) * sys.alpha2 * P / sys.N3),
        data_sum=0.5 * math.log1p((a * sys.alpha1 * P + (1.0 - a) * sys.alpha2 * P) / sys.N3),
    )


@dataclass(frozen=True)
class AlphaInterval:
    """Set of power splits alpha in [0, 1]; open or closed at each end."""

    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True

    @classmethod
    def empty(cls) -> "AlphaInterval":
        return cls(1.0, 0.0, False, False)

    @property
    def is_empty(self) -> bool:
        if self.lo > self.hi:
            return True
        return self.lo == self.hi and not (self.lo_closed and self.hi_closed)

    @property
    def width(self) -> float:
        return 0.0 if self.is_empty else self.hi - self.lo

    def __contains__(self, alpha: float) -> bool:
        if self.is_empty:
            return False
        above = alpha >= self.lo if self.lo_closed else alpha > self.lo
        below = alpha <= self.hi if self.hi_closed else alpha < self.hi
        return above and below

    def __bool__(self) -> bool:
        return not self.is_empty


def gaussian_membership(r: RateQuadruple, sys: GaussianSystem) -> AlphaInterval:
    """All alpha for which ``r`` satisfies the five strict bounds.

    Each bound is monotone in alpha, so each inverts to an open half-line;
    the answer is their intersection with [0, 1].
    """
    P, N1, N2, N3 = sys.P, sys.N1, sys.N2, sys.N3
    a1, a2 = sys.alpha1, sys.alpha2
    lo, lo_closed = 0.0, True
    hi, hi_closed = 1.0, True

    def above(t):  # alpha > t
        nonlocal lo, lo_closed
        if t > lo or (t == lo and lo_closed):
            lo, lo_closed = t, False

    def below(t):  # alpha < t
        nonlocal hi, hi_closed
        if t < hi or (t == hi and hi_closed):
            hi, hi_closed = t, False

    def never():
        below(-math.inf)

    g = lambda rate: math.expm1(2.0 * rate)  # noqa: E731  (1 + snr > e^{2r}  <=>  snr > g)

    above(N1 * g(r.r1_id) / P)
    below(((N2 + P) * math.exp(-2.0 * r.r2_id) - N2) / P)
    if a1 > 0:
        above(N3 * g(r.r1_data) / (a1 * P))
    else:
        never()
    if a2 > 0:
        below(1.0 - N3 * g(r.r2_data) / (a2 * P))
    else:
        never()
    # a (a1 - a2) P + a2 P > N3 g
    slope = (a1 - a2) * P
    rhs = N3 * g(r.r1_data + r.r2_data) - a2 * P
    if slope > 0:
        above(rhs / slope)
    elif slope < 0:
        below(rhs / slope)
    elif not 0 > rhs:
        never()

    if lo > hi or (lo == hi and not (lo_closed and hi_closed)):
        return AlphaInterval.empty()
    # A point on the boundary can invert to an interval one ulp wide; confirm
    # with a forward evaluation so that boundary points stay outside.
    b = gaussian_bounds(sys, min(1.0, max(0.0, 0.5 * (lo + hi))))
    if not (r.r1_id < b.id1 and r.r2_id < b.id2 and r.r1_data < b.data1 and r.r2_data < b.data2
            and r.r1_data + r.r2_data < b.data_sum):
        return AlphaInterval.empty()
    return AlphaInterval(lo, hi, lo_closed, hi_closed)


def gaussian_frontier(sys: GaussianSystem, alpha_grid_size: int) -> list[tuple[float, GaussianBounds]]:
    if alpha_grid_size < 2:
        raise ValidationError(f"alpha grid needs at least 2 points, got {alpha_grid_size}")
    return [(float(a), gaussian_bounds(sys, float(a))) for a in np.linspace(0.0, 1.0, alpha_grid_size)]
