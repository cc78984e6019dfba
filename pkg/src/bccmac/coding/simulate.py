"""Monte Carlo estimates of broadcast, uplink and overall error rates.

Each trial draws (w1, w2) and (m1, m2) uniformly, runs the broadcast stage,
and runs the uplink only when both units decoded their broadcast message.
Uplink errors are therefore tallied conditionally on broadcast success, so
``overall = 1 - (1 - lambda_bcc)(1 - lambda_mac)`` holds for the estimates.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from .. import rng as rngmod
from ..channels import (
    GaussianSystem,
    induced_mac_joint,
    sample_bcc,
    sample_gaussian_bcc,
    sample_gaussian_mac,
    sample_imperfection,
    sample_mac,
)
from ..errors import ValidationError
from ..prob import JointPmf, Pmf
from ..regions import DiscreteSystem, RateQuadruple
from . import discrete as dc
from .gaussian import GaussianSuperpositionCodebook

DISCRETE_EPSILON = 0.1
GAUSSIAN_EPSILON = 0.2


@dataclass(frozen=True)
class DiscreteSimConfig:
    system: DiscreteSystem
    p_uvx: JointPmf
    p_q1: Pmf
    p_q2: Pmf
    rates: RateQuadruple
    epsilon: float = DISCRETE_EPSILON
    ml_decoder: bool = False
    # uplink typicality slack; defaults to ``epsilon``
    mac_epsilon: float | None = None


@dataclass(frozen=True)
class GaussianSimConfig:
    system: GaussianSystem
    alpha: float
    rates: RateQuadruple
    epsilon: float = GAUSSIAN_EPSILON
    ml_decoder: bool = False
    mac_epsilon: float | None = None


def wilson(k: int, n: int) -> tuple[float, float]:
    if n == 0:
        return (math.nan, math.nan)
    lo, hi = proportion_confint(k, n, alpha=0.05, method="wilson")
    return float(lo), float(hi)


@dataclass
class SimResult:
    """Error tallies of one Monte Carlo run with Wilson 95% intervals."""

    n: int
    trials: int
    bcc_errors: int = 0
    mac_trials: int = 0
    mac_errors: int = 0
    events: dict = field(default_factory=lambda: {
        "bcc_encode_failure": 0, "bcc_miss": 0, "bcc_wrong": 0,
        "mac_encode_failure": 0, "mac_miss": 0, "mac_wrong": 0,
    })

    @property
    def overall_errors(self) -> int:
        return self.bcc_errors + self.mac_errors

    @property
    def lambda_bcc(self) -> float:
        return self.bcc_errors / self.trials

    @property
    def lambda_mac(self) -> float:
        return self.mac_errors / self.mac_trials if self.mac_trials else math.nan

    @property
    def lambda_overall(self) -> float:
        return self.overall_errors / self.trials

    @property
    def ci_bcc(self):
        return wilson(self.bcc_errors, self.trials)

    @property
    def ci_mac(self):
        return wilson(self.mac_errors, self.mac_trials)

    @property
    def ci_overall(self):
        return wilson(self.overall_errors, self.trials)

    @property
    def lambda_composed(self) -> float:
        lm = self.lambda_mac if self.mac_trials else 0.0
        return 1.0 - (1.0 - self.lambda_bcc) * (1.0 - lm)

    @property
    def composition_sigma(self) -> float:
        p = self.lambda_overall
        return math.sqrt(max(p * (1 - p), 0.25 / self.trials) / self.trials)

    @property
    def composition_residual(self) -> float:
        return self.lambda_overall - self.lambda_composed

    def as_dict(self) -> dict:
        out = asdict(self)
        out.update(
            overall_errors=self.overall_errors,
            lambda_bcc=self.lambda_bcc, lambda_mac=self.lambda_mac, lambda_overall=self.lambda_overall,
            ci_bcc=list(self.ci_bcc), ci_mac=list(self.ci_mac), ci_overall=list(self.ci_overall),
            lambda_composed=self.lambda_composed, composition_residual=self.composition_residual,
        )
        return out


def _check_run(n: int, trials: int):
    if not isinstance(trials, (int, np.integer)) or trials < 1:
        raise ValidationError(f"trials must be a positive integer, got {trials!r}")
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n!r}")


def _draw_messages(g: np.random.Generator, sizes) -> list[int]:
    return [int(g.integers(1, s + 1)) for s in sizes]


def _tally_bcc(res: SimResult, sent, got) -> bool:
    if tuple(got) == tuple(sent):
        return True
    res.bcc_errors += 1
    res.events["bcc_miss" if 0 in got else "bcc_wrong"] += 1
    return False


def _tally_mac(res: SimResult, sent, got):
    res.mac_trials += 1
    if tuple(got) != tuple(sent):
        res.mac_errors += 1
        res.events["mac_miss" if got == (0, 0) else "mac_wrong"] += 1


def simulate_discrete(cfg: DiscreteSimConfig, n: int, trials: int, seed: int = rngmod.DEFAULT_SEED) -> SimResult:
    _check_run(n, trials)
    sys, r = cfg.system, cfg.rates
    cb = dc.build_discrete_bcc_codebook(cfg.p_uvx, sys.bcc, r.r1_id, r.r2_id, n, cfg.epsilon, seed)
    c1, c2 = dc.build_nested_mac_codebooks(cfg.p_q1, cfg.p_q2, r.r1_data, r.r2_data, cb.messages, n, seed)
    ref = induced_mac_joint(cfg.p_q1, cfg.p_q2, sys.imp1, sys.imp2, sys.mac)
    res = SimResult(n=n, trials=trials)
    for t in range(trials):
        g = rngmod.stream(seed, rngmod.TRIAL, n, t)
        w1, w2, m1, m2 = _draw_messages(g, (*cb.messages, c1.size, c2.size))
        enc = cb.encode(w1, w2)
        if enc.x is None:
            res.bcc_errors += 1
            res.events["bcc_encode_failure"] += 1
            continue
        y1, y2 = sample_bcc(sys.bcc, enc.x, g)
        decode = cb.decode_ml if cfg.ml_decoder else cb.decode
        if not _tally_bcc(res, (w1, w2), (decode(1, y1), decode(2, y2))):
            continue
        q1, q2 = dc.mac_encode(c1, w1, m1), dc.mac_encode(c2, w2, m2)
        s = sample_mac(sys.mac, sample_imperfection(sys.imp1, q1, g), sample_imperfection(sys.imp2, q2, g), g)
        if cfg.ml_decoder:
            got = dc.mac_decode_ml(c1, c2, w1, w2, s, ref)
        else:
            got = dc.mac_decode(c1, c2, w1, w2, s, ref, cfg.epsilon if cfg.mac_epsilon is None else cfg.mac_epsilon)
        _tally_mac(res, (m1, m2), got)
    return res


def simulate_gaussian(cfg: GaussianSimConfig, n: int, trials: int, seed: int = rngmod.DEFAULT_SEED) -> SimResult:
    _check_run(n, trials)
    sys = cfg.system
    cb = GaussianSuperpositionCodebook(sys, cfg.alpha, *cfg.rates.as_tuple(), n, cfg.epsilon, seed)
    res = SimResult(n=n, trials=trials)
    for t in range(trials):
        g = rngmod.stream(seed, rngmod.TRIAL, n, t)
        w1, w2, m1, m2 = _draw_messages(g, (*cb.messages, *cb.data_sizes))
        x = cb.encode(w1, w2)
        if x is None:
            res.bcc_errors += 1
            res.events["bcc_encode_failure"] += 1
            continue
        y1, y2 = sample_gaussian_bcc(sys, x, g)
        if cfg.ml_decoder:
            got = (cb.decode_unit1_ml(y1)[0], cb.decode_unit2_ml(y2))
        else:
            got = (cb.decode_unit1(y1)[0], cb.decode_unit2(y2))
        if not _tally_bcc(res, (w1, w2), got):
            continue
        q1, q2 = cb.mac_encode(1, w1, m1), cb.mac_encode(2, w2, m2)
        if q1 is None or q2 is None:
            res.mac_trials += 1
            res.mac_errors += 1
            res.events["mac_encode_failure"] += 1
            continue
        s = sample_gaussian_mac(sys, q1, q2, g)
        got = cb.mac_decode_ml(w1, w2, s) if cfg.ml_decoder else cb.mac_decode(w1, w2, s, cfg.mac_epsilon)
        _tally_mac(res, (m1, m2), got)
    return res


def estimate_error_rates(cfg, n: int, trials: int, seed: int = rngmod.DEFAULT_SEED) -> SimResult:
    """Dispatch on the configuration type."""
    if isinstance(cfg, DiscreteSimConfig):
        return simulate_discrete(cfg, n, trials, seed)
    if isinstance(cfg, GaussianSimConfig):
        return simulate_gaussian(cfg, n, trials, seed)
    raise ValidationError(f"unsupported configuration type {type(cfg).__name__}")
