"""Acceptance criteria 1-11.

Each test records a PASS/FAIL line (collected by the summary hook in
conftest.py) and then asserts. Run standalone with
``python tests/test_acceptance.py`` or through pytest.
"""
import functools
import itertools
import math
import time
from pathlib import Path

import mpmath
import numpy as np
import pytest

from bccmac import records
from bccmac.channels import (
    BccChannel,
    GaussianSystem,
    ImperfectionChannel,
    MacChannel,
    induced_mac_joint,
)
from bccmac.cli import main
from bccmac.coding.simulate import DiscreteSimConfig, GaussianSimConfig, estimate_error_rates
from bccmac.errors import ConfigurationError
from bccmac.prob import (
    JointPmf,
    Pmf,
    conditional_mutual_information,
    joint_mutual_information,
    marginalize,
    mutual_information,
)
from bccmac.regions import (
    DiscreteSystem,
    RateQuadruple,
    discrete_frontier_search,
    discrete_membership,
    gaussian_bounds,
    gaussian_frontier,
    gaussian_membership,
    inner_point,
    system_bounds,
)
from bccmac.rfid import max_tag_count, tdma_limit_report, universal_limit_report
from bccmac.specfile import load_spec

CONFIGS = Path(__file__).parents[1] / "configs"
SEED = 20100101
RESULTS: dict[int, tuple[bool, str]] = {}

mpmath.mp.dps = 40


def record(k: int, ok: bool, detail: str):
    RESULTS[k] = (bool(ok), detail)
    print(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def random_gaussian(rng) -> GaussianSystem:
    n1 = rng.uniform(0.1, 5)
    return GaussianSystem(rng.uniform(0.5, 50), n1, n1 + rng.uniform(0.05, 5), rng.uniform(0.1, 10),
                          rng.uniform(0, 0.99), rng.uniform(0, 0.99))


def random_cond(rng, shape, k):
    t = rng.random(shape) ** 2 + 1e-3
    f = t.reshape(shape[:k] + (-1,))
    return (f / f.sum(-1, keepdims=True)).reshape(shape)


def random_discrete(rng) -> DiscreteSystem:
    x, y, q, s = (int(v) for v in rng.integers(2, 4, size=4))
    return DiscreteSystem(BccChannel(random_cond(rng, (x, y, y), 1)), ImperfectionChannel(random_cond(rng, (q, q), 1)),
                          ImperfectionChannel(random_cond(rng, (q, q), 1)), MacChannel(random_cond(rng, (q, q, s), 2)))


# 1 -----------------------------------------------------------------------------

def sweep_interval(r: RateQuadruple, s: GaussianSystem, alphas: np.ndarray) -> np.ndarray:
    """Brute-force alpha sweep with the five bounds written out directly."""
    P = s.P
    ok = (
        (r.r1_id < 0.5 * np.log1p(alphas * P / s.N1))
        & (r.r2_id < 0.5 * np.log1p((1 - alphas) * P / (s.N2 + alphas * P)))
        & (r.r1_data < 0.5 * np.log1p(alphas * s.alpha1 * P / s.N3))
        & (r.r2_data < 0.5 * np.log1p((1 - alphas) * s.alpha2 * P / s.N3))
        & (r.r1_data + r.r2_data < 0.5 * np.log1p((alphas * s.alpha1 + (1 - alphas) * s.alpha2) * P / s.N3))
    )
    return alphas[ok]


def test_criterion_01_gaussian_oracle():
    rng = np.random.default_rng(SEED + 1)
    alphas = np.linspace(0.0, 1.0, 100_001)  # step 1e-5
    step = 1e-5
    hard = skipped = members = 0
    t0 = time.perf_counter()
    for _ in range(1000):
        s = random_gaussian(rng)
        b = gaussian_bounds(s, rng.uniform(0, 1))
        r = RateQuadruple(*(v * rng.uniform(0.3, 1.3) for v in (b.id1, b.id2, b.data1, b.data2)))
        iv = gaussian_membership(r, s)
        grid = sweep_interval(r, s, alphas)
        if not iv.is_empty and iv.width < 2e-5:
            skipped += 1
            continue
        if bool(iv) != (grid.size > 0):
            # an interval narrower than the sweep step may fall between grid points
            hard += 1
            continue
        if grid.size:
            members += 1
            if grid.min() < iv.lo - 1e-12 or grid.max() > iv.hi + 1e-12 or grid.min() > iv.lo + step or grid.max() < iv.hi - step:
                hard += 1
    elapsed = time.perf_counter() - t0
    record(1, hard == 0 and elapsed < 10,
           f"{hard} hard disagreements / 1000 ({members} members, {skipped} narrow); {elapsed:.1f} s")


# 2 -----------------------------------------------------------------------------

def test_criterion_02_spot_values():
    half_log = lambda x: mpmath.mpf(1) / 2 * mpmath.log(1 + x)  # noqa: E731
    s1 = GaussianSystem(10, 1, 2, 5, 1.0, 1.0, allow_alpha_one=True)
    s2 = GaussianSystem(10, 1, 2, 5, 0.9, 0.9)
    P, N1, N2, N3 = (mpmath.mpf(v) for v in (10, 1, 2, 5))
    a, a1 = mpmath.mpf("0.5"), mpmath.mpf("0.9")
    cases = [
        (gaussian_bounds(s1, 1.0).id1, mpmath.log(11) / 2),
        (gaussian_bounds(s2, 0.5).id2, half_log((1 - a) * P / (N2 + a * P))),
        (gaussian_bounds(s2, 0.5).data1, half_log(a * a1 * P / N3)),
        (gaussian_bounds(s2, 0.5).data2, half_log((1 - a) * a1 * P / N3)),
        (gaussian_bounds(s2, 0.5).data_sum, half_log(a1 * P / N3)),
        (gaussian_bounds(s2, 0.25).id1, half_log(P / 4 / N1)),
    ]
    worst = max(abs(got - float(want)) for got, want in cases)
    record(2, worst <= 1e-9, f"max |error| = {worst:.2e} nats over {len(cases)} values (1/2 ln 11 = {float(mpmath.log(11) / 2):.12f})")


# 3 -----------------------------------------------------------------------------

def test_criterion_03_induced_joint():
    rng = np.random.default_rng(SEED + 3)
    worst, lib_time = 0.0, 0.0
    for a, b, c, d, s in itertools.product(range(1, 5), repeat=5):
        p1, p2 = rng.dirichlet(np.ones(a)), rng.dirichlet(np.ones(b))
        c1, c2 = random_cond(rng, (a, c), 1), random_cond(rng, (b, d), 1)
        m = random_cond(rng, (c, d, s), 2)
        args = (Pmf(p1), Pmf(p2), ImperfectionChannel(c1), ImperfectionChannel(c2), MacChannel(m))
        t0 = time.perf_counter()
        j = induced_mac_joint(*args)
        lib_time += time.perf_counter() - t0
        brute = np.zeros((a, b, s))
        for q1, q2, h1, h2 in itertools.product(range(a), range(b), range(c), range(d)):
            brute[q1, q2] += p1[q1] * p2[q2] * c1[q1, h1] * c2[q2, h2] * m[h1, h2]
        worst = max(worst, float(np.abs(j.probs - brute).sum()))
    record(3, worst < 1e-12 and lib_time < 1, f"max L1 = {worst:.1e} over 1024 alphabet combinations; {lib_time:.2f} s")


# 4 -----------------------------------------------------------------------------

def test_criterion_04_information_measures():
    errs = []
    for q in (0.05, 0.11, 0.3):
        j = JointPmf(0.5 * np.array([[1 - q, q], [q, 1 - q]]))
        mq = mpmath.mpf(q)
        h2 = -(mq * mpmath.log(mq, 2) + (1 - mq) * mpmath.log(1 - mq, 2))
        errs.append(abs(mutual_information(j, "bits") - float(1 - h2)))
    xor = np.zeros((2, 2, 2))
    for a, b in itertools.product(range(2), repeat=2):
        xor[a, b, a ^ b] = 0.25
    xj = JointPmf(xor)
    errs.append(abs(conditional_mutual_information(xj, 1, "bits") - 1.0))
    errs.append(abs(mutual_information(marginalize(xj, (0, 2)), "bits")))
    rng = np.random.default_rng(SEED + 4)
    chain = 0.0
    for _ in range(100):
        p = rng.random(tuple(rng.integers(2, 5, size=3))) ** 2
        j = JointPmf(p / p.sum())
        lhs = joint_mutual_information(j, 2)
        rhs = mutual_information(marginalize(j, (0, 2))) + conditional_mutual_information(j, 0)
        chain = max(chain, abs(lhs - rhs))
    record(4, max(errs) < 1e-9 and chain < 1e-9,
           f"max formula error {max(errs):.1e}; max chain-rule residual {chain:.1e}")


# 5, 6, 7 -----------------------------------------------------------------------

DISCRETE_EPS = 0.014
MAC_EPS = 0.1
TRIALS_5 = 2000


@functools.lru_cache(maxsize=None)
def discrete_setting():
    spec = load_spec(CONFIGS / "bsc_xor_erasure.json")
    w = spec.witness
    b = system_bounds(spec.system, w["p_uvx"], w["p_q1"], w["p_q2"])
    return spec, b


def discrete_cfg(rates):
    spec, _ = discrete_setting()
    w = spec.witness
    return DiscreteSimConfig(spec.system, w["p_uvx"], w["p_q1"], w["p_q2"], rates,
                             epsilon=DISCRETE_EPS, mac_epsilon=MAC_EPS)


@functools.lru_cache(maxsize=None)
def criterion5_runs():
    _, b = discrete_setting()
    cfg = discrete_cfg(inner_point(b, 0.7))
    t0 = time.perf_counter()
    runs = [estimate_error_rates(cfg, n, TRIALS_5, SEED) for n in (64, 128, 256)]
    return runs, time.perf_counter() - t0


def test_criterion_05_discrete_decay():
    runs, elapsed = criterion5_runs()
    lam = [r.lambda_overall for r in runs]
    cis = [r.ci_overall for r in runs]
    decreasing = all(x > y for x, y in zip(lam, lam[1:]))
    separated = all(a[0] > b[1] for a, b in zip(cis, cis[1:]))
    final = lam[-1] < 0.1
    parts = ", ".join(f"n={r.n}: {r.lambda_overall:.4f} [{r.ci_overall[0]:.4f}, {r.ci_overall[1]:.4f}]" for r in runs)
    record(5, decreasing and separated and final and elapsed < 300,
           f"{parts}; decreasing={decreasing} CIs disjoint={separated} final<0.1={final}; {elapsed:.0f} s")


def test_criterion_06_converse_direction():
    _, b = discrete_setting()
    rates = inner_point(b, 0.7).replace(r1_data=1.2 * b.data1)
    cfg = discrete_cfg(rates)
    t0 = time.perf_counter()
    parts, ok, tested = [], True, 0
    for n, trials in ((64, 2000), (128, 500), (256, 2000)):
        try:
            r = estimate_error_rates(cfg, n, trials, SEED)
        except ConfigurationError as e:
            parts.append(f"n={n}: not run ({e})")
            continue
        tested += 1
        ok &= r.mac_trials > 0 and r.lambda_mac > 0.3
        parts.append(f"n={n}: lambda_MAC={r.lambda_mac:.3f} over {r.mac_trials} uplink trials")
    elapsed = time.perf_counter() - t0
    record(6, ok and tested >= 2 and elapsed < 300, "; ".join(parts) + f"; {elapsed:.0f} s")


def test_criterion_07_composition():
    runs, _ = criterion5_runs()
    parts, ok = [], True
    for r in runs:
        z = abs(r.composition_residual) / r.composition_sigma
        ok &= z <= 3
        parts.append(f"n={r.n}: tallied {r.lambda_overall:.4f} composed {r.lambda_composed:.4f} ({z:.2f} sigma)")
    record(7, ok, "; ".join(parts))


# 8 -----------------------------------------------------------------------------

def test_criterion_08_gaussian_decay():
    s = GaussianSystem(10, 1, 2, 5, 0.9, 0.9)
    rates = inner_point(gaussian_bounds(s, 0.5), 0.5)
    cfg = GaussianSimConfig(s, 0.5, rates)
    t0 = time.perf_counter()
    lam, parts = [], []
    for n in (128, 256, 512):
        try:
            r = estimate_error_rates(cfg, n, 1000, SEED)
        except ConfigurationError as e:
            parts.append(f"n={n}: infeasible ({e})")
            lam.append(None)
            continue
        lam.append(r.lambda_overall)
        parts.append(f"n={n}: {r.lambda_overall:.4f}")
    elapsed = time.perf_counter() - t0
    ok = None not in lam and all(x > y for x, y in zip(lam, lam[1:])) and lam[-1] < 0.15 and elapsed < 600
    record(8, ok, "; ".join(parts) + f"; {elapsed:.0f} s")


# 9 -----------------------------------------------------------------------------

def test_criterion_09_region_properties():
    rng = np.random.default_rng(SEED + 9)
    bad = {"gaussian": 0, "discrete": 0}
    for _ in range(500):
        s = random_gaussian(rng)
        a = rng.uniform(0.01, 0.99)
        b = gaussian_bounds(s, a)
        inside = inner_point(b, rng.uniform(0.05, 0.99))
        lower = RateQuadruple(*(v * rng.random() for v in inside.as_tuple()))
        # id1 rises and id2 falls with alpha, so this pair is met with equality only at alpha = a
        edge = RateQuadruple(b.id1, b.id2, 0.0, 0.0)
        top = RateQuadruple(gaussian_bounds(s, 1.0).id1, 0.0, 0.0, 0.0)
        bad["gaussian"] += (not gaussian_membership(inside, s)) + (not gaussian_membership(lower, s))
        bad["gaussian"] += bool(gaussian_membership(edge, s)) + bool(gaussian_membership(top, s))
    for _ in range(500):
        sys_ = random_discrete(rng)
        x = sys_.bcc.x_size
        p = JointPmf(rng.dirichlet(np.ones(4 * x)).reshape(2, 2, x))
        q1, q2 = Pmf(rng.dirichlet(np.ones(sys_.imp1.q_size))), Pmf(rng.dirichlet(np.ones(sys_.imp2.q_size)))
        b = system_bounds(sys_, p, q1, q2)
        inside = inner_point(b, rng.uniform(0.05, 0.99))
        lower = RateQuadruple(*(v * rng.random() for v in inside.as_tuple()))
        k = int(rng.integers(0, 4))
        edge = RateQuadruple(*[(b.id1, b.id2, b.data1, b.data2)[i] if i == k else 0.0 for i in range(4)])
        if all(v > 0 for v in (b.id1, b.id2, b.data1, b.data2, b.data_sum)) and b.id_sum > 0:
            bad["discrete"] += not discrete_membership(inside, sys_, p, q1, q2)
            bad["discrete"] += not discrete_membership(lower, sys_, p, q1, q2)
        bad["discrete"] += bool(discrete_membership(edge, sys_, p, q1, q2))
    record(9, bad == {"gaussian": 0, "discrete": 0},
           f"violations over 500 queries per region type: {bad}")


# 10 ----------------------------------------------------------------------------

def test_criterion_10_determinism(tmp_path):
    gauss = "P=10,N1=1,N2=2,N3=5,alpha1=0.9,alpha2=0.9"
    chan = str(CONFIGS / "bsc_xor_erasure.json")
    runs = {
        "region-gaussian.csv": ["region-gaussian", "--system", gauss, "--grid", "101"],
        "region-discrete.json": ["region-discrete", "--channel-file", str(CONFIGS / "noiseless_xor.json"),
                                 "--budget", "64", "--format", "json"],
        "simulate-discrete.csv": ["simulate-discrete", "--channel-file", chan, "--scale", "0.7", "--n", "32,64",
                                  "--trials", "50", "--epsilon", "0.014", "--mac-epsilon", "0.1", "--seed", "5"],
        "simulate-gaussian.json": ["simulate-gaussian", "--system", gauss, "--alpha", "0.5",
                                   "--rates", "0.02,0.02,0.02,0.02", "--n", "64", "--trials", "50",
                                   "--format", "json", "--entropy-seed"],
        "sweep.csv": ["sweep", "--base", "simulate-discrete", "--axis", "crossover", "--values", "0.02,0.05",
                      "--channel-file", chan, "--scale", "0.7", "--n", "32", "--trials", "20", "--epsilon", "0.014"],
        "rfid.csv": ["rfid-report", "--system", gauss, "--n", "7", "--grid", "21"],
    }
    same, details = 0, []
    for name, argv in runs.items():
        out = tmp_path / name
        rc1 = main(argv + ["--out", str(out)])
        again = tmp_path / f"again-{name}"
        rc2 = main(["rerun", str(records.record_path(out)), "--out", str(again)])
        ok = rc1 == rc2 == 0 and again.read_bytes() == out.read_bytes()
        same += ok
        if not ok:
            details.append(name)
    record(10, same == len(runs), f"{same}/{len(runs)} payloads byte-identical on rerun {details or ''}".strip())


# 11 ----------------------------------------------------------------------------

def test_criterion_11_rfid():
    rng = np.random.default_rng(SEED + 11)
    violations = 0
    for _ in range(100):
        fr = gaussian_frontier(random_gaussian(rng), 51)
        violations += universal_limit_report(fr).universal_uplink_sum_rate < tdma_limit_report(fr, 1).tdma_uplink_rate
        pts = discrete_frontier_search(random_discrete(rng), budget=96, seed=int(rng.integers(1 << 30)))
        bounds = [w.bounds for _, w in pts]
        violations += universal_limit_report(bounds).universal_uplink_sum_rate < tdma_limit_report(bounds, 1).tdma_uplink_rate
    spots = [max_tag_count(0.5, 7) == 11, max_tag_count(1, 8) == 256, max_tag_count(0, 3) == 1]
    record(11, violations == 0 and all(spots),
           f"{violations} universal<TDMA violations over 100 gaussian + 100 discrete systems; "
           f"floor(2^3.5) = {max_tag_count(0.5, 7)}")


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
