import itertools

import numpy as np
import pytest

from bccmac.channels import (
    BccChannel,
    GaussianSystem,
    ImperfectionChannel,
    MacChannel,
    induced_mac_joint,
    sample_bcc,
    sample_gaussian_links,
    sample_imperfection,
    sample_mac,
    symmetric_matrix,
)
from bccmac.errors import ValidationError
from bccmac.prob import Pmf
from bccmac.rng import stream


def rand_cond(rng, shape, n_inputs):
    t = rng.random(shape) ** 2
    flat = t.reshape(shape[:n_inputs] + (-1,))
    return (flat / flat.sum(axis=-1, keepdims=True)).reshape(shape)


def brute_joint(p1, p2, c1, c2, m):
    """Loop over every (q1, q2, qh1, qh2, s)."""
    out = np.zeros((len(p1), len(p2), m.shape[2]))
    for q1, q2, h1, h2, s in itertools.product(
        range(len(p1)), range(len(p2)), range(c1.shape[1]), range(c2.shape[1]), range(m.shape[2])
    ):
        out[q1, q2, s] += p1[q1] * p2[q2] * c1[q1, h1] * c2[q2, h2] * m[h1, h2, s]
    return out


class TestValidation:
    def test_bcc_row_sum(self):
        bad = np.full((2, 2, 2), 0.25)
        bad[1, 0, 0] = 0.3
        with pytest.raises(ValidationError, match=r"row \(1,\)"):
            BccChannel(bad)

    def test_mac_negative(self):
        bad = np.zeros((2, 2, 2))
        bad[..., 0] = 1.2
        bad[..., 1] = -0.2
        with pytest.raises(ValidationError, match="negative"):
            MacChannel(bad)

    def test_rectangular_imperfection_allowed(self):
        ImperfectionChannel(np.array([[0.5, 0.25, 0.25], [0.0, 0.0, 1.0]]))

    @pytest.mark.parametrize("kw", [
        dict(P=0), dict(N1=0), dict(N3=-1), dict(N1=2, N2=2), dict(N1=3, N2=2),
        dict(alpha1=1.0), dict(alpha2=-0.1), dict(alpha1=1.2),
    ])
    def test_gaussian_invariants(self, kw):
        base = dict(P=10, N1=1, N2=2, N3=5, alpha1=0.9, alpha2=0.9)
        base.update(kw)
        with pytest.raises(ValidationError):
            GaussianSystem(**base)

    def test_alpha_one_override(self):
        GaussianSystem(10, 1, 2, 5, 1.0, 1.0, allow_alpha_one=True)
        with pytest.raises(ValidationError):
            GaussianSystem(10, 1, 2, 5, 1.2, 1.0, allow_alpha_one=True)


class TestInducedJoint:
    def test_identity_collapses(self):
        m = MacChannel.adder()
        p1, p2 = Pmf(np.array([0.3, 0.7])), Pmf(np.array([0.6, 0.4]))
        j = induced_mac_joint(p1, p2, ImperfectionChannel.identity(2), ImperfectionChannel.identity(2), m)
        direct = p1.probs[:, None, None] * p2.probs[None, :, None] * m.cond
        assert np.abs(j.probs - direct).sum() < 1e-15

    def test_bsc_adder_example(self):
        # hand enumeration: imp1 = BSC(0.1), imp2 = identity, s = qh1 + qh2, uniform inputs
        j = induced_mac_joint(Pmf.uniform(2), Pmf.uniform(2), ImperfectionChannel.symmetric(2, 0.1),
                              ImperfectionChannel.identity(2), MacChannel.adder())
        expect = np.zeros((2, 2, 3))
        for q1, q2 in itertools.product(range(2), repeat=2):
            expect[q1, q2, q1 + q2] += 0.25 * 0.9
            expect[q1, q2, (1 - q1) + q2] += 0.25 * 0.1
        assert np.abs(j.probs - expect).sum() < 1e-15
        assert j.probs[0, 0].tolist() == pytest.approx([0.225, 0.025, 0.0])

    def test_exhaustive_small_alphabets(self):
        rng = np.random.default_rng(11)
        for a, b, c, d, s in itertools.product(range(1, 5), repeat=5):
            if rng.random() > 0.05:
                continue
            p1, p2 = rng.dirichlet(np.ones(a)), rng.dirichlet(np.ones(b))
            c1, c2 = rand_cond(rng, (a, c), 1), rand_cond(rng, (b, d), 1)
            m = rand_cond(rng, (c, d, s), 2)
            j = induced_mac_joint(Pmf(p1), Pmf(p2), ImperfectionChannel(c1), ImperfectionChannel(c2), MacChannel(m))
            assert np.abs(j.probs - brute_joint(p1, p2, c1, c2, m)).sum() < 1e-12
            assert abs(j.probs.sum() - 1) < 1e-12
            assert np.abs(j.probs.sum(axis=2) - np.outer(p1, p2)).max() < 1e-15

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            induced_mac_joint(Pmf.uniform(3), Pmf.uniform(2), ImperfectionChannel.identity(2),
                              ImperfectionChannel.identity(2), MacChannel.xor())


class TestSamplers:
    def test_deterministic_bcc(self):
        ch = BccChannel.bsc_pair(0.0, 1.0)
        x = np.array([0, 1, 1, 0, 1])
        y1, y2 = sample_bcc(ch, x, stream(1))
        assert y1.tolist() == x.tolist() and y2.tolist() == (1 - x).tolist()

    def test_bsc_pair_frequencies(self):
        ch = BccChannel.bsc_pair(0.1, 0.3)
        x = stream(2).integers(0, 2, 100_000)
        y1, y2 = sample_bcc(ch, x, stream(3))
        assert abs(np.mean(y1 != x) - 0.1) < 0.01
        assert abs(np.mean(y2 != x) - 0.3) < 0.01

    def test_joint_bcc_correlated(self):
        # y1 = y2 always, flipped w.p. 0.2: the sampler must draw them jointly
        cond = np.zeros((2, 2, 2))
        for x in range(2):
            cond[x, x, x] = 0.8
            cond[x, 1 - x, 1 - x] = 0.2
        y1, y2 = sample_bcc(BccChannel(cond), np.zeros(20_000, dtype=int), stream(4))
        assert np.all(y1 == y2)
        assert abs(y1.mean() - 0.2) < 0.01

    def test_chi_square_mac(self):
        rng = np.random.default_rng(12)
        m = rand_cond(rng, (2, 3, 4), 2)
        a = stream(5).integers(0, 2, 60_000)
        b = stream(6).integers(0, 3, 60_000)
        s = sample_mac(MacChannel(m), a, b, stream(7))
        for i, j in itertools.product(range(2), range(3)):
            sel = (a == i) & (b == j)
            counts = np.bincount(s[sel], minlength=4)
            expect = sel.sum() * m[i, j]
            chi2 = ((counts - expect) ** 2 / expect).sum()
            # 3 degrees of freedom; 3-sigma style cut
            assert chi2 < 3 + 3 * np.sqrt(6) + 5

    def test_identity_imperfection(self):
        q = stream(8).integers(0, 3, 1000)
        assert np.array_equal(sample_imperfection(ImperfectionChannel.identity(3), q, stream(9)), q)

    def test_adder(self):
        a, b = stream(10).integers(0, 2, 500), stream(11).integers(0, 2, 500)
        assert np.array_equal(sample_mac(MacChannel.adder(), a, b, stream(12)), a + b)

    def test_repeatable(self):
        ch = BccChannel.bsc_pair(0.2, 0.4)
        x = np.arange(300) % 2
        a = sample_bcc(ch, x, stream(99, 1))
        b = sample_bcc(ch, x, stream(99, 1))
        assert all(np.array_equal(u, v) for u, v in zip(a, b))

    def test_out_of_range(self):
        with pytest.raises(ValidationError):
            sample_bcc(BccChannel.bsc_pair(0.1, 0.1), np.array([0, 2]), stream(1))
        with pytest.raises(ValidationError):
            sample_imperfection(ImperfectionChannel.identity(2), np.array([-1]), stream(1))

    def test_gaussian_noise_variance(self):
        sys_ = GaussianSystem(10, 1.5, 4.0, 2.5, 0.5, 0.5)
        y1, y2 = sample_gaussian_links(sys_, np.zeros(100_000), stream(13))
        s = sample_gaussian_links(sys_, (np.zeros(100_000), np.zeros(100_000)), stream(14))
        for y, var in ((y1, 1.5), (y2, 4.0), (s, 2.5)):
            assert abs(y.var() / var - 1) < 0.02
            assert abs(y.mean()) < 3 * np.sqrt(var / y.size)

    def test_gaussian_repeatable(self):
        sys_ = GaussianSystem(10, 1, 2, 5, 0.5, 0.5)
        x = np.linspace(-1, 1, 64)
        a = sample_gaussian_links(sys_, x, stream(5, 5))
        b = sample_gaussian_links(sys_, x, stream(5, 5))
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_symmetric_matrix_rows():
    m = symmetric_matrix(4, 0.3)
    assert np.allclose(m.sum(axis=1), 1) and m[0, 0] == pytest.approx(0.7)
