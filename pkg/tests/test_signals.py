import itertools
import math

import numpy as np
import pytest

from blocksparse import (
    BlockSparseSignal,
    Dictionary,
    InputError,
    calibrate_noise,
    normalized,
    observe,
    random_unit_norm,
    sample_block_support,
    sample_signal,
    stream,
)


class TestSampleBlockSupport:
    def test_empty_and_full(self, rng):
        assert sample_block_support(5, 0, rng) == ()
        assert sample_block_support(5, 5, rng) == (0, 1, 2, 3, 4)

    def test_too_many_rejected(self, rng):
        with pytest.raises(InputError):
            sample_block_support(3, 4, rng)

    def test_sorted_and_distinct(self, rng):
        for _ in range(50):
            s = sample_block_support(10, 4, rng)
            assert s == tuple(sorted(set(s)))

    def test_uniform_over_subsets(self):
        # frequency of each of the C(5,2) = 10 subsets near 0.1
        gen = stream(314159)
        draws = 100_000
        counts = {c: 0 for c in itertools.combinations(range(5), 2)}
        for _ in range(draws):
            counts[sample_block_support(5, 2, gen)] += 1
        for subset, count in counts.items():
            assert abs(count / draws - 0.1) <= 0.01, (subset, count)


class TestSampleSignal:
    def test_empty_support_gives_zero_vector(self, rng):
        s = sample_signal((), 4, 3, rng)
        assert np.array_equal(s.beta, np.zeros(12))

    def test_exact_zeros_off_support(self, rng):
        s = sample_signal((1, 3), 5, 2, rng)
        blocks = s.beta.reshape(5, 2)
        assert np.all(blocks[[0, 2, 4]] == 0.0)
        assert np.all(np.linalg.norm(blocks[[1, 3]], axis=1) > 0)

    def test_determinism(self):
        a = sample_signal((0, 2), 4, 3, stream(5, 1))
        b = sample_signal((0, 2), 4, 3, stream(5, 1))
        assert np.array_equal(a.beta, b.beta)

    def test_custom_block_sampler(self, rng):
        s = sample_signal((1,), 3, 2, rng, block_sampler=lambda g, m: np.ones(m))
        assert np.array_equal(s.beta, np.array([0, 0, 1, 1, 0, 0], dtype=float))

    def test_sign_symmetry(self):
        # zero-median entries: empirical sign mean within +-0.02 over 1e5 draws
        gen = stream(777)
        draws = 100_000
        total = np.zeros(2)
        for _ in range(draws):
            s = sample_signal((0,), 1, 2, gen)
            total += np.sign(s.beta[:2])
        assert np.max(np.abs(total / draws)) <= 0.02

    def test_direction_independence_across_blocks(self):
        # correlations between normalized entries of distinct nonzero blocks
        gen = stream(1234)
        draws = 10_000
        m = 2
        u = np.empty((draws, m))
        v = np.empty((draws, m))
        for t in range(draws):
            s = sample_signal((0, 1), 2, m, gen)
            u[t] = s.beta[:m] / np.linalg.norm(s.beta[:m])
            v[t] = s.beta[m:] / np.linalg.norm(s.beta[m:])
        worst = max(
            abs(np.corrcoef(u[:, a], v[:, b])[0, 1]) for a in range(m) for b in range(m)
        )
        assert worst <= 0.02

    def test_support_out_of_range(self, rng):
        with pytest.raises(InputError):
            sample_signal((5,), 4, 2, rng)


class TestObserve:
    def test_zero_signal_zero_noise(self, rng):
        d = random_unit_norm(4, 8, 2, seed=0)
        s = sample_signal((), d.num_blocks, 2, rng)
        y = observe(d, s, 0.0)
        assert np.array_equal(y.y, np.zeros(4))

    def test_identity_dictionary_reproduces_signal(self, rng):
        d = Dictionary(np.eye(6), 2)
        s = sample_signal((0, 2), 3, 2, rng)
        assert np.allclose(observe(d, s, 0.0).y, s.beta, atol=1e-15)

    def test_noise_variance(self):
        d = random_unit_norm(5, 10, 2, seed=3)
        gen = stream(99)
        s = sample_signal((1,), d.num_blocks, 2, gen)
        sigma = 0.7
        clean = d.entries @ s.beta
        draws = 10_000
        sq = 0.0
        for _ in range(draws):
            y = observe(d, s, sigma, gen).y
            diff = y - clean
            sq += float(diff @ diff)
        var = sq / (draws * d.n)
        assert var == pytest.approx(sigma**2, rel=0.05)

    def test_dimension_mismatch_rejected(self, rng):
        d = random_unit_norm(4, 8, 2, seed=0)
        s = sample_signal((0,), 3, 2, rng)  # p = 6 != 8
        with pytest.raises(InputError):
            observe(d, s, 0.0)

    def test_noise_requires_rng(self, rng):
        d = random_unit_norm(4, 8, 2, seed=0)
        s = sample_signal((0,), d.num_blocks, 2, rng)
        with pytest.raises(InputError):
            observe(d, s, 0.5)


class TestCalibrateNoise:
    def test_unit_ratio(self, rng):
        d = random_unit_norm(9, 18, 3, seed=1)
        beta = np.zeros(18)
        beta[:3] = math.sqrt(3.0)  # ||beta||^2 = 9 = n
        s = BlockSparseSignal(beta, 3, (0,))
        assert calibrate_noise(d, s, 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_exact_ratio_after_calibration(self, rng):
        d = random_unit_norm(16, 32, 4, seed=2)
        s = sample_signal((0, 3), d.num_blocks, 4, rng)
        sigma = calibrate_noise(d, s, 0.84)
        energy = float(s.beta @ s.beta)
        assert energy / (d.n * sigma**2) == pytest.approx(0.84, rel=1e-12)

    def test_zero_signal_rejected(self, rng):
        d = random_unit_norm(4, 8, 2, seed=0)
        s = sample_signal((), d.num_blocks, 2, rng)
        with pytest.raises(InputError):
            calibrate_noise(d, s, 0.84)


class TestSignalType:
    def test_zero_block_inside_support_rejected(self):
        with pytest.raises(InputError):
            BlockSparseSignal(np.zeros(6), 2, (1,))

    def test_nonzero_block_outside_support_rejected(self):
        beta = np.array([1.0, 0.0, 2.0, 0.0])
        with pytest.raises(InputError):
            BlockSparseSignal(beta, 2, (0,))

    def test_normalized_has_unit_norm(self, rng):
        s = sample_signal((0, 1), 3, 3, rng)
        assert np.linalg.norm(normalized(s).beta) == pytest.approx(1.0, abs=1e-12)
        assert normalized(s).support == s.support
