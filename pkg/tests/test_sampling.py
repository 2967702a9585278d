import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgdtheta.exceptions import InvalidBatchError
from sgdtheta.sampling import (
    IndexSampler,
    NoiseModel,
    NoiseSpec,
    apply_noise,
    piecewise_constant_inclusions,
    read_image,
    sample_batch,
    shepp_logan,
    write_image,
    write_pgm,
)
from sgdtheta.sampling.rng import GAMMA, CounterRNG, mix64
from sgdtheta.spaces import lr_norm

MASK = (1 << 64) - 1


def floyd_oracle(seed, stream, N, b, n):
    """Pure-integer reference of batch ``n``: SplitMix64 counters plus Floyd's subset draw."""
    rng = CounterRNG(seed, stream)
    chosen = []
    for k, j in enumerate(range(N - b, N)):
        z = mix64((rng.key + (n * b + k + 1) * GAMMA) & MASK)
        t = (z * (j + 1)) >> 64
        chosen.append(j if t in chosen else t)
    return sorted(chosen)


class TestRng:
    def test_splitmix_known_answer(self):
        # first output of SplitMix64 seeded with zero
        assert mix64(GAMMA) == 0xE220A8397B1DCDAF

    def test_vector_matches_scalar(self):
        rng = CounterRNG(123, "x")
        counters = np.arange(50, dtype=np.uint64)
        assert [int(v) for v in rng.uint64(counters)] == [rng.uint64_scalar(c) for c in range(50)]

    def test_uniform_range(self):
        u = CounterRNG(1).uniform_block(0, 10000)
        assert u.min() >= 0.0 and u.max() < 1.0
        assert abs(u.mean() - 0.5) < 4 * np.sqrt(1 / 12 / 10000)

    def test_normal_moments(self):
        z = CounterRNG(2).normal_block(0, 100000)
        assert abs(z.mean()) < 4 / np.sqrt(1e5)
        assert abs(z.var() - 1) < 4 * np.sqrt(2 / 1e5)

    def test_streams_differ(self):
        assert CounterRNG(0, "a").uint64_scalar(0) != CounterRNG(0, "b").uint64_scalar(0)


class TestSampler:
    def test_golden_sequence(self):
        s = IndexSampler(7, 10, 3)
        got = [s.next_batch().tolist() for _ in range(4)]
        assert got == [[2, 6, 9], [3, 5, 8], [0, 5, 7], [0, 3, 5]]
        assert got == [floyd_oracle(7, "batches", 10, 3, n) for n in range(4)]

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**63), st.integers(1, 30), st.data())
    def test_against_oracle(self, seed, N, data):
        b = data.draw(st.integers(1, N))
        n = data.draw(st.integers(0, 10**6))
        batch = IndexSampler(seed, N, b).batch(n)
        assert len(set(batch.tolist())) == b
        assert batch.min() >= 0 and batch.max() < N
        if b < N:
            assert batch.tolist() == floyd_oracle(seed, "batches", N, b, n)

    def test_cross_process(self):
        code = ("from sgdtheta.sampling import IndexSampler;"
                "s = IndexSampler(7, 10, 3); print([s.batch(n).tolist() for n in range(20)])")
        out = [subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True).stdout
               for _ in range(2)]
        local = IndexSampler(7, 10, 3)
        assert out[0] == out[1] == str([local.batch(n).tolist() for n in range(20)]) + "\n"

    def test_full_batch_is_permutation(self):
        assert sorted(sample_batch(IndexSampler(3, 5, 5), 9).tolist()) == [0, 1, 2, 3, 4]

    def test_same_batch_twice(self):
        s = IndexSampler(11, 40, 4)
        np.testing.assert_array_equal(sample_batch(s, 17), sample_batch(s, 17))

    def test_clone_forks(self):
        s = IndexSampler(5, 30, 2)
        s.next_batch()
        c = s.clone()
        np.testing.assert_array_equal(s.next_batch(), c.next_batch())
        assert c.position == s.position == 2

    def test_invalid_batch(self):
        with pytest.raises(InvalidBatchError):
            IndexSampler(0, 4, 5)
        with pytest.raises(InvalidBatchError):
            IndexSampler(0, 4, 0)

    def test_uniform_frequencies(self):
        s = IndexSampler(2024, 10, 1)
        draws = np.array([s.batch(n)[0] for n in range(100000)])
        counts = np.bincount(draws, minlength=10)
        sd = np.sqrt(1e5 * 0.1 * 0.9)
        assert np.all(np.abs(counts - 1e4) <= 3 * sd)


class TestNoise:
    exact = np.random.default_rng(0).uniform(0.5, 2.0, (50, 4))

    @pytest.mark.parametrize("spec", [
        NoiseSpec(NoiseModel.GAUSSIAN, 0.05, r=2.0, seed=1),
        NoiseSpec(NoiseModel.UNIFORM, 0.1, r=1.5, seed=2),
        NoiseSpec(NoiseModel.SALT_PEPPER, kappa=0.2, r=1.1, seed=3),
    ])
    def test_level_recomputation(self, spec):
        ds = apply_noise(spec, self.exact)
        naive = np.array([sum(abs(v) ** spec.r for v in row) ** (1 / spec.r) for row in ds.noisy - ds.exact])
        np.testing.assert_allclose(ds.delta, naive, rtol=1e-12, atol=0)
        assert ds.total_level(use_apriori=False) == pytest.approx(np.sum(naive ** spec.r) ** (1 / spec.r), rel=1e-12)

    def test_gaussian_scaling(self):
        ds = apply_noise(NoiseSpec(NoiseModel.GAUSSIAN, 0.05, seed=4), self.exact)
        np.testing.assert_allclose(ds.apriori, 0.05 * np.linalg.norm(self.exact, axis=1), rtol=1e-14)
        eps = (ds.noisy - ds.exact) / ds.apriori[:, None]
        np.testing.assert_allclose(eps.ravel(), CounterRNG(4, "noise/gaussian").normal_block(0, 200), rtol=1e-10)

    def test_uniform_bounds(self):
        ds = apply_noise(NoiseSpec(NoiseModel.UNIFORM, 0.3, seed=5), self.exact)
        assert np.all(np.abs(ds.noisy - ds.exact) <= ds.apriori[:, None] + 1e-15)

    def test_zero_levels(self):
        ds = apply_noise(NoiseSpec(NoiseModel.GAUSSIAN, 0.0), self.exact)
        np.testing.assert_array_equal(ds.delta, 0.0)
        ds = apply_noise(NoiseSpec(NoiseModel.SALT_PEPPER, kappa=0.0), self.exact)
        np.testing.assert_array_equal(ds.noisy, self.exact)
        np.testing.assert_array_equal(ds.delta, 0.0)

    def test_full_corruption(self):
        ds = apply_noise(NoiseSpec(NoiseModel.SALT_PEPPER, kappa=1.0, seed=6), self.exact)
        assert set(np.unique(ds.noisy)) <= {self.exact.max(), self.exact.min()}

    def test_salt_pepper_fraction(self):
        exact = np.linspace(1.0, 2.0, 200000)
        ds = apply_noise(NoiseSpec(NoiseModel.SALT_PEPPER, kappa=0.05, seed=7), exact)
        frac = np.mean(ds.noisy.ravel() != exact)
        # endpoints already equal an extreme, so a replacement can leave them unchanged
        assert abs(frac - 0.05) <= 3 * np.sqrt(0.05 * 0.95 / exact.size)

    def test_levels_selection(self):
        ds = apply_noise(NoiseSpec(NoiseModel.GAUSSIAN, 0.05, seed=8), self.exact)
        np.testing.assert_array_equal(ds.levels(), ds.apriori)
        np.testing.assert_array_equal(ds.levels(use_apriori=False), ds.delta)
        sp = apply_noise(NoiseSpec(NoiseModel.SALT_PEPPER, kappa=0.1, seed=8), self.exact)
        assert sp.apriori is None
        np.testing.assert_array_equal(sp.levels(), sp.delta)
        np.testing.assert_allclose(sp.levels(r=3.0), [lr_norm(v, 3.0) for v in sp.noisy - sp.exact])

    def test_errors(self):
        with pytest.raises(ValueError):
            apply_noise(NoiseSpec(), np.array([]))
        with pytest.raises(ValueError):
            apply_noise(NoiseSpec(), np.array([1.0, np.nan]))
        with pytest.raises(ValueError):
            NoiseSpec(NoiseModel.SALT_PEPPER, kappa=1.5)
        with pytest.raises(ValueError):
            NoiseSpec(NoiseModel.GAUSSIAN, delta_rel=-0.1)

    def test_deterministic(self):
        a = apply_noise(NoiseSpec(NoiseModel.GAUSSIAN, 0.05, seed=9), self.exact)
        b = apply_noise(NoiseSpec(NoiseModel.GAUSSIAN, 0.05, seed=9), self.exact)
        assert a.noisy.tobytes() == b.noisy.tobytes()


class TestPhantoms:
    @pytest.mark.parametrize("n", [16, 33, 64])
    def test_shepp_logan(self, n):
        img = shepp_logan(n)
        assert img.shape == (n, n)
        assert img.min() >= 0.0 and img.max() <= 1.0
        assert img[0, 0] == img[0, -1] == img[-1, 0] == img[-1, -1] == 0.0
        # head outline (support) is mirror symmetric
        np.testing.assert_array_equal(img > 0, (img > 0)[:, ::-1])

    def test_shepp_logan_skull_is_brightest(self):
        img = shepp_logan(64)
        assert img.max() == 1.0
        row = img[32]
        first = np.flatnonzero(row)[0]
        assert row[first] == 1.0 and row[first + 1] == pytest.approx(0.02)

    def test_too_small(self):
        with pytest.raises(ValueError):
            shepp_logan(8)

    def test_inclusions(self):
        img = piecewise_constant_inclusions(41)
        assert set(np.unique(img)) == {0.0, 0.5, 1.0}
        assert not img[0].any() and not img[-1].any() and not img[:, 0].any() and not img[:, -1].any()


class TestImageIO:
    def test_round_trip(self, tmp_path):
        a = np.random.default_rng(1).standard_normal((3, 5))
        write_image(tmp_path / "a.bin", a, seed=3, delta=[0.1, 0.2])
        back, hdr = read_image(tmp_path / "a.bin")
        assert back.tobytes() == a.tobytes()
        assert hdr["shape"] == "3,5" and hdr["seed"] == "3" and hdr["delta"] == "0.1,0.2"

    def test_pgm(self, tmp_path):
        write_pgm(tmp_path / "a.pgm", np.array([[0.0, 1.0], [0.5, 2.0]]), 0.0, 1.0)
        raw = (tmp_path / "a.pgm").read_bytes()
        assert raw.startswith(b"P5\n2 2\n255\n")
        assert list(raw[-4:]) == [0, 255, 128, 255]
