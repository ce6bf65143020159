import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from neva import FoveationConfig, Stimulus
from neva.errors import InvalidParameter
from neva.foveation import agent_state, init_state, perceive, run_fixations, update_state
from neva.imaging import blur, gaussian_blob

from conftest import random_stimulus

CFG = FoveationConfig(sigma_p=3.0, sigma_xi=2.5, gamma=0.3)


def explicit_accumulator(fixations, sigma, gamma, w, h):
    """clip(sum_i (1 - gamma)**i * blob(t - i)), summed directly."""
    total = np.zeros((h, w))
    t = len(fixations) - 1
    for i in range(len(fixations)):
        total += (1 - gamma) ** i * gaussian_blob(fixations[t - i], sigma, w, h)
    return np.clip(total, 0, 1)


def nested_accumulator(fixations, sigma, gamma, w, h):
    """The recursion written out independently of update_state."""
    acc = np.zeros((h, w))
    for fx in fixations:
        yy, xx = np.mgrid[0:h, 0:w]
        cx, cy = int(np.floor(fx[0] + 0.5)), int(np.floor(fx[1] + 0.5))
        cx, cy = min(cx, w - 1), min(cy, h - 1)
        blob = np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * sigma ** 2))
        acc = np.minimum(np.maximum(blob + (1 - gamma) * acc, 0), 1)
    return acc


fixation_lists = st.lists(st.tuples(st.integers(0, 31), st.integers(0, 31)), min_size=1, max_size=8)


class TestPerceive:
    def test_fixation_pixel_is_sharp(self, rng):
        s = random_stimulus(rng, c=3)
        p = perceive(s, (10, 7), CFG)
        assert np.array_equal(p.data[7, 10], s.data[7, 10])

    def test_far_pixels_are_blurred(self, rng):
        s = random_stimulus(rng, 64, 64)
        cfg = FoveationConfig(3.0, 2.0)
        p = perceive(s, (2, 2), cfg)
        coarse = blur(s, 3.0)
        np.testing.assert_allclose(p.data[30:, 30:], coarse.data[30:, 30:], atol=1e-6)

    def test_equivalent_form(self, rng):
        s = random_stimulus(rng, c=3)
        g = gaussian_blob((5, 20), CFG.sigma_xi, 32, 32)[:, :, None]
        coarse = blur(s, CFG.sigma_p).data
        alt = coarse - g * (coarse - s.data)
        np.testing.assert_allclose(perceive(s, (5, 20), CFG).data, alt, atol=1e-12)

    def test_out_of_bounds(self, rng):
        with pytest.raises(InvalidParameter):
            perceive(random_stimulus(rng), (40, 3), CFG)


class TestState:
    def test_init(self, rng):
        s = random_stimulus(rng)
        st0 = init_state(s, CFG)
        assert st0.t == 0 and st0.g_sigma.max() == 0
        np.testing.assert_array_equal(agent_state(st0, s).data, blur(s, CFG.sigma_p).data)

    def test_memoryless(self, rng):
        s = random_stimulus(rng)
        cfg = FoveationConfig(3.0, 2.5, gamma=1.0)
        st1 = run_fixations(s, [(3, 3), (20, 25)], cfg)
        np.testing.assert_array_equal(st1.g_sigma, gaussian_blob((20, 25), 2.5, 32, 32))
        np.testing.assert_allclose(agent_state(st1, s).data, perceive(s, (20, 25), cfg).data,
                                   atol=1e-12)

    def test_no_forgetting_keeps_both_centres(self, rng):
        s = random_stimulus(rng)
        st2 = run_fixations(s, [(3, 3), (28, 28)], FoveationConfig(3.0, 2.5, gamma=0.0))
        assert st2.g_sigma[3, 3] == 1.0 and st2.g_sigma[28, 28] == 1.0
        assert st2.t == 2

    def test_three_separated_fixations_match_unrolled_sum(self):
        s = Stimulus(np.zeros((64, 64)))
        fx = [(5, 5), (58, 8), (30, 58)]
        st3 = run_fixations(s, fx, FoveationConfig(3.0, 2.5, gamma=0.3))
        np.testing.assert_allclose(st3.g_sigma, explicit_accumulator(fx, 2.5, 0.3, 64, 64),
                                   atol=1e-12)

    def test_overlap_distinguishes_clipping_order(self):
        # repeated fixation pushes the unclipped sum above 1; the recursion clips
        # at every step, so it stays below the clipped closed form afterwards
        s = Stimulus(np.zeros((32, 32)))
        fx = [(10, 10), (10, 10), (25, 25)]
        it = run_fixations(s, fx, FoveationConfig(3.0, 2.5, gamma=0.3)).g_sigma
        ex = explicit_accumulator(fx, 2.5, 0.3, 32, 32)
        assert it[10, 10] == pytest.approx(0.7 + np.exp(-450 / 12.5), abs=1e-12)
        assert ex[10, 10] == 1.0

    @settings(max_examples=60, deadline=None)
    @given(fixation_lists, st.sampled_from([0.0, 0.3, 0.7, 1.0]))
    def test_matches_nested_oracle(self, fx, gamma):
        s = Stimulus(np.zeros((32, 32)))
        got = run_fixations(s, fx, FoveationConfig(3.0, 2.5, gamma)).g_sigma
        np.testing.assert_allclose(got, nested_accumulator(fx, 2.5, gamma, 32, 32), atol=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(fixation_lists, st.sampled_from([0.0, 1.0]))
    def test_explicit_sum_exact_without_partial_forgetting(self, fx, gamma):
        s = Stimulus(np.zeros((32, 32)))
        got = run_fixations(s, fx, FoveationConfig(3.0, 2.5, gamma)).g_sigma
        np.testing.assert_allclose(got, explicit_accumulator(fx, 2.5, gamma, 32, 32), atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.tuples(st.floats(0, 32), st.floats(0, 32)), min_size=1, max_size=30),
           st.floats(0, 1))
    def test_clipping_invariant(self, fx, gamma):
        s = Stimulus(np.zeros((32, 32)))
        state = init_state(s, FoveationConfig(2.0, 4.0, gamma))
        for f in fx:
            state = update_state(state, f, FoveationConfig(2.0, 4.0, gamma))
            assert state.g_sigma.min() >= 0 and state.g_sigma.max() <= 1

    def test_gamma_zero_never_decreases_and_error_shrinks(self, rng):
        s = random_stimulus(rng, c=3)
        cfg = FoveationConfig(3.0, 3.0, gamma=0.0)
        state = init_state(s, cfg)
        prev_g, prev_err = state.g_sigma, np.abs(agent_state(state, s).data - s.data).mean()
        for fx in [(4, 4), (20, 8), (12, 28), (30, 30), (16, 16)]:
            state = update_state(state, fx, cfg)
            err = np.abs(agent_state(state, s).data - s.data).mean()
            assert np.all(state.g_sigma >= prev_g)
            assert err <= prev_err
            prev_g, prev_err = state.g_sigma, err

    def test_extreme_masks(self, rng):
        from neva.foveation import FoveationState
        s = random_stimulus(rng)
        coarse = blur(s, 3.0)
        ones = FoveationState(np.ones((32, 32)), coarse, 1)
        zeros = FoveationState(np.zeros((32, 32)), coarse, 1)
        np.testing.assert_array_equal(agent_state(ones, s).data, s.data)
        np.testing.assert_array_equal(agent_state(zeros, s).data, coarse.data)

    def test_dimension_mismatch(self, rng):
        state = init_state(random_stimulus(rng), CFG)
        with pytest.raises(InvalidParameter):
            agent_state(state, random_stimulus(rng, 16, 16))


class TestConfig:
    def test_validation(self):
        with pytest.raises(InvalidParameter):
            FoveationConfig(0, 1)
        with pytest.raises(InvalidParameter):
            FoveationConfig(1, 1, gamma=1.5)

    def test_from_geometry(self, geom):
        cfg = FoveationConfig.from_geometry(4.0, geom)
        assert cfg.sigma_xi == pytest.approx(68.42385451861293)
        assert cfg.gamma == 0.3

    def test_default_without_geometry_warns(self):
        with pytest.warns(UserWarning):
            cfg = FoveationConfig.from_geometry(4.0)
        assert cfg.sigma_xi == 32.0
