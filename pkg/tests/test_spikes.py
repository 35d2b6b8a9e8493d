import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from specem.errors import DataError, RecordingTooShort, ZeroVarianceSeries
from specem.simulation import demo_templates, spike_train, synth_recording
from specem.spikes import (
    FAST_SENTINEL,
    DetectorConfig,
    Recording,
    align_window,
    detect_spikes,
    rolling_slowness,
    slowness,
    slowness_rows,
)


def slowness_oracle(x):
    # straight from the definition, with n-1 divisors throughout
    z = (x - x.mean()) / x.std(ddof=1)
    return np.var(np.diff(z), ddof=1)


@pytest.fixture(scope="module")
def train():
    return spike_train(demo_templates(), count_per_template=20, seed=3)


class TestSlowness:
    def test_ramp(self):
        assert slowness(np.arange(1.0, 56.0)) < 1e-12

    def test_alternating(self):
        assert slowness(np.tile([1.0, -1.0], 28)) == pytest.approx(4.0, abs=1e-9)

    def test_white_noise_mean(self):
        x = np.random.default_rng(0).standard_normal((10_000, 55))
        delta, _ = slowness_rows(x)
        assert delta.mean() == pytest.approx(2.0, abs=0.05)

    def test_constant(self):
        with pytest.raises(ZeroVarianceSeries):
            slowness(np.full(10, 3.0))

    def test_too_short(self):
        with pytest.raises(DataError):
            slowness([1.0, 2.0])

    @given(arrays(np.float64, st.integers(4, 60), elements=st.floats(-100, 100)).filter(lambda a: np.ptp(a) > 1e-3))
    def test_matches_oracle_and_bounds(self, x):
        d = slowness(x)
        assert d == pytest.approx(slowness_oracle(x), rel=1e-9, abs=1e-12)
        assert -1e-12 <= d <= 4 + 1e-9

    @given(
        arrays(np.float64, 30, elements=st.floats(-10, 10)).filter(lambda a: np.ptp(a) > 1e-2),
        st.floats(1e-3, 1e3),
    )
    def test_scale_invariant(self, x, c):
        assert slowness(c * x) == pytest.approx(slowness(x), rel=1e-9, abs=1e-12)


class TestRolling:
    def test_noise_is_fast(self):
        y = np.random.default_rng(1).standard_normal(20_000)
        d = rolling_slowness(Recording(y), 55)
        assert d.size == 20_000 - 55 + 1
        assert d.min() > 0.25
        assert abs(np.median(d) - 2) < 0.1

    def test_slow_sine(self):
        y = np.sin(2 * np.pi * np.arange(2000) / 200)
        assert rolling_slowness(y, 55).max() < 0.05

    def test_single_window(self):
        y = np.random.default_rng(2).standard_normal(55)
        d = rolling_slowness(y, 55)
        assert d.shape == (1,)
        assert d[0] == pytest.approx(slowness(y), rel=1e-12)

    def test_matches_pointwise(self):
        y = np.random.default_rng(3).standard_normal(300)
        d = rolling_slowness(y, 20)
        expected = [slowness_oracle(y[i : i + 20]) for i in range(0, 281, 37)]
        np.testing.assert_allclose(d[::37], expected, rtol=1e-10)

    def test_flat_segment_is_sentinel(self):
        y = np.random.default_rng(4).standard_normal(400)
        y[100:250] = 7.0
        d, degenerate = rolling_slowness(y, 55, return_degenerate=True)
        assert degenerate[100:196].all()
        assert np.all(d[100:196] == FAST_SENTINEL)
        assert not degenerate[:46].any()

    def test_too_short(self):
        with pytest.raises(RecordingTooShort):
            rolling_slowness(np.ones(10), 55)


class TestDetect:
    def test_noise_only_is_empty(self):
        rec = Recording(np.random.default_rng(5).standard_normal(50_000))
        cat = detect_spikes(rec)
        assert len(cat) == 0
        assert cat.windows is None

    def test_recovers_synthetic_train(self, train):
        cat = detect_spikes(train.recording)
        c = 27
        peaks = train.onsets + c
        found = cat.onsets + cat.align_index
        dist = np.abs(peaks[:, None] - found[None, :]).min(axis=1)
        assert np.mean(dist <= 3) >= 0.95

    def test_catalog_invariants(self, train):
        cat = detect_spikes(train.recording)
        assert cat.windows.length == 55
        assert np.all(np.diff(cat.onsets) >= DetectorConfig().separation)
        for w in cat.raw_windows:
            assert np.argmax(w - w.mean()) == cat.align_index
        np.testing.assert_allclose(cat.windows.values.mean(axis=1), 0, atol=1e-12)
        np.testing.assert_allclose(cat.windows.values.var(axis=1), 1, atol=1e-12)
        assert np.all(cat.slowness < DetectorConfig().tol)

    def test_scale_invariant(self, train):
        a = detect_spikes(train.recording)
        b = detect_spikes(train.recording.scaled(1e-4))
        np.testing.assert_array_equal(a.onsets, b.onsets)

    def test_shift_equivariant(self, train):
        m = 137
        pad = np.random.default_rng(6).standard_normal(m)
        a = detect_spikes(train.recording)
        b = detect_spikes(Recording(np.concatenate([pad, train.recording.samples])))
        np.testing.assert_array_equal(b.onsets, a.onsets + m)

    def test_close_pair_collapses(self):
        tmpl = demo_templates()[0]
        rec = synth_recording([tmpl], [500, 560], noise_sd=1.0, length=1200, seed=1)
        cat = detect_spikes(rec.recording, DetectorConfig(min_separation=100))
        assert len(cat) == 1

    def test_negative_spikes_with_abs_peak(self):
        tmpl = -demo_templates()[0].values
        rec = synth_recording([tmpl], [300, 900], noise_sd=1.0, length=1500, seed=2)
        cat = detect_spikes(rec.recording, DetectorConfig(peak="abs"))
        np.testing.assert_allclose(cat.onsets, [300, 900], atol=3)

    def test_recheck_drops_tails(self, train):
        loose = detect_spikes(train.recording, DetectorConfig(recheck=False))
        strict = detect_spikes(train.recording)
        assert len(strict) <= len(loose)
        assert set(strict.onsets) <= set(loose.onsets)

    def test_too_short(self):
        with pytest.raises(RecordingTooShort):
            detect_spikes(Recording(np.random.default_rng(0).standard_normal(100)))

    def test_alignment_stays_inside(self):
        # spike peaking at the very start cannot be re-centered
        y = np.random.default_rng(7).standard_normal(200) * 0.01
        y[:10] += np.linspace(5, 0, 10)
        assert align_window(y, 0, DetectorConfig()) is None

    @pytest.mark.parametrize(
        "kwargs", [dict(window_len=4), dict(tol=0), dict(tol=2), dict(peak="min"), dict(align_index=55)]
    )
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            DetectorConfig(**kwargs)

    def test_recording_validation(self):
        with pytest.raises(DataError):
            Recording(np.array([1.0, np.inf]))
        with pytest.raises(DataError):
            Recording(np.ones((2, 2)))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100))
def test_detection_scale_invariance_property(seed, c):
    rec = spike_train(demo_templates(), count_per_template=3, seed=seed).recording
    np.testing.assert_array_equal(detect_spikes(rec).onsets, detect_spikes(rec.scaled(c)).onsets)
