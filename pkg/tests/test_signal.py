import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import direct_dft, oracle_single_sided
from liftrisk.errors import EmptyRecordingError, SamplingError, ValidationError
from liftrisk.fft import fft, next_pow2, rfft_padded
from liftrisk.signal import (
    EmgRecording,
    Window,
    average_peak,
    fft_magnitude,
    load_recording,
    rectify,
    segment,
    session_average_peak,
    write_recording,
)
from liftrisk.synth import GeneratorParams, generate_session, origin_task


def recording(values, rate=100.0):
    return EmgRecording(sample_rate=rate, samples=np.asarray(values, dtype=float))


def write_csv(path, times, values=None):
    values = values if values is not None else [0.0] * len(times)
    lines = ["time_s,emg_uV"] + [f"{t},{v}" for t, v in zip(times, values)]
    path.write_text("\n".join(lines) + "\n")
    return path


# -- fft ----------------------------------------------------------------------


def test_next_pow2():
    assert [next_pow2(n) for n in (1, 2, 3, 64, 65, 1000)] == [1, 2, 4, 64, 128, 1024]


@pytest.mark.parametrize("n", [1, 2, 4, 8, 64, 1024])
def test_fft_matches_direct_dft(n):
    x = np.random.default_rng(n).normal(size=n)
    np.testing.assert_allclose(fft(x), direct_dft(x), rtol=0, atol=1e-9 * max(1, np.abs(x).sum()))


def test_fft_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        fft(np.ones(6))


def test_fft_batched_rows_are_independent():
    X = np.random.default_rng(1).normal(size=(5, 32))
    batched = fft(X)
    for row, out in zip(X, batched):
        np.testing.assert_allclose(out, fft(row), atol=1e-12)


def test_rfft_padded_zero_pads():
    x = np.arange(5.0)
    padded = np.concatenate([x, np.zeros(3)])
    np.testing.assert_allclose(rfft_padded(x), direct_dft(padded)[:5], atol=1e-12)


# -- fft_magnitude ------------------------------------------------------------


def test_constant_window():
    spec = fft_magnitude(np.full(64, 3.5), 100.0)
    assert spec.magnitudes[0] == pytest.approx(3.5, abs=1e-9)
    assert np.all(np.abs(spec.magnitudes[1:]) < 1e-9)


def test_bin_aligned_sinusoid():
    n, rate, k, a = 256, 256.0, 17, 4.2
    t = np.arange(n) / rate
    x = a * np.sin(2 * np.pi * k * t + 0.3)
    mags = fft_magnitude(x, rate).magnitudes
    assert mags[k] == pytest.approx(a, abs=1e-9)
    assert np.all(np.delete(mags, k) < 1e-9)


def test_random_1024_window_matches_oracle():
    x = np.random.default_rng(3).normal(size=1024)
    got = fft_magnitude(x, 1000.0).magnitudes
    want = oracle_single_sided(x)
    assert np.max(np.abs(got - want) / np.maximum(np.abs(want), 1e-300)) < 1e-9


def test_spectrum_shape_and_bin_width():
    spec = fft_magnitude(np.ones(500), 1000.0)
    assert spec.magnitudes.size == 512 // 2 + 1
    assert spec.bin_width == pytest.approx(1000.0 / 512)
    assert spec.frequencies[-1] == pytest.approx(500.0)


def test_empty_window_rejected():
    with pytest.raises(ValidationError):
        fft_magnitude(np.array([]), 100.0)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.integers(1, 300), elements=st.floats(-1e3, 1e3)))
def test_parseval(x):
    n = next_pow2(x.size)
    X = rfft_padded(x, n)
    two_sided = np.concatenate([X, np.conj(X[1 : n - n // 2])[::-1]])
    energy = float(np.sum(x * x))
    assert np.sum(np.abs(two_sided) ** 2) / n == pytest.approx(energy, rel=1e-9, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.integers(2, 300), elements=st.floats(-1e3, 1e3)), st.floats(1e-3, 1e3))
def test_magnitude_scales_linearly(x, c):
    base = fft_magnitude(x, 100.0).magnitudes
    scaled = fft_magnitude(c * x, 100.0).magnitudes
    np.testing.assert_allclose(scaled, c * base, rtol=1e-9, atol=1e-9 * c * max(1.0, np.abs(x).sum()))


# -- loading ------------------------------------------------------------------


def test_load_three_rows(tmp_path):
    r = load_recording(write_csv(tmp_path / "a.csv", [0.000, 0.001, 0.002], [1, -2, 3]))
    assert r.sample_rate == pytest.approx(1000.0)
    np.testing.assert_array_equal(r.samples, [1, -2, 3])
    assert r.meta.session_id == "a"
    assert r.meta.site == "TH"


def test_load_empty_file(tmp_path):
    (tmp_path / "e.csv").write_text("")
    with pytest.raises(EmptyRecordingError):
        load_recording(tmp_path / "e.csv")


def test_load_header_only(tmp_path):
    (tmp_path / "h.csv").write_text("time_s,emg_uV\n")
    with pytest.raises(EmptyRecordingError):
        load_recording(tmp_path / "h.csv")


def test_load_jittered_steps(tmp_path):
    with pytest.raises(SamplingError):
        load_recording(write_csv(tmp_path / "j.csv", [0, 0.001, 0.005]))


def test_load_non_monotone(tmp_path):
    with pytest.raises(SamplingError):
        load_recording(write_csv(tmp_path / "n.csv", [0, 0.002, 0.001]))


def test_load_missing_column(tmp_path):
    (tmp_path / "m.csv").write_text("t,x\n0,1\n0.001,2\n")
    with pytest.raises(Exception, match="expected columns"):
        load_recording(tmp_path / "m.csv")


def test_write_then_load_round_trips(tmp_path):
    r = generate_session(origin_task(10, 15), 2.0, GeneratorParams(seed=1))
    write_recording(tmp_path / "r.csv", r)
    back = load_recording(tmp_path / "r.csv")
    assert back.sample_rate == pytest.approx(1000.0, rel=1e-9)
    np.testing.assert_array_equal(back.samples, r.samples)


def test_recording_rejects_non_finite():
    with pytest.raises(ValidationError):
        recording([1.0, np.nan])
    with pytest.raises(ValidationError):
        EmgRecording(sample_rate=0.0, samples=np.ones(3))


# -- rectify / segment --------------------------------------------------------


def test_rectify_examples():
    np.testing.assert_array_equal(rectify(recording([-3, 2, -1])).samples, [3, 2, 1])
    np.testing.assert_array_equal(rectify(recording([0, 0, 0])).samples, [0, 0, 0])
    r = recording([1, 2, 3])
    np.testing.assert_array_equal(rectify(r).samples, r.samples)
    assert rectify(r).meta == r.meta


@given(arrays(np.float64, st.integers(1, 50), elements=st.floats(-1e6, 1e6)))
def test_rectify_idempotent_and_non_negative(x):
    once = rectify(recording(x))
    assert np.all(once.samples >= 0)
    np.testing.assert_array_equal(rectify(once).samples, once.samples)


def test_segment_counts():
    assert len(segment(recording(np.zeros(1000)), 1.0)) == 10
    assert len(segment(recording(np.zeros(1060)), 1.0)) == 10
    assert len(segment(recording(np.zeros(1000)), 0.25)) == 40
    assert segment(recording(np.zeros(50)), 1.0) == []


def test_segment_windows_are_consecutive():
    x = np.arange(1060.0)
    windows = segment(recording(x), 1.0)
    assert [w.start_index for w in windows] == list(range(0, 1000, 100))
    assert all(w.length == 100 for w in windows)
    np.testing.assert_array_equal(np.concatenate([w.values for w in windows]), x[:1000])


def test_segment_rejects_bad_window():
    with pytest.raises(ValidationError):
        segment(recording(np.zeros(10)), 0.0)
    with pytest.raises(ValidationError):
        segment(recording(np.zeros(10)), 0.001)


@given(st.integers(1, 5000))
def test_segment_ratio_across_window_sizes(n):
    r = recording(np.zeros(n), rate=100.0)
    c1, c2, c4 = (len(segment(r, w)) for w in (1.0, 0.5, 0.25))
    assert c2 - 2 * c1 in (0, 1)
    assert c4 - 2 * c2 in (0, 1)


# -- average peak -------------------------------------------------------------


def test_average_peak_examples():
    windows = [Window(0, np.array([150.0, 1.0])), Window(2, np.array([-160.0, 3.0])), Window(4, np.array([140.0]))]
    assert average_peak(windows) == pytest.approx(150.0)
    assert average_peak(windows[:1]) == 150.0
    with pytest.raises(ValidationError):
        average_peak([])


def test_average_peak_frequency_domain_excludes_dc():
    x = 10.0 + np.sin(2 * np.pi * 4 * np.arange(64) / 64)
    assert average_peak([Window(0, x)], domain="frequency", sample_rate=64.0) == pytest.approx(1.0, abs=1e-9)


def test_synthetic_10lb_session_time_peak():
    r = generate_session(origin_task(10, 15), 60.0, GeneratorParams(seed=42))
    assert 135 <= session_average_peak(r, 1.0, domain="time") <= 165
