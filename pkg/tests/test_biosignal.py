from math import isclose

import numpy as np
import pytest
from scipy.signal import sosfreqz

from softcircuit.biosignal import (
    ECG_BAND_HZ,
    EMG_BAND_HZ,
    FilterKind,
    FilterSpec,
    SignalRecording,
    apply_filter,
    condition,
    design_filter,
    detect_r_peaks,
    is_stable,
    rms_envelope,
)
from softcircuit.exceptions import ValidationError
from softcircuit.repro import impulse_train

FS = 250.0


def _magnitude_db(sos, frequency_hz, sample_rate_hz):
    _, response = sosfreqz(sos, worN=[frequency_hz], fs=sample_rate_hz)
    return 20 * np.log10(np.abs(response[0]))


def test_recording_input_referred():
    recording = SignalRecording(np.array([24.0, -48.0]), FS, 24.0)
    referred = recording.input_referred()
    assert referred.samples.tolist() == [1.0, -2.0]
    assert referred.gain == 1.0
    assert len(referred) == 2


def test_recording_validation():
    with pytest.raises(ValidationError):
        SignalRecording(np.array([1.0, np.nan]))
    with pytest.raises(ValidationError):
        SignalRecording(np.zeros((2, 2)))
    with pytest.raises(ValidationError):
        SignalRecording(np.zeros(4), sample_rate_hz=0.0)


def test_filter_spec():
    notch = FilterSpec.notch(60.0)
    assert notch.kind is FilterKind.NOTCH
    assert notch.f_low_hz == notch.f_high_hz == 60.0
    assert FilterSpec.highpass(5.0).f_low_hz == 5.0
    assert FilterSpec.lowpass(55.0).f_high_hz == 55.0
    with pytest.raises(ValidationError):
        FilterSpec.bandpass(55.0, 5.0)
    with pytest.raises(ValidationError):
        FilterSpec(FilterKind.LOWPASS)


def test_design_filter_shapes():
    assert design_filter(FilterSpec.notch(60.0), FS).shape == (1, 6)
    assert design_filter(FilterSpec.bandpass(*ECG_BAND_HZ), FS).shape == (2, 6)
    assert design_filter(FilterSpec.bandpass(5.0, 55.0, order=4), FS).shape == (4, 6)


def test_design_filter_rejects_frequencies_outside_nyquist():
    with pytest.raises(ValidationError):
        design_filter(FilterSpec.lowpass(130.0), FS)
    with pytest.raises(ValidationError):
        design_filter(FilterSpec.highpass(125.0), FS)
    with pytest.raises(ValidationError):
        design_filter(FilterSpec.bandpass(*EMG_BAND_HZ), 200.0)


def test_butterworth_cutoffs_are_3_db_down():
    for spec, cutoff in (
        (FilterSpec.highpass(5.0), 5.0),
        (FilterSpec.lowpass(55.0), 55.0),
        (FilterSpec.highpass(2.0), 2.0),
        (FilterSpec.lowpass(100.0), 100.0),
    ):
        assert isclose(_magnitude_db(design_filter(spec, FS), cutoff, FS), -3.0103, abs_tol=0.01)


def test_notch_removes_mains():
    t = np.arange(int(10 * FS)) / FS
    sine = np.sin(2 * np.pi * 60.0 * t)
    filtered = apply_filter(design_filter(FilterSpec.notch(60.0), FS), sine)
    settled = int(2 * FS)
    ratio = np.sqrt(np.mean(filtered[settled:] ** 2) / np.mean(sine[settled:] ** 2))
    assert 20 * np.log10(ratio) <= -40


def test_notch_passes_ecg_band():
    sos = design_filter(FilterSpec.notch(60.0), FS)
    assert abs(_magnitude_db(sos, 20.0, FS)) < 0.1


def test_notch_is_flat_at_dc_and_nyquist():
    sos = design_filter(FilterSpec.notch(60.0), FS)
    _, response = sosfreqz(sos, worN=[0.0, FS / 2], fs=FS)
    assert np.all(20 * np.log10(np.abs(response)) >= -0.1)


def test_bandpass_centre_matches_analytic_butterworth():
    low, high = ECG_BAND_HZ
    centre = np.sqrt(low * high)

    def warped(f):
        return np.tan(np.pi * f / FS)

    highpass = 1 / np.sqrt(1 + (warped(low) / warped(centre)) ** 4)
    lowpass = 1 / np.sqrt(1 + (warped(centre) / warped(high)) ** 4)
    expected_db = 20 * np.log10(highpass * lowpass)
    observed_db = _magnitude_db(design_filter(FilterSpec.bandpass(low, high), FS), centre, FS)
    assert abs(observed_db - expected_db) <= 0.5


def test_apply_filter_is_linear():
    rng = np.random.default_rng(21)
    for spec in (FilterSpec.notch(60.0), FilterSpec.bandpass(*ECG_BAND_HZ), FilterSpec.bandpass(*EMG_BAND_HZ)):
        sos = design_filter(spec, FS)
        for _ in range(10):
            x, y = rng.normal(size=(2, 500))
            a, b = rng.uniform(-5, 5, size=2)
            combined = apply_filter(sos, a * x + b * y)
            separate = a * apply_filter(sos, x) + b * apply_filter(sos, y)
            scale = np.max(np.abs(separate))
            assert np.max(np.abs(combined - separate)) <= 1e-9 * scale


def test_stability():
    assert is_stable(design_filter(FilterSpec.bandpass(*EMG_BAND_HZ), FS))
    assert is_stable(design_filter(FilterSpec.notch(60.0, 5.0), FS))
    assert not is_stable(np.array([[1.0, 0.0, 0.0, 1.0, -2.5, 1.5]]))


def test_filtering_is_causal():
    x = np.zeros(200)
    x[50] = 1.0
    y = apply_filter(design_filter(FilterSpec.bandpass(*ECG_BAND_HZ), FS), x)
    assert np.all(y[:50] == 0.0)
    assert y[50] != 0.0


def test_condition_chain():
    t = np.arange(int(4 * FS)) / FS
    raw = 24.0 * (np.sin(2 * np.pi * 20.0 * t) + np.sin(2 * np.pi * 60.0 * t))
    conditioned = condition(SignalRecording(raw, FS, 24.0), ECG_BAND_HZ)
    assert conditioned.gain == 1.0
    assert len(conditioned) == raw.size
    tail = conditioned.samples[int(2 * FS):]
    # the 20 Hz component survives with roughly unit amplitude
    assert 0.5 < np.sqrt(2 * np.mean(tail**2)) < 1.2


def test_rms_envelope():
    envelope = rms_envelope(np.full(100, -2.0), 50)
    assert np.allclose(envelope.values, 2.0)
    assert envelope.window_samples == 50
    x = np.array([3.0, -4.0, 0.0])
    assert np.allclose(rms_envelope(x, 1).values, [3.0, 4.0, 0.0])
    assert np.allclose(rms_envelope(x, 2).values, [3.0, np.sqrt(12.5), np.sqrt(8.0)])
    with pytest.raises(ValidationError):
        rms_envelope(x, 0)


def test_r_peaks_of_impulse_train():
    fs = 1000.0
    features = detect_r_peaks(SignalRecording(impulse_train(630, 20, fs), fs, 1.0))
    assert features.sufficient_beats
    assert len(features.r_peak_indices) == 20
    assert all(rr == 630.0 for rr in features.rr_intervals_ms)
    assert isclose(features.heart_rate_bpm, 60_000 / 630, rel_tol=1e-12)
    assert round(features.heart_rate_bpm) == 95


def test_refractory_rejects_close_spike():
    fs = 1000.0
    train = impulse_train(630, 20, fs)
    clean = detect_r_peaks(SignalRecording(train, fs, 1.0))
    for height in (0.7, 1.2, 5.0):
        spiked = train.copy()
        spiked[clean.r_peak_indices[4] + 100] = height
        features = detect_r_peaks(SignalRecording(spiked, fs, 1.0))
        assert features.r_peak_indices == clean.r_peak_indices
        assert features.rr_intervals_ms == clean.rr_intervals_ms


def test_peak_after_refractory_period_is_kept():
    fs = 1000.0
    x = np.zeros(3000)
    x[[500, 650, 750, 1400]] = [1.0, 1.5, 1.0, 1.0]
    # 650 falls in the dead time of 500, 750 does not
    assert detect_r_peaks(SignalRecording(x, fs, 1.0)).r_peak_indices == (500, 750, 1400)


def test_r_peaks_use_only_past_samples():
    fs = 1000.0
    train = impulse_train(630, 10, fs)
    x = np.zeros(8000)
    x[: train.size] = train
    last = detect_r_peaks(SignalRecording(train, fs, 1.0)).r_peak_indices[-1]
    # a tall beat 0.7 s after the train sits inside any centred 2 s window around it
    x[last + 700] = 4.0
    early = detect_r_peaks(SignalRecording(x[: last + 350], fs, 1.0)).r_peak_indices
    full = detect_r_peaks(SignalRecording(x, fs, 1.0)).r_peak_indices
    assert len(early) == 10
    assert full == early + (last + 700,)


def test_insufficient_beats():
    x = np.zeros(1000)
    x[400] = 1.0
    features = detect_r_peaks(SignalRecording(x, FS, 1.0))
    assert not features.sufficient_beats
    assert features.heart_rate_bpm is None
    assert features.r_peak_indices == (400,)
    assert not detect_r_peaks(SignalRecording(np.zeros(500), FS, 1.0)).sufficient_beats
