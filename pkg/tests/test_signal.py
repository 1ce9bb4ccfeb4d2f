import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.io import wavfile

from contiloss.signal import (
    DEFAULT_RESOLUTIONS,
    ComplexSpectrogram,
    StftConfig,
    Waveform,
    frame_signal,
    get_window,
    istft,
    magnitude,
    magnitude_stft_vjp,
    overlap_add,
    stft,
)
from contiloss.wavio import UnsupportedEncodingError, WavFormatError, load_wav, save_wav

from conftest import central_difference


def naive_stft(x, cfg):
    """Direct DFT sum per frame over the full window (no FFT)."""
    win = get_window(cfg.window, cfg.win_length)
    n_frames = (len(x) - cfg.win_length) // cfg.hop + 1
    n = np.arange(cfg.win_length)
    out = np.zeros((n_frames, cfg.fft_size // 2 + 1), dtype=complex)
    for k in range(n_frames):
        seg = x[k * cfg.hop : k * cfg.hop + cfg.win_length] * win
        for b in range(cfg.fft_size // 2 + 1):
            out[k, b] = np.sum(seg * np.exp(-2j * np.pi * b * n / cfg.fft_size))
    return out


# --- Waveform / config -------------------------------------------------------


def test_waveform_rejects_nan():
    with pytest.raises(ValueError):
        Waveform([0.0, np.nan])


def test_waveform_rejects_bad_rate():
    with pytest.raises(ValueError):
        Waveform([0.0, 1.0], sample_rate=0)


def test_waveform_is_read_only():
    w = Waveform([0.0, 1.0])
    with pytest.raises(ValueError):
        w.samples[0] = 2.0


@pytest.mark.parametrize("args", [(500, 50, 240), (512, 0, 240), (512, 300, 240)])
def test_stft_config_invariants(args):
    with pytest.raises(ValueError):
        StftConfig(*args)


def test_window_longer_than_fft_is_allowed():
    cfg = StftConfig(512, 120, 600)
    assert cfg.folded and cfg.n_bins == 257


# --- WAV I/O -----------------------------------------------------------------


def test_load_pcm16_scaling(tmp_path):
    path = tmp_path / "a.wav"
    wavfile.write(path, 16000, np.array([0, 16384, -16384, 0], dtype=np.int16))
    w = load_wav(path)
    np.testing.assert_allclose(w.samples, [0.0, 0.5, -0.5, 0.0], atol=1 / 32768)
    assert w.sample_rate == 16000


def test_load_stereo_averages(tmp_path):
    path = tmp_path / "s.wav"
    data = np.stack([np.ones(8, np.float32), np.zeros(8, np.float32)], axis=1)
    wavfile.write(path, 8000, data)
    np.testing.assert_array_equal(load_wav(path).samples, np.full(8, 0.5))


def test_load_missing(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_wav(tmp_path / "nope.wav")


def test_load_malformed(tmp_path):
    path = tmp_path / "bad.wav"
    path.write_bytes(b"NOTAWAVEFILE" * 4)
    with pytest.raises(WavFormatError):
        load_wav(path)


def test_load_unsupported_encoding(tmp_path):
    path = tmp_path / "i32.wav"
    wavfile.write(path, 16000, np.arange(16, dtype=np.int32))
    with pytest.raises(UnsupportedEncodingError):
        load_wav(path)


def test_float32_round_trip_bit_identical(tmp_path, rng):
    x = rng.uniform(-1, 1, 1000).astype(np.float32).astype(np.float64)
    save_wav(Waveform(x, 22050), tmp_path / "f.wav", "float32")
    w = load_wav(tmp_path / "f.wav")
    assert w.sample_rate == 22050
    np.testing.assert_array_equal(w.samples, x)


def test_pcm16_round_trip(tmp_path):
    assert save_wav(Waveform([0.5, -0.25, 0.0]), tmp_path / "p.wav", "pcm16") == 0
    np.testing.assert_allclose(load_wav(tmp_path / "p.wav").samples, [0.5, -0.25, 0.0], atol=1 / 32768)


def test_pcm16_clipping_counted(tmp_path):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        clipped = save_wav(Waveform([1.5, 0.0]), tmp_path / "c.wav", "pcm16")
    assert clipped == 1
    assert load_wav(tmp_path / "c.wav").samples[0] == pytest.approx(1.0, abs=1 / 32768)


def test_save_unwritable(tmp_path):
    with pytest.raises(OSError):
        save_wav(Waveform([0.0]), tmp_path / "missing_dir" / "x.wav")


# --- framing -----------------------------------------------------------------


def test_frame_count_example():
    frames = frame_signal(np.arange(600.0), StftConfig(512, 120, 240))
    assert frames.shape == (4, 240)
    np.testing.assert_array_equal(frames[1], np.arange(120.0, 360.0))


def test_single_frame_equals_signal(rng):
    x = rng.standard_normal(240)
    np.testing.assert_array_equal(frame_signal(x, StftConfig(256, 120, 240)), x[None])


def test_frame_too_short():
    with pytest.raises(ValueError):
        frame_signal(np.zeros(100), StftConfig(512, 120, 240))


@given(length=st.integers(240, 3000), hop=st.integers(1, 240))
@settings(max_examples=50, deadline=None)
def test_frame_count_formula(length, hop):
    cfg = StftConfig(256, hop, 240)
    assert frame_signal(np.zeros(length), cfg).shape[0] == (length - 240) // hop + 1


# --- STFT --------------------------------------------------------------------


def test_stft_of_zeros():
    assert not np.any(stft(np.zeros(1024), DEFAULT_RESOLUTIONS[0]).data)


def test_stft_pure_tone_concentrates_in_bin():
    cfg = StftConfig(64, 32, 64, window="rect")
    x = np.cos(2 * np.pi * 5 * np.arange(256) / 64)
    spec = np.abs(stft(x, cfg).data)
    np.testing.assert_allclose(spec[:, 5], 32.0, rtol=1e-12)
    spec[:, 5] = 0.0
    assert spec.max() < 1e-10
    np.testing.assert_allclose(stft(x, cfg).data, naive_stft(x, cfg), atol=1e-10)


@pytest.mark.parametrize("cfg", [*DEFAULT_RESOLUTIONS, StftConfig(512, 120, 600)])
def test_stft_matches_naive_dft(cfg, rng):
    x = rng.standard_normal(2048)
    fast = stft(x, cfg).data
    slow = naive_stft(x, cfg)
    assert np.max(np.abs(fast - slow)) <= 1e-10 * np.max(np.abs(slow))


def test_stft_linearity(rng):
    cfg = DEFAULT_RESOLUTIONS[1]
    x, y = rng.standard_normal((2, 3000))
    a, b = 1.7, -0.3
    lhs = stft(a * x + b * y, cfg).data
    rhs = a * stft(x, cfg).data + b * stft(y, cfg).data
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * np.max(np.abs(rhs))


def test_magnitude_examples(rng):
    cfg = StftConfig(4, 1, 4)
    spec = ComplexSpectrogram(np.array([[3 + 4j, 0, 1j]]), cfg, 4)
    np.testing.assert_array_equal(magnitude(spec).data, [[5.0, 0.0, 1.0]])
    data = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
    mag = magnitude(ComplexSpectrogram(data, cfg, 8)).data
    np.testing.assert_array_equal(mag, np.sqrt(data.real**2 + data.imag**2))
    assert (mag >= 0).all()


# --- magnitude-STFT vector-Jacobian product -----------------------------------


def test_vjp_zero_upstream(rng):
    cfg = DEFAULT_RESOLUTIONS[0]
    x = rng.standard_normal(1024)
    up = np.zeros_like(stft(x, cfg).data, dtype=float)
    assert not np.any(magnitude_stft_vjp(x, cfg, up))


@pytest.mark.parametrize("cfg", [DEFAULT_RESOLUTIONS[0], StftConfig(512, 120, 600)])
def test_vjp_matches_finite_differences(cfg, rng):
    x = rng.standard_normal(1024)
    up = rng.standard_normal(stft(x, cfg).data.shape)
    grad = magnitude_stft_vjp(x, cfg, up)

    def f(y):
        return np.sum(up * np.abs(stft(y, cfg).data))

    coords = rng.choice(cfg.covered_length(cfg.n_frames(1024)), 20, replace=False)
    fd = np.array([central_difference(f, x, i, 1e-4) for i in coords])
    rel = np.abs(fd - grad[coords]) / np.maximum(np.abs(fd), np.abs(grad[coords]))
    assert rel.max() <= 1e-4


def test_vjp_shape_mismatch(rng):
    with pytest.raises(ValueError):
        magnitude_stft_vjp(rng.standard_normal(1024), DEFAULT_RESOLUTIONS[0], np.zeros((3, 3)))


def test_vjp_of_silence_is_finite():
    cfg = DEFAULT_RESOLUTIONS[0]
    x = np.zeros(1024)
    up = np.ones(stft(x, cfg).data.shape)
    assert np.all(np.isfinite(magnitude_stft_vjp(x, cfg, up)))


# --- overlap-add / inverse STFT ------------------------------------------------


def test_overlap_add_single_frame(rng):
    f = rng.standard_normal((1, 7))
    np.testing.assert_array_equal(overlap_add(f, 3, 7), f[0])


def test_overlap_add_constant_frames():
    np.testing.assert_array_equal(overlap_add(np.ones((2, 4)), 2, 6), [1, 1, 2, 2, 1, 1])


def test_overlap_add_matches_scatter(rng):
    frames = rng.standard_normal((6, 10))
    hop, total = 3, 30
    expected = np.zeros(total)
    for k in range(6):
        for n in range(10):
            expected[k * hop + n] += frames[k, n]
    np.testing.assert_array_equal(overlap_add(frames, hop, total), expected)


def test_overlap_add_inconsistent_length():
    with pytest.raises(ValueError):
        overlap_add(np.ones((3, 4)), 2, 7)


@pytest.mark.parametrize(
    "cfg", [*DEFAULT_RESOLUTIONS, StftConfig(512, 120, 600), StftConfig(256, 64, 600)]
)
def test_istft_round_trip_interior(cfg, rng):
    x = rng.standard_normal(4096)
    y = istft(stft(x, cfg)).samples
    w = cfg.win_length
    end = cfg.covered_length(cfg.n_frames(x.size))
    err = np.max(np.abs(y[w : end - w] - x[w : end - w]))
    assert err <= 1e-6 * np.max(np.abs(x[w : end - w]))


@pytest.mark.parametrize("cfg", [StftConfig(64, 16, 100), StftConfig(32, 8, 80), StftConfig(64, 16, 48)])
def test_istft_matches_dense_least_squares(cfg, rng):
    # arbitrary (inconsistent) spectrogram: istft must solve the normal equations
    n_frames = 9
    length = cfg.covered_length(n_frames)
    data = rng.standard_normal((n_frames, cfg.n_bins)) + 1j * rng.standard_normal((n_frames, cfg.n_bins))
    targets = np.fft.irfft(data, n=cfg.fft_size, axis=1)
    win = cfg.get_window()
    rows = []
    for k in range(n_frames):
        block = np.zeros((cfg.fft_size, length))
        for i in range(cfg.win_length):
            block[i % cfg.fft_size, k * cfg.hop + i] += win[i]
        rows.append(block)
    a = np.vstack(rows)
    expected = np.linalg.lstsq(a, targets.ravel(), rcond=None)[0]
    y = istft(ComplexSpectrogram(data, cfg, length)).samples
    np.testing.assert_allclose(y, expected, atol=1e-9)


def test_istft_zero_spectrogram():
    cfg = DEFAULT_RESOLUTIONS[0]
    spec = ComplexSpectrogram(np.zeros((5, cfg.n_bins), complex), cfg, 1000)
    y = istft(spec)
    assert len(y) == 1000 and not np.any(y.samples)


def test_istft_single_frame(rng):
    cfg = StftConfig(256, 120, 240)
    x = rng.standard_normal(240)
    y = istft(stft(x, cfg)).samples
    # the periodic Hann window is exactly zero at sample 0
    np.testing.assert_allclose(y[1:], x[1:], rtol=0, atol=1e-10)


def test_istft_rejects_uncovered_interior():
    cfg = StftConfig(64, 64, 64)  # Hann at hop == window leaves zeros at frame joins
    with pytest.raises(ValueError):
        istft(stft(np.ones(64 * 6), cfg))
