"""Waveforms, framing, STFT and its inverse/adjoint.

Frames are taken fully inside the signal (no centre padding); each frame is
windowed, zero-padded to ``fft_size`` and transformed with a one-sided real
FFT. A window longer than ``fft_size`` is folded (time-aliased) onto
``fft_size`` samples first, which yields the exact DFT of the whole windowed
frame at ``fft_size`` frequencies. Spectrogram matrices are laid out
``frames x bins``.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import solve_banded

from ._validation import as_samples

#: Modulus guard used inside gradient paths only; forward magnitudes are exact.
MODULUS_EPS = 1e-12
#: Window-sum-squared values below this are treated as uncovered by istft.
WSS_FLOOR = 1e-8

WINDOWS = ("hann", "rect")


@dataclass(frozen=True)
class Waveform:
    """Mono sampled signal.

    Parameters
    ----------
    samples : array-like
        Real amplitudes, nominally in [-1, 1]. Stored as a read-only float64 array.
    sample_rate : int
        Sampling rate in Hz.
    """

    samples: np.ndarray
    sample_rate: int = 16000

    def __post_init__(self):
        samples = as_samples(self.samples, "samples")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be a positive integer, got {self.sample_rate}")
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.size

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.samples
        return self.samples.astype(dtype)

    @property
    def duration(self):
        return self.samples.size / self.sample_rate

    def energy(self):
        return float(np.dot(self.samples, self.samples))


@dataclass(frozen=True)
class StftConfig:
    fft_size: int = 512
    hop: int = 120
    win_length: int = 600
    window: str = "hann"

    def __post_init__(self):
        n = self.fft_size
        if n <= 0 or n & (n - 1):
            raise ValueError(f"fft_size must be a power of two, got {n}")
        if not 0 < self.hop <= self.win_length:
            raise ValueError(
                f"need 0 < hop <= win_length, got hop={self.hop}, win_length={self.win_length}"
            )
        if self.window not in WINDOWS:
            raise ValueError(f"unknown window {self.window!r}; expected one of {WINDOWS}")

    @property
    def folded(self):
        """True when frames are longer than the FFT and get time-aliased."""
        return self.win_length > self.fft_size

    @property
    def n_bins(self):
        return self.fft_size // 2 + 1

    def n_frames(self, length):
        """Number of full frames that fit in ``length`` samples (0 if none)."""
        if length < self.win_length:
            return 0
        return (length - self.win_length) // self.hop + 1

    def covered_length(self, n_frames):
        """Samples spanned by ``n_frames`` consecutive frames."""
        return (n_frames - 1) * self.hop + self.win_length

    def get_window(self):
        return get_window(self.window, self.win_length)


#: The three analysis resolutions of the multi-resolution loss.
DEFAULT_RESOLUTIONS = (
    StftConfig(512, 50, 240),
    StftConfig(1024, 120, 600),
    StftConfig(2048, 240, 1200),
)
#: Resolution used for the over/under-suppression metrics and the mask demo.
SUPPRESSION_CONFIG = StftConfig(512, 120, 600)


@dataclass(frozen=True)
class ComplexSpectrogram:
    data: np.ndarray
    config: StftConfig
    source_length: int
    sample_rate: int = 16000

    @property
    def shape(self):
        return self.data.shape


@dataclass(frozen=True)
class MagnitudeSpectrogram:
    data: np.ndarray
    config: StftConfig = field(default_factory=StftConfig)

    @property
    def shape(self):
        return self.data.shape

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


def get_window(kind, length):
    """Periodic analysis window of the given kind."""
    if kind == "hann":
        n = np.arange(length)
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / length)
    if kind == "rect":
        return np.ones(length)
    raise ValueError(f"unknown window {kind!r}")


def _sample_rate(wave, default=16000):
    return getattr(wave, "sample_rate", default)


def frame_signal(wave, config):
    """Slice ``wave`` into ``frames x win_length`` rows at stride ``hop``.

    Trailing samples that do not fill a whole frame are dropped.
    """
    x = as_samples(wave, "wave")
    if x.size < config.win_length:
        raise ValueError(
            f"signal of length {x.size} is shorter than one window ({config.win_length})"
        )
    view = np.lib.stride_tricks.sliding_window_view(x, config.win_length)
    return view[:: config.hop].copy()


def stft(wave, config):
    """Complex one-sided STFT, ``frames x (fft_size // 2 + 1)``."""
    frames = frame_signal(wave, config) * config.get_window()
    data = np.fft.rfft(fold_frames(frames, config.fft_size), n=config.fft_size, axis=1)
    return ComplexSpectrogram(
        data=data,
        config=config,
        source_length=len(as_samples(wave, "wave")),
        sample_rate=_sample_rate(wave),
    )


def modulus(z):
    """``sqrt(re^2 + im^2)`` elementwise."""
    return np.sqrt(z.real**2 + z.imag**2)


def magnitude(spec):
    """Elementwise modulus of a complex spectrogram."""
    return MagnitudeSpectrogram(data=modulus(spec.data), config=spec.config)


def stft_magnitude(wave, config):
    """Shortcut for ``magnitude(stft(wave, config)).data``."""
    return modulus(stft(wave, config).data)


def fold_frames(frames, n):
    """Sum consecutive length-``n`` segments of each row (identity if rows are <= n)."""
    width = frames.shape[-1]
    if width <= n:
        return frames
    segments = -(-width // n)
    padded = np.zeros(frames.shape[:-1] + (segments * n,))
    padded[..., :width] = frames
    return padded.reshape(frames.shape[:-1] + (segments, n)).sum(axis=-2)


def unfold_frames(frames, width):
    """Adjoint of :func:`fold_frames`: periodic extension (or truncation) to ``width``."""
    n = frames.shape[-1]
    return frames[..., np.arange(width) % n]


def rfft_adjoint(grad_re, grad_im, n):
    """Pull a gradient w.r.t. (Re, Im) of ``rfft(y, n)`` back onto ``y``.

    Works row-wise on ``frames x bins`` arrays and returns ``frames x n``.
    """
    coef = grad_re + 1j * grad_im
    # irfft doubles the interior bins; undo that so each bin counts once.
    coef[..., 1:-1] *= 0.5
    return n * np.fft.irfft(coef, n=n, axis=-1)


def magnitude_stft_vjp(wave, config, upstream, eps=MODULUS_EPS):
    """Gradient of ``sum(upstream * |STFT(wave)|)`` with respect to ``wave``.

    Parameters
    ----------
    wave : Waveform or array-like
    config : StftConfig
    upstream : ndarray, shape (frames, bins)
        Gradient of a scalar with respect to the magnitude spectrogram.
    eps : float
        Added under the square root of the modulus so silent bins stay finite.

    Returns
    -------
    ndarray
        Same length as ``wave``; samples not covered by any frame get zero.
    """
    x = as_samples(wave, "wave")
    spec = stft(x, config).data
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != spec.shape:
        raise ValueError(
            f"upstream shape {upstream.shape} does not match spectrogram shape {spec.shape}"
        )
    return spectrum_magnitude_vjp(spec, config, upstream, x.size, eps)


def spectrum_magnitude_vjp(spec, config, upstream, length, eps=MODULUS_EPS):
    """:func:`magnitude_stft_vjp` for an already computed complex STFT ``spec``."""
    guarded = np.sqrt(spec.real**2 + spec.imag**2 + eps)
    scale = upstream / guarded
    frames = rfft_adjoint(scale * spec.real, scale * spec.imag, config.fft_size)
    frames = unfold_frames(frames, config.win_length) * config.get_window()
    return overlap_add(frames, config.hop, length)


def overlap_add(frames, hop, total_length):
    """Scatter ``frames`` additively at stride ``hop`` into a signal of ``total_length``."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2:
        raise ValueError(f"frames must be two-dimensional, got shape {frames.shape}")
    n_frames, width = frames.shape
    if hop <= 0:
        raise ValueError(f"hop must be positive, got {hop}")
    needed = (n_frames - 1) * hop + width if n_frames else 0
    if total_length < needed:
        raise ValueError(
            f"total_length {total_length} cannot hold {n_frames} frames of width "
            f"{width} at hop {hop} (needs {needed})"
        )
    out = np.zeros(total_length)
    for k in range(n_frames):
        out[k * hop : k * hop + width] += frames[k]
    return out


def window_sumsquare(config, n_frames, total_length):
    win = config.get_window()
    return overlap_add(np.tile(win**2, (n_frames, 1)), config.hop, total_length)


def _check_wss(wss, config, n_frames):
    covered = config.covered_length(n_frames)
    lo, hi = config.win_length, covered - config.win_length
    if hi > lo and np.any(wss[lo:hi] < WSS_FLOOR):
        bad = lo + int(np.argmax(wss[lo:hi] < WSS_FLOOR))
        raise ValueError(
            f"window sum-square below {WSS_FLOOR:g} at interior sample {bad}; "
            f"config {config} cannot be inverted"
        )


def istft_frames(data, config):
    """Inverse-FFT each spectrogram row and apply the synthesis window."""
    frames = unfold_frames(np.fft.irfft(data, n=config.fft_size, axis=1), config.win_length)
    return frames * config.get_window()


@lru_cache(maxsize=32)
def _gram_bands(config, n_frames, length):
    """Nonzero diagonals of the normal matrix of the framing operator.

    Entry ``j`` holds ``G[i, i + j * fft_size]``; folding only couples samples
    a multiple of ``fft_size`` apart, so there are ``(win_length - 1) //
    fft_size + 1`` of them. Entry 0 is the window sum-square.
    """
    win = config.get_window()
    n = config.fft_size
    bands = []
    for j in range((config.win_length - 1) // n + 1):
        d = j * n
        prod = np.zeros(config.win_length)
        prod[: config.win_length - d] = win[: config.win_length - d] * win[d:]
        band = overlap_add(np.tile(prod, (n_frames, 1)), config.hop, length)
        band.setflags(write=False)
        bands.append(band)
    return tuple(bands)


def _solve_gram(rhs, config, n_frames):
    """Apply the inverse normal matrix to ``rhs`` (in place of dividing by the
    window sum-square, which is only exact without folding).

    Samples whose sum-square is below ``WSS_FLOOR`` are passed through.
    """
    length = rhs.size
    bands = _gram_bands(config, n_frames, length)
    ok = bands[0] > WSS_FLOOR
    if len(bands) == 1:
        out = rhs.copy()
        out[ok] /= bands[0][ok]
        return out

    # Group samples into chains sharing a residue mod fft_size; each chain is a
    # banded system and the chains are independent.
    n = config.fft_size
    chain = -(-length // n)
    padded = chain * n
    q = len(bands) - 1

    def to_chains(v, fill=0.0):
        out = np.full(padded, fill)
        out[:length] = v
        return out.reshape(chain, n).T

    ok_c = to_chains(ok, False).astype(bool)
    ab = np.zeros((2 * q + 1, padded))
    ab[q] = np.where(ok_c, to_chains(bands[0], 1.0), 1.0).ravel()
    for j in range(1, q + 1):
        off = to_chains(bands[j])
        off[:, : chain - j] *= ok_c[:, : chain - j] & ok_c[:, j:]
        off[:, chain - j :] = 0.0
        off = off.ravel()
        ab[q - j, j:] = off[:-j]
        ab[q + j, :-j] = off[:-j]
    sol = solve_banded((q, q), ab, to_chains(rhs).ravel())
    return sol.reshape(n, chain).T.ravel()[:length]


def istft(spec):
    """Least-squares inverse STFT.

    Frames are synthesis-windowed, overlap-added and passed through the
    inverse normal matrix of the framing operator (division by the summed
    squared window when ``win_length <= fft_size``). Samples the window
    never reaches are left unnormalised; the tail past the last frame is zero.
    """
    config = spec.config
    data = np.asarray(spec.data)
    n_frames = data.shape[0]
    if data.shape[1] != config.n_bins:
        raise ValueError(f"spectrogram has {data.shape[1]} bins, config expects {config.n_bins}")
    length = max(spec.source_length, config.covered_length(n_frames))
    y = overlap_add(istft_frames(data, config), config.hop, length)
    _check_wss(_gram_bands(config, n_frames, length)[0], config, n_frames)
    y = _solve_gram(y, config, n_frames)
    return Waveform(y[: spec.source_length], spec.sample_rate)


def istft_adjoint(grad, config, n_frames):
    """Gradient w.r.t. the complex spectrogram entries of ``istft``.

    Returns ``(frames_grad, bin_weight)`` where ``frames_grad`` is the rfft of
    the per-frame time-domain gradient and ``bin_weight`` the per-bin
    multiplicity used by ``irfft``. For a real parameter ``m`` scaling bin
    ``(k, b)`` of spectrogram ``X``, ``dL/dm = bin_weight[b] / fft_size *
    Re(X[k, b] * conj(frames_grad[k, b]))``.
    """
    grad = np.asarray(grad, dtype=np.float64)
    length = max(grad.size, config.covered_length(n_frames))
    g = np.zeros(length)
    g[: grad.size] = grad
    g = _solve_gram(g, config, n_frames)
    view = np.lib.stride_tricks.sliding_window_view(g, config.win_length)[:: config.hop]
    frames = fold_frames(view[:n_frames] * config.get_window(), config.fft_size)
    frames_grad = np.fft.rfft(frames, n=config.fft_size, axis=1)
    bin_weight = np.full(config.n_bins, 2.0)
    bin_weight[0] = 1.0
    bin_weight[-1] = 1.0
    return frames_grad, bin_weight
