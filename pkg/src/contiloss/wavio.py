"""RIFF/WAVE reading and writing (PCM-16 and IEEE float-32)."""

import os
import warnings

import numpy as np
from scipy.io import wavfile

from .signal import Waveform

PCM16_SCALE = 32768.0
ENCODINGS = ("float32", "pcm16")


class WavFormatError(ValueError):
    """The file is not a well-formed RIFF/WAVE file."""


class UnsupportedEncodingError(ValueError):
    """The WAVE file uses a sample encoding other than PCM-16 or float-32."""


def load_wav(path):
    """Read a WAV file as a mono :class:`Waveform`.

    Multichannel files are averaged to mono. PCM-16 is scaled by 1/32768.
    """
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no such WAV file: {path}")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            rate, data = wavfile.read(path)
    except ValueError as exc:
        msg = str(exc)
        if "Unknown wave file format" in msg or "Unsupported bit depth" in msg:
            raise UnsupportedEncodingError(f"{path}: {msg}") from None
        raise WavFormatError(f"{path}: {msg}") from None
    except EOFError as exc:
        raise WavFormatError(f"{path}: truncated file ({exc})") from None

    if data.dtype == np.int16:
        samples = data.astype(np.float64) / PCM16_SCALE
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise UnsupportedEncodingError(
            f"{path}: sample type {data.dtype} is not PCM-16 or float-32"
        )
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    if samples.size == 0:
        raise WavFormatError(f"{path}: no audio samples")
    return Waveform(samples, rate)


def save_wav(wave, path, encoding="float32"):
    """Write ``wave`` to ``path``.

    Returns the number of samples clipped to [-1, 1] (always 0 for float32).
    """
    if encoding not in ENCODINGS:
        raise ValueError(f"encoding must be one of {ENCODINGS}, got {encoding!r}")
    if not isinstance(wave, Waveform):
        wave = Waveform(wave)
    x = wave.samples
    clipped = 0
    if encoding == "pcm16":
        over = np.abs(x) > 1.0
        clipped = int(over.sum())
        if clipped:
            warnings.warn(f"clipped {clipped} samples to [-1, 1] for PCM-16", stacklevel=2)
        ints = np.round(np.clip(x, -1.0, 1.0) * PCM16_SCALE)
        data = np.clip(ints, -32768, 32767).astype(np.int16)
    else:
        data = x.astype(np.float32)
    wavfile.write(os.fspath(path), wave.sample_rate, data)
    return clipped
