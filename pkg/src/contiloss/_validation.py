"""Input validation helpers shared by every module."""

import numpy as np
from sklearn.utils.validation import check_array


def as_samples(x, name="signal"):
    """Return ``x`` as a finite, 1-D float64 array.

    Accepts a :class:`~contiloss.signal.Waveform` or any array-like.
    """
    samples = getattr(x, "samples", x)
    try:
        arr = check_array(
            np.asarray(samples, dtype=np.float64).reshape(1, -1),
            dtype=np.float64,
            ensure_all_finite=True,
            ensure_min_samples=1,
            ensure_min_features=1,
        )
    except ValueError as exc:
        raise ValueError(f"{name}: {exc}") from None
    if np.ndim(samples) != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {np.shape(samples)}")
    return arr[0]


def as_matrix(x, name="matrix"):
    """Return ``x`` (array-like or spectrogram object) as a finite 2-D float64 array."""
    data = getattr(x, "data", x)
    data = np.asarray(data)
    if np.iscomplexobj(data):
        raise ValueError(f"{name} must be real-valued")
    if data.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {data.shape}")
    if data.size == 0:
        raise ValueError(f"{name} is empty")
    return check_array(data, dtype=np.float64, ensure_all_finite=True)


def check_pair(estimate, reference, min_length=1):
    """Validate an (estimate, reference) pair of equal-length signals."""
    est = as_samples(estimate, "estimate")
    ref = as_samples(reference, "reference")
    if est.shape != ref.shape:
        raise ValueError(
            f"length mismatch: estimate has {est.size} samples, reference has {ref.size}"
        )
    if est.size < min_length:
        raise ValueError(
            f"signals of length {est.size} are shorter than one window ({min_length})"
        )
    return est, ref


def check_same_shape(a, b, names=("estimate", "reference")):
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {names[0]} {a.shape} vs {names[1]} {b.shape}")
