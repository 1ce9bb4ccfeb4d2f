"""SI-SDR, delta spectrum and hybrid continuity losses with analytic gradients.

Every loss returns a :class:`LossResult` whose gradient has the shape of the
estimate it was taken with respect to (a waveform, or a magnitude matrix for
the two spectrogram sub-losses).
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import as_matrix, check_pair, check_same_shape
from .delta import DeltaConfig, _delta, _delta_adjoint
from .signal import DEFAULT_RESOLUTIONS, StftConfig, modulus, spectrum_magnitude_vjp, stft

_DB = 10.0 / np.log(10.0)
_TINY = np.finfo(np.float64).tiny


@dataclass(frozen=True)
class LossResult:
    value: float
    gradient: np.ndarray

    def __post_init__(self):
        if not np.isfinite(self.value) or not np.all(np.isfinite(self.gradient)):
            raise FloatingPointError("loss value or gradient is not finite")


@dataclass(frozen=True)
class HybridConfig:
    """Weights and resolutions of the hybrid continuity loss.

    ``gamma`` scales the mean of the per-resolution delta spectrum losses that
    is added to the SI-SDR loss.
    """

    resolutions: tuple = DEFAULT_RESOLUTIONS
    gamma: float = 1.0
    delta: DeltaConfig = field(default_factory=DeltaConfig)
    log_floor: float = 1e-7
    norm_floor: float = 1e-8
    zero_mean: bool = False

    def __post_init__(self):
        object.__setattr__(self, "resolutions", tuple(self.resolutions))
        if not self.resolutions:
            raise ValueError("at least one STFT resolution is required")
        if not all(isinstance(r, StftConfig) for r in self.resolutions):
            raise TypeError("resolutions must be StftConfig instances")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not (self.log_floor > 0 and self.norm_floor > 0):
            raise ValueError("log_floor and norm_floor must be positive")

    @property
    def max_win_length(self):
        return max(r.win_length for r in self.resolutions)


def si_sdr_loss(estimate, reference, zero_mean=False, norm_floor=1e-8):
    """Negative scale-invariant SDR in dB.

    The reference is projected onto the estimate's direction,
    ``target = <est, ref> ref / ||ref||^2``, and the loss is
    ``-10 log10(||target||^2 / max(||est - target||^2, norm_floor))``.
    A perfect estimate therefore scores ``-10 log10(||target||^2 / norm_floor)``
    rather than minus infinity.
    """
    est, ref = check_pair(estimate, reference)
    if zero_mean:
        est = est - est.mean()
        ref = ref - ref.mean()
    ref_energy = float(np.dot(ref, ref))
    if ref_energy <= norm_floor:
        raise ValueError(f"reference is silent (energy {ref_energy:.3g} <= {norm_floor:g})")

    alpha = np.dot(est, ref) / ref_energy
    target = alpha * ref
    error = est - target
    target_energy = float(np.dot(target, target))
    error_energy = float(np.dot(error, error))

    num = max(target_energy, _TINY)
    den = max(error_energy, norm_floor)
    value = -_DB * (np.log(num) - np.log(den))

    grad = -2.0 * _DB * target / num
    if error_energy > norm_floor:
        grad += 2.0 * _DB * error / den
    if zero_mean:
        grad -= grad.mean()
    return LossResult(float(value), grad)


def _frobenius_term(ref_feat, est_feat, norm_floor):
    diff = ref_feat - est_feat
    num = np.linalg.norm(diff)
    den = max(np.linalg.norm(ref_feat), norm_floor)
    # gradient w.r.t. est_feat; zero at the non-differentiable point diff == 0
    grad = -diff / (num * den) if num > 0 else np.zeros_like(diff)
    return num / den, grad


def _three_terms(term, ref, est, cfg, *args):
    """Apply ``term`` to the raw, delta and acceleration features; chain the gradients."""
    ref_d, est_d = _delta(ref, cfg), _delta(est, cfg)
    raw, g_raw = term(ref, est, *args)
    d, g_d = term(ref_d, est_d, *args)
    a, g_a = term(_delta(ref_d, cfg), _delta(est_d, cfg), *args)
    grad = g_raw + _delta_adjoint(g_d + _delta_adjoint(g_a, cfg), cfg)
    return raw + d + a, grad


def _sc(est, ref, cfg, norm_floor):
    return _three_terms(_frobenius_term, ref, est, cfg, norm_floor)


def _logmag(est, ref, cfg, log_floor):
    log_est = np.log(np.maximum(est, log_floor))
    log_ref = np.log(np.maximum(ref, log_floor))
    value, g_log = _three_terms(_l1_term, log_ref, log_est, cfg, est.size)
    grad = np.where(est > log_floor, g_log / np.maximum(est, log_floor), 0.0)
    return value, grad


def _check_mags(est_mag, ref_mag):
    est = as_matrix(est_mag, "est_mag")
    ref = as_matrix(ref_mag, "ref_mag")
    check_same_shape(est, ref, ("est_mag", "ref_mag"))
    if (est < 0).any() or (ref < 0).any():
        raise ValueError("magnitudes must be nonnegative")
    return est, ref


def spectral_convergence_delta(est_mag, ref_mag, delta_cfg=None, norm_floor=1e-8):
    """Spectral convergence of the raw, delta and acceleration magnitudes.

    Sum of three ``||f(R) - f(E)||_F / ||f(R)||_F`` ratios; the gradient is
    with respect to ``est_mag``.
    """
    est, ref = _check_mags(est_mag, ref_mag)
    value, grad = _sc(est, ref, delta_cfg or DeltaConfig(), norm_floor)
    return LossResult(float(value), grad)


def _l1_term(ref_feat, est_feat, n):
    diff = ref_feat - est_feat
    return np.abs(diff).sum() / n, -np.sign(diff) / n


def log_magnitude_delta(est_mag, ref_mag, delta_cfg=None, log_floor=1e-7):
    """Mean absolute log-magnitude error of the raw, delta and acceleration features.

    Magnitudes are floored at ``log_floor`` before the natural log. Each of the
    three L1 terms is divided by the number of time-frequency bins.
    """
    est, ref = _check_mags(est_mag, ref_mag)
    value, grad = _logmag(est, ref, delta_cfg or DeltaConfig(), log_floor)
    return LossResult(float(value), grad)


def _delta_spectrum_parts(est, ref, config, delta_cfg, log_floor, norm_floor):
    est_spec = stft(est, config).data
    ref_mag = modulus(stft(ref, config).data)
    est_mag = modulus(est_spec)
    sc, g_sc = _sc(est_mag, ref_mag, delta_cfg, norm_floor)
    mag, g_mag = _logmag(est_mag, ref_mag, delta_cfg, log_floor)
    grad = spectrum_magnitude_vjp(est_spec, config, g_sc + g_mag, est.size)
    return sc + mag, grad


def delta_spectrum_loss(
    estimate, reference, config=None, delta_cfg=None, log_floor=1e-7, norm_floor=1e-8
):
    """Spectral-convergence plus log-magnitude delta loss at one STFT resolution.

    The gradient is with respect to the estimated waveform.
    """
    config = config or DEFAULT_RESOLUTIONS[0]
    est, ref = check_pair(estimate, reference, min_length=config.win_length)
    value, grad = _delta_spectrum_parts(
        est, ref, config, delta_cfg or DeltaConfig(), log_floor, norm_floor
    )
    return LossResult(float(value), grad)


def hybrid_loss(estimate, reference, config=None):
    """SI-SDR loss plus ``gamma`` times the mean multi-resolution delta spectrum loss."""
    config = config or HybridConfig()
    est, ref = check_pair(estimate, reference, min_length=config.max_win_length)
    time = si_sdr_loss(est, ref, config.zero_mean, config.norm_floor)
    if config.gamma == 0:
        return time

    freq_value = 0.0
    freq_grad = np.zeros_like(est)
    for res in config.resolutions:
        v, g = _delta_spectrum_parts(
            est, ref, res, config.delta, config.log_floor, config.norm_floor
        )
        freq_value += v
        freq_grad += g
    m = len(config.resolutions)
    value = time.value + config.gamma * (freq_value / m)
    grad = time.gradient + (config.gamma / m) * freq_grad
    return LossResult(float(value), grad)
