"""Hybrid continuity loss toolkit.

Time-domain SI-SDR plus a multi-resolution delta spectrum loss, both with
analytic gradients, together with over/under-suppression metrics, mixture
simulation and a mask-optimisation demo.
"""

from .delta import DeltaConfig, acceleration, delta, delta_adjoint
from .demo import AbReport, MaskExtractor, MaskParams, apply_mask, optimize_mask, run_ab_experiment
from .losses import (
    HybridConfig,
    LossResult,
    delta_spectrum_loss,
    hybrid_loss,
    log_magnitude_delta,
    si_sdr_loss,
    spectral_convergence_delta,
)
from .metrics import (
    SuppressionReport,
    TranscriptPair,
    edit_distance_rate,
    sdr_metric,
    si_sdr_metric,
    suppression_mae,
)
from .mixsim import MixResult, MixSpec, fit_length, make_mixture, sample_mix_plan, scale_to_snr
from .signal import (
    DEFAULT_RESOLUTIONS,
    SUPPRESSION_CONFIG,
    ComplexSpectrogram,
    MagnitudeSpectrogram,
    StftConfig,
    Waveform,
    frame_signal,
    istft,
    magnitude,
    magnitude_stft_vjp,
    overlap_add,
    stft,
)
from .wavio import UnsupportedEncodingError, WavFormatError, load_wav, save_wav

__version__ = "0.1.0"
