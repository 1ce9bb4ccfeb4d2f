"""Mixture simulation: target + SNR-scaled interferences + optional noise.

Random draws use numpy's PCG64 bit generator seeded through ``SeedSequence``,
so a given seed yields the same plan on every platform.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import as_samples
from .signal import Waveform

#: Target-to-interference SNR range in dB.
INTERFERENCE_SNR_RANGE = (-10.0, 10.0)
#: Target-to-noise SNR range in dB.
NOISE_SNR_RANGE = (-5.0, 15.0)
SILENCE_ENERGY = 1e-8


def make_rng(seed):
    """PCG64 generator for an integer seed or a tuple of integers (sub-seeds)."""
    entropy = list(seed) if isinstance(seed, (tuple, list)) else int(seed)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def _wave(x, sample_rate=16000):
    return x if isinstance(x, Waveform) else Waveform(x, sample_rate)


@dataclass(frozen=True)
class MixSpec:
    target: Waveform
    interferences: tuple = ()
    interference_snr_db: tuple = ()
    noise: Waveform = None
    noise_snr_db: float = None
    seed: int = 0
    interference_ids: tuple = ()
    noise_id: str = None

    def __post_init__(self):
        object.__setattr__(self, "target", _wave(self.target))
        rate = self.target.sample_rate
        object.__setattr__(
            self, "interferences", tuple(_wave(w, rate) for w in self.interferences)
        )
        snrs = tuple(float(v) for v in self.interference_snr_db)
        object.__setattr__(self, "interference_snr_db", snrs)
        if len(snrs) != len(self.interferences):
            raise ValueError(
                f"{len(self.interferences)} interferences but {len(snrs)} SNR values"
            )
        if self.noise is not None:
            object.__setattr__(self, "noise", _wave(self.noise, rate))
            if self.noise_snr_db is None:
                raise ValueError("noise given without noise_snr_db")
            object.__setattr__(self, "noise_snr_db", float(self.noise_snr_db))
        if not all(np.isfinite(snrs)) or (
            self.noise_snr_db is not None and not np.isfinite(self.noise_snr_db)
        ):
            raise ValueError("SNR values must be finite")


@dataclass(frozen=True)
class MixResult:
    mixture: Waveform
    target: Waveform
    scaled_interferences: tuple = ()
    scaled_noise: Waveform = None

    @property
    def scaled_components(self):
        """Scaled interference and noise waveforms, in summation order."""
        comps = list(self.scaled_interferences)
        if self.scaled_noise is not None:
            comps.append(self.scaled_noise)
        return tuple(comps)


def fit_length(signal, target_length):
    """Truncate (keeping the start) or zero-pad at the end to ``target_length``."""
    if target_length < 1:
        raise ValueError(f"target_length must be >= 1, got {target_length}")
    x = as_samples(signal, "signal")
    if x.size >= target_length:
        out = x[:target_length]
    else:
        out = np.concatenate([x, np.zeros(target_length - x.size)])
    return Waveform(out, getattr(signal, "sample_rate", 16000))


def snr_gain(signal, reference, snr_db):
    """Gain ``g`` such that ``10 log10(||reference||^2 / ||g signal||^2) == snr_db``."""
    sig = as_samples(signal, "signal")
    ref = as_samples(reference, "reference")
    e_sig = float(np.dot(sig, sig))
    e_ref = float(np.dot(ref, ref))
    if e_sig <= SILENCE_ENERGY:
        raise ValueError(f"signal is silent (energy {e_sig:.3g})")
    if e_ref <= SILENCE_ENERGY:
        raise ValueError(f"reference is silent (energy {e_ref:.3g})")
    return float(np.sqrt(e_ref / (e_sig * 10.0 ** (snr_db / 10.0))))


def scale_to_snr(signal, reference, snr_db):
    g = snr_gain(signal, reference, snr_db)
    return Waveform(g * as_samples(signal), getattr(signal, "sample_rate", 16000))


def measured_snr_db(reference, component):
    ref = as_samples(reference, "reference")
    comp = as_samples(component, "component")
    return float(10.0 * np.log10(np.dot(ref, ref) / np.dot(comp, comp)))


def make_mixture(spec):
    """Fit every component to the target length, scale to its SNR and sum."""
    target = spec.target
    if target.energy() <= SILENCE_ENERGY:
        raise ValueError("target is silent")
    n = len(target)
    scaled = tuple(
        scale_to_snr(fit_length(w, n), target, snr)
        for w, snr in zip(spec.interferences, spec.interference_snr_db)
    )
    noise = None
    if spec.noise is not None:
        noise = scale_to_snr(fit_length(spec.noise, n), target, spec.noise_snr_db)

    mix = target.samples.copy()
    for comp in scaled + ((noise,) if noise is not None else ()):
        mix += comp.samples
    return MixResult(Waveform(mix, target.sample_rate), target, scaled, noise)


def sample_mix_plan(
    target_id,
    target,
    candidate_pool,
    rng_seed,
    snr_range_db=INTERFERENCE_SNR_RANGE,
    noise_pool=None,
    noise_snr_range_db=NOISE_SNR_RANGE,
):
    """Draw one interference (and optionally one noise clip) with uniform SNRs.

    Parameters
    ----------
    target_id : str
        Identifier of the target utterance; must not appear in ``candidate_pool``.
    target : Waveform
    candidate_pool : mapping of id -> Waveform
        Interference candidates.
    rng_seed : int or tuple of int
    snr_range_db, noise_snr_range_db : (low, high)
    noise_pool : mapping of id -> Waveform, optional
    """
    if not candidate_pool:
        raise ValueError("candidate pool is empty")
    if target_id in candidate_pool:
        raise ValueError(f"candidate pool contains the target utterance {target_id!r}")
    rng = make_rng(rng_seed)
    ids = sorted(candidate_pool)
    interf_id = ids[int(rng.integers(len(ids)))]
    snr = float(rng.uniform(*snr_range_db))
    noise = noise_id = noise_snr = None
    if noise_pool:
        noise_ids = sorted(noise_pool)
        noise_id = noise_ids[int(rng.integers(len(noise_ids)))]
        noise = noise_pool[noise_id]
        noise_snr = float(rng.uniform(*noise_snr_range_db))
    seed = rng_seed if isinstance(rng_seed, int) else int(rng_seed[0])
    return MixSpec(
        target=target,
        interferences=(candidate_pool[interf_id],),
        interference_snr_db=(snr,),
        noise=noise,
        noise_snr_db=noise_snr,
        seed=seed,
        interference_ids=(interf_id,),
        noise_id=noise_id,
    )
