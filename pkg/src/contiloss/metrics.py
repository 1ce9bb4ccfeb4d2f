"""Evaluation metrics: SI-SDR, SDR, over/under-suppression MAE and WER/CER."""

from dataclasses import dataclass

import numpy as np

from ._validation import check_pair
from .losses import si_sdr_loss
from .signal import SUPPRESSION_CONFIG, stft_magnitude

UNITS = ("word", "character")


@dataclass(frozen=True)
class SuppressionReport:
    mae_over: float
    mae_under: float
    config: object = SUPPRESSION_CONFIG

    @property
    def mae_total(self):
        return self.mae_over + self.mae_under


def si_sdr_metric(estimate, reference, norm_floor=1e-8):
    """SI-SDR in dB (no mean removal); perfect estimates hit the floor cap."""
    return -si_sdr_loss(estimate, reference, zero_mean=False, norm_floor=norm_floor).value


def sdr_metric(estimate, reference, norm_floor=1e-8):
    """Plain signal-to-distortion ratio ``10 log10(||s||^2 / ||s_hat - s||^2)`` in dB."""
    est, ref = check_pair(estimate, reference)
    ref_energy = float(np.dot(ref, ref))
    if ref_energy <= norm_floor:
        raise ValueError(f"reference is silent (energy {ref_energy:.3g} <= {norm_floor:g})")
    err = est - ref
    return float(10.0 * np.log10(ref_energy / max(float(np.dot(err, err)), norm_floor)))


def suppression_mae(estimate, reference, config=SUPPRESSION_CONFIG):
    """Over- and under-suppression mean absolute error of STFT magnitudes.

    ``mae_over`` averages the bins where the estimate falls short of the
    reference magnitude, ``mae_under`` those where it exceeds it.
    """
    est, ref = check_pair(estimate, reference, min_length=config.win_length)
    diff = stft_magnitude(ref, config) - stft_magnitude(est, config)
    n = diff.size
    over = np.maximum(diff, 0.0).sum() / n
    under = np.maximum(-diff, 0.0).sum() / n
    return SuppressionReport(float(over), float(under), config)


@dataclass(frozen=True)
class TranscriptPair:
    reference: tuple
    hypothesis: tuple
    unit: str = "word"

    def __post_init__(self):
        if self.unit not in UNITS:
            raise ValueError(f"unit must be one of {UNITS}, got {self.unit!r}")
        object.__setattr__(self, "reference", tuple(self.reference))
        object.__setattr__(self, "hypothesis", tuple(self.hypothesis))
        if self.unit == "word":
            for tok in self.reference + self.hypothesis:
                if not isinstance(tok, str) or not tok:
                    raise ValueError(f"word tokens must be nonempty strings, got {tok!r}")

    @classmethod
    def from_text(cls, reference, hypothesis, unit="word"):
        """Tokenise raw strings: whitespace split for words, every character
        (spaces included) for characters."""
        if unit == "word":
            return cls(reference.split(), hypothesis.split(), unit)
        return cls(list(reference), list(hypothesis), unit)


@dataclass(frozen=True)
class EditStats:
    errors: int
    substitutions: int
    insertions: int
    deletions: int
    rate: float


def edit_distance_rate(pair):
    """Levenshtein alignment with unit costs, normalised by the reference length.

    Ties in the backtrace prefer substitution, then insertion, then deletion.
    """
    ref, hyp = pair.reference, pair.hypothesis
    if not ref:
        raise ValueError("reference transcript is empty")
    n, m = len(ref), len(hyp)
    dist = np.zeros((n + 1, m + 1), dtype=np.int64)
    dist[:, 0] = np.arange(n + 1)
    dist[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            cost = 0 if ref[i - 1] == hyp[j - 1] else 1
            dist[i, j] = min(dist[i - 1, j - 1] + cost, dist[i, j - 1] + 1, dist[i - 1, j] + 1)

    subs = ins = dels = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            cost = 0 if ref[i - 1] == hyp[j - 1] else 1
            if dist[i, j] == dist[i - 1, j - 1] + cost:
                subs += cost
                i, j = i - 1, j - 1
                continue
        if j > 0 and dist[i, j] == dist[i, j - 1] + 1:
            ins += 1
            j -= 1
        else:
            dels += 1
            i -= 1
    errors = int(dist[n, m])
    return EditStats(errors, subs, ins, dels, errors / n)


def wer(reference, hypothesis):
    return edit_distance_rate(TranscriptPair.from_text(reference, hypothesis, "word")).rate


def cer(reference, hypothesis):
    return edit_distance_rate(TranscriptPair.from_text(reference, hypothesis, "character")).rate
