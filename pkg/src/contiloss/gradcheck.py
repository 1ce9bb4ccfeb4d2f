"""Central finite-difference verification of the analytic gradients."""

from dataclasses import dataclass

import numpy as np

from .demo import mask_objective, mask_shape
from .losses import HybridConfig, delta_spectrum_loss, hybrid_loss, si_sdr_loss
from .signal import DEFAULT_RESOLUTIONS, SUPPRESSION_CONFIG

DEFAULT_TOLERANCE = 1e-4
# relative step; the absolute step is this times the RMS of the probed point
RELATIVE_STEP = 1e-5
# per-coordinate errors are normalised by at least this fraction of max|gradient|
SCALE_FLOOR = 1e-3


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_rel_error: float
    tolerance: float
    coords: tuple
    analytic: tuple
    numeric: tuple

    @property
    def passed(self):
        return bool(self.max_rel_error <= self.tolerance)


def relative_errors(analytic, numeric, scale):
    analytic = np.asarray(analytic)
    numeric = np.asarray(numeric)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), SCALE_FLOOR * scale)
    err = np.abs(analytic - numeric)
    return np.divide(err, denom, out=np.zeros_like(err), where=denom > 0)


def check_gradient(fun, x, n_coords=20, rng=None, step=None, name="", tolerance=DEFAULT_TOLERANCE):
    """Compare ``fun(x) -> (value, gradient)`` with central differences.

    ``n_coords`` coordinates of ``x`` (any shape) are drawn without
    replacement from ``rng``.
    """
    rng = np.random.default_rng(rng)
    x = np.array(x, dtype=np.float64)
    value, grad = fun(x)
    grad = np.asarray(grad)
    if grad.shape != x.shape:
        raise ValueError(f"gradient shape {grad.shape} != input shape {x.shape}")
    if step is None:
        rms = float(np.sqrt(np.mean(x**2)))
        step = RELATIVE_STEP * (rms if rms > 0 else 1.0)

    flat = x.ravel()
    coords = rng.choice(flat.size, size=min(n_coords, flat.size), replace=False)
    numeric = []
    for i in coords:
        xp = flat.copy()
        xm = flat.copy()
        xp[i] += step
        xm[i] -= step
        fp = fun(xp.reshape(x.shape))[0]
        fm = fun(xm.reshape(x.shape))[0]
        numeric.append((fp - fm) / (2.0 * step))
    analytic = grad.ravel()[coords]
    errs = relative_errors(analytic, numeric, float(np.abs(grad).max()))
    return CheckResult(
        name=name,
        max_rel_error=float(errs.max()),
        tolerance=tolerance,
        coords=tuple(int(c) for c in coords),
        analytic=tuple(float(a) for a in analytic),
        numeric=tuple(float(v) for v in numeric),
    )


def _as_pair(res):
    return res.value, res.gradient


def run_suite(seed=0, length=4096, n_coords=20, tolerance=DEFAULT_TOLERANCE, resolutions=None):
    """Gradient checks for every loss and the mask chain on random signals."""
    resolutions = tuple(resolutions or DEFAULT_RESOLUTIONS)
    rng = np.random.default_rng(seed)
    reference = 0.1 * rng.standard_normal(length)
    estimate = reference + 0.1 * rng.standard_normal(length)
    results = []

    def add(name, fun, x):
        results.append(check_gradient(fun, x, n_coords, rng, name=name, tolerance=tolerance))

    add("si_sdr_loss", lambda e: _as_pair(si_sdr_loss(e, reference)), estimate)
    for cfg in resolutions:
        add(
            f"delta_spectrum_loss[{cfg.fft_size},{cfg.hop},{cfg.win_length}]",
            lambda e, cfg=cfg: _as_pair(delta_spectrum_loss(e, reference, cfg)),
            estimate,
        )
    hybrid_cfg = HybridConfig(resolutions=resolutions)
    add("hybrid_loss", lambda e: _as_pair(hybrid_loss(e, reference, hybrid_cfg)), estimate)

    logits = rng.standard_normal(mask_shape(length, SUPPRESSION_CONFIG))
    mixture = reference + 0.1 * rng.standard_normal(length)
    add(
        "mask_chain[hybrid]",
        lambda z: mask_objective(mixture, reference, z, "hybrid"),
        logits,
    )
    return results
