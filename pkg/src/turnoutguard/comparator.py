"""Distances between predicted and field curves, and the validation rule.

Two criteria together decide whether a field curve matches the prediction:
the warping distance tolerates small time-axis stretches, the Euclidean
distance catches phase shifts the warping forgives.  A curve validates only
when both fall within thresholds calibrated on held-out test residuals.
Distances are computed in raw watts, so the thresholds stay meaningful for
field curves that never pass through the model's normalizer.

The warping kernel is compiled (Cython) when available; a pure-Python
fallback is selected at import time otherwise.  ``TURNOUTGUARD_PURE_DTW=1``
forces the fallback.
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from .curvegen import PowerCurve
from .dataio import SupervisedPair
from .forecaster import ForecastModel, forward_samples

if os.environ.get("TURNOUTGUARD_PURE_DTW"):
    from ._dtw_py import dtw_cost as _dtw_cost
    DTW_BACKEND = "pure-python (forced)"
else:
    try:
        from ._dtw_cy import dtw_cost as _dtw_cost
        DTW_BACKEND = "compiled"
    except ImportError:
        from ._dtw_py import dtw_cost as _dtw_cost
        DTW_BACKEND = "pure-python"

THRESHOLDS_FORMAT_VERSION = 1


class CalibrationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DistancePair:
    euclidean: float
    dtw: float


@dataclass
class Thresholds:
    tau_euclidean: float
    tau_dtw: float
    calibration: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (np.isfinite(self.tau_euclidean) and np.isfinite(self.tau_dtw)):
            raise ValueError("thresholds must be finite")
        if self.tau_euclidean < 0.0 or self.tau_dtw < 0.0:
            raise ValueError("thresholds must be >= 0")


@dataclass(frozen=True)
class ValidationResult:
    validated: bool
    distances: DistancePair


def _samples(x) -> np.ndarray:
    if isinstance(x, PowerCurve):
        return x.samples
    return np.asarray(x, dtype=np.float64)


def euclidean(a, b) -> float:
    """Root of the summed squared pointwise differences (watts)."""
    xa, xb = _samples(a), _samples(b)
    if xa.shape != xb.shape:
        raise ValueError(f"curve lengths differ: {xa.shape[0]} vs {xb.shape[0]}")
    d = xa - xb
    return float(np.sqrt(np.sum(d * d)))


def dtw(a, b, band: int | None = None) -> float:
    """Warping distance: cheapest alignment path cost with |a_i - b_j| cells.

    Lengths may differ.  ``band`` restricts warping to a diagonal corridor
    (widened automatically to cover any length difference); None searches
    the full matrix.  Time O(len(a)*len(b)), memory O(min(len(a), len(b))).
    """
    xa, xb = _samples(a), _samples(b)
    if xa.size == 0 or xb.size == 0:
        raise ValueError("cannot warp an empty series")
    if not (np.all(np.isfinite(xa)) and np.all(np.isfinite(xb))):
        raise ValueError("non-finite value in series")
    if xb.size > xa.size:
        xa, xb = xb, xa   # cost and moves are symmetric; keep rows the long one
    if band is None:
        eff_band = -1
    else:
        if band < 0:
            raise ValueError("band must be >= 0")
        eff_band = max(int(band), xa.size - xb.size)
    return float(_dtw_cost(np.ascontiguousarray(xa), np.ascontiguousarray(xb), eff_band))


def distance_pair(a, b, band: int | None = None) -> DistancePair:
    return DistancePair(euclidean=euclidean(a, b), dtw=dtw(a, b, band=band))


def calibrate(
    model: ForecastModel,
    test_pairs: list[SupervisedPair],
    percentile: float | None = None,
    safety_factor: float = 1.0,
    band: int | None = None,
) -> Thresholds:
    """Derive acceptance thresholds from prediction residuals on test data.

    Runs the forecaster over every test window, measures both distances
    between prediction and the true next curve, and takes the maximum of
    each (or the given percentile), times the safety factor.
    """
    if not test_pairs:
        raise ValueError("cannot calibrate on an empty test set")
    if percentile is not None and not 0.0 < percentile <= 100.0:
        raise ValueError("percentile must lie in (0, 100]")
    if safety_factor <= 0.0:
        raise ValueError("safety factor must be > 0")

    eucl = np.empty(len(test_pairs))
    warp = np.empty(len(test_pairs))
    for k, pair in enumerate(test_pairs):
        predicted = np.clip(forward_samples(model, pair.window.as_matrix()), 0.0, None)
        eucl[k] = euclidean(predicted, pair.target)
        warp[k] = dtw(predicted, pair.target, band=band)

    if percentile is None:
        tau_e, tau_d = float(eucl.max()), float(warp.max())
    else:
        tau_e = float(np.percentile(eucl, percentile))
        tau_d = float(np.percentile(warp, percentile))
    tau_e *= safety_factor
    tau_d *= safety_factor
    if tau_e == 0.0 or tau_d == 0.0:
        warnings.warn(
            "calibrated threshold is zero; only exact matches will validate",
            CalibrationWarning,
            stacklevel=2,
        )
    return Thresholds(
        tau_euclidean=tau_e,
        tau_dtw=tau_d,
        calibration={
            "test_size": len(test_pairs),
            "percentile": 100.0 if percentile is None else percentile,
            "safety_factor": safety_factor,
            "band": band,
        },
    )


def validate(field, predicted, thresholds: Thresholds, band: int | None = None) -> ValidationResult:
    """Both criteria must pass; either distance beyond its bound rejects."""
    xf, xp = _samples(field), _samples(predicted)
    if xf.shape != xp.shape:
        raise ValueError(f"curve lengths differ: {xf.shape[0]} vs {xp.shape[0]}")
    d = distance_pair(xf, xp, band=band)
    ok = d.euclidean <= thresholds.tau_euclidean and d.dtw <= thresholds.tau_dtw
    return ValidationResult(validated=ok, distances=d)


# ---------------------------------------------------------------------------
# persistence: thresholds + classifier baseline live in one document,
# versioned together with the weights file format
# ---------------------------------------------------------------------------

def save_thresholds(path, thresholds: Thresholds, classifier_reference: dict | None = None):
    doc = {
        "format_version": THRESHOLDS_FORMAT_VERSION,
        "tau_euclidean": thresholds.tau_euclidean,
        "tau_dtw": thresholds.tau_dtw,
        "calibration": thresholds.calibration,
        "classifier_reference": classifier_reference,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_thresholds(path) -> tuple[Thresholds, dict | None]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"not a valid thresholds file: {exc.msg}") from exc
    version = doc.get("format_version")
    if version != THRESHOLDS_FORMAT_VERSION:
        raise ValueError(
            f"unsupported thresholds format version {version} "
            f"(expected {THRESHOLDS_FORMAT_VERSION})"
        )
    th = Thresholds(
        tau_euclidean=float(doc["tau_euclidean"]),
        tau_dtw=float(doc["tau_dtw"]),
        calibration=doc.get("calibration", {}),
    )
    return th, doc.get("classifier_reference")
