"""Decision process for curves that failed validation.

Every non-validated curve gets exactly one verdict.  A curve that looks
healthy while the recent sequence has been progressing toward an anomaly is
suspicious (an attacker concealing deterioration); a pre-fault curve that
arrives with no progressive precursor in the window is suspicious (a
planted fault); an isolated minor transient resolves on its own and raises
no suspicion; a sudden failure cannot be judged from the sequence at all
and is escalated to a human expert.

Verdicts carry stable machine-readable reason codes (FIG4_*) so report
streams are scriptable; see the README for the code table.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from .classifier import ClassifierReference, classify, decision_kind
from .comparator import DistancePair, Thresholds
from .curvegen import CurveKind
from .dataio import CurveWindow

REASON_VALIDATED = "VALIDATED"
REASON_UNEXPECTED_HEALTHY = "FIG4_1"
REASON_UNHERALDED_PRE_FAULT = "FIG4_2_1"
REASON_MINOR_ANOMALY = "FIG4_2_2"
REASON_SUDDEN_FAILURE = "FIG4_2_3"


class VerdictKind(str, Enum):
    VALIDATED = "validated"
    SUSPICIOUS = "suspicious"
    NO_SUSPICION = "no_suspicion"
    ESCALATE_TO_EXPERT = "escalate_to_expert"


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    reason_code: str
    rationale: str


@dataclass(frozen=True)
class InvestigatorParams:
    recent_curves: int = 10        # window suffix checked for progression
    progression_fraction: float = 0.3
    escalation_factor: float = 2.0  # gross-mismatch multiple on both thresholds


def window_shows_progression(
    window: CurveWindow,
    reference: ClassifierReference,
    params: InvestigatorParams = InvestigatorParams(),
) -> bool:
    """True when the window's recent curves establish a progression.

    The classifier is applied to the last ``recent_curves`` window entries;
    the sequence counts as progressing when at least
    ``progression_fraction`` of them read as progressive pre-fault.
    """
    recent = window.curves[-params.recent_curves:]
    hits = sum(
        1 for c in recent
        if classify(c, reference) is CurveKind.PROGRESSIVE_PRE_FAULT
    )
    return hits >= params.progression_fraction * len(recent)


def investigate(
    field_kind: CurveKind,
    predicted_kind: CurveKind,
    window: CurveWindow,
    reference: ClassifierReference,
    distances: DistancePair,
    thresholds: Thresholds,
    params: InvestigatorParams = InvestigatorParams(),
) -> Verdict:
    """Verdict for a non-validated field curve.

    ``predicted_kind`` is carried for context in reports; the decision
    branches on what the field curve shows and on whether the window had
    already established a progression.
    """
    kind = decision_kind(field_kind)

    if kind is CurveKind.EARLY_LIFE_NORMAL:
        return Verdict(
            VerdictKind.SUSPICIOUS,
            REASON_UNEXPECTED_HEALTHY,
            "field curve shows early-life behavior although the expected "
            f"curve ({decision_kind(predicted_kind).value}) follows the "
            "sequence's evolution; an unexpected return to health suggests "
            "concealment",
        )

    if kind is CurveKind.PROGRESSIVE_PRE_FAULT:
        if not window_shows_progression(window, reference, params):
            return Verdict(
                VerdictKind.SUSPICIOUS,
                REASON_UNHERALDED_PRE_FAULT,
                "pre-fault anomaly arrived without any prior indication of "
                "progressive degradation in the recent sequence",
            )
        gross = (
            distances.euclidean > params.escalation_factor * thresholds.tau_euclidean
            or distances.dtw > params.escalation_factor * thresholds.tau_dtw
        )
        if gross:
            return Verdict(
                VerdictKind.SUSPICIOUS,
                REASON_UNHERALDED_PRE_FAULT,
                "pre-fault curve matches the window's progression in kind "
                "but deviates grossly from the predicted evolution",
            )
        return Verdict(
            VerdictKind.NO_SUSPICION,
            REASON_UNHERALDED_PRE_FAULT,
            "pre-fault curve continues the progression already established "
            "by the sequence",
        )

    if kind is CurveKind.MINOR_ANOMALY:
        return Verdict(
            VerdictKind.NO_SUSPICION,
            REASON_MINOR_ANOMALY,
            "isolated minor transient; resolves naturally without a "
            "maintenance intervention",
        )

    # sudden failure: not predictable from the sequence, defer to expertise
    rationale = "sudden failure cannot be assessed from the temporal sequence; additional expertise is required"
    if not window_shows_progression(window, reference, params):
        rationale += " (a mechanical failure should have been preceded by a progressive evolution, which is absent)"
    return Verdict(VerdictKind.ESCALATE_TO_EXPERT, REASON_SUDDEN_FAILURE, rationale)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class InvestigationReport:
    op_index: int
    distances: DistancePair
    tau_euclidean: float
    tau_dtw: float
    predicted_kind: CurveKind
    field_kind: CurveKind
    window_progressive: bool
    verdict: Verdict
    tampered: bool | None = None   # ground truth, for scoring only
    alert: str | None = None       # pipeline-level alerts (rejection streaks)

    def to_dict(self) -> dict:
        return {
            "op_index": self.op_index,
            "euclidean": self.distances.euclidean,
            "dtw": self.distances.dtw,
            "tau_euclidean": self.tau_euclidean,
            "tau_dtw": self.tau_dtw,
            "predicted_kind": self.predicted_kind.value,
            "field_kind": self.field_kind.value,
            "window_progressive": self.window_progressive,
            "verdict": {
                "kind": self.verdict.kind.value,
                "reason": self.verdict.reason_code,
                "rationale": self.verdict.rationale,
            },
            "tampered": self.tampered,
            "alert": self.alert,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InvestigationReport":
        v = d["verdict"]
        return cls(
            op_index=int(d["op_index"]),
            distances=DistancePair(float(d["euclidean"]), float(d["dtw"])),
            tau_euclidean=float(d["tau_euclidean"]),
            tau_dtw=float(d["tau_dtw"]),
            predicted_kind=CurveKind(d["predicted_kind"]),
            field_kind=CurveKind(d["field_kind"]),
            window_progressive=bool(d["window_progressive"]),
            verdict=Verdict(VerdictKind(v["kind"]), v["reason"], v["rationale"]),
            tampered=d.get("tampered"),
            alert=d.get("alert"),
        )


def write_reports(path, reports: list[InvestigationReport]):
    with open(path, "w", encoding="utf-8") as fh:
        for r in reports:
            fh.write(json.dumps(r.to_dict()))
            fh.write("\n")


def read_reports(path) -> list[InvestigationReport]:
    reports = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                reports.append(InvestigationReport.from_dict(json.loads(line)))
    return reports


def score_run(reports: list[InvestigationReport]) -> dict:
    """Detection / false-alarm / escalation rates against ground truth.

    Requires every report to carry a tamper flag.  Rates with an empty
    denominator come back as None.
    """
    if any(r.tampered is None for r in reports):
        raise ValueError("reports lack ground-truth tamper flags")
    tampered = [r for r in reports if r.tampered]
    clean = [r for r in reports if not r.tampered]
    suspicious = lambda r: r.verdict.kind is VerdictKind.SUSPICIOUS  # noqa: E731
    escalated = sum(1 for r in reports if r.verdict.kind is VerdictKind.ESCALATE_TO_EXPERT)
    return {
        "operations": len(reports),
        "tampered": len(tampered),
        "detection_rate": (
            sum(1 for r in tampered if suspicious(r)) / len(tampered) if tampered else None
        ),
        "false_alarm_rate": (
            sum(1 for r in clean if suspicious(r)) / len(clean) if clean else None
        ),
        "escalation_rate": escalated / len(reports) if reports else None,
    }
