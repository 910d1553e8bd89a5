"""Decision table for non-validated curves, and run scoring."""

import itertools

import pytest

from turnoutguard.classifier import build_reference
from turnoutguard.comparator import DistancePair, Thresholds
from turnoutguard.curvegen import CurveKind, GeneratorConfig, Phase, generate_lifecycle
from turnoutguard.dataio import CurveWindow
from turnoutguard.investigator import (
    REASON_MINOR_ANOMALY,
    REASON_SUDDEN_FAILURE,
    REASON_UNEXPECTED_HEALTHY,
    REASON_UNHERALDED_PRE_FAULT,
    InvestigationReport,
    InvestigatorParams,
    Verdict,
    VerdictKind,
    investigate,
    read_reports,
    score_run,
    window_shows_progression,
    write_reports,
)

THRESHOLDS = Thresholds(tau_euclidean=100.0, tau_dtw=1000.0)
SMALL = DistancePair(euclidean=120.0, dtw=1100.0)    # rejected, but not gross
GROSS = DistancePair(euclidean=500.0, dtw=9000.0)    # beyond twice the thresholds


@pytest.fixture(scope="module")
def setup():
    cfg = GeneratorConfig(
        length=80,
        operations=400,
        seed=31,
        phase_plan=(
            Phase(CurveKind.EARLY_LIFE_NORMAL, 0, 300),
            Phase(CurveKind.PROGRESSIVE_PRE_FAULT, 300, 400, 0.5, 1.0),
        ),
    )
    corpus = generate_lifecycle(cfg)
    reference = build_reference(corpus[:300])
    early_window = CurveWindow([lc.curve for lc in corpus[100:140]])
    progressing_window = CurveWindow([lc.curve for lc in corpus[320:360]])
    return reference, early_window, progressing_window


def test_progression_detector(setup):
    reference, early_window, progressing_window = setup
    assert not window_shows_progression(early_window, reference)
    assert window_shows_progression(progressing_window, reference)


def test_healthy_curve_in_progressing_sequence_is_suspicious(setup):
    reference, _, progressing_window = setup
    verdict = investigate(
        CurveKind.EARLY_LIFE_NORMAL,
        CurveKind.PROGRESSIVE_PRE_FAULT,
        progressing_window,
        reference,
        SMALL,
        THRESHOLDS,
    )
    assert verdict.kind is VerdictKind.SUSPICIOUS
    assert verdict.reason_code == REASON_UNEXPECTED_HEALTHY


def test_prefault_without_precursor_is_suspicious(setup):
    reference, early_window, _ = setup
    verdict = investigate(
        CurveKind.PROGRESSIVE_PRE_FAULT,
        CurveKind.EARLY_LIFE_NORMAL,
        early_window,
        reference,
        SMALL,
        THRESHOLDS,
    )
    assert verdict.kind is VerdictKind.SUSPICIOUS
    assert verdict.reason_code == REASON_UNHERALDED_PRE_FAULT
    assert "prior indication" in verdict.rationale


def test_prefault_in_progressing_window_needs_gross_mismatch(setup):
    reference, _, progressing_window = setup
    benign = investigate(
        CurveKind.PROGRESSIVE_PRE_FAULT,
        CurveKind.PROGRESSIVE_PRE_FAULT,
        progressing_window,
        reference,
        SMALL,
        THRESHOLDS,
    )
    assert benign.kind is VerdictKind.NO_SUSPICION
    assert benign.reason_code == REASON_UNHERALDED_PRE_FAULT
    gross = investigate(
        CurveKind.PROGRESSIVE_PRE_FAULT,
        CurveKind.PROGRESSIVE_PRE_FAULT,
        progressing_window,
        reference,
        GROSS,
        THRESHOLDS,
    )
    assert gross.kind is VerdictKind.SUSPICIOUS


def test_escalation_factor_boundary(setup):
    reference, _, progressing_window = setup
    params = InvestigatorParams(escalation_factor=2.0)
    at_double = DistancePair(euclidean=200.0, dtw=2000.0)   # exactly 2x: not gross
    verdict = investigate(
        CurveKind.PROGRESSIVE_PRE_FAULT,
        CurveKind.PROGRESSIVE_PRE_FAULT,
        progressing_window,
        reference,
        at_double,
        THRESHOLDS,
        params,
    )
    assert verdict.kind is VerdictKind.NO_SUSPICION
    over = DistancePair(euclidean=200.1, dtw=2000.0)
    verdict = investigate(
        CurveKind.PROGRESSIVE_PRE_FAULT,
        CurveKind.PROGRESSIVE_PRE_FAULT,
        progressing_window,
        reference,
        over,
        THRESHOLDS,
        params,
    )
    assert verdict.kind is VerdictKind.SUSPICIOUS


def test_minor_anomaly_raises_no_suspicion(setup):
    reference, early_window, progressing_window = setup
    for window in (early_window, progressing_window):
        verdict = investigate(
            CurveKind.MINOR_ANOMALY,
            CurveKind.EARLY_LIFE_NORMAL,
            window,
            reference,
            GROSS,
            THRESHOLDS,
        )
        assert verdict.kind is VerdictKind.NO_SUSPICION
        assert verdict.reason_code == REASON_MINOR_ANOMALY


def test_sudden_failure_escalates_and_flags_missing_precursor(setup):
    reference, early_window, progressing_window = setup
    verdict = investigate(
        CurveKind.SUDDEN_FAILURE,
        CurveKind.EARLY_LIFE_NORMAL,
        early_window,
        reference,
        GROSS,
        THRESHOLDS,
    )
    assert verdict.kind is VerdictKind.ESCALATE_TO_EXPERT
    assert verdict.reason_code == REASON_SUDDEN_FAILURE
    assert "preceded by a progressive evolution" in verdict.rationale
    # with an established progression the missing-precursor note disappears
    verdict = investigate(
        CurveKind.SUDDEN_FAILURE,
        CurveKind.PROGRESSIVE_PRE_FAULT,
        progressing_window,
        reference,
        GROSS,
        THRESHOLDS,
    )
    assert verdict.kind is VerdictKind.ESCALATE_TO_EXPERT
    assert "preceded" not in verdict.rationale


def test_aging_kinds_follow_the_prefault_branch(setup):
    reference, early_window, _ = setup
    for kind in (CurveKind.AGING, CurveKind.END_OF_LIFE):
        verdict = investigate(
            kind,
            CurveKind.EARLY_LIFE_NORMAL,
            early_window,
            reference,
            SMALL,
            THRESHOLDS,
        )
        assert verdict.reason_code == REASON_UNHERALDED_PRE_FAULT


def test_every_combination_yields_exactly_one_investigation_verdict(setup):
    reference, early_window, progressing_window = setup
    outcomes = {VerdictKind.SUSPICIOUS, VerdictKind.NO_SUSPICION, VerdictKind.ESCALATE_TO_EXPERT}
    for kind, window, distances in itertools.product(
        CurveKind, (early_window, progressing_window), (SMALL, GROSS)
    ):
        verdict = investigate(
            kind, CurveKind.EARLY_LIFE_NORMAL, window, reference, distances, THRESHOLDS
        )
        assert verdict.kind in outcomes
        again = investigate(
            kind, CurveKind.EARLY_LIFE_NORMAL, window, reference, distances, THRESHOLDS
        )
        assert again == verdict
    # only the sudden-failure branch may escalate
    for kind, window in itertools.product(CurveKind, (early_window, progressing_window)):
        verdict = investigate(
            kind, CurveKind.EARLY_LIFE_NORMAL, window, reference, GROSS, THRESHOLDS
        )
        if verdict.kind is VerdictKind.ESCALATE_TO_EXPERT:
            assert kind is CurveKind.SUDDEN_FAILURE


# ---------------------------------------------------------------------------
# scoring and report files
# ---------------------------------------------------------------------------

def report(op, kind, reason, tampered):
    return InvestigationReport(
        op_index=op,
        distances=SMALL,
        tau_euclidean=THRESHOLDS.tau_euclidean,
        tau_dtw=THRESHOLDS.tau_dtw,
        predicted_kind=CurveKind.EARLY_LIFE_NORMAL,
        field_kind=CurveKind.EARLY_LIFE_NORMAL,
        window_progressive=False,
        verdict=Verdict(kind, reason, "test"),
        tampered=tampered,
    )


def test_score_run_trivial_cases():
    clean = [report(k, VerdictKind.VALIDATED, "VALIDATED", False) for k in range(5)]
    scores = score_run(clean)
    assert scores["false_alarm_rate"] == 0.0
    assert scores["detection_rate"] is None
    all_hit = [
        report(k, VerdictKind.SUSPICIOUS, REASON_UNEXPECTED_HEALTHY, True) for k in range(4)
    ]
    assert score_run(all_hit)["detection_rate"] == 1.0


def test_score_run_matches_a_hand_recount():
    reports = [
        report(0, VerdictKind.VALIDATED, "VALIDATED", False),
        report(1, VerdictKind.SUSPICIOUS, REASON_UNEXPECTED_HEALTHY, True),
        report(2, VerdictKind.SUSPICIOUS, REASON_UNHERALDED_PRE_FAULT, False),
        report(3, VerdictKind.NO_SUSPICION, REASON_MINOR_ANOMALY, True),
        report(4, VerdictKind.ESCALATE_TO_EXPERT, REASON_SUDDEN_FAILURE, True),
        report(5, VerdictKind.VALIDATED, "VALIDATED", False),
        report(6, VerdictKind.SUSPICIOUS, REASON_UNEXPECTED_HEALTHY, True),
    ]
    # hand recount: tampered {1,3,4,6}, suspicious {1,2,6}
    scores = score_run(reports)
    assert scores["operations"] == 7
    assert scores["tampered"] == 4
    assert scores["detection_rate"] == pytest.approx(2 / 4)
    assert scores["false_alarm_rate"] == pytest.approx(1 / 3)
    assert scores["escalation_rate"] == pytest.approx(1 / 7)


def test_score_run_requires_ground_truth():
    r = report(0, VerdictKind.VALIDATED, "VALIDATED", None)
    with pytest.raises(ValueError, match="ground-truth"):
        score_run([r])


def test_report_ndjson_round_trip(tmp_path):
    reports = [
        report(0, VerdictKind.VALIDATED, "VALIDATED", False),
        report(3, VerdictKind.SUSPICIOUS, REASON_UNEXPECTED_HEALTHY, True),
    ]
    reports[1].alert = "2 consecutive non-validated operations"
    path = tmp_path / "reports.ndjson"
    write_reports(path, reports)
    back = read_reports(path)
    assert back == reports
