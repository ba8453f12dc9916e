import math

import pytest

from promptmine.backend import GenerationRequest, MockBackend
from promptmine.errors import AlignmentError, ConfigError
from promptmine.evaluate import (
    PARSE_FALLBACK,
    PARSE_INCONSISTENT,
    PARSE_OK,
    SCOPE_DAILY,
    SCOPE_FIRST_HALF,
    SCOPE_SECOND_HALF,
    SCOPE_SEGMENT_AVERAGE,
    MetricReport,
    compute_metrics,
    parse_forecast,
    render_report,
)
from promptmine.refinery import build_v4, render_future

TABLE2_V1_FUTURE = (
    "On Thu, there are 0, 1, 0, 1, 0, 0, 1, 2, 1, 0, 0, 1, 3, 0, 1, 2, 0, 1, 0, 1, "
    "0, 0, 2, 0 people who will visit Mobil during working time."
)
TABLE2_V3_FUTURE = (
    "On Thu, there will be 7 people to visit Mobil during the first half of the work "
    "shift and 10 people to visit Mobil during the latter half of the work shift. "
    "Therefore, there are 17 people will visit here."
)


def test_parse_v1_worked_example(example_window):
    outcome = parse_forecast(TABLE2_V1_FUTURE, "v1", 24, window=example_window)
    assert outcome.parse_status == PARSE_OK
    assert len(outcome.parsed_values) == 24
    assert outcome.effective_total == 17
    assert outcome.stated_total is None


def test_parse_v3_worked_example(example_window):
    outcome = parse_forecast(TABLE2_V3_FUTURE, "v3", 2, window=example_window)
    assert outcome.parse_status == PARSE_OK
    assert outcome.parsed_values == (7, 10)
    assert outcome.stated_total == 17
    assert outcome.effective_total == 17


def test_parse_no_numbers_falls_back(example_window):
    outcome = parse_forecast("no numbers here", "v2", 2, window=example_window)
    assert outcome.parse_status == PARSE_FALLBACK
    assert outcome.parsed_values == ()


def test_parse_wrong_count_falls_back(example_window):
    text = "On Thu, there are 1, 2, 3 people who will visit Mobil during working time."
    assert parse_forecast(text, "v1", 24, window=example_window).parse_status == PARSE_FALLBACK


def test_parse_inconsistent_total(example_window):
    text = TABLE2_V3_FUTURE.replace("there are 17 people", "there are 99 people")
    outcome = parse_forecast(text, "v3", 2, window=example_window)
    assert outcome.parse_status == PARSE_INCONSISTENT
    assert outcome.stated_total == 99
    assert outcome.effective_total == 17  # segment sums win
    assert "segments win" in outcome.notes


def test_parse_v4(example_window):
    pair = build_v4(example_window, 4)
    outcome = parse_forecast(
        pair.future_text, "v4", 4, window=example_window,
        segment_cuts=tuple(pair.metadata["target_cuts"]),
    )
    assert outcome.parse_status == PARSE_OK
    assert sum(outcome.parsed_values) == 17
    assert outcome.stated_total == 17


def test_parse_unknown_variant(example_window):
    with pytest.raises(ConfigError):
        parse_forecast("text", "v9", 2)


def test_round_trip_all_variants(small_split):
    for window in small_split.test[:30]:
        for variant, expected in (("v1", 24), ("v2", 2), ("v3", 2), ("v4", 4)):
            if variant == "v4":
                pair = build_v4(window, 4)
                cuts = tuple(pair.metadata["target_cuts"])
                text = pair.future_text
            else:
                cuts = None
                text = render_future(window, variant)
            outcome = parse_forecast(text, variant, expected, window=window, segment_cuts=cuts)
            assert outcome.parse_status == PARSE_OK, (variant, text)
            assert outcome.effective_total == window.target.daily_total


def _outcomes(windows, variant, backend, k=None):
    outcomes = []
    expected = {"v1": 24, "v2": 2, "v3": 2}.get(variant, k)
    for i, window in enumerate(windows):
        if variant == "v4":
            pair = build_v4(window, k)
            text = pair.future_text
            cuts = tuple(pair.metadata["target_cuts"])
        else:
            text = render_future(window, variant)
            cuts = None
        request = GenerationRequest(
            prompt="p", request_id=f"{variant}:{window.key[0]}:{window.key[1]}", reference=text
        )
        generated = backend.generate(request).text
        outcomes.append(
            parse_forecast(generated, variant, expected, window=window, segment_cuts=cuts)
        )
    return outcomes


def test_perfect_backend_zero_error_all_scopes(small_split):
    windows = small_split.test
    backend = MockBackend(mode="perfect")
    for variant, scopes in (
        ("v1", (SCOPE_DAILY, SCOPE_FIRST_HALF, SCOPE_SECOND_HALF, SCOPE_SEGMENT_AVERAGE)),
        ("v2", (SCOPE_DAILY, SCOPE_FIRST_HALF, SCOPE_SECOND_HALF, SCOPE_SEGMENT_AVERAGE)),
        ("v3", (SCOPE_DAILY, SCOPE_FIRST_HALF, SCOPE_SECOND_HALF, SCOPE_SEGMENT_AVERAGE)),
        ("v4", (SCOPE_DAILY, SCOPE_SEGMENT_AVERAGE)),
    ):
        outcomes = _outcomes(windows, variant, backend, k=4)
        for scope in scopes:
            report = compute_metrics(outcomes, windows, scope)
            assert report.rmse == 0.0 and report.mae == 0.0, (variant, scope)
            assert report.parse_failure_rate == 0.0


def test_metrics_hand_computed(small_split):
    windows = small_split.test[:2]
    outcomes = _outcomes(windows, "v2", MockBackend(mode="perfect"))
    truths = [w.target.daily_total for w in windows]
    # nudge predictions to truths + (1, 2): mae 1.5, rmse sqrt(2.5)
    for outcome, truth, delta in zip(outcomes, truths, (1, 2)):
        outcome.parsed_values = (outcome.parsed_values[0] + delta, outcome.parsed_values[1])
        outcome.effective_total = truth + delta
    report = compute_metrics(outcomes, windows, SCOPE_DAILY)
    assert report.mae == pytest.approx(1.5, abs=1e-12)
    assert report.rmse == pytest.approx(math.sqrt(2.5), abs=1e-12)
    assert report.rmse == pytest.approx(1.5811388300841898, abs=1e-9)


def test_rmse_at_least_mae(small_split):
    windows = small_split.test
    backend = MockBackend(mode="noisy", corruption_rate=0.3, seed=5)
    outcomes = _outcomes(windows, "v2", backend)
    for scope in (SCOPE_DAILY, SCOPE_FIRST_HALF, SCOPE_SECOND_HALF):
        report = compute_metrics(outcomes, windows, scope)
        assert report.rmse >= report.mae >= 0.0


def test_fallback_substitutes_history_mean(small_split):
    window = small_split.test[0]
    outcome = parse_forecast("garbage", "v2", 2, window=window)
    assert outcome.parse_status == PARSE_FALLBACK
    report = compute_metrics([outcome], [window], SCOPE_DAILY)
    mean_total = sum(d.daily_total for d in window.history) / window.n
    expected = abs(int(math.floor(mean_total + 0.5)) - window.target.daily_total)
    assert report.mae == pytest.approx(expected, abs=1e-12)
    assert report.parse_failure_rate == 1.0


def test_parse_failure_rate_matches_injection(small_split):
    windows = (small_split.train + small_split.val + small_split.test)[:200]
    backend = MockBackend(mode="noisy", corruption_rate=0.2, seed=9)
    outcomes = _outcomes(windows, "v2", backend)
    report = compute_metrics(outcomes, windows, SCOPE_DAILY)
    corrupted = sum(
        1
        for w in windows
        if backend.corrupts(f"v2:{w.key[0]}:{w.key[1]}")
    )
    assert report.parse_failure_rate == pytest.approx(corrupted / len(windows), abs=1e-12)


def test_alignment_errors(small_split):
    windows = small_split.test[:3]
    outcomes = _outcomes(windows, "v2", MockBackend(mode="perfect"))
    with pytest.raises(AlignmentError):
        compute_metrics(outcomes, windows[:2], SCOPE_DAILY)
    mixed = outcomes[:1] + _outcomes(windows[1:2], "v1", MockBackend(mode="perfect"))
    with pytest.raises(AlignmentError):
        compute_metrics(mixed, windows[:2], SCOPE_DAILY)


def test_half_scope_rejected_for_v4(small_split):
    windows = small_split.test[:2]
    outcomes = _outcomes(windows, "v4", MockBackend(mode="perfect"), k=3)
    with pytest.raises(ConfigError):
        compute_metrics(outcomes, windows, SCOPE_FIRST_HALF)


def test_render_report_formatting():
    reports = {
        "pegasus/v1": {
            SCOPE_DAILY: MetricReport(
                rmse=8.26, mae=3.67, scope=SCOPE_DAILY, n_samples=10, parse_failure_rate=0.0
            )
        }
    }
    text, csv_text = render_report(reports, scopes=(SCOPE_DAILY,))
    assert "8.26 | 3.67" in text
    assert "pegasus/v1,daily,8.260000,3.670000,10,0.000000" in csv_text


def test_render_report_empty():
    text, csv_text = render_report({}, scopes=(SCOPE_DAILY,))
    assert "backend/variant" in text
    assert csv_text.strip() == "row,scope,rmse,mae,n_samples,parse_failure_rate"


def test_render_report_grid():
    rep = lambda scope: MetricReport(rmse=1.0, mae=0.5, scope=scope, n_samples=4, parse_failure_rate=0.0)
    reports = {
        "m/v1": {SCOPE_DAILY: rep(SCOPE_DAILY), SCOPE_FIRST_HALF: rep(SCOPE_FIRST_HALF)},
        "m/v2": {SCOPE_DAILY: rep(SCOPE_DAILY), SCOPE_FIRST_HALF: rep(SCOPE_FIRST_HALF)},
    }
    text, csv_text = render_report(reports, scopes=(SCOPE_DAILY, SCOPE_FIRST_HALF))
    assert text.count("1.00 | 0.50") == 4
    assert len(csv_text.strip().splitlines()) == 5  # header + 4 cells


def test_report_csv_bit_stable():
    rep = MetricReport(rmse=2.0, mae=1.0, scope=SCOPE_DAILY, n_samples=3, parse_failure_rate=0.1)
    reports = {"m/v1": {SCOPE_DAILY: rep}}
    assert render_report(reports) == render_report(reports)
