"""Forecast extraction and scoring.

Generated future sentences are parsed per variant grammar into integer
predictions; failures become fallback outcomes (never exceptions) so batch
runs always complete. Metrics are RMSE and MAE over four scopes: daily
totals, first/second half sums, and the per-segment average.
"""

import re
from dataclasses import dataclass

import numpy as np

from promptmine.errors import AlignmentError, ConfigError
from promptmine.refinery import clamp_split_hour
from promptmine.segmentation import fixed_plan, segment_sums

PARSE_OK = "ok"
PARSE_FALLBACK = "fallback"
PARSE_INCONSISTENT = "inconsistent"

SCOPE_DAILY = "daily"
SCOPE_FIRST_HALF = "first-half"
SCOPE_SECOND_HALF = "second-half"
SCOPE_SEGMENT_AVERAGE = "segment-average"
SCOPES = (SCOPE_DAILY, SCOPE_FIRST_HALF, SCOPE_SECOND_HALF, SCOPE_SEGMENT_AVERAGE)

# The gap between a value and its qualifying phrase is brand/filler text
# and never contains digits; \D keeps each number tied to its own phrase.
_RUN_BEFORE_PEOPLE_RE = re.compile(r"((?:\d+, )*\d+) people")
_FIRST_HALF_RE = re.compile(r"(\d+) people to visit \D*? during the first half")
_LATTER_HALF_RE = re.compile(r"(\d+) people to visit \D*? during the latter half")
_SEGMENT_RUN_RE = re.compile(
    r"((?:\d+, )*\d+) people to visit \D*? during these \d+ different time segments"
)
_STATED_TOTAL_RE = re.compile(r"Therefore, there are (\d+) people")


@dataclass
class ForecastOutcome:
    window: object
    variant: str
    parsed_values: tuple
    stated_total: int
    effective_total: int
    parse_status: str
    notes: str = ""
    segment_cuts: tuple = None  # V4: cuts that delimit the predicted sums

    def to_json_dict(self):
        return {
            "poi_id": self.window.poi.poi_id if self.window else None,
            "target_date": self.window.target.date.isoformat() if self.window else None,
            "variant": self.variant,
            "parsed_values": list(self.parsed_values),
            "stated_total": self.stated_total,
            "effective_total": self.effective_total,
            "parse_status": self.parse_status,
            "notes": self.notes,
        }


@dataclass(frozen=True)
class MetricReport:
    rmse: float
    mae: float
    scope: str
    n_samples: int
    parse_failure_rate: float

    def to_json_dict(self):
        return {
            "rmse": self.rmse,
            "mae": self.mae,
            "scope": self.scope,
            "n_samples": self.n_samples,
            "parse_failure_rate": self.parse_failure_rate,
        }


def _fallback(window, variant, notes, segment_cuts=None):
    return ForecastOutcome(
        window=window,
        variant=variant,
        parsed_values=(),
        stated_total=None,
        effective_total=None,
        parse_status=PARSE_FALLBACK,
        notes=notes,
        segment_cuts=segment_cuts,
    )


def parse_forecast(text, variant, expected_segments, window=None, segment_cuts=None):
    """Extract the predicted values from one generated future sentence."""
    variant = variant.lower()
    if variant not in ("v1", "v2", "v3", "v4"):
        raise ConfigError(f"unknown variant {variant!r}")

    if variant == "v1":
        match = _RUN_BEFORE_PEOPLE_RE.search(text)
        if not match:
            return _fallback(window, variant, "no hourly run found")
        values = tuple(int(v) for v in match.group(1).split(", "))
        if len(values) != expected_segments:
            return _fallback(
                window, variant, f"expected {expected_segments} values, got {len(values)}"
            )
        return ForecastOutcome(
            window=window,
            variant=variant,
            parsed_values=values,
            stated_total=None,
            effective_total=sum(values),
            parse_status=PARSE_OK,
        )

    if variant in ("v2", "v3"):
        first = _FIRST_HALF_RE.search(text)
        latter = _LATTER_HALF_RE.search(text)
        if not first or not latter:
            return _fallback(window, variant, "missing half-shift values")
        values = (int(first.group(1)), int(latter.group(1)))
    else:  # v4
        run = _SEGMENT_RUN_RE.search(text)
        if not run:
            return _fallback(window, variant, "no segment run found", segment_cuts)
        values = tuple(int(v) for v in run.group(1).split(", "))
        if len(values) != expected_segments:
            return _fallback(
                window,
                variant,
                f"expected {expected_segments} segments, got {len(values)}",
                segment_cuts,
            )

    stated = _STATED_TOTAL_RE.search(text)
    stated_total = int(stated.group(1)) if stated else None
    total = sum(values)
    if stated_total is not None and stated_total != total:
        return ForecastOutcome(
            window=window,
            variant=variant,
            parsed_values=values,
            stated_total=stated_total,
            effective_total=total,
            parse_status=PARSE_INCONSISTENT,
            notes=f"segment sum {total} != stated total {stated_total}; segments win",
            segment_cuts=segment_cuts,
        )
    return ForecastOutcome(
        window=window,
        variant=variant,
        parsed_values=values,
        stated_total=stated_total,
        effective_total=total,
        parse_status=PARSE_OK,
        segment_cuts=segment_cuts,
    )


def _round_half_up(x):
    return int(np.floor(x + 0.5))


def _half_bounds(window, split_hour):
    split = clamp_split_hour(split_hour, window.poi.open_hour, window.poi.close_hour)
    return split


def _truth_and_prediction(outcome, window, scope, split_hour):
    """Aligned (truth vector, prediction vector) for one outcome.

    Fallback outcomes predict the rounded per-position mean of the history
    days under the same structure as the truth.
    """
    variant = outcome.variant
    target = window.target
    history = window.history
    split = _half_bounds(window, split_hour)

    def history_mean(fn):
        vals = [fn(d) for d in history]
        return [
            _round_half_up(sum(col) / len(col)) for col in zip(*vals)
        ]

    if scope == SCOPE_DAILY:
        truth = [target.daily_total]
        if outcome.parse_status == PARSE_FALLBACK:
            pred = history_mean(lambda d: [d.daily_total])
        else:
            pred = [outcome.effective_total]
        return truth, pred

    def day_structure(day):
        hourly = day.hourly_visits
        if variant == "v1":
            if scope == SCOPE_SEGMENT_AVERAGE:
                return list(hourly)
            return [sum(hourly[:split]), sum(hourly[split:])]
        if variant in ("v2", "v3"):
            return [sum(hourly[:split]), sum(hourly[split:])]
        # v4: the cuts that delimited the prediction
        cuts = outcome.segment_cuts
        if cuts is None:
            raise AlignmentError("v4 outcomes need segment_cuts for segment scopes")
        plan = fixed_plan(hourly, cuts, "eval")
        return segment_sums(hourly, plan)

    truth = day_structure(target)

    if outcome.parse_status == PARSE_FALLBACK:
        pred = history_mean(day_structure)
    elif variant == "v1":
        values = list(outcome.parsed_values)
        if scope == SCOPE_SEGMENT_AVERAGE:
            pred = values
        else:
            pred = [sum(values[:split]), sum(values[split:])]
    else:
        pred = list(outcome.parsed_values)

    if scope == SCOPE_FIRST_HALF:
        return truth[:1], pred[:1]
    if scope == SCOPE_SECOND_HALF:
        return truth[1:2], pred[1:2]
    return truth, pred


def compute_metrics(outcomes, truths, scope, split_hour=12):
    """RMSE/MAE of outcomes against their windows at one scope."""
    outcomes = list(outcomes)
    if scope not in SCOPES:
        raise ConfigError(f"unknown scope {scope!r}")
    if not outcomes:
        raise AlignmentError("no outcomes to score")
    variants = {o.variant for o in outcomes}
    if len(variants) > 1:
        raise AlignmentError(f"outcomes mix variants {sorted(variants)}")
    variant = outcomes[0].variant
    if scope in (SCOPE_FIRST_HALF, SCOPE_SECOND_HALF) and variant == "v4":
        raise ConfigError("half scopes are not defined for v4 outcomes")

    by_key = {w.key: w for w in truths}
    if len(by_key) != len(list(truths)):
        raise AlignmentError("duplicate windows in truths")
    if len(outcomes) != len(by_key):
        raise AlignmentError(
            f"{len(outcomes)} outcomes vs {len(by_key)} truth windows"
        )

    truth_cols = []
    pred_cols = []
    failures = 0
    for outcome in outcomes:
        if outcome.window is None or outcome.window.key not in by_key:
            raise AlignmentError("outcome window missing from truths")
        window = by_key[outcome.window.key]
        if outcome.parse_status == PARSE_FALLBACK:
            failures += 1
        truth, pred = _truth_and_prediction(outcome, window, scope, split_hour)
        truth_cols.append(truth)
        pred_cols.append(pred)

    truth_arr = np.asarray(truth_cols, dtype=np.float64)
    pred_arr = np.asarray(pred_cols, dtype=np.float64)
    err = pred_arr - truth_arr
    if scope == SCOPE_SEGMENT_AVERAGE and err.shape[1] > 1:
        # average of per-segment-position errors
        rmse = float(np.mean(np.sqrt(np.mean(err**2, axis=0))))
        mae = float(np.mean(np.mean(np.abs(err), axis=0)))
    else:
        rmse = float(np.sqrt(np.mean(err**2)))
        mae = float(np.mean(np.abs(err)))
    return MetricReport(
        rmse=rmse,
        mae=mae,
        scope=scope,
        n_samples=len(outcomes),
        parse_failure_rate=failures / len(outcomes),
    )


def render_report(reports, scopes=SCOPES):
    """Text table plus CSV for rows of {row_label: {scope: MetricReport}}.

    Cells are "rmse | mae" with two decimals; missing scopes render as "-".
    """
    scopes = [s for s in scopes]
    header = ["backend/variant"] + [f"{s} RMSE | MAE" for s in scopes]
    rows = []
    for label in sorted(reports):
        row = [label]
        for scope in scopes:
            rep = reports[label].get(scope)
            row.append(f"{rep.rmse:.2f} | {rep.mae:.2f}" if rep else "-")
        rows.append(row)

    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = [
        "  ".join(cell.ljust(w) for cell, w in zip(header, widths)).rstrip(),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    text = "\n".join(lines) + "\n"

    csv_lines = ["row,scope,rmse,mae,n_samples,parse_failure_rate"]
    for label in sorted(reports):
        for scope in scopes:
            rep = reports[label].get(scope)
            if rep:
                csv_lines.append(
                    f"{label},{scope},{rep.rmse:.6f},{rep.mae:.6f},"
                    f"{rep.n_samples},{rep.parse_failure_rate:.6f}"
                )
    csv_text = "\n".join(csv_lines) + "\n"
    return text, csv_text
