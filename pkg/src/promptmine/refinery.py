"""Prompt variants V1-V4.

V1 spells out the hourly counts per history day; V2 aggregates each day
into first/second half-of-shift sums (diurnal partitioning); V3 compresses
the V2 sums into one list and appends an arithmetic chain of thought; V4
replaces the diurnal halves with K information-gain segments per day.

Every builder conserves day totals exactly and is deterministic for a
fixed (window, config). Generated chain-of-thought text from a backend is
accepted only when every extracted equation checks out; otherwise the
deterministic synthesis is used.
"""

import re
from dataclasses import dataclass

from promptmine.errors import ConfigError, NoExpressionsFound
from promptmine.segmentation import (
    MODE_MIN_EQ5,
    even_cuts,
    fixed_plan,
    segment,
    segment_sums,
)
from promptmine.templates import PromptPair, format_hour, join_counts

DEFAULT_SPLIT_HOUR = 12
MODE_FIXED_DIURNAL = "fixed-diurnal"

COT_TWO_SEGMENTS = "The entire working time is composed of the first half and the second half."
COT_MANY_SEGMENTS = "The entire working time is composed of the whole time segments."

_COT_EXPR_RE = re.compile(r"(\d+(?:\s*\+\s*\d+)+)\s*=\s*(\d+)")


@dataclass(frozen=True)
class DiurnalSplit:
    split_hour: int
    first_half: int
    second_half: int


@dataclass(frozen=True)
class CotLine:
    day: str
    addends: tuple
    total: int
    text: str


def clamp_split_hour(split_hour, open_hour, close_hour):
    """Clamp the split hour into working hours; inert for 00:00-24:00 days."""
    lo = open_hour + 1
    hi = max(lo, close_hour - 1)
    return min(max(split_hour, lo), hi)


def diurnal_split(day, split_hour=DEFAULT_SPLIT_HOUR, open_hour=0, close_hour=24):
    """First/second half-of-day sums; the two halves partition all 24 hours."""
    split = clamp_split_hour(split_hour, open_hour, close_hour)
    first = sum(day.hourly_visits[:split])
    second = sum(day.hourly_visits[split:])
    return DiurnalSplit(split_hour=split, first_half=first, second_half=second)


def synthesize_cot(addend_lists, days=None):
    """Deterministic arithmetic lines, one per day: "5 + 4 = 9"."""
    if days is None:
        days = [""] * len(addend_lists)
    lines = []
    for day, addends in zip(days, addend_lists):
        addends = tuple(int(a) for a in addends)
        if not addends:
            raise ConfigError("each addend list must be non-empty")
        total = sum(addends)
        text = " + ".join(str(a) for a in addends) + f" = {total}"
        lines.append(CotLine(day=day, addends=addends, total=total, text=text))
    return lines


def cot_paragraph(lines, day_from, day_to):
    """Full chain-of-thought sentence for a span of days."""
    many = any(len(line.addends) > 2 for line in lines)
    preamble = COT_MANY_SEGMENTS if many else COT_TWO_SEGMENTS
    sep = "; " if many else ", "
    eqs = sep.join(line.text for line in lines)
    return (
        f"{preamble} Therefore, from {day_from} to {day_to}, "
        f"the total human mobility are {eqs}."
    )


def verify_cot(text):
    """Extract every "a + b (+ ...) = t" expression and check its arithmetic."""
    results = []
    for match in _COT_EXPR_RE.finditer(text):
        addends = tuple(int(p) for p in re.split(r"\s*\+\s*", match.group(1)))
        total = int(match.group(2))
        results.append((addends, total, sum(addends) == total))
    if not results:
        raise NoExpressionsFound("no arithmetic expressions found")
    return results


def _intro(window):
    return f"This is a {window.poi.brand} in {window.poi.region}."


def _working_time_phrase(poi):
    return f"from {format_hour(poi.open_hour)} to {format_hour(poi.close_hour)} (working time)"


def _question():
    return "How many people will visit this place tomorrow?"


def build_v1(window):
    """Hourly-series prompt; the deterministic stand-in for a generation backend."""
    poi = window.poi
    day_sentences = [
        f"{join_counts(day.hourly_visits)} people (per hour) came here "
        f"{_working_time_phrase(poi)} on {day.weekday}."
        for day in window.history
    ]
    history = (
        f"{_intro(window)} The human mobility of the past {window.n} days are: "
        + " ".join(day_sentences)
        + f" {_question()}"
    )
    future = (
        f"On {window.target.weekday}, there are {join_counts(window.target.hourly_visits)} "
        f"people who will visit {poi.brand} during working time."
    )
    return PromptPair(
        history_text=history,
        future_text=future,
        variant="V1",
        window=window,
        metadata={},
    )


def _window_splits(window, split_hour):
    poi = window.poi
    splits = [
        diurnal_split(d, split_hour, poi.open_hour, poi.close_hour)
        for d in window.history
    ]
    target = diurnal_split(window.target, split_hour, poi.open_hour, poi.close_hour)
    return splits, target


def _v2_future(window, target_split):
    brand = window.poi.brand
    total = target_split.first_half + target_split.second_half
    return (
        f"On {window.target.weekday}, there will be {target_split.first_half} people "
        f"to visit {brand} during the first half of the work shift and "
        f"{target_split.second_half} people to visit {brand} during the latter half "
        f"of the work shift. Therefore, there are {total} people will visit here."
    )


def build_v2(window, split_hour=DEFAULT_SPLIT_HOUR):
    """Diurnal-partitioned prompt: per-day (first half, second half) sums."""
    splits, target = _window_splits(window, split_hour)
    day_sentences = [
        f"{s.first_half} people came here during the first half of the work shift "
        f"and {s.second_half} people came here during the latter half of the work shift "
        f"on {d.weekday}."
        for s, d in zip(splits, window.history)
    ]
    history = (
        f"{_intro(window)} The human mobility of the past {window.n} days are: "
        + " ".join(day_sentences)
        + f" {_question()}"
    )
    return PromptPair(
        history_text=history,
        future_text=_v2_future(window, target),
        variant="V2",
        window=window,
        metadata={"split_hour": splits[0].split_hour},
    )


def build_v3(window, split_hour=DEFAULT_SPLIT_HOUR, cot_backend=None):
    """V2 sums compressed to one list with an appended chain of thought.

    The future text is exactly V2's. When a CoT backend is supplied its
    output replaces the synthesized chain only if verify_cot accepts every
    equation in it.
    """
    splits, target = _window_splits(window, split_hour)
    pairs = [(s.first_half, s.second_half) for s in splits]
    flat = join_counts(v for pair in pairs for v in pair)
    day_from = window.history[0].weekday
    day_to = window.history[-1].weekday
    lines = synthesize_cot(pairs, days=[d.weekday for d in window.history])
    cot = cot_paragraph(lines, day_from, day_to)
    if cot_backend is not None:
        cot = _generated_cot(cot_backend, window, cot)
    history = (
        f"{_intro(window)} From {day_from} to {day_to}, the human mobility during "
        f"the first and second half working time are {flat}. {cot} {_question()}"
    )
    return PromptPair(
        history_text=history,
        future_text=_v2_future(window, target),
        variant="V3",
        window=window,
        metadata={"split_hour": splits[0].split_hour},
    )


def _generated_cot(backend, window, fallback_text):
    from promptmine.backend import GenerationRequest  # avoid a module cycle

    request = GenerationRequest(
        prompt=build_v2(window).history_text,
        request_id=f"cot:{window.key[0]}:{window.key[1]}",
        reference=fallback_text,
    )
    try:
        generated = backend.generate(request).text
        checks = verify_cot(generated)
    except Exception:
        return fallback_text
    if all(ok for _, _, ok in checks):
        return generated
    return fallback_text


def _v4_plans(window, k, mode, split_hour):
    poi = window.poi
    if mode == MODE_FIXED_DIURNAL:
        if k == 2:
            cuts = [clamp_split_hour(split_hour, poi.open_hour, poi.close_hour)]
        else:
            cuts = even_cuts(len(window.target.hourly_visits), k)
        day_plans = [
            fixed_plan(d.hourly_visits, cuts, MODE_FIXED_DIURNAL) for d in window.history
        ]
        target_plan = fixed_plan(window.target.hourly_visits, cuts, MODE_FIXED_DIURNAL)
        return day_plans, target_plan
    day_plans = [segment(d.hourly_visits, k, mode) for d in window.history]
    # The target's counts are unknown at inference; its plan is fitted on
    # the element-wise sum of the history days (same optimum as the mean:
    # the value histogram is invariant under the value/n bijection).
    mean_series = [
        sum(d.hourly_visits[h] for d in window.history)
        for h in range(len(window.target.hourly_visits))
    ]
    target_plan = segment(mean_series, k, mode)
    return day_plans, target_plan


def build_v4(window, k=4, mode=MODE_MIN_EQ5, split_hour=DEFAULT_SPLIT_HOUR):
    """K-segment prompt; per-day segment sums with a K-addend chain of thought."""
    if not 2 <= k <= len(window.target.hourly_visits):
        raise ConfigError(f"k={k} out of range for V4 prompts")
    day_plans, target_plan = _v4_plans(window, k, mode, split_hour)
    day_sums = [
        segment_sums(d.hourly_visits, plan)
        for d, plan in zip(window.history, day_plans)
    ]
    target_sums = segment_sums(window.target.hourly_visits, target_plan)
    day_from = window.history[0].weekday
    day_to = window.history[-1].weekday
    lines = synthesize_cot(day_sums, days=[d.weekday for d in window.history])
    cot = cot_paragraph(lines, day_from, day_to)
    sums_text = "; ".join(join_counts(s) for s in day_sums)
    history = (
        f"{_intro(window)} From {day_from} to {day_to}, the human mobility during "
        f"the {k} different time segments are {sums_text}. {cot} {_question()}"
    )
    brand = window.poi.brand
    target_day = window.target.weekday
    total = sum(target_sums)
    future = (
        f"On {target_day}, there will be {join_counts(target_sums)} people to visit "
        f"{brand} during these {k} different time segments. Therefore, there are "
        f"{total} people will visit {brand} on {target_day}."
    )
    return PromptPair(
        history_text=history,
        future_text=future,
        variant="V4",
        window=window,
        metadata={
            "k": k,
            "mode": mode,
            "target_cuts": list(target_plan.cuts),
            "day_cuts": [list(p.cuts) for p in day_plans],
        },
    )


_BUILDERS = {"v1": build_v1, "v2": build_v2, "v3": build_v3, "v4": build_v4}


def build_variant(window, variant, split_hour=DEFAULT_SPLIT_HOUR, k=4, mode=MODE_MIN_EQ5):
    """Dispatch to the variant builders with a uniform signature."""
    variant = variant.lower()
    if variant == "v1":
        return build_v1(window)
    if variant == "v2":
        return build_v2(window, split_hour)
    if variant == "v3":
        return build_v3(window, split_hour)
    if variant == "v4":
        return build_v4(window, k=k, mode=mode, split_hour=split_hour)
    raise ConfigError(f"unknown variant {variant!r}")


def render_future(window, variant, split_hour=DEFAULT_SPLIT_HOUR, k=4, mode=MODE_MIN_EQ5):
    """The ground-truth future sentence for a window under a variant."""
    return build_variant(window, variant, split_hour=split_hour, k=k, mode=mode).future_text
