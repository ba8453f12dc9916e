"""Prompt templates: the initial render plus the Simple/Complex pool.

Pool templates are data files (templates_data/*.txt): a "quality:" header
line followed by the body. Bodies mix literal text, placeholders and one
optional repeat block:

    {a} region        {c} brand            {n} history length in days
    {o} opening hour  {e} closing hour     {t} weekday
    {x} visit counts  [[repeat]] ... [[/repeat]] expands once per history day

Inside a repeat block {x} is that day's 24 hourly counts and {t} that day's
weekday; outside, {x} is the list of daily totals and {t} the target
weekday. Hours render as zero-padded "HH:00"; number lists join with ", ".
"""

import random
import re
from dataclasses import dataclass, field
from importlib import resources

from promptmine.errors import ConfigError, RenderError, TemplateSyntaxError

PLACEHOLDERS = frozenset("acnxoet")
REPEAT_OPEN = "[[repeat]]"
REPEAT_CLOSE = "[[/repeat]]"

QUALITY_SIMPLE = "Simple"
QUALITY_COMPLEX = "Complex"
QUALITY_INITIAL = "Initial"

VARIANT_INIT = "Init"
VARIANT_POOL = "Pool"

# Four Table-row bodies appear verbatim under both quality labels; corpus
# building must not feed the classifier contradictory supervision, so the
# Simple side of the classifier corpus excludes them (their Complex twins
# stay in).
DUPLICATE_BODY_SIMPLE_IDS = frozenset(
    {"simple_04", "simple_06", "simple_10", "simple_12"}
)


@dataclass(frozen=True)
class PromptTemplate:
    """Parsed template: literal runs, placeholders and repeat blocks."""

    id: str
    quality_label: str
    parts: tuple  # ("lit", text) | ("ph", symbol) | ("repeat", inner parts)
    source_text: str

    @property
    def placeholders(self):
        out = []
        for kind, payload in self.parts:
            if kind == "ph":
                out.append(payload)
            elif kind == "repeat":
                out.extend(sym for k, sym in payload if k == "ph")
        return out


@dataclass(frozen=True)
class PromptPair:
    """A rendered (history, future) prompt pair for one window."""

    history_text: str
    future_text: str
    variant: str
    window: object
    quality_label: str = ""
    metadata: dict = field(default_factory=dict)


def _scan_parts(source, *, in_repeat):
    parts = []
    literal = []
    i = 0
    while i < len(source):
        ch = source[i]
        if source.startswith(REPEAT_OPEN, i):
            if in_repeat:
                raise TemplateSyntaxError("nested repeat blocks are not allowed")
            end = source.find(REPEAT_CLOSE, i)
            if end < 0:
                raise TemplateSyntaxError("unclosed repeat block")
            if literal:
                parts.append(("lit", "".join(literal)))
                literal = []
            inner_src = source[i + len(REPEAT_OPEN) : end]
            inner = _scan_parts(inner_src, in_repeat=True)
            if not any(k == "ph" and s in ("x", "t") for k, s in inner):
                raise TemplateSyntaxError("repeat block must contain {x} or {t}")
            parts.append(("repeat", tuple(inner)))
            i = end + len(REPEAT_CLOSE)
        elif source.startswith(REPEAT_CLOSE, i):
            raise TemplateSyntaxError("repeat close without matching open")
        elif ch == "{":
            close = source.find("}", i)
            if close < 0:
                raise TemplateSyntaxError("unclosed brace")
            sym = source[i + 1 : close]
            if sym not in PLACEHOLDERS:
                raise TemplateSyntaxError(f"unknown placeholder {{{sym}}}")
            if literal:
                parts.append(("lit", "".join(literal)))
                literal = []
            parts.append(("ph", sym))
            i = close + 1
        elif ch == "}":
            raise TemplateSyntaxError("stray closing brace")
        else:
            literal.append(ch)
            i += 1
    if literal:
        parts.append(("lit", "".join(literal)))
    return parts


def parse_template(source, template_id="inline", quality_label=QUALITY_SIMPLE):
    """Parse a template body; round-trips via PromptTemplate.source_text."""
    parts = tuple(_scan_parts(source, in_repeat=False))
    return PromptTemplate(
        id=template_id, quality_label=quality_label, parts=parts, source_text=source
    )


def format_hour(hour):
    return f"{hour:02d}:00"


def join_counts(values):
    return ", ".join(str(int(v)) for v in values)


def _render_parts(parts, window, day=None):
    out = []
    for kind, payload in parts:
        if kind == "lit":
            out.append(payload)
        elif kind == "repeat":
            rendered_days = [
                "".join(_render_parts(payload, window, day=d)) for d in window.history
            ]
            out.append(" ".join(rendered_days))
        else:
            out.append(_render_placeholder(payload, window, day))
    return out


def _render_placeholder(sym, window, day):
    poi = window.poi
    if sym == "a":
        if not poi.region:
            raise RenderError("template references {a} but the window has no region")
        return poi.region
    if sym == "c":
        if not poi.brand:
            raise RenderError("template references {c} but the window has no brand")
        return poi.brand
    if sym == "n":
        return str(window.n)
    if sym == "o":
        return format_hour(poi.open_hour)
    if sym == "e":
        return format_hour(poi.close_hour)
    if sym == "t":
        return day.weekday if day is not None else window.target.weekday
    if sym == "x":
        if day is not None:
            return join_counts(day.hourly_visits)
        return join_counts(d.daily_total for d in window.history)
    raise TemplateSyntaxError(f"unknown placeholder {{{sym}}}")


def render_pool(window, template):
    """Render a pool template against a window's fields."""
    if window.n == 0:
        raise RenderError("window has no history days to repeat over")
    text = "".join(_render_parts(template.parts, window))
    return PromptPair(
        history_text=text,
        future_text="",
        variant=VARIANT_POOL,
        window=window,
        quality_label=template.quality_label,
        metadata={"template_id": template.id},
    )


def render_initial(window):
    """The fixed question-plus-bracketed-series render that seeds generation.

    The 72 hourly values are flattened into one bracketed, comma-separated
    (no spaces) list.
    """
    flat = ",".join(
        str(v) for day in window.history for v in day.hourly_visits
    )
    text = (
        f"In Region {window.poi.region}, what is the daily human mobility of "
        f"{window.poi.brand} Store from {window.history[0].weekday} to "
        f"{window.history[-1].weekday}? [{flat}]."
    )
    return PromptPair(
        history_text=text,
        future_text="",
        variant=VARIANT_INIT,
        window=window,
    )


def _load_template_file(name):
    text = (
        resources.files("promptmine.templates_data").joinpath(name).read_text("utf-8")
    )
    header, _, body = text.partition("\n")
    if not header.startswith("quality:"):
        raise TemplateSyntaxError(f"{name}: missing quality header")
    quality = header.split(":", 1)[1].strip().lower()
    labels = {
        "simple": QUALITY_SIMPLE,
        "complex": QUALITY_COMPLEX,
        "initial": QUALITY_INITIAL,
    }
    if quality not in labels:
        raise TemplateSyntaxError(f"{name}: unknown quality {quality!r}")
    return parse_template(
        body.rstrip("\n"), template_id=name.rsplit(".", 1)[0], quality_label=labels[quality]
    )


def load_pool():
    """All shipped pool templates, ordered by id."""
    names = sorted(
        entry.name
        for entry in resources.files("promptmine.templates_data").iterdir()
        if entry.name.endswith(".txt")
    )
    return [_load_template_file(name) for name in names]


def pool_by_quality(pool=None):
    pool = load_pool() if pool is None else pool
    simple = [t for t in pool if t.quality_label == QUALITY_SIMPLE]
    complex_ = [t for t in pool if t.quality_label == QUALITY_COMPLEX]
    return simple, complex_


def build_classifier_corpus(split, seed, pool=None):
    """Balanced (text, label) corpus from the evaluator pool windows.

    Each pool window contributes one Simple render (label 0) and one
    Complex render (label 1); templates are chosen uniformly per window.
    Simple templates whose bodies duplicate Complex ones are excluded from
    sampling (see DUPLICATE_BODY_SIMPLE_IDS).
    """
    windows = split.evaluator_pool
    if not windows:
        raise ConfigError("evaluator pool is empty")
    simple, complex_ = pool_by_quality(pool)
    simple = [t for t in simple if t.id not in DUPLICATE_BODY_SIMPLE_IDS]
    if not simple or not complex_:
        raise ConfigError("template pool must contain both Simple and Complex templates")
    rng = random.Random(seed)
    corpus = []
    for window in windows:
        s_tpl = simple[rng.randrange(len(simple))]
        c_tpl = complex_[rng.randrange(len(complex_))]
        corpus.append((render_pool(window, s_tpl).history_text, 0))
        corpus.append((render_pool(window, c_tpl).history_text, 1))
    return corpus
