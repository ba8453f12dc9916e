"""Pluggable text generation: deterministic mocks and an HTTP client.

The wire protocol is JSON over HTTP: POST {base_url}/generate with
{"prompt", "max_tokens", "temperature"} returning {"text"}. Mock backends
echo (or corrupt) the request's reference completion so pipelines can run
without a model server; corruption decisions are a pure function of
(seed, request_id), which keeps result streams deterministic and
order-independent.
"""

import hashlib
import json
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import requests

from promptmine.errors import BackendError, ConfigError
from promptmine.quality import gate
from promptmine.refinery import build_v3
from promptmine.templates import pool_by_quality, render_initial, render_pool

DEFAULT_MAX_TOKENS = 512
DEFAULT_NOISE_SEED = 7


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    max_tokens: int = DEFAULT_MAX_TOKENS
    temperature: float = 0.0
    request_id: str = ""
    reference: str = None  # ideal completion; used by mock backends only

    def __post_init__(self):
        if self.max_tokens < 1:
            raise ConfigError("max_tokens must be >= 1")
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")


@dataclass(frozen=True)
class GenerationResult:
    text: str
    latency_ms: int
    backend: str
    request_id: str = ""


def _truncate_tokens(text, max_tokens):
    tokens = text.split(" ")
    if len(tokens) <= max_tokens:
        return text
    return " ".join(tokens[:max_tokens])


class MockBackend:
    """Deterministic surrogate generator.

    perfect: returns the request's reference completion verbatim.
    noisy: corrupts a seeded fraction of outputs in parse-breaking ways
    (all digits dropped, or the text truncated before its first number).
    """

    kind = "mock"

    def __init__(self, mode="perfect", corruption_rate=0.05, seed=DEFAULT_NOISE_SEED):
        if mode not in ("perfect", "noisy"):
            raise ConfigError(f"unknown mock mode {mode!r}")
        if not 0 <= corruption_rate <= 1:
            raise ConfigError("corruption_rate must lie in [0, 1]")
        self.mode = mode
        self.corruption_rate = corruption_rate
        self.seed = seed

    def _draw(self, request_id):
        digest = hashlib.blake2b(
            f"{self.seed}:{request_id}".encode("utf-8"), digest_size=16
        ).digest()
        u = int.from_bytes(digest[:8], "big") / 2**64
        style = digest[8] % 2
        return u, style

    def corrupts(self, request_id):
        u, _ = self._draw(request_id)
        return self.mode == "noisy" and u < self.corruption_rate

    def generate(self, request):
        if request.reference is None:
            raise ConfigError("mock backend needs a reference completion on the request")
        text = request.reference
        u, style = self._draw(request.request_id)
        if self.mode == "noisy" and u < self.corruption_rate:
            if style == 0:
                text = re.sub(r"\d", "", text) + " ###"
            else:
                match = re.search(r"\d", text)
                cut = match.start() if match else 0
                text = text[:cut] + "..."
        text = _truncate_tokens(text, request.max_tokens)
        return GenerationResult(
            text=text, latency_ms=0, backend=self.kind, request_id=request.request_id
        )

    def generate_many(self, requests_):
        return [self.generate(r) for r in requests_]


class HttpBackend:
    """JSON-over-HTTP client with bounded concurrency and retries."""

    kind = "http"

    def __init__(
        self,
        base_url,
        auth_header=None,
        auth_value=None,
        timeout=30.0,
        retries=3,
        backoff=0.5,
        max_in_flight=4,
        session=None,
    ):
        self.base_url = base_url.rstrip("/")
        self.headers = {}
        if auth_header:
            self.headers[auth_header] = auth_value or ""
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.max_in_flight = max_in_flight
        self.session = session or requests.Session()

    def generate(self, request):
        payload = {
            "prompt": request.prompt,
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
        }
        last_error = None
        start = time.monotonic()
        for attempt in range(self.retries):
            try:
                response = self.session.post(
                    f"{self.base_url}/generate",
                    json=payload,
                    headers=self.headers,
                    timeout=self.timeout,
                )
                if response.status_code // 100 != 2:
                    raise BackendError(
                        f"HTTP {response.status_code} from backend",
                        retries=attempt + 1,
                        request_id=request.request_id,
                    )
                body = response.json()
                if not isinstance(body, dict) or "text" not in body:
                    raise BackendError(
                        "malformed backend response (missing 'text')",
                        retries=attempt + 1,
                        request_id=request.request_id,
                    )
                latency = int((time.monotonic() - start) * 1000)
                return GenerationResult(
                    text=str(body["text"]),
                    latency_ms=latency,
                    backend=self.kind,
                    request_id=request.request_id,
                )
            except BackendError as exc:
                last_error = exc
            except (requests.RequestException, ValueError) as exc:
                last_error = BackendError(
                    str(exc), retries=attempt + 1, request_id=request.request_id
                )
            if attempt + 1 < self.retries:
                time.sleep(self.backoff * (2**attempt))
        raise last_error

    def generate_many(self, requests_):
        """Issue requests concurrently; results keep request order via ids."""
        requests_ = list(requests_)
        with ThreadPoolExecutor(max_workers=self.max_in_flight) as pool:
            results = list(pool.map(self.generate, requests_))
        by_id = {r.request_id: r for r in results}
        if len(by_id) == len(requests_):
            return [by_id[r.request_id] for r in requests_]
        return results


def make_backend(kind, **kwargs):
    if kind == "mock-perfect":
        return MockBackend(mode="perfect")
    if kind == "mock-noisy":
        return MockBackend(
            mode="noisy",
            corruption_rate=kwargs.get("corruption_rate", 0.05),
            seed=kwargs.get("seed", DEFAULT_NOISE_SEED),
        )
    if kind == "http":
        if not kwargs.get("base_url"):
            raise ConfigError("http backend requires a base_url")
        return HttpBackend(
            base_url=kwargs["base_url"],
            auth_header=kwargs.get("auth_header"),
            auth_value=kwargs.get("auth_value"),
            timeout=kwargs.get("timeout", 30.0),
            retries=kwargs.get("retries", 3),
            backoff=kwargs.get("backoff", 0.5),
            max_in_flight=kwargs.get("max_in_flight", 4),
        )
    raise ConfigError(f"unknown backend kind {kind!r}")


@dataclass(frozen=True)
class TrainingPair:
    input_text: str
    label_text: str
    role: str

    def __post_init__(self):
        if not self.input_text or not self.label_text:
            raise ConfigError("training pair texts must be non-empty")

    def to_json_line(self):
        return json.dumps(
            {"input": self.input_text, "label": self.label_text, "role": self.role},
            sort_keys=True,
            separators=(",", ":"),
        )


def emit_training_pairs(split, seed=0, role="generator", pool=None):
    """Training pairs for the secondary trainer, from the evaluator pool.

    generator: initial render -> a seeded-random Complex pool render.
    cot: V2 history -> the CoT-bearing V3 history.
    """
    if role not in ("generator", "cot"):
        raise ConfigError(f"unknown training role {role!r}")
    windows = split.evaluator_pool
    if not windows:
        raise ConfigError("evaluator pool is empty")
    import random as _random

    rng = _random.Random(seed)
    _, complex_templates = pool_by_quality(pool)
    for window in windows:
        if role == "generator":
            tpl = complex_templates[rng.randrange(len(complex_templates))]
            yield TrainingPair(
                input_text=render_initial(window).history_text,
                label_text=render_pool(window, tpl).history_text,
                role=role,
            )
        else:
            from promptmine.refinery import build_v2

            yield TrainingPair(
                input_text=build_v2(window).history_text,
                label_text=build_v3(window).history_text,
                role=role,
            )


def write_training_pairs(pairs, path):
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(pair.to_json_line() + "\n")


def filter_generations(model, results, tau):
    """Split results into gate-passing and rejected, with reasons.

    Empty generations cannot carry entropy and are rejected outright.
    Returns (kept: [result], rejected: [(result, verdict_or_None, reason)]).
    """
    kept = []
    rejected = []
    for result in results:
        if not result.text:
            rejected.append((result, None, "entropy"))
            continue
        verdict = gate(model, result.text, tau)
        if verdict.passed:
            kept.append(result)
        elif verdict.classifier_label == 0:
            rejected.append((result, verdict, "classifier"))
        else:
            rejected.append((result, verdict, "entropy"))
    return kept, rejected
