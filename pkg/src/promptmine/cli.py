"""Pipeline entry point.

Stages: ingest/synth -> split -> train-evaluator -> emit-pairs -> mine ->
refine -> evaluate -> report. Artifacts land in <out>/<config-hash>/ so
runs with different configurations never mix; every command writes a
manifest recording its config hash and input/output hashes. Commands are
idempotent: identical config and inputs reproduce identical bytes
(timestamps exist only inside manifests).

Exit codes: 0 ok, 1 user/config error, 2 backend failure.
"""

import argparse
import dataclasses
import datetime as dt
import hashlib
import json
import os
import random
import sys

import yaml

from promptmine import backend as backend_mod
from promptmine import data as data_mod
from promptmine import quality as quality_mod
from promptmine import templates as templates_mod
from promptmine.errors import BackendError, ConfigError, IoError, PromptMineError
from promptmine.evaluate import (
    SCOPE_DAILY,
    SCOPE_FIRST_HALF,
    SCOPE_SECOND_HALF,
    SCOPE_SEGMENT_AVERAGE,
    compute_metrics,
    parse_forecast,
    render_report,
)
from promptmine.refinery import build_variant

VARIANTS = ("v1", "v2", "v3", "v4")


@dataclasses.dataclass
class PipelineConfig:
    seed: int = 42
    n: int = 3
    fractions: tuple = (0.70, 0.10, 0.20)
    pool_fraction: float = 0.20
    tau: float = 3.5
    split_hour: int = 12
    k_values: tuple = (2, 3, 4, 5)
    seg_mode: str = "minimize-eq5"
    source_kind: str = "synth"
    source_path: str = None
    source_format: str = "jsonl"
    num_pois: int = 50
    days: int = 7
    peak_profile: str = "retail"
    backend_kind: str = "mock-perfect"
    backend_url: str = None
    corruption_rate: float = 0.05
    noise_seed: int = 7
    max_tokens: int = 512
    out_dir: str = "out"

    def identity_dict(self):
        d = dataclasses.asdict(self)
        d.pop("out_dir")
        d["fractions"] = list(self.fractions)
        d["k_values"] = list(self.k_values)
        return d

    def config_hash(self):
        canonical = json.dumps(self.identity_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]

    def artifact_dir(self):
        return os.path.join(self.out_dir, self.config_hash())


def load_config(path=None, overrides=None):
    values = {}
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                loaded = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise IoError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must contain a mapping")
        values.update(loaded)
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in dataclasses.fields(PipelineConfig)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "fractions" in values:
        values["fractions"] = tuple(float(x) for x in values["fractions"])
    if "k_values" in values:
        values["k_values"] = tuple(int(x) for x in values["k_values"])
    return PipelineConfig(**values)


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


class Stage:
    """Staged artifact writes: outputs become visible only on success."""

    def __init__(self, config, command):
        self.config = config
        self.command = command
        self.root = config.artifact_dir()
        os.makedirs(self.root, exist_ok=True)
        self._tmp = []
        self._inputs = {}
        self._outputs = []

    def path(self, name):
        return os.path.join(self.root, name)

    def input_path(self, name, missing_hint=None):
        path = self.path(name)
        if not os.path.exists(path):
            raise ConfigError(missing_hint or f"{name} not found (run the upstream command first)")
        self._inputs[name] = _sha256(path)
        return path

    def write_text(self, name, text):
        tmp = self.path(name + ".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(text)
        self._tmp.append((tmp, self.path(name)))
        self._outputs.append(name)

    def write_jsonl(self, name, dicts):
        tmp = self.path(name + ".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            for obj in dicts:
                fh.write(json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n")
        self._tmp.append((tmp, self.path(name)))
        self._outputs.append(name)

    def write_json(self, name, obj):
        tmp = self.path(name + ".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, sort_keys=True, indent=2)
            fh.write("\n")
        self._tmp.append((tmp, self.path(name)))
        self._outputs.append(name)

    def abort(self):
        for tmp, _ in self._tmp:
            if os.path.exists(tmp):
                os.remove(tmp)

    def finish(self):
        for tmp, final in self._tmp:
            os.replace(tmp, final)
        manifest = {
            "command": self.command,
            "config_hash": self.config.config_hash(),
            "config": self.config.identity_dict(),
            "inputs": self._inputs,
            "outputs": {name: _sha256(self.path(name)) for name in self._outputs},
            "created_at": dt.datetime.now(dt.timezone.utc).isoformat(),
        }
        with open(self.path(f"{self.command}.manifest.json"), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=2)
            fh.write("\n")


def _load_split(stage):
    path = stage.input_path("windows.jsonl")
    train, val, test, pool = [], [], [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            obj = json.loads(line)
            window = data_mod.window_from_json_dict(obj)
            {"train": train, "val": val, "test": test}[obj["role"]].append(window)
            if obj.get("in_pool"):
                pool.append(window)
    return data_mod.DatasetSplit(
        train=tuple(train),
        val=tuple(val),
        test=tuple(test),
        evaluator_pool=tuple(pool),
        seed=stage.config.seed,
    )


def _make_backend(config):
    return backend_mod.make_backend(
        config.backend_kind,
        base_url=config.backend_url,
        corruption_rate=config.corruption_rate,
        seed=config.noise_seed,
    )


def cmd_synth(config, args):
    stage = Stage(config, "synth")
    records = data_mod.synthesize_corpus(
        data_mod.SynthConfig(
            num_pois=config.num_pois,
            days=config.days,
            peak_profile=config.peak_profile,
            seed=config.seed,
        )
    )
    lines = []
    for rec in records:
        for day in rec.days:
            lines.append(
                {
                    "poi_id": rec.poi_id,
                    "brand": rec.brand,
                    "region": rec.region,
                    "open_hour": rec.open_hour,
                    "close_hour": rec.close_hour,
                    "date": day.date.isoformat(),
                    "hourly_visits": list(day.hourly_visits),
                }
            )
    stage.write_jsonl("records.jsonl", lines)
    return stage


def cmd_ingest(config, args):
    stage = Stage(config, "ingest")
    if not args.input:
        raise ConfigError("ingest requires --input")
    records = data_mod.load_records(args.input, args.format or config.source_format)
    stage._inputs[os.path.basename(args.input)] = _sha256(args.input)
    lines = []
    for rec in records:
        for day in rec.days:
            lines.append(
                {
                    "poi_id": rec.poi_id,
                    "brand": rec.brand,
                    "region": rec.region,
                    "open_hour": rec.open_hour,
                    "close_hour": rec.close_hour,
                    "date": day.date.isoformat(),
                    "hourly_visits": list(day.hourly_visits),
                }
            )
    stage.write_jsonl("records.jsonl", lines)
    return stage


def cmd_split(config, args):
    stage = Stage(config, "split")
    records = data_mod.load_records(stage.input_path("records.jsonl"))
    windows = data_mod.make_windows(records, config.n)
    split = data_mod.split_dataset(
        windows,
        fractions=config.fractions,
        pool_fraction=config.pool_fraction,
        seed=config.seed,
    )
    pool_keys = {w.key for w in split.evaluator_pool}
    lines = []
    for role, group in (("train", split.train), ("val", split.val), ("test", split.test)):
        for window in group:
            obj = data_mod.window_to_json_dict(window)
            obj["role"] = role
            obj["in_pool"] = window.key in pool_keys
            lines.append(obj)
    stage.write_jsonl("windows.jsonl", lines)
    return stage


def cmd_train_evaluator(config, args):
    stage = Stage(config, "train-evaluator")
    split = _load_split(stage)
    corpus = templates_mod.build_classifier_corpus(split, config.seed)
    shuffled = list(corpus)
    random.Random(config.seed).shuffle(shuffled)
    n_holdout = max(1, len(shuffled) // 5)
    holdout, train = shuffled[:n_holdout], shuffled[n_holdout:]
    model = quality_mod.train_classifier(train, seed=config.seed)
    correct = sum(
        1 for text, label in holdout if quality_mod.classify(model, text)[1] == label
    )
    accuracy = correct / len(holdout)
    payload = {
        "format_version": 1,
        "feature_dim": model.feature_dim,
        "weights": model.weights.tolist(),
        "bias": model.bias,
        "hyperparams": model.hyperparams,
        "iterations": model.iterations,
        "holdout_accuracy": accuracy,
    }
    stage.write_text(
        "evaluator.json", json.dumps(payload, sort_keys=True) + "\n"
    )
    print(f"held-out accuracy: {accuracy:.4f} ({correct}/{len(holdout)})")
    print(f"optimizer iterations: {model.iterations}")
    return stage


def cmd_emit_pairs(config, args):
    stage = Stage(config, "emit-pairs")
    split = _load_split(stage)
    role = args.role or "generator"
    pairs = backend_mod.emit_training_pairs(split, seed=config.seed, role=role)
    stage.write_jsonl(
        f"pairs-{role}.jsonl",
        ({"input": p.input_text, "label": p.label_text, "role": p.role} for p in pairs),
    )
    return stage


def cmd_mine(config, args):
    stage = Stage(config, "mine")
    split = _load_split(stage)
    model = quality_mod.load_model(
        stage.input_path("evaluator.json", missing_hint="model not found")
    )
    gen_backend = _make_backend(config)
    rng = random.Random(config.seed)
    _, complex_templates = templates_mod.pool_by_quality()
    requests_ = []
    for window in split.evaluator_pool:
        tpl = complex_templates[rng.randrange(len(complex_templates))]
        requests_.append(
            backend_mod.GenerationRequest(
                prompt=templates_mod.render_initial(window).history_text,
                max_tokens=config.max_tokens,
                request_id=f"mine:{window.key[0]}:{window.key[1]}",
                reference=templates_mod.render_pool(window, tpl).history_text,
            )
        )
    results = gen_backend.generate_many(requests_)
    kept, rejected = backend_mod.filter_generations(model, results, config.tau)
    stage.write_jsonl(
        "mined-kept.jsonl",
        (
            {
                "request_id": r.request_id,
                "text": r.text,
                **quality_mod.gate(model, r.text, config.tau).to_json_dict(),
            }
            for r in kept
        ),
    )
    stage.write_jsonl(
        "mined-rejected.jsonl",
        (
            {
                "request_id": r.request_id,
                "text": r.text,
                "reason": reason,
                **(verdict.to_json_dict() if verdict else {}),
            }
            for r, verdict, reason in rejected
        ),
    )
    print(f"kept {len(kept)} / rejected {len(rejected)}")
    return stage


def _variant_list(args, config):
    if args.variant and args.variant != "all":
        return [args.variant]
    return list(VARIANTS)


def _k_list(args, config):
    if args.k:
        return [args.k]
    return list(config.k_values)


def cmd_refine(config, args):
    stage = Stage(config, "refine")
    split = _load_split(stage)
    windows = split.all_windows
    mode = args.mode or config.seg_mode
    for variant in _variant_list(args, config):
        if variant == "v4":
            for k in _k_list(args, config):
                stage.write_jsonl(
                    f"prompts-v4-k{k}.jsonl",
                    (_prompt_line(w, "v4", config, k, mode) for w in windows),
                )
        else:
            stage.write_jsonl(
                f"prompts-{variant}.jsonl",
                (_prompt_line(w, variant, config, None, mode) for w in windows),
            )
    return stage


def _prompt_line(window, variant, config, k, mode):
    pair = build_variant(
        window,
        variant,
        split_hour=config.split_hour,
        k=k or 4,
        mode=mode,
    )
    return {
        "variant": pair.variant,
        "poi_id": window.poi.poi_id,
        "target_date": window.target.date.isoformat(),
        "history_text": pair.history_text,
        "future_text": pair.future_text,
        "metadata": pair.metadata,
    }


def cmd_evaluate(config, args):
    stage = Stage(config, "evaluate")
    split = _load_split(stage)
    quality_mod.load_model(
        stage.input_path("evaluator.json", missing_hint="model not found")
    )
    windows = {
        "test": split.test,
        "all": split.all_windows,
        "train": split.train,
        "val": split.val,
    }[args.subset or "test"]
    if not windows:
        raise ConfigError("no windows in the selected subset")
    gen_backend = _make_backend(config)
    mode = args.mode or config.seg_mode
    metrics = {}
    for variant in _variant_list(args, config):
        ks = _k_list(args, config) if variant == "v4" else [None]
        for k in ks:
            label = f"{config.backend_kind}/{variant}" + (f"-k{k}" if k else "")
            outcomes = _evaluate_variant(
                stage, config, gen_backend, windows, variant, k, mode
            )
            scopes = (
                (SCOPE_DAILY, SCOPE_SEGMENT_AVERAGE)
                if variant == "v4"
                else (SCOPE_DAILY, SCOPE_FIRST_HALF, SCOPE_SECOND_HALF, SCOPE_SEGMENT_AVERAGE)
            )
            metrics[label] = {}
            for scope in scopes:
                report = compute_metrics(
                    outcomes, windows, scope, split_hour=config.split_hour
                )
                metrics[label][scope] = report.to_json_dict()
    stage.write_json("metrics.json", metrics)
    return stage


def _evaluate_variant(stage, config, gen_backend, windows, variant, k, mode):
    expected = {"v1": 24, "v2": 2, "v3": 2}.get(variant, k)
    requests_ = []
    pairs = []
    for window in windows:
        pair = build_variant(
            window, variant, split_hour=config.split_hour, k=k or 4, mode=mode
        )
        pairs.append(pair)
        requests_.append(
            backend_mod.GenerationRequest(
                prompt=pair.history_text,
                max_tokens=config.max_tokens,
                request_id=f"{variant}{'-k%d' % k if k else ''}:{window.key[0]}:{window.key[1]}",
                reference=pair.future_text,
            )
        )
    results = gen_backend.generate_many(requests_)
    outcomes = []
    for window, pair, result in zip(windows, pairs, results):
        cuts = tuple(pair.metadata["target_cuts"]) if variant == "v4" else None
        outcomes.append(
            parse_forecast(
                result.text,
                variant,
                expected,
                window=window,
                segment_cuts=cuts,
            )
        )
    name = f"outcomes-{variant}" + (f"-k{k}" if k else "") + ".jsonl"
    stage.write_jsonl(name, (o.to_json_dict() for o in outcomes))
    return outcomes


def cmd_report(config, args):
    stage = Stage(config, "report")
    with open(stage.input_path("metrics.json"), encoding="utf-8") as fh:
        metrics = json.load(fh)
    from promptmine.evaluate import MetricReport

    reports = {
        label: {
            scope: MetricReport(
                rmse=rep["rmse"],
                mae=rep["mae"],
                scope=scope,
                n_samples=rep["n_samples"],
                parse_failure_rate=rep["parse_failure_rate"],
            )
            for scope, rep in by_scope.items()
        }
        for label, by_scope in metrics.items()
    }
    text, csv_text = render_report(reports)
    stage.write_text("report.txt", text)
    stage.write_text("report.csv", csv_text)
    print(text, end="")
    return stage


COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "split": cmd_split,
    "train-evaluator": cmd_train_evaluator,
    "emit-pairs": cmd_emit_pairs,
    "mine": cmd_mine,
    "refine": cmd_refine,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}


def run(command, config, args=None):
    """Run one pipeline command; returns the process exit code."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    args = args or argparse.Namespace(
        input=None, format=None, role=None, variant=None, k=None, mode=None, subset=None
    )
    stage = None
    try:
        stage = COMMANDS[command](config, args)
        stage.finish()
        return 0
    except BackendError as exc:
        if stage is not None:
            stage.abort()
        _emit_error(command, "backend", exc)
        return 2
    except PromptMineError as exc:
        if stage is not None:
            stage.abort()
        _emit_error(command, type(exc).__name__, exc)
        return 1


def _emit_error(command, kind, exc):
    record = {"command": command, "error": kind, "message": str(exc)}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="promptmine",
        description="Mobility prompt mining pipeline: data, prompts, quality gate, forecasting metrics.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="YAML config file")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--tau", type=float)
    parser.add_argument("--out", dest="out_dir")
    parser.add_argument("--n", type=int, help="history days per window")
    parser.add_argument("--num-pois", type=int, dest="num_pois")
    parser.add_argument("--days", type=int)
    parser.add_argument("--peak-profile", dest="peak_profile", choices=("retail", "flat"))
    parser.add_argument("--split-hour", type=int, dest="split_hour")
    parser.add_argument(
        "--backend",
        dest="backend_kind",
        choices=("mock-perfect", "mock-noisy", "http"),
    )
    parser.add_argument("--backend-url", dest="backend_url")
    parser.add_argument("--corruption-rate", type=float, dest="corruption_rate")
    parser.add_argument("--noise-seed", type=int, dest="noise_seed")
    parser.add_argument("--input", help="source file for ingest")
    parser.add_argument("--format", choices=("jsonl", "csv"), help="source format for ingest")
    parser.add_argument("--role", choices=("generator", "cot"), help="emit-pairs role")
    parser.add_argument("--variant", choices=VARIANTS + ("all",))
    parser.add_argument("--k", type=int, help="segment count for v4")
    parser.add_argument("--mode", choices=("minimize-eq5", "maximize-ig", "fixed-diurnal"))
    parser.add_argument("--subset", choices=("test", "train", "val", "all"))
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {
        key: getattr(args, key)
        for key in (
            "seed", "tau", "out_dir", "n", "num_pois", "days", "peak_profile",
            "split_hour", "backend_kind", "backend_url", "corruption_rate", "noise_seed",
        )
    }
    try:
        config = load_config(args.config, overrides)
    except PromptMineError as exc:
        _emit_error(args.command, type(exc).__name__, exc)
        return 1
    return run(args.command, config, args)


if __name__ == "__main__":
    sys.exit(main())
