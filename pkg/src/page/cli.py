"""Command-line entry point for the whole pipeline.

Subcommands: train, classify, compose, rewrite, rouge, experiment.
Settings resolve in precedence order flag > environment > config file >
default; the environment knows PAGE_ENDPOINT, PAGE_MODEL and
PAGE_CONFIG (path to a flat JSON config). Without --dataset the
bundled 50-requirement sample is used.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from importlib.resources import as_file, files

from .auxiliary import (EXAMPLES_KIND, ContextContribution, default_bank,
                        format_examples, load_bank)
from .composer import compose, default_template, load_template, zero_shot_template
from .dataset import DatasetError, load_dataset, parse_label, stratified_split
from .forest import load_model, predict_text, save_model
from .generator import (GeneratorConfig, GeneratorError, HttpGenerator,
                        mock_fixed_generator, mock_gold_generator)
from .harness import (ExperimentKind, emit_report, fit_classifier,
                      improvement_table, run_experiment)
from .rouge import corpus_average, score_pair

ENV_ENDPOINT = "PAGE_ENDPOINT"
ENV_MODEL = "PAGE_MODEL"
ENV_CONFIG = "PAGE_CONFIG"

KIND_TOKENS = {
    "zero": ExperimentKind.ZERO_SHOT,
    "oracle": ExperimentKind.DATASET_SAMPLES,
    "page": ExperimentKind.PAGE,
}


@dataclasses.dataclass(frozen=True)
class CliConfig:
    """Fully resolved settings shared by the subcommands."""

    dataset: str | None = None
    seed: int = 0
    out_dir: str = "out"
    endpoint: str = "http://localhost:11434"
    model: str = "llama3.1:8b"
    temperature: float = 0.0
    timeout_s: float = 120.0
    retries: int = 2
    backoff_ms: float = 250.0
    concurrency: int = 1
    template: str | None = None
    bank: str | None = None
    model_file: str | None = None
    as_json: bool = False

    def generator_config(self) -> GeneratorConfig:
        return GeneratorConfig(endpoint=self.endpoint, model=self.model,
                               temperature=self.temperature,
                               timeout_s=self.timeout_s,
                               max_retries=self.retries,
                               backoff_ms=self.backoff_ms)


_FILE_KEYS = {
    "dataset": str, "seed": int, "out_dir": str, "endpoint": str,
    "model": str, "temperature": float, "timeout_s": float, "retries": int,
    "backoff_ms": float, "concurrency": int, "template": str, "bank": str,
    "model_file": str,
}


def resolve_config(args: argparse.Namespace) -> CliConfig:
    """Merge defaults, config file, environment and flags."""
    values: dict = {}

    config_path = args.config or os.environ.get(ENV_CONFIG)
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ValueError("config file must hold a JSON object")
        for key, value in raw.items():
            if key not in _FILE_KEYS:
                raise ValueError(f"unknown config key: {key!r}")
            values[key] = _FILE_KEYS[key](value)

    if os.environ.get(ENV_ENDPOINT):
        values["endpoint"] = os.environ[ENV_ENDPOINT]
    if os.environ.get(ENV_MODEL):
        values["model"] = os.environ[ENV_MODEL]

    for key in _FILE_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    values["as_json"] = bool(getattr(args, "json", False))
    return CliConfig(**values)


def _load_records(config: CliConfig):
    if config.dataset:
        return load_dataset(config.dataset)
    with as_file(files("page").joinpath("data/sample.csv")) as path:
        return load_dataset(path)


def _load_bank(config: CliConfig):
    return load_bank(config.bank) if config.bank else default_bank()


def _enriched_template(config: CliConfig):
    if config.template:
        return load_template(config.template)
    return default_template()


def _require_model(config: CliConfig):
    if not config.model_file:
        raise SystemExit("this command needs --model-file "
                         "(train one with the train subcommand)")
    return load_model(config.model_file)


def _examples_for_mode(config: CliConfig, text: str, mode: str,
                       label: str | None) -> list[ContextContribution]:
    bank = _load_bank(config)
    if mode == "zero":
        return []
    if mode == "label":
        if not label:
            raise SystemExit("--mode label needs --label CATEGORY")
        category = parse_label(label)
    else:
        model = _require_model(config)
        category = predict_text(model, text)
    payload = format_examples(bank.pairs_for(category))
    return [ContextContribution(kind=EXAMPLES_KIND, payload=payload)]


def _compose_for_mode(config: CliConfig, text: str, mode: str,
                      label: str | None):
    contributions = _examples_for_mode(config, text, mode, label)
    if mode == "zero" and not config.template:
        template = zero_shot_template()
    else:
        template = _enriched_template(config)
    return compose(template, contributions, text)


def _make_generator(config: CliConfig, name: str, fixed_text: str, records):
    if name == "http":
        return HttpGenerator(config.generator_config())
    if name == "mock-gold":
        return mock_gold_generator({r.natural: r.gold_ears for r in records})
    return mock_fixed_generator(fixed_text)


def cmd_train(config: CliConfig) -> int:
    records = _load_records(config)
    outcome = fit_classifier(records, seed=config.seed)
    os.makedirs(config.out_dir, exist_ok=True)
    model_path = os.path.join(config.out_dir, "model.json")
    save_model(outcome.model, model_path)

    report_json = {
        "best_params": outcome.best_params.to_jsonable(),
        "cv_scores": list(outcome.cv_scores),
        "report": outcome.report.to_jsonable(),
        "test_size": len(outcome.split.test_ids),
        "train_size": len(outcome.split.train_ids),
    }
    with open(os.path.join(config.out_dir, "report.json"), "w",
              encoding="utf-8") as fh:
        json.dump(report_json, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(config.out_dir, "report.txt"), "w",
              encoding="utf-8") as fh:
        fh.write(outcome.report.to_text() + "\n")
    with open(os.path.join(config.out_dir, "confusion.json"), "w",
              encoding="utf-8") as fh:
        json.dump(outcome.confusion.to_jsonable(), fh, indent=2,
                  sort_keys=True)
        fh.write("\n")
    with open(os.path.join(config.out_dir, "confusion.txt"), "w",
              encoding="utf-8") as fh:
        fh.write(outcome.confusion.to_text() + "\n")

    if config.as_json:
        print(json.dumps({"model": model_path,
                          "best_params": outcome.best_params.to_jsonable(),
                          "accuracy": outcome.report.accuracy},
                         sort_keys=True))
    else:
        bp = outcome.best_params
        print(f"best combo: n_estimators={bp.n_estimators} "
              f"max_depth={bp.max_depth} "
              f"min_samples_split={bp.min_samples_split}")
        print(f"test accuracy: {outcome.report.accuracy:.4f}")
        print(f"model written to {model_path}")
    return 0


def cmd_classify(config: CliConfig, text: str) -> int:
    model = _require_model(config)
    category = predict_text(model, text)
    if config.as_json:
        print(json.dumps({"category": category.display_name,
                          "id": int(category)}, sort_keys=True))
    else:
        print(category.display_name)
    return 0


def cmd_compose(config: CliConfig, text: str, mode: str,
                label: str | None) -> int:
    prompt = _compose_for_mode(config, text, mode, label)
    if config.as_json:
        print(json.dumps({"prompt": prompt.text,
                          "template": prompt.template_name}, sort_keys=True))
    else:
        print(prompt.text)
    return 0


def cmd_rewrite(config: CliConfig, text: str, mode: str, label: str | None,
                generator_name: str, fixed_text: str) -> int:
    prompt = _compose_for_mode(config, text, mode, label)
    records = _load_records(config) if generator_name == "mock-gold" else []
    generator = _make_generator(config, generator_name, fixed_text, records)
    try:
        result = generator.generate(prompt.text)
    except GeneratorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if config.as_json:
        print(json.dumps({"rewritten": result.cleaned, "raw": result.raw,
                          "attempts": result.attempts}, sort_keys=True))
    else:
        print(result.cleaned)
    return 0


def cmd_rouge(config: CliConfig, candidate_file: str,
              reference_file: str) -> int:
    with open(candidate_file, encoding="utf-8") as fh:
        cand_lines = [l for l in fh.read().splitlines() if l.strip()]
    with open(reference_file, encoding="utf-8") as fh:
        ref_lines = [l for l in fh.read().splitlines() if l.strip()]
    if len(cand_lines) != len(ref_lines):
        print(f"error: {len(cand_lines)} candidate line(s) vs "
              f"{len(ref_lines)} reference line(s)", file=sys.stderr)
        return 1
    if not cand_lines:
        print("error: no non-empty lines to score", file=sys.stderr)
        return 1
    corpus = corpus_average(score_pair(c, r)
                            for c, r in zip(cand_lines, ref_lines))
    cells = {
        "rouge-1": corpus.rouge1,
        "rouge-2": corpus.rouge2,
        "rouge-l": corpus.rougeL,
    }
    if config.as_json:
        print(json.dumps(
            {name: {"precision": s.precision, "recall": s.recall,
                    "f1": s.f1} for name, s in cells.items()},
            sort_keys=True))
    else:
        print("| Metric | Precision | Recall | F1 |")
        print("|---|---|---|---|")
        for name, s in cells.items():
            print(f"| {name.upper()} | {s.precision:.3f} | {s.recall:.3f} "
                  f"| {s.f1:.3f} |")
    return 0


def cmd_experiment(config: CliConfig, kinds_arg: str, generator_name: str,
                   fixed_text: str, test_only: bool) -> int:
    tokens = [t.strip() for t in kinds_arg.split(",") if t.strip()]
    if not tokens:
        print("error: --kinds must name at least one experiment",
              file=sys.stderr)
        return 1
    try:
        kinds = [KIND_TOKENS[t] for t in tokens]
    except KeyError as exc:
        print(f"error: unknown experiment kind {exc.args[0]!r} "
              f"(choose from {', '.join(KIND_TOKENS)})", file=sys.stderr)
        return 1

    records = _load_records(config)
    bank = _load_bank(config)
    template = load_template(config.template) if config.template else None

    classifier = None
    if ExperimentKind.PAGE in kinds:
        classifier = fit_classifier(records, seed=config.seed).model

    if test_only:
        split = stratified_split(records, test_fraction=0.2,
                                 seed=config.seed)
        eval_records = [r for r in records if r.id in split.test_ids]
    else:
        eval_records = list(records)

    generator = _make_generator(config, generator_name, fixed_text, records)
    # template=None lets each kind pick its own default (zero-shot vs
    # enriched); an explicit --template overrides every kind.
    runs = [
        run_experiment(kind, eval_records, generator, classifier=classifier,
                       bank=bank, template=template, seed=config.seed,
                       concurrency=config.concurrency)
        for kind in kinds
    ]

    dead = [r for r in runs if r.corpus is None]
    if dead:
        first_error = next(row.error for row in dead[0].rows if row.failed)
        print(f"error: every generation in the {dead[0].kind.value} run "
              f"failed; first failure: {first_error}", file=sys.stderr)
        return 1

    improvement = None
    if len(runs) > 1:
        baseline = next((r for r in runs
                         if r.kind is ExperimentKind.ZERO_SHOT), runs[0])
        others = [r for r in runs if r is not baseline]
        improvement = improvement_table(baseline, others)

    paths = emit_report(runs, improvement, config.out_dir)
    failed_total = sum(r.failed_count for r in runs)
    if config.as_json:
        print(json.dumps({"paths": paths, "failed": failed_total,
                          "rows": len(eval_records)}, sort_keys=True))
    else:
        print(f"evaluated {len(eval_records)} record(s) per run; "
              f"{failed_total} generation failure(s)")
        print(f"wrote {paths['run_json']} and {paths['tables_md']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to a flat JSON config file")
    common.add_argument("--dataset", help="requirements CSV "
                        "(default: bundled sample)")
    common.add_argument("--seed", type=int)
    common.add_argument("--out-dir", dest="out_dir", help="output directory")
    common.add_argument("--endpoint", help="generation server base URL")
    common.add_argument("--model", help="generation model name")
    common.add_argument("--temperature", type=float)
    common.add_argument("--timeout", dest="timeout_s", type=float,
                        help="request timeout in seconds")
    common.add_argument("--retries", type=int)
    common.add_argument("--backoff", dest="backoff_ms", type=float,
                        help="retry backoff base in milliseconds")
    common.add_argument("--concurrency", type=int,
                        help="parallel generation requests")
    common.add_argument("--template", help="prompt template file")
    common.add_argument("--bank", help="example bank JSON file")
    common.add_argument("--model-file", dest="model_file",
                        help="trained classifier JSON")
    common.add_argument("--json", action="store_true",
                        help="machine-readable output")

    parser = argparse.ArgumentParser(
        prog="page",
        description="EARS requirement rewriting with classifier-enriched "
                    "prompts")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("train", parents=[common],
                   help="grid-search, train and evaluate the classifier")

    p = sub.add_parser("classify", parents=[common],
                       help="predict the EARS category of a requirement")
    p.add_argument("text")

    p = sub.add_parser("compose", parents=[common],
                       help="print the composed prompt for a requirement")
    p.add_argument("text")
    p.add_argument("--mode", choices=("zero", "label", "page"),
                   default="page")
    p.add_argument("--label", help="category name for --mode label")

    p = sub.add_parser("rewrite", parents=[common],
                       help="rewrite one requirement into EARS form")
    p.add_argument("text")
    p.add_argument("--mode", choices=("zero", "label", "page"),
                   default="page")
    p.add_argument("--label", help="category name for --mode label")
    p.add_argument("--generator", choices=("http", "mock-gold", "mock-fixed"),
                   default="http")
    p.add_argument("--fixed-text", default="The system shall respond.",
                   help="reply used by the mock-fixed generator")

    p = sub.add_parser("rouge", parents=[common],
                       help="score line-aligned candidate/reference files")
    p.add_argument("candidate_file")
    p.add_argument("reference_file")

    p = sub.add_parser("experiment", parents=[common],
                       help="run rewrite experiments and emit reports")
    p.add_argument("--kinds", default="zero,oracle,page",
                   help="comma list of zero, oracle, page")
    p.add_argument("--generator", choices=("http", "mock-gold", "mock-fixed"),
                   default="http")
    p.add_argument("--fixed-text", default="The system shall respond.",
                   help="reply used by the mock-fixed generator")
    p.add_argument("--test-only", action="store_true",
                   help="evaluate only the held-out stratified split")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "train":
            return cmd_train(config)
        if args.command == "classify":
            return cmd_classify(config, args.text)
        if args.command == "compose":
            return cmd_compose(config, args.text, args.mode, args.label)
        if args.command == "rewrite":
            return cmd_rewrite(config, args.text, args.mode, args.label,
                               args.generator, args.fixed_text)
        if args.command == "rouge":
            return cmd_rouge(config, args.candidate_file,
                             args.reference_file)
        if args.command == "experiment":
            return cmd_experiment(config, args.kinds, args.generator,
                                  args.fixed_text, args.test_only)
    except (DatasetError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
