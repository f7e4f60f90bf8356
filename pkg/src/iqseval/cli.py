"""Command line entry points.

Subcommands: validate, compute, sweep, report, serve, fixture. Inputs come
from explicit flags, from a run config JSON, or from a data directory with
the standard file names. Flag values win over run-config values, which win
over task-config values.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from .bundle import (
    EvaluationBundle,
    TaskConfig,
    generate_synthetic_bundle,
    load_bundle,
    load_task_config,
    save_bundle,
    validate_bundle,
)
from .errors import HarnessError, UsageError
from .extraction import ExtractionPolicy
from .metrics import AggregationMode, score_method
from .report import (
    SweepTable,
    agreement_rate,
    per_criterion_averages,
    rank_methods,
    render,
)
from .sweep import generate_weight_grid, sweep
from .types import IQSWeights, MethodScorecard, SimplicityConfig, TaskKind

logger = logging.getLogger(__name__)

_STANDARD_NAMES = {
    "task_config": "task_config.json",
    "samples": "samples.json",
    "explanations": "explanations.json",
    "annotations": "annotations.jsonl",
}

_EXT = {"tsv": "tsv", "markdown": "md", "json_doc": "json"}


def _parse_weights(text: str) -> IQSWeights:
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError(f"weights must be three comma-separated numbers, got {text!r}")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"weights must be numbers, got {text!r}") from None
    return IQSWeights(*values)


def _load_run_config(path: Path) -> dict[str, Any]:
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"run config {path}: {exc}") from None
    if not isinstance(obj, dict):
        raise UsageError(f"run config {path}: expected a JSON object")
    base = path.parent
    for key in ("task_config", "samples", "out_dir"):
        if key in obj and obj[key] is not None:
            obj[key] = str(base / obj[key])
    for key in ("explanations", "annotations"):
        if key in obj and obj[key] is not None:
            if not isinstance(obj[key], list):
                raise UsageError(f"run config {path}: {key} must be a list of paths")
            obj[key] = [str(base / p) for p in obj[key]]
    return obj


@dataclasses.dataclass
class _Inputs:
    task_config_path: Path
    samples_path: Path
    explanation_paths: list[Path]
    annotation_paths: list[Path]
    out_dir: Path | None
    fmt: str
    step: float
    aggregation: AggregationMode
    config: TaskConfig


def _resolve(args: argparse.Namespace, *, need_annotations: bool = True) -> _Inputs:
    run: dict[str, Any] = {}
    if getattr(args, "config", None):
        run = _load_run_config(Path(args.config))

    def pick(flag: str, run_key: str, default: Any = None) -> Any:
        value = getattr(args, flag, None)
        if value is not None:
            return value
        if run.get(run_key) is not None:
            return run[run_key]
        return default

    data_dir = getattr(args, "data_dir", None)

    def path_for(flag: str, run_key: str, standard: str) -> Path | None:
        value = pick(flag, run_key)
        if value is not None:
            return Path(value)
        if data_dir is not None:
            return Path(data_dir) / standard
        return None

    task_config_path = path_for("task_config", "task_config", _STANDARD_NAMES["task_config"])
    samples_path = path_for("samples", "samples", _STANDARD_NAMES["samples"])
    if task_config_path is None or samples_path is None:
        raise UsageError(
            "no input data: pass --data-dir, a run config, or --task-config and --samples"
        )
    explanation_paths = pick("explanations", "explanations")
    if explanation_paths is None:
        if data_dir is None:
            raise UsageError("no explanation files given")
        explanation_paths = [Path(data_dir) / _STANDARD_NAMES["explanations"]]
    annotation_paths = pick("annotations", "annotations")
    if annotation_paths is None:
        if need_annotations:
            if data_dir is None:
                raise UsageError("no annotation files given")
            annotation_paths = [Path(data_dir) / _STANDARD_NAMES["annotations"]]
        else:
            annotation_paths = []

    config = load_task_config(task_config_path)
    weights = pick("weights", "weights")
    if weights is not None:
        if isinstance(weights, str):
            weights = _parse_weights(weights)
        elif isinstance(weights, list):
            weights = IQSWeights(*weights)
        config = dataclasses.replace(config, weights=weights)
    beta = pick("beta", "beta")
    if beta is not None:
        config = dataclasses.replace(config, simplicity=SimplicityConfig(beta=float(beta)))
    policy = pick("policy", "policy")
    if policy is not None:
        if isinstance(policy, str):
            policy = ExtractionPolicy.parse(policy)
        elif isinstance(policy, dict):
            policy = ExtractionPolicy(policy["mode"], policy["value"])
        config = dataclasses.replace(config, policy=policy)

    out_dir = pick("out", "out_dir")
    return _Inputs(
        task_config_path=task_config_path,
        samples_path=samples_path,
        explanation_paths=[Path(p) for p in explanation_paths],
        annotation_paths=[Path(p) for p in annotation_paths],
        out_dir=Path(out_dir) if out_dir is not None else None,
        fmt=pick("format", "format", "tsv"),
        step=float(pick("step", "step", 0.1)),
        aggregation=AggregationMode(pick("aggregation", "aggregation", "per_annotator")),
        config=config,
    )


def _load(inputs: _Inputs) -> EvaluationBundle:
    return load_bundle(
        inputs.samples_path,
        inputs.explanation_paths,
        inputs.annotation_paths,
        inputs.config,
    )


def _score_all(bundle: EvaluationBundle, aggregation: AggregationMode) -> list[MethodScorecard]:
    cards = []
    for method_id in bundle.method_ids:
        cards.append(
            score_method(
                bundle.task,
                bundle.samples,
                bundle.explanations_for(method_id),
                bundle.annotations_for(method_id),
                policy=bundle.config.policy,
                simplicity_config=bundle.config.simplicity,
                weights=bundle.config.weights,
                aggregation=aggregation,
            )
        )
    return cards


def cmd_validate(args: argparse.Namespace) -> int:
    inputs = _resolve(args)
    bundle = _load(inputs)
    report = validate_bundle(bundle)
    if report.ok:
        print(
            f"coverage ok: {len(bundle.explanations)} (sample, method) pairs, "
            f"{report.required} annotators each"
        )
        return 0
    for (sid, mid), count in report.deficiencies.items():
        print(
            f"underfilled: sample {sid} method {mid}: {count}/{report.required} annotators",
            file=sys.stderr,
        )
    return 1


def cmd_compute(args: argparse.Namespace) -> int:
    inputs = _resolve(args)
    bundle = _load(inputs)
    cards = _score_all(bundle, inputs.aggregation)
    table = rank_methods(cards)
    rendered = render(table, inputs.fmt)
    if inputs.out_dir is None:
        print(rendered, end="")
        return 0
    inputs.out_dir.mkdir(parents=True, exist_ok=True)
    label = bundle.config.weights.label()
    stem = f"{bundle.task.task_id}_{label}"
    scorecards_path = inputs.out_dir / f"{stem}_scorecards.json"
    table_path = inputs.out_dir / f"{stem}.{_EXT[inputs.fmt]}"
    scorecards_path.write_text(
        json.dumps(
            [c.to_dict() for c in sorted(cards, key=lambda c: c.method_id)],
            ensure_ascii=False,
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    table_path.write_text(rendered, encoding="utf-8")
    print(f"wrote {scorecards_path}")
    print(f"wrote {table_path}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    inputs = _resolve(args)
    bundle = _load(inputs)
    cards = _score_all(bundle, inputs.aggregation)
    grid = generate_weight_grid(inputs.step)
    rows = tuple(
        sweep(card.terms, grid, method_id=card.method_id, task_id=card.task_id)
        for card in sorted(cards, key=lambda c: c.method_id)
    )
    table = SweepTable(task_id=bundle.task.task_id, step=inputs.step, rows=rows)
    rendered = render(table, inputs.fmt)
    if inputs.out_dir is None:
        print(rendered, end="")
        return 0
    inputs.out_dir.mkdir(parents=True, exist_ok=True)
    path = inputs.out_dir / f"{bundle.task.task_id}_sweep_{inputs.step}.{_EXT[inputs.fmt]}"
    path.write_text(rendered, encoding="utf-8")
    print(f"wrote {path}")
    return 0


def _read_scorecards(paths: Sequence[str]) -> list[MethodScorecard]:
    cards = []
    for raw in paths:
        path = Path(raw)
        try:
            objs = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"scorecards {path}: {exc}") from None
        if not isinstance(objs, list):
            raise UsageError(f"scorecards {path}: expected a JSON array")
        for obj in objs:
            cards.append(MethodScorecard.from_dict(obj))
    return cards


def cmd_report(args: argparse.Namespace) -> int:
    if args.report == "agreement":
        inputs = _resolve(args)
        bundle = _load(inputs)
        out = agreement_rate(bundle.annotations, bundle.task)
        print(render(out, inputs.fmt), end="")
        return 0
    if not args.scorecards:
        raise UsageError(f"report {args.report!r} needs --scorecards files from compute")
    cards = _read_scorecards(args.scorecards)
    fmt = args.format or "tsv"
    if args.report == "ranking":
        print(render(rank_methods(cards), fmt), end="")
    else:
        print(render(per_criterion_averages(cards), fmt), end="")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import AnnotationService, create_app

    inputs = _resolve(args, need_annotations=False)
    if inputs.annotation_paths:
        raise UsageError("serve collects annotations; do not pass existing annotation files")
    bundle = _load(inputs)
    out_path = (
        Path(args.responses)
        if args.responses
        else (inputs.out_dir or Path.cwd()) / _STANDARD_NAMES["annotations"]
    )
    service = AnnotationService(
        bundle,
        out_path,
        lease_timeout=args.lease_timeout,
        annotators=args.annotators.split(",") if args.annotators else None,
    )
    app = create_app(service)
    logger.info("storing responses in %s", out_path)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_fixture(args: argparse.Namespace) -> int:
    bundle = generate_synthetic_bundle(
        seed=args.seed,
        n_samples=args.n_samples,
        n_methods=args.n_methods,
        n_annotators=args.n_annotators,
        noise=args.noise,
        kind=TaskKind(args.kind),
    )
    out_dir = Path(args.out) if args.out else Path.cwd() / "fixture"
    paths = save_bundle(bundle, out_dir)
    for name in sorted(paths):
        print(f"wrote {paths[name]}")
    return 0


def _add_data_flags(p: argparse.ArgumentParser, *, annotations: bool = True) -> None:
    p.add_argument("--data-dir", help="directory holding the standard bundle file names")
    p.add_argument("--config", help="run config JSON; paths inside are relative to it")
    p.add_argument("--task-config", help="task_config.json path")
    p.add_argument("--samples", help="samples.json path")
    p.add_argument("--explanations", nargs="+", help="explanations.json paths")
    if annotations:
        p.add_argument("--annotations", nargs="+", help="annotations.jsonl paths")
    p.add_argument("--weights", help="override weights as a1,a2,a3")
    p.add_argument("--beta", type=float, help="override the simplicity knee")
    p.add_argument("--policy", help="override extraction policy as mode:value")
    p.add_argument(
        "--aggregation",
        choices=[m.value for m in AggregationMode],
        help="per_annotator (default) or pooled",
    )
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=["tsv", "markdown", "json_doc"], help="output format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iqseval",
        description=(
            "Score feature-attribution explanations on plausibility, simplicity, "
            "and reproducibility, and combine them into one quality score."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check bundle files and annotation coverage")
    _add_data_flags(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("compute", help="score every method and rank them")
    _add_data_flags(p)
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("sweep", help="score stability across the weight grid")
    _add_data_flags(p)
    p.add_argument("--step", type=float, help="weight grid step, must divide 1 (default 0.1)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="render rankings, agreement, or cross-task averages")
    _add_data_flags(p)
    p.add_argument(
        "--report",
        choices=["ranking", "agreement", "averages"],
        default="ranking",
    )
    p.add_argument("--scorecards", nargs="+", help="scorecard JSON files from compute")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="run the annotation collection service")
    _add_data_flags(p, annotations=False)
    p.add_argument("--responses", help="JSONL file to append responses to")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--lease-timeout", type=float, default=1800.0)
    p.add_argument("--annotators", help="comma-separated allowlist of annotator ids")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("fixture", help="write a synthetic bundle for trials and demos")
    p.add_argument("--out", help="output directory (default ./fixture)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-samples", type=int, default=12)
    p.add_argument("--n-methods", type=int, default=3)
    p.add_argument("--n-annotators", type=int, default=3)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument(
        "--kind",
        choices=[k.value for k in TaskKind],
        default=TaskKind.REGRESSION.value,
    )
    p.set_defaults(func=cmd_fixture)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except HarnessError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
