"""Command-line front end.

Commands: generate, qa, render, score, composite, synth-predict.
Exit codes: 0 success, 1 usage error, 2 data error, 3 QC failure.

Environment variables: SPECTRUMQA_OUT sets the default output directory for
``generate``; SPECTRUMQA_VERBOSE=1 enables info-level logging. Everything
else is a function of flags, config file, and seed.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .dataset import (
    BuildConfig,
    DataError,
    build_dataset,
    load_manifest,
    load_metadata,
    regenerate_qa,
)
from .qa import QCError
from .radiomap import render_heatmap, total_interference_grid, write_png
from .scenarios import (
    ConfigError,
    TransmitterSet,
    load_scenario_registry,
    sample_transmitters,
)
from .scoring import (
    DEFAULT_MODEL_SCORES,
    GoldStore,
    LEVELS,
    PredictionFormatError,
    STANDARD_ROUTINGS,
    WEIGHT_SCHEMES,
    WeightScheme,
    composite_report,
    format_composite_table,
    score_predictions,
    synth_predict,
    write_predictions,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_QC = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; this tool reserves 2 for
    # data errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _parse_counts(scenarios: str, count: int, counts: str | None) -> dict[str, int]:
    mix = [s.strip() for s in scenarios.split(",") if s.strip()]
    if counts:
        parsed = {}
        for item in counts.split(","):
            sid, _, value = item.partition("=")
            parsed[sid.strip()] = int(value)
        return parsed
    if not mix:
        raise ValueError("empty scenario mix")
    base, extra = divmod(count, len(mix))
    return {sid: base + (1 if i < extra else 0) for i, sid in enumerate(mix)}


def _cmd_generate(args) -> int:
    registry = load_scenario_registry(args.config)
    scenario_counts = _parse_counts(args.scenarios, args.count, args.counts)
    config = BuildConfig(
        scenario_counts=scenario_counts,
        master_seed=args.seed,
        qa_per_image=args.qa_per_image,
        render_images=not args.no_images,
        workers=args.workers,
        absolute_threshold_dbm=args.absolute_threshold_dbm,
        scenarios=registry,
    )
    manifest = build_dataset(config, args.out)
    qa_info = manifest["qa"]
    print(
        f"generated {len(manifest['samples'])} samples, {qa_info['pair_count']} QA pairs "
        f"-> {args.out}"
    )
    print("splits: " + ", ".join(f"{k}={len(v)}" for k, v in manifest["splits"].items()))
    print(f"QC: passed ({qa_info['substituted']} substitutions)")
    return EXIT_OK


def _cmd_qa(args) -> int:
    report = regenerate_qa(
        args.dataset,
        qa_per_image=args.qa_per_image,
        master_seed=args.seed,
        out_path=args.out,
    )
    print(
        f"QA regenerated: {report.total_checked} pairs, "
        f"{len(report.factual_failures)} factual failures"
    )
    return EXIT_OK


def _cmd_render(args) -> int:
    if args.dataset:
        # re-render from the stored transmitter set, so the output matches the
        # original PNG even for datasets built with scenario overrides
        manifest = load_manifest(args.dataset)
        if not args.sample:
            raise DataError("--sample is required with --dataset")
        record = load_metadata(args.dataset, manifest, args.sample)
        ts = TransmitterSet.from_dict(record["transmitter_set"])
        label = f"{ts.scenario_id} sample {ts.sample_index}"
    else:
        if args.seed is None:
            raise DataError("--seed is required without --dataset")
        registry = load_scenario_registry(args.config)
        scenario = registry[args.scenario]
        ts = sample_transmitters(scenario, args.seed, args.index)
        label = f"{scenario.id} sample {args.index}"
    write_png(render_heatmap(total_interference_grid(ts)), args.out)
    print(f"rendered {label} -> {args.out}")
    return EXIT_OK


def _cmd_score(args) -> int:
    gold = GoldStore(args.dataset)
    result = score_predictions(args.predictions, gold)
    report_path = Path(args.report) if args.report else Path(args.predictions).with_suffix(
        ".scores.json"
    )
    report_path.write_text(json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n")
    print(f"model: {result.model_id}")
    for level in LEVELS:
        if level in result.scores:
            line = f"{level}: {result.scores[level]:.4f} (n={result.counts[level]})"
            if level == "L4" and result.rouge_l_mean is not None:
                line += f"  rouge_l={result.rouge_l_mean:.4f}"
            print(line)
        else:
            print(f"{level}: absent")
    print(f"report -> {report_path}")
    return EXIT_OK


def _parse_weights(args) -> WeightScheme:
    if args.weights:
        values = tuple(float(v) for v in args.weights.split(","))
        return WeightScheme(values, name="custom")
    return WeightScheme(WEIGHT_SCHEMES[args.scheme], name=args.scheme)


def _parse_routing(text: str) -> dict[str, str]:
    rule = {}
    for item in text.split(","):
        level, _, model = item.partition("=")
        rule[level.strip()] = model.strip()
    return rule


def _cmd_composite(args) -> int:
    if args.scores:
        scores_by_model = json.loads(Path(args.scores).read_text())
    else:
        scores_by_model = DEFAULT_MODEL_SCORES
    weights = _parse_weights(args)
    if {"cnn", "vlm"} <= set(scores_by_model):
        routings = dict(STANDARD_ROUTINGS)
    else:  # generic inventory: one single-model configuration per model
        routings = {
            f"{model}-only": {level: model for level in LEVELS}
            for model in sorted(scores_by_model)
        }
    if args.routing:
        routings["custom"] = _parse_routing(args.routing)
    baseline = args.baseline or next(iter(routings))
    report = composite_report(scores_by_model, weights, routings, baseline=baseline)
    print(f"weights: {weights.name} {list(weights.weights)}")
    if weights.name != "default" or args.scores:
        print("(composites recomputed from the supplied per-level scores)")
    print(format_composite_table(report))
    if args.report:
        Path(args.report).write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
        )
        print(f"report -> {args.report}")
    return EXIT_OK


def _cmd_synth_predict(args) -> int:
    gold = GoldStore(args.dataset)
    records = synth_predict(gold, args.level, args.error_rate, args.seed, args.model_id)
    write_predictions(records, args.out)
    print(f"wrote {len(records)} {args.level} predictions -> {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spectrumqa", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    default_out = os.environ.get("SPECTRUMQA_OUT", "spectrumqa_out")

    g = sub.add_parser("generate", help="simulate samples and build the QA corpus")
    g.add_argument("--out", default=default_out, help=f"output directory (default {default_out})")
    g.add_argument("--seed", type=int, required=True, help="master seed (required)")
    g.add_argument("--count", type=int, default=300, help="total sample count")
    g.add_argument("--counts", help="per-scenario counts, e.g. A=100,B=100,C=100")
    g.add_argument("--scenarios", default="A,B,C", help="comma-separated scenario mix")
    g.add_argument("--qa-per-image", type=int, default=10)
    g.add_argument("--workers", type=int, default=None, help="default: available parallelism")
    g.add_argument("--config", help="JSON scenario-override file")
    g.add_argument(
        "--absolute-threshold-dbm",
        type=float,
        default=None,
        help="severity from a fixed dBm threshold instead of the per-sample quantile",
    )
    g.add_argument("--no-images", action="store_true", help="skip heatmap rendering")
    g.set_defaults(func=_cmd_generate)

    q = sub.add_parser("qa", help="regenerate QA pairs from stored metadata")
    q.add_argument("--dataset", required=True)
    q.add_argument("--qa-per-image", type=int, default=None)
    q.add_argument("--seed", type=int, default=None, help="default: manifest seed")
    q.add_argument("--out", default=None, help="default: qa_pairs.jsonl in the dataset")
    q.set_defaults(func=_cmd_qa)

    r = sub.add_parser("render", help="render one heatmap PNG")
    r.add_argument("--out", required=True)
    r.add_argument("--scenario", default="A")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--index", type=int, default=0)
    r.add_argument("--dataset", help="re-render a sample from a dataset")
    r.add_argument("--sample", help="sample id (with --dataset)")
    r.add_argument("--config", help="JSON scenario-override file")
    r.set_defaults(func=_cmd_render)

    s = sub.add_parser("score", help="score a JSONL prediction file against a dataset")
    s.add_argument("--predictions", required=True)
    s.add_argument("--dataset", required=True)
    s.add_argument("--report", default=None, help="default: <predictions>.scores.json")
    s.set_defaults(func=_cmd_score)

    c = sub.add_parser("composite", help="router composite scores per configuration")
    c.add_argument("--scores", help="JSON file {model: {level: score}}; default: bundled")
    c.add_argument("--weights", help="four comma-separated weights summing to 1")
    c.add_argument(
        "--scheme", choices=sorted(WEIGHT_SCHEMES), default="default", help="named weight scheme"
    )
    c.add_argument("--routing", help="extra configuration, e.g. L1=vlm,L2=cnn,L3=cnn,L4=vlm")
    c.add_argument("--baseline", default=None, help="default: cnn-only (or first configuration)")
    c.add_argument("--report", default=None, help="also write the report as JSON")
    c.set_defaults(func=_cmd_composite)

    p = sub.add_parser("synth-predict", help="emit noisy gold predictions for self-tests")
    p.add_argument("--dataset", required=True)
    p.add_argument("--level", choices=LEVELS, required=True)
    p.add_argument("--error-rate", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model-id", default=None)
    p.set_defaults(func=_cmd_synth_predict)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO if os.environ.get("SPECTRUMQA_VERBOSE") else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except QCError as exc:
        print(f"QC failure: {exc}", file=sys.stderr)
        return EXIT_QC
    except (DataError, PredictionFormatError, ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
