"""Command-line entry point.

Exit codes: 0 success, 1 validation failure, 2 usage error, 3 runtime failure.
Errors go to stderr as one ``error code=<code> message=<json string>`` line.
Wall-clock measurements are printed only with ``--timing`` so reports stay
byte-identical across runs with the same seed.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from . import dgcnn
from .datagen import DEFAULT_WEIGHTS, GenConfig, generate_dataset
from .evaluation import HeuristicScorer, SplitPlan, evaluate, format_table, make_splits, scaling_benchmark
from .graph import ClassVocabulary, build_port_graph, dump_jsonl, graph_stats
from .heuristics import METHODS
from .netlist import (
    NetlistError,
    ValidationReport,
    check_spice,
    emit_spice,
    from_json,
    parse_spice,
    to_json,
    validate,
)
from .seal import (
    SPICE_SUFFIXES,
    SealModel,
    SealScorer,
    build_graphs,
    fit_seal,
    labeled_subgraphs,
    load_manifest,
    read_netlist,
    seal_inference,
    write_manifest,
)
from .subgraph import ExtractConfig

EXIT_OK, EXIT_INVALID, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _emit_error(code: str, message: str) -> None:
    print(f"error code={code} message={json.dumps(message)}", file=sys.stderr)


def _dump(obj, as_json: bool) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) if as_json else str(obj)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="key=value file supplying defaults for any flag")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--json", action="store_true", help="print the report as JSON")
    p.add_argument("--threads", type=int, default=1, help="worker threads for evaluation (default 1)")
    p.add_argument("--timing", action="store_true", help="include wall-clock measurements (not reproducible)")


def _add_split(p: argparse.ArgumentParser) -> None:
    p.add_argument("--split", choices=["conventional", "kfold5"], default="conventional", help="split protocol")
    p.add_argument("--fold", type=int, default=0, help="test fold for kfold5 (0-4)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="circuitlink", description="Link prediction on port-level circuit graphs.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("convert", help="convert SPICE <-> JSON (direction from the input extension)")
    p.add_argument("input", help="netlist file (.json or a SPICE deck)")
    p.add_argument("-o", "--output", help="output file (default: stdout)")
    _add_common(p)

    p = sub.add_parser("validate", help="check a netlist; exit 1 on errors")
    p.add_argument("input", help="netlist file (.json or a SPICE deck)")
    _add_common(p)

    p = sub.add_parser("graph", help="port-graph statistics and JSON-lines dump")
    p.add_argument("input", help="netlist file or dataset manifest")
    p.add_argument("--dump", metavar="FILE", help="write the JSON-lines graph dump here ('-' for stdout)")
    p.add_argument("--intra", choices=["clique", "star"], default="clique", help="intra-component topology")
    _add_common(p)

    p = sub.add_parser("gen", help="write a synthetic dataset and its manifest")
    p.add_argument("--count", type=int, default=200, help="number of circuits (default 200)")
    p.add_argument("--out", metavar="DIR", help="output directory (required)")
    p.add_argument("--min-components", type=int, default=4, help="fewest components per circuit")
    p.add_argument("--max-components", type=int, default=9, help="most components per circuit")
    p.add_argument("--extra-net-prob", type=float, default=0.3, help="chance a free port joins an existing net")
    _add_common(p)

    p = sub.add_parser("train", help="train the SEAL/DGCNN link predictor on a manifest")
    p.add_argument("--manifest", help="dataset manifest (required)")
    p.add_argument("--out", metavar="FILE", help="checkpoint file to write (required)")
    p.add_argument("--profile", choices=sorted(dgcnn.LR_PROFILES), default="synthetic", help="learning-rate profile")
    p.add_argument("--lr", type=float, help="override the profile learning rate")
    p.add_argument("--max-epochs", type=int, default=50, help="epoch limit (default 50)")
    p.add_argument("--hops", type=int, default=2, help="enclosing subgraph radius (default 2)")
    _add_split(p)
    _add_common(p)

    p = sub.add_parser("eval", help="evaluate SEAL or a heuristic on the test split")
    p.add_argument("--manifest", help="dataset manifest (required)")
    p.add_argument("--method", choices=["seal", *METHODS], default="seal", help="scorer to evaluate")
    p.add_argument("--checkpoint", help="trained checkpoint (required for --method seal)")
    p.add_argument("--reps", type=int, default=10, help="repetitions (default 10)")
    _add_split(p)
    _add_common(p)

    p = sub.add_parser("bench", help="inference scaling study on a synthetic ladder")
    p.add_argument("--ladder", default="10,20,40,80,160", help="comma-separated circuit counts")
    p.add_argument("--checkpoint", help="trained checkpoint (default: untrained weights)")
    _add_common(p)
    return parser


def _read_config(path: str) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


REQUIRED = {"gen": ("out",), "train": ("manifest", "out"), "eval": ("manifest",)}


def _config_path(argv: list[str]) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def parse_args(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    choices = parser._subparsers._group_actions[0].choices
    path = _config_path(argv)
    if path and argv and argv[0] in choices:
        sub_parser = choices[argv[0]]
        actions = {a.dest: a for a in sub_parser._actions}
        defaults = {}
        for key, raw in _read_config(path).items():
            action = actions.get(key)
            if action is None or key in ("config", "help") or not action.option_strings:
                raise UsageError(f"unknown config key {key!r} for {argv[0]}")
            if isinstance(action, argparse._StoreTrueAction):
                defaults[key] = raw.lower() in ("1", "true", "yes", "on")
            else:
                try:
                    defaults[key] = action.type(raw) if action.type else raw
                except ValueError:
                    raise UsageError(f"config {key}={raw!r} is not a valid value") from None
                if action.choices and defaults[key] not in action.choices:
                    raise UsageError(f"config {key}={raw!r} not in {list(action.choices)}")
        sub_parser.set_defaults(**defaults)
    args = parser.parse_args(argv)
    missing = [k for k in REQUIRED.get(args.command, ()) if getattr(args, k) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))
    return args


def _is_spice(path: str) -> bool:
    return Path(path).suffix.lower() in SPICE_SUFFIXES


def cmd_convert(args) -> int:
    text = Path(args.input).read_text(encoding="utf-8")
    if Path(args.input).suffix.lower() == ".json":
        out = emit_spice(from_json(text)) + "\n"
    elif _is_spice(args.input):
        out = to_json(parse_spice(text)) + "\n"
    else:
        raise UsageError(f"cannot infer conversion direction from {args.input!r}")
    if args.output:
        Path(args.output).write_text(out, encoding="utf-8")
    else:
        sys.stdout.write(out)
    return EXIT_OK


def cmd_validate(args) -> int:
    text = Path(args.input).read_text(encoding="utf-8")
    if Path(args.input).suffix.lower() == ".json":
        try:
            report = validate(from_json(text))
        except NetlistError as exc:
            report = ValidationReport(exc.issues)
    else:
        report = check_spice(text)
    if args.json:
        print(_dump(report.to_dict(), True))
    else:
        for issue in report.issues:
            print(issue)
        print("ok" if report.ok else "invalid")
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_graph(args) -> int:
    if Path(args.input).suffix.lower() == ".json" and _looks_like_manifest(args.input):
        netlists, vocab = load_manifest(args.input)
    else:
        netlist = read_netlist(args.input)
        netlists, vocab = [netlist], ClassVocabulary.from_netlists([netlist])
    graphs = [build_port_graph(n, vocab, intra=args.intra) for n in netlists]
    stats = graph_stats(graphs)
    stats["vocabulary"] = list(vocab.labels)
    if args.dump:
        dump = "".join(dump_jsonl(g) for g in graphs)
        if args.dump == "-":
            sys.stdout.write(dump)
        else:
            Path(args.dump).write_text(dump, encoding="utf-8")
    if args.dump != "-":
        if args.json:
            print(_dump(stats, True))
        else:
            for key in ("count", "class_count", "avg_nodes", "avg_edges"):
                print(f"{key}: {stats[key]}")
            print("vocabulary: " + ",".join(stats["vocabulary"]))
    return EXIT_OK


def _looks_like_manifest(path: str) -> bool:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8")).get("format", "").startswith("circuitlink-manifest")
    except (ValueError, AttributeError):
        return False


def cmd_gen(args) -> int:
    cfg = GenConfig((args.min_components, args.max_components), dict(DEFAULT_WEIGHTS), args.extra_net_prob, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    netlists = generate_dataset(cfg, args.count)
    names = []
    for i, n in enumerate(netlists):
        stem = f"circuit_{i:05d}"
        (out / f"{stem}.cir").write_text(emit_spice(n) + "\n", encoding="utf-8")
        (out / f"{stem}.json").write_text(to_json(n) + "\n", encoding="utf-8")
        names.append(f"{stem}.cir")
    write_manifest(out / "manifest.json", names, ClassVocabulary(cfg.labels()))
    summary = {"count": len(netlists), "manifest": str(out / "manifest.json"), "seed": args.seed}
    print(_dump(summary, True) if args.json else f"wrote {len(netlists)} circuits and {out / 'manifest.json'}")
    return EXIT_OK


def _split_graphs(args):
    netlists, vocab = load_manifest(args.manifest)
    graphs = build_graphs(netlists, vocab)
    return make_splits(graphs, SplitPlan(args.split, fold_index=args.fold, seed=args.seed))


def cmd_train(args) -> int:
    split = _split_graphs(args)
    lr = args.lr if args.lr is not None else dgcnn.LR_PROFILES[args.profile]
    cfg = dgcnn.TrainConfig(learning_rate=lr, max_epochs=args.max_epochs, seed=args.seed)
    extract = ExtractConfig(h=args.hops, seed=args.seed)
    model, history = fit_seal(split["train"], split["val"], extract, cfg)
    model.save(args.out)
    rows = []
    for rec in history:
        row = asdict(rec)
        if not args.timing:
            row.pop("wall_time")
        rows.append(row)
    if args.json:
        print(_dump({"checkpoint": args.out, "sortpool_k": model.params.sortpool_k, "history": rows}, True))
    else:
        for row in rows:
            line = f"epoch {row['epoch']:3d}  loss {row['train_loss']:.6f}  val_acc {row['val_accuracy']:.4f}  val_auc {row['val_auc']:.4f}"
            if args.timing:
                line += f"  {row['wall_time']:.2f}s"
            print(line)
        print(f"checkpoint written to {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    split = _split_graphs(args)
    if args.method == "seal":
        if not args.checkpoint:
            raise UsageError("--method seal requires --checkpoint")
        scorer = SealScorer(SealModel.load(args.checkpoint))
    else:
        scorer = HeuristicScorer(args.method)
    report = evaluate(scorer, split["test"], reps=args.reps, seed=args.seed, threads=args.threads)
    if args.json:
        print(_dump(report.to_dict(timing=args.timing), True))
    else:
        print(format_table([report], timing=args.timing))
        print(f"threshold: {report.threshold_rule}; negatives: balanced per query vertex; fingerprint {report.fingerprint}")
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        counts = [int(c) for c in args.ladder.split(",")]
    except ValueError:
        raise UsageError(f"bad --ladder {args.ladder!r}") from None
    cfg = GenConfig(seed=args.seed)
    vocab = ClassVocabulary(cfg.labels())
    ladder = [build_graphs(generate_dataset(GenConfig(seed=args.seed + 1000 * i), c), vocab) for i, c in enumerate(counts)]
    if args.checkpoint:
        model = SealModel.load(args.checkpoint)
    else:
        extract = ExtractConfig(seed=args.seed)
        subs = labeled_subgraphs(ladder[0], extract)
        k = dgcnn.sortpool_size([s.num_nodes for s in subs])
        model = SealModel(dgcnn.init_params(subs[0].features.shape[1], k, args.seed), extract, vocab)
    work = scaling_benchmark(lambda g: None, ladder, measure=lambda g: seal_inference(model, g))
    result = {
        "ladder": counts,
        "work_points": [{"total_edges": p["total_edges"], "work_units": int(p["time_s"])} for p in work["points"]],
        "work_slope": round(work["fitted_slope"], 12),
    }
    if args.timing:
        wall = scaling_benchmark(lambda g: seal_inference(model, g), ladder)
        result["wall_points"] = wall["points"]
        result["wall_slope"] = wall["fitted_slope"]
    if args.json:
        print(_dump(result, True))
    else:
        print(f"{'circuits':>8} {'edges':>8} {'work units':>12}" + (f" {'time (s)':>10} {'peak RSS (MB)':>14}" if args.timing else ""))
        for i, c in enumerate(counts):
            line = f"{c:>8} {result['work_points'][i]['total_edges']:>8} {result['work_points'][i]['work_units']:>12}"
            if args.timing:
                pt = result["wall_points"][i]
                line += f" {pt['time_s']:>10.4f} {pt['ram_bytes'] / 2**20:>14.1f}"
            print(line)
        print(f"log-log slope (work vs edges): {result['work_slope']:.4f}")
        if args.timing:
            print(f"log-log slope (time vs edges): {result['wall_slope']:.4f}")
    return EXIT_OK


COMMANDS = {
    "convert": cmd_convert,
    "validate": cmd_validate,
    "graph": cmd_graph,
    "gen": cmd_gen,
    "train": cmd_train,
    "eval": cmd_eval,
    "bench": cmd_bench,
}


def run(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors itself
        return int(exc.code or 0) and EXIT_USAGE
    except UsageError as exc:
        _emit_error("usage", str(exc))
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        _emit_error("usage", str(exc))
        return EXIT_USAGE
    except NetlistError as exc:
        _emit_error(exc.code, str(exc))
        return EXIT_INVALID
    except FileNotFoundError as exc:
        _emit_error("missing-file", str(exc))
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - every other failure is a runtime error
        _emit_error(type(exc).__name__, str(exc))
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
