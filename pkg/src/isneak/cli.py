"""Command-line entry points.

Subcommands: gen (synthetic model files), enumerate (model -> pool CSV),
run (one optimizer run, auto or interactive oracle), bench (multi-seed
comparison matrix), sweep (question-size sweep), serve (HTTP session API).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import evalkit, model_io
from .engine import BudgetConfig, Oracle, auto_oracle, oracle_schema, run_isneak
from .errors import IsneakError
from .preprocess import encode_pool


def _load_pool(pool_path: str, objectives_path: str, name=None) -> model_io.CandidatePool:
    spec = model_io.ObjectiveSpec.from_sidecar_json(Path(objectives_path).read_text())
    text = Path(pool_path).read_text()
    pool_name = name or Path(pool_path).stem
    return model_io.load_candidate_table(text, spec, name=pool_name)


def _load_model(model_path: str) -> tuple[model_io.CnfModel, model_io.ObjectiveSpec | None]:
    path = Path(model_path)
    model = model_io.parse_dimacs(path.read_text(), name=path.stem)
    spec = None
    sidecar = path.with_suffix(".objectives.json")
    values_csv = path.with_suffix(".values.csv")
    if sidecar.exists():
        spec = model_io.ObjectiveSpec.from_sidecar_json(sidecar.read_text())
        if values_csv.exists():
            values = model_io.feature_values_from_csv(values_csv.read_text(), spec, model.var_names)
            spec = model_io.ObjectiveSpec(spec.goals, per_feature_values=values)
    return model, spec


class InteractiveOracle(Oracle):
    """Renders questions as two lettered columns on the terminal."""

    def __init__(self, pool):
        self.pool = pool

    def answer(self, question) -> str:
        doc = question.to_dict(self.pool)
        print(f"\nQuestion {doc['id'] + 1}: which option do you prefer?", file=sys.stderr)
        width = max((len(f"{r['attr']}={r['value']}") for r in doc["optionA"]), default=10)
        print(f"  {'[A]'.ljust(width + 4)}[B]", file=sys.stderr)
        for ra, rb in zip(doc["optionA"], doc["optionB"]):
            left = f"{ra['attr']}={ra['value']}"
            right = f"{rb['attr']}={rb['value']}"
            print(f"  {left.ljust(width + 4)}{right}", file=sys.stderr)
        while True:
            reply = input("A or B> ").strip().upper()
            if reply in ("A", "B"):
                return reply
            print("please answer A or B", file=sys.stderr)


def cmd_gen(args) -> int:
    model, spec = model_io.generate_synthetic_model(args.features, args.ccr, args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(model_io.write_dimacs(model))
    out.with_suffix(".objectives.json").write_text(spec.to_sidecar_json())
    out.with_suffix(".values.csv").write_text(
        model_io.feature_values_to_csv(spec, model.var_names)
    )
    print(f"wrote {out} ({model.num_vars} vars, {len(model.clauses)} clauses)")
    return 0


def cmd_enumerate(args) -> int:
    model, spec = _load_model(args.model)
    pool = model_io.enumerate_valid(model, args.count, args.seed, spec=spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(model_io.pool_to_csv(pool))
    if spec is not None:
        out.with_suffix(".objectives.json").write_text(spec.to_sidecar_json())
    print(f"wrote {out} ({pool.n} candidates)")
    return 0


def cmd_run(args) -> int:
    if args.model:
        model, spec = _load_model(args.model)
        if spec is None or spec.per_feature_values is None:
            print("error: model has no objective sidecar/value table", file=sys.stderr)
            return 1
        pool = model_io.enumerate_valid(model, args.pool_size, args.seed, spec=spec)
    elif args.pool and args.objectives:
        pool = _load_pool(args.pool, args.objectives)
    else:
        print("error: need --model, or --pool with --objectives", file=sys.stderr)
        return 2
    encode_pool(pool)
    if args.oracle == "auto":
        oracle = auto_oracle(oracle_schema(pool), args.seed)
    else:
        oracle = InteractiveOracle(pool)
    budget = BudgetConfig(question_cap=args.question_cap)
    result = run_isneak(pool, oracle, args.seed, budget)
    if args.dump_tree:
        from .geometry import build_tree, tree_to_json

        Path(args.dump_tree).write_text(tree_to_json(build_tree(pool, args.seed)))
    json.dump(result.to_dict(pool), sys.stdout, indent=2)
    print()
    return 0


def cmd_bench(args) -> int:
    models_dir = Path(args.models)
    if not models_dir.is_dir():
        print(f"error: {models_dir} is not a directory", file=sys.stderr)
        return 1
    pools = []
    for path in sorted(models_dir.glob("*.cnf")) + sorted(models_dir.glob("*.dimacs")):
        model, spec = _load_model(str(path))
        pools.append(model_io.enumerate_valid(model, args.pool_size, args.seed0, spec=spec))
    for path in sorted(models_dir.glob("*.csv")):
        if path.name.endswith(".values.csv"):
            continue
        sidecar = path.with_suffix(".objectives.json")
        if sidecar.exists():
            pools.append(_load_pool(str(path), str(sidecar)))
    if not pools:
        print(f"error: no models found under {models_dir}", file=sys.stderr)
        return 1
    algorithms = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    report = evalkit.bench(pools, algorithms, repeats=args.repeats, seed0=args.seed0, out_dir=args.out)
    print(report.to_csv())
    return 0


def cmd_sweep(args) -> int:
    model, spec = _load_model(args.model)
    pool = model_io.enumerate_valid(model, args.pool_size, args.seed0, spec=spec)
    s_values = [int(s) for s in args.s.split(",")]
    table = evalkit.sweep_S(pool, s_values, repeats=args.repeats, seed0=args.seed0)
    print("S,median_I")
    for row in table:
        print(f"{row['S']},{row['median_I']:g}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    models_dir = args.models or os.environ.get("ISNEAK_MODELS_DIR", ".")
    app = create_app(models_dir, session_ttl=args.ttl, pool_size=args.pool_size)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isneak",
        description="Interactive many-objective optimizer over constrained configuration spaces",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic feature model")
    p.add_argument("--features", type=int, required=True)
    p.add_argument("--ccr", type=float, default=0.25, help="cross-tree constraint ratio")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="model.cnf")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("enumerate", help="enumerate valid candidates into a pool CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--count", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="pool.csv")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("run", help="run the interactive optimizer once")
    p.add_argument("--pool", help="candidate table CSV")
    p.add_argument("--objectives", help="objective sidecar JSON (with --pool)")
    p.add_argument("--model", help="DIMACS model (enumerates a pool first)")
    p.add_argument("--pool-size", type=int, default=10000)
    p.add_argument("--oracle", choices=["auto", "interactive"], default="auto")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--question-cap", type=int, default=6)
    p.add_argument("--dump-tree", help="write the cluster tree as JSON to this path")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="run the comparison matrix")
    p.add_argument("--models", required=True, help="directory of .cnf/.csv models")
    p.add_argument("--algorithms", default="isneak,flash,nga")
    p.add_argument("--repeats", type=int, default=20)
    p.add_argument("--seed0", type=int, default=0)
    p.add_argument("--pool-size", type=int, default=10000)
    p.add_argument("--out", help="directory for per-run JSON and report.csv")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep", help="question-size sweep (median I per S)")
    p.add_argument("--model", required=True)
    p.add_argument("--s", default="1,2,4,6,8,12")
    p.add_argument("--repeats", type=int, default=20)
    p.add_argument("--seed0", type=int, default=0)
    p.add_argument("--pool-size", type=int, default=4000)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("serve", help="serve the HTTP session API")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--models", help="models directory (default $ISNEAK_MODELS_DIR)")
    p.add_argument("--ttl", type=float, default=3600.0, help="idle session expiry, seconds")
    p.add_argument("--pool-size", type=int, default=2000)
    p.set_defaults(func=cmd_serve)
    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except FileNotFoundError as e:
        print(f"error: {e.filename}: file not found", file=sys.stderr)
        return 1
    except IsneakError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
