"""Command-line entry point: ``nidsbench {ingest,select,run,mcnemar,report}``.

Exit codes: 0 success, 2 input/parse error, 3 config error,
4 every requested classifier failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bench.config import FORMATS, ConfigError, load_config
from .bench.report import (
    canonical_json,
    emit_predictions,
    emit_report,
    mcnemar_from_predictions,
    render_classifier_csv,
    render_markdown,
    render_mcnemar_csv,
)
from .bench.runner import run_benchmark
from .dataset import (
    CATEGORY_NAMES,
    ParseError,
    SchemaError,
    UnknownLabelError,
    apply_feature_policy,
    fit_standardizer,
    load_dataset,
    load_nslkdd,
    save_dataset,
)
from .pca_select import fit_pca, rank_features, validate_selection

EXIT_OK, EXIT_INPUT, EXIT_CONFIG, EXIT_ALL_FAILED = 0, 2, 3, 4

log = logging.getLogger("nidsbench")


def _parse_range(text: str) -> list[int]:
    """``"3-29"`` or ``"2,4,8"`` or a mix of both."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _parse_policy(text: str):
    if text in ("all", "drop_content", "basic6"):
        return text
    return [t.strip() for t in text.split(",") if t.strip()]


def _formats(text: str | None) -> list[str] | None:
    if text is None:
        return None
    fmts = [f.strip() for f in text.split(",") if f.strip()]
    bad = [f for f in fmts if f not in FORMATS]
    if bad:
        raise ConfigError(f"unknown output format(s) {bad}; choose from {FORMATS}")
    return fmts


def _load_train_test(train_path, test_path=None, encoding="ordinal"):
    if str(train_path).endswith(".npz"):
        train = load_dataset(train_path)
        test = load_dataset(test_path) if test_path else None
        return train, test
    train, test, _ = load_nslkdd(train_path, test_path, encoding)
    return train, test


def cmd_ingest(args) -> int:
    train, test, vocab = load_nslkdd(args.train, args.test, args.encoding)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(train, out / "train.npz")
    summary = {"train": _category_counts(train)}
    if test is not None:
        save_dataset(test, out / "test.npz")
        summary["test"] = _category_counts(test)
    (out / "vocabulary.json").write_text(json.dumps(vocab.to_json(), indent=2, sort_keys=True) + "\n")
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def _category_counts(ds) -> dict:
    counts = {name: 0 for name in CATEGORY_NAMES}
    for code in ds.categories:
        counts[CATEGORY_NAMES[code]] += 1
    return {"rows": ds.n_rows, "columns": ds.n_features, "categories": counts}


def cmd_select(args) -> int:
    train, _ = _load_train_test(args.train, None, args.encoding)
    std = fit_standardizer(train)
    train_s = apply_feature_policy(std.apply(train), _parse_policy(args.features))
    ranking = rank_features(fit_pca(train_s.matrix, train_s.column_ids), args.weighting, args.top_components)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fmts = _formats(args.format) or list(FORMATS)
    print("top features:", ", ".join(ranking.top(args.top_m)))
    if "csv" in fmts:
        (out / "ranking.csv").write_text(ranking.to_csv())
    if "json" in fmts:
        (out / "ranking.json").write_text(canonical_json(ranking.to_json()))
    if args.no_grid:
        return EXIT_OK
    m_range = [m for m in _parse_range(args.m_range) if m <= train_s.n_features]
    grid = validate_selection(train_s, m_range, _parse_range(args.k_range), args.seed,
                              args.weighting, args.top_components, workers=args.workers)
    if "csv" in fmts:
        (out / "grid.csv").write_text(grid.to_csv())
    if "json" in fmts:
        (out / "grid.json").write_text(canonical_json(grid.to_json()))
    m, k, acc = grid.best()
    print(f"best cell: m={m} k={k} accuracy={acc:.4f}")
    return EXIT_OK


def _run_overrides(args) -> dict:
    o: dict = {}
    if args.train:
        o["train_path"] = args.train
    if args.test:
        o["test_path"] = args.test
    if args.features:
        o["feature_policy"] = _parse_policy(args.features)
    sel = {}
    if args.top_m is not None:
        sel["top_m"] = args.top_m
    if args.no_selection:
        sel["enabled"] = False
    if sel:
        o["selection"] = sel
    if args.components is not None:
        o["pca_k"] = args.components
    if args.classifiers:
        o["classifiers"] = [c.strip() for c in args.classifiers.split(",") if c.strip()]
    if args.seed is not None:
        o["seed"] = args.seed
    if args.workers is not None:
        o["workers"] = args.workers
    if args.subsample is not None:
        o["subsample"] = args.subsample
    output = {}
    if args.out:
        output["directory"] = args.out
    fmts = _formats(args.format)
    if fmts is not None:
        output["formats"] = fmts
    if output:
        o["output"] = output
    return o


def cmd_run(args) -> int:
    config = load_config(args.config, _run_overrides(args))
    report = run_benchmark(config)
    out = Path(config.output["directory"])
    emit_report(report, config.output["formats"], out)
    if config.output.get("save_predictions", True):
        emit_predictions(report, out / "predictions")
    ok = [r for r in report.classifiers if r["status"] == "ok"]
    for r in report.classifiers:
        if r["status"] == "ok":
            m = r["test"]["metrics"]
            print(f"{r['name']:>14s}  test acc {100 * m['accuracy']:6.2f}%  FAR {100 * m['far']:5.2f}%  "
                  f"train {r['timing']['train_seconds']:.3f}s  test {r['timing']['test_seconds']:.3f}s")
        else:
            print(f"{r['name']:>14s}  FAILED: {r['error']}")
    return EXIT_OK if ok else EXIT_ALL_FAILED


def cmd_mcnemar(args) -> int:
    paths = {}
    for item in args.predictions:
        if "=" in item:
            name, path = item.split("=", 1)
        else:
            name = Path(item).stem.removeprefix("predictions_")
            path = item
        paths[name] = path
    if len(paths) < 2:
        raise ConfigError("mcnemar needs at least two prediction files")
    entries = mcnemar_from_predictions(paths)
    text = render_mcnemar_csv({"mcnemar": entries})
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "mcnemar.csv").write_text(text)
        (out / "mcnemar.json").write_text(canonical_json({"mcnemar": entries}))
    print(text, end="")
    return EXIT_OK


def cmd_report(args) -> int:
    data = json.loads(Path(args.input).read_text())
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fmts = _formats(args.format) or ["md"]
    if "md" in fmts:
        (out / "report.md").write_text(render_markdown(data))
    if "csv" in fmts:
        (out / "classifiers.csv").write_text(render_classifier_csv(data))
        (out / "mcnemar.csv").write_text(render_mcnemar_csv(data))
    if "json" in fmts:
        (out / "report.json").write_text(canonical_json(data))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nidsbench", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse and encode NSL-KDD files into dataset containers")
    p.add_argument("--train", required=True)
    p.add_argument("--test")
    p.add_argument("--out", required=True)
    p.add_argument("--encoding", choices=("ordinal", "onehot"), default="ordinal")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("select", help="feature ranking and (top-m, k) accuracy grid")
    p.add_argument("--train", required=True)
    p.add_argument("--features", default="drop_content")
    p.add_argument("--top-m", type=int, default=9)
    p.add_argument("--top-components", type=int, default=10)
    p.add_argument("--weighting", choices=("eigenvalue_weighted", "max_abs"), default="eigenvalue_weighted")
    p.add_argument("--m-range", default="3-29")
    p.add_argument("--k-range", default="1-10")
    p.add_argument("--no-grid", action="store_true", help="only write the ranking")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="results")
    p.add_argument("--format")
    p.add_argument("--encoding", choices=("ordinal", "onehot"), default="ordinal")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("run", help="full benchmark")
    p.add_argument("--config")
    p.add_argument("--train")
    p.add_argument("--test")
    p.add_argument("--features")
    p.add_argument("--top-m", type=int)
    p.add_argument("--no-selection", action="store_true")
    p.add_argument("--components", type=int)
    p.add_argument("--classifiers")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--subsample", type=float)
    p.add_argument("--out")
    p.add_argument("--format")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("mcnemar", help="pairwise McNemar tests from saved prediction files")
    p.add_argument("predictions", nargs="+", help="prediction CSVs, optionally NAME=PATH")
    p.add_argument("--out")
    p.set_defaults(func=cmd_mcnemar)

    p = sub.add_parser("report", help="re-render a saved JSON report")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, UnknownLabelError, SchemaError, FileNotFoundError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
