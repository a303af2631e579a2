"""Report serialization: canonical JSON, markdown tables, CSV series.

Canonical JSON has sorted keys, two-space indentation and every float
written with six significant digits (``%#.6g``), so equal reports are
byte-identical.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from ..classifiers import DISPLAY_NAMES
from .runner import mcnemar_matrix

TIMING_KEYS = ("train_seconds", "test_seconds")


def format_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    text = "%#.6g" % x
    if text.endswith("."):
        text += "0"
    return text


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        body = ",\n".join(f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in items)
        return "{\n" + body + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in seq) + "]"
        body = ",\n".join(pad + _encode(v, indent, level + 1) for v in seq)
        return "[\n" + body + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def normalize_timing(report: dict) -> dict:
    """Copy of ``report`` with timing fields zeroed (for determinism checks)."""
    out = copy.deepcopy(report)
    for row in out.get("classifiers", []):
        if row.get("timing"):
            row["timing"] = {k: 0.0 for k in TIMING_KEYS}
    return out


def canonical_json(report, normalize: bool = False) -> str:
    data = report.to_dict() if hasattr(report, "to_dict") else report
    if normalize:
        data = normalize_timing(data)
    return _encode(data, 2, 0) + "\n"


def _pct(x) -> str:
    return "-" if x is None else f"{100.0 * x:.2f}"


def _md_table(header, rows) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(str(c) for c in row) + " |" for row in rows]
    return "\n".join(lines) + "\n"


def render_markdown(report: dict) -> str:
    rows = report["classifiers"]
    ok = [r for r in rows if r["status"] == "ok"]
    out = ["# Benchmark report", ""]
    pipe = report["pipeline"]
    out.append(f"Training rows: {pipe['train_rows']}; test rows: {pipe['test_rows']}; "
               f"selected features: {', '.join(pipe['selected_features'])}; PCA components: {pipe['pca_k']}.")
    for w in pipe.get("warnings", []):
        out.append(f"\n> warning: {w}")
    out.append("")

    out.append("## Detection accuracy and false alarm rate (%)\n")
    out.append(_md_table(
        ["Method", "Train accuracy", "Test accuracy", "Train FAR", "Test FAR"],
        [[r["name"],
          _pct(r.get("train", {}).get("metrics", {}).get("accuracy")),
          _pct(r["test"]["metrics"]["accuracy"]),
          _pct(r.get("train", {}).get("metrics", {}).get("far")),
          _pct(r["test"]["metrics"]["far"])] for r in ok]))

    out.append("## Precision, recall, F1 on the test split (%)\n")
    out.append(_md_table(
        ["Method", "Precision", "Recall", "F1-measure"],
        [[r["name"], _pct(r["test"]["metrics"]["precision"]), _pct(r["test"]["metrics"]["recall"]),
          _pct(r["test"]["metrics"]["f1"])] for r in ok]))

    out.append("## Area under ROC curve\n")
    out.append(_md_table(
        ["Method", "Train AUC", "Test AUC"],
        [[r["name"],
          "-" if r.get("train", {}).get("auc") is None else f"{r['train']['auc']:.4f}",
          "-" if r["test"]["auc"] is None else f"{r['test']['auc']:.4f}"] for r in ok]))

    out.append("## Execution time (s)\n")
    out.append(_md_table(
        ["Method", "Training", "Testing"],
        [[r["name"], f"{r['timing']['train_seconds']:.3f}", f"{r['timing']['test_seconds']:.3f}"] for r in ok]))

    out.append("## McNemar z-scores\n")
    out.append("`<-` the row classifier is better, `^` the column classifier is better; "
               "`*` marks z > 1.96.\n")
    names = [r["kind"] for r in ok]
    lookup = {}
    for e in report["mcnemar"]:
        lookup[(e["a"], e["b"])] = e
        lookup[(e["b"], e["a"])] = e
    table = []
    for i, row_kind in enumerate(names):
        cells = [DISPLAY_NAMES[row_kind]]
        for j, col_kind in enumerate(names):
            if j >= i:
                cells.append("-" if j == i else "")
                continue
            e = lookup[(row_kind, col_kind)]
            arrow = "<-" if e["better"] == row_kind else "^" if e["better"] == col_kind else "="
            star = "*" if e["significant"] else ""
            cells.append(f"{e['z']:.1f} {arrow}{star}")
        table.append(cells)
    out.append(_md_table([""] + [DISPLAY_NAMES[k] for k in names], table))

    failed = [r for r in rows if r["status"] != "ok"]
    if failed:
        out.append("## Failures\n")
        out.append(_md_table(["Method", "Error"], [[r["name"], r["error"]] for r in failed]))
    if pipe.get("ranking"):
        out.append("## Feature ranking\n")
        out.append(_md_table(["Rank", "Feature", "Score"],
                             [[i + 1, f, f"{s:.4f}"] for i, (f, s) in enumerate(pipe["ranking"])]))
    return "\n".join(out)


def render_classifier_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    metric_keys = ("accuracy", "far", "precision", "recall", "f1")
    header = ["kind", "status"]
    header += [f"test_{m}" for m in metric_keys] + ["test_auc"]
    header += [f"train_{m}" for m in metric_keys] + ["train_auc"]
    header += ["tp", "tn", "fp", "fn", "train_seconds", "test_seconds", "error"]
    writer.writerow(header)
    for r in report["classifiers"]:
        if r["status"] != "ok":
            writer.writerow([r["kind"], r["status"]] + [""] * (len(header) - 3) + [r["error"]])
            continue
        test, train = r["test"], r.get("train")
        line = [r["kind"], r["status"]]
        line += [format_float(test["metrics"][m]) for m in metric_keys]
        line += ["" if test["auc"] is None else format_float(test["auc"])]
        if train:
            line += [format_float(train["metrics"][m]) for m in metric_keys]
            line += ["" if train["auc"] is None else format_float(train["auc"])]
        else:
            line += [""] * 6
        c = test["counts"]
        line += [c["tp"], c["tn"], c["fp"], c["fn"]]
        line += [f"{r['timing']['train_seconds']:.3f}", f"{r['timing']['test_seconds']:.3f}", ""]
        writer.writerow(line)
    return buf.getvalue()


def render_mcnemar_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["a", "b", "n12", "n21", "z", "significant", "better"])
    for e in report["mcnemar"]:
        writer.writerow([e["a"], e["b"], e["n12"], e["n21"], format_float(e["z"]),
                         int(e["significant"]), e["better"] or "tie"])
    return buf.getvalue()


def write_predictions(path, labels, scores, predicted) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row_id", "label", "score", "predicted"])
        for i, (l, s, p) in enumerate(zip(labels, scores, predicted)):
            writer.writerow([i, int(l), repr(float(s)), int(p)])


def read_predictions(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(labels, scores, predicted) from a saved prediction file, ordered by row id."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"row_id", "label", "score", "predicted"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        rows = sorted(((int(r["row_id"]), int(r["label"]), float(r["score"]), int(r["predicted"]))
                       for r in reader), key=lambda t: t[0])
    ids = [r[0] for r in rows]
    if ids != list(range(len(ids))):
        raise ValueError(f"{path}: row ids must be 0..n-1 without gaps")
    arr = np.array([r[1:] for r in rows], dtype=np.float64).reshape(-1, 3)
    return arr[:, 0].astype(np.int8), arr[:, 1], arr[:, 2].astype(np.int8)


def mcnemar_from_predictions(paths: dict) -> list:
    """Pairwise McNemar entries from ``{name: prediction_file}``."""
    loaded = {name: read_predictions(p) for name, p in paths.items()}
    names = list(loaded)
    labels = loaded[names[0]][0]
    correct = {}
    for name, (lab, _, pred) in loaded.items():
        if lab.shape != labels.shape or not np.array_equal(lab, labels):
            raise ValueError(f"{name}: prediction file covers different rows or labels")
        correct[name] = pred == lab
    return mcnemar_matrix(names, correct)


def emit_report(report, formats, directory) -> list[Path]:
    """Write the requested formats into ``directory``; returns written paths."""
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {directory}: {exc}") from exc
    data = report.to_dict() if hasattr(report, "to_dict") else report
    series = getattr(report, "series", {}) or {}
    written = []

    def put(name, text):
        path = directory / name
        path.write_text(text)
        written.append(path)

    if "json" in formats:
        put("report.json", canonical_json(data))
    if "md" in formats:
        put("report.md", render_markdown(data))
    if "csv" in formats:
        put("classifiers.csv", render_classifier_csv(data))
        put("mcnemar.csv", render_mcnemar_csv(data))
        put("timing.csv", "kind,train_seconds,test_seconds\n" + "".join(
            f"{r['kind']},{r['timing']['train_seconds']:.3f},{r['timing']['test_seconds']:.3f}\n"
            for r in data["classifiers"] if r["status"] == "ok"))
        for kind, extras in series.items():
            if not isinstance(extras, dict):
                continue
            for split in ("test", "train"):
                curve = extras.get(f"_{split}_curve")
                if curve is not None:
                    put(f"roc_{split}_{kind}.csv", curve.to_csv())
    return written


def emit_predictions(report, directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    labels = report.series.get("test_labels")
    written = []
    for kind, extras in report.series.items():
        if not isinstance(extras, dict):
            continue
        path = directory / f"predictions_{kind}.csv"
        write_predictions(path, labels, extras["_test_scores"], extras["_test_pred"])
        written.append(path)
    return written
