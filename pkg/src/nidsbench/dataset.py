"""NSL-KDD ingestion, categorical encoding, feature policies and scaling.

The on-disk dataset container (``save_dataset`` / ``load_dataset``) is an
``.npz`` archive holding:

* ``__meta__``   - JSON text: ``{"format": "nidsbench-dataset", "version": 1,
                   "origin": ..., "column_ids": [...]}``
* ``matrix``     - float64, n x d
* ``labels``     - int8, n (1 = attack)
* ``categories`` - uint8 codes into ``CATEGORY_NAMES``
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Sequence, Union

import numpy as np

DATASET_FORMAT = "nidsbench-dataset"
DATASET_VERSION = 1

CATEGORY_NAMES = ("normal", "dos", "r2l", "u2r", "probe")

BASIC, CONTENT, TIME_BASED, HOST_BASED = "basic", "content", "time_based", "host_based"


class ParseError(ValueError):
    """Malformed NSL-KDD input."""


class UnknownLabelError(KeyError):
    """Label not present in the attack table."""


class SchemaError(ValueError):
    """Column set does not match what an operation expects."""


@dataclass(frozen=True)
class FeatureSpec:
    id: str
    name: str
    kind: str  # "numeric" | "categorical"
    category: str


_FEATURE_NAMES = (
    "duration", "protocol_type", "service", "flag", "src_bytes", "dst_bytes",
    "land", "wrong_fragment", "urgent", "hot", "num_failed_logins",
    "logged_in", "num_compromised", "root_shell", "su_attempted", "num_root",
    "num_file_creations", "num_shells", "num_access_files",
    "num_outbound_cmds", "is_host_login", "is_guest_login", "count",
    "srv_count", "serror_rate", "srv_serror_rate", "rerror_rate",
    "srv_rerror_rate", "same_srv_rate", "diff_srv_rate",
    "srv_diff_host_rate", "dst_host_count", "dst_host_srv_count",
    "dst_host_same_srv_rate", "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate", "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate", "dst_host_srv_serror_rate",
    "dst_host_rerror_rate", "dst_host_srv_rerror_rate",
)


def _feature_category(number: int) -> str:
    if number <= 10:
        return BASIC
    if number <= 22:
        return CONTENT
    if number <= 31:
        return TIME_BASED
    return HOST_BASED


FEATURE_SCHEMA: tuple[FeatureSpec, ...] = tuple(
    FeatureSpec(
        id=f"F{i}",
        name=name,
        kind="categorical" if i in (2, 3, 4) else "numeric",
        category=_feature_category(i),
    )
    for i, name in enumerate(_FEATURE_NAMES, start=1)
)
FEATURE_IDS = tuple(f.id for f in FEATURE_SCHEMA)
CATEGORICAL_IDS = tuple(f.id for f in FEATURE_SCHEMA if f.kind == "categorical")
CONTENT_IDS = tuple(f.id for f in FEATURE_SCHEMA if f.category == CONTENT)
BASIC6_IDS = ("F1", "F2", "F5", "F6", "F23", "F24")

ATTACK_CATEGORIES: dict[str, str] = {
    "normal": "normal",
    # denial of service
    "apache2": "dos", "smurf": "dos", "neptune": "dos", "back": "dos",
    "teardrop": "dos", "pod": "dos", "land": "dos", "mailbomb": "dos",
    "processtable": "dos", "udpstorm": "dos",
    # remote to local
    "warezclient": "r2l", "guess_passwd": "r2l", "warezmaster": "r2l",
    "imap": "r2l", "ftp_write": "r2l", "named": "r2l", "multihop": "r2l",
    "phf": "r2l", "spy": "r2l", "sendmail": "r2l", "snmpgetattack": "r2l",
    "snmpguess": "r2l", "worm": "r2l", "xsnoop": "r2l", "xlock": "r2l",
    # user to root
    "buffer_overflow": "u2r", "httptunnel": "u2r", "rootkit": "u2r",
    "loadmodule": "u2r", "perl": "u2r", "xterm": "u2r", "ps": "u2r",
    "sqlattack": "u2r",
    # probing
    "satan": "probe", "saint": "probe", "ipsweep": "probe",
    "portsweep": "probe", "nmap": "probe", "mscan": "probe",
}

# Alternative spellings seen in literature tables and hand-edited files.
LABEL_ALIASES: dict[str, str] = {
    "guess_password": "guess_passwd",
    "guesspasswd": "guess_passwd",
    "ftpwrite": "ftp_write",
    "snmppgetattack": "snmpgetattack",
    "snmppguess": "snmpguess",
    "httpstuneel": "httptunnel",
    "httpstunnel": "httptunnel",
    "sqllattack": "sqlattack",
    "buffer-overflow": "buffer_overflow",
    "bufferoverflow": "buffer_overflow",
    "portswep": "portsweep",
    "warez_client": "warezclient",
    "warez_master": "warezmaster",
    "udp_storm": "udpstorm",
    "process_table": "processtable",
    "mail_bomb": "mailbomb",
    "load_module": "loadmodule",
}


def map_label(label: str) -> tuple[int, str]:
    """Return ``(binary_label, category)`` for an NSL-KDD label.

    Labels are trimmed and lowercased; a trailing ``.`` is tolerated.
    """
    key = label.strip().lower().rstrip(".")
    key = LABEL_ALIASES.get(key, key)
    try:
        category = ATTACK_CATEGORIES[key]
    except KeyError:
        raise UnknownLabelError(f"unknown label {label!r}") from None
    return (0 if category == "normal" else 1), category


@dataclass(frozen=True)
class RawRecord:
    feature_values: tuple[str, ...]
    label: str
    difficulty: int | None = None


_NUMERIC_POSITIONS = tuple(i for i, f in enumerate(FEATURE_SCHEMA) if f.kind == "numeric")


def _iter_text_lines(source) -> Iterable[str]:
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            yield from _iter_text_lines(fh)
        return
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    for line in source:
        if isinstance(line, (bytes, bytearray)):
            line = line.decode("utf-8")
        yield line


def parse_nslkdd(source: Union[str, Path, bytes, IO]) -> list[RawRecord]:
    """Parse KDDTrain+/KDDTest+ style text into records.

    ``source`` may be a path, raw bytes, or an iterable of byte/text lines.
    Blank lines are skipped. Each remaining line must carry 42 fields
    (41 features + label) or 43 (plus the difficulty level).
    """
    records = []
    for lineno, line in enumerate(_iter_text_lines(source), start=1):
        line = line.strip()
        if not line:
            continue
        fields = [tok.strip() for tok in line.split(",")]
        if len(fields) not in (42, 43):
            raise ParseError(f"line {lineno}: expected 42 or 43 fields, got {len(fields)}")
        for pos in _NUMERIC_POSITIONS:
            tok = fields[pos]
            try:
                value = float(tok)
            except ValueError:
                raise ParseError(
                    f"line {lineno}: non-numeric token {tok!r} for {FEATURE_IDS[pos]}"
                ) from None
            if not math.isfinite(value):
                raise ParseError(f"line {lineno}: non-finite value {tok!r} for {FEATURE_IDS[pos]}")
        difficulty = None
        if len(fields) == 43:
            try:
                difficulty = int(float(fields[42]))
            except ValueError:
                raise ParseError(f"line {lineno}: bad difficulty {fields[42]!r}") from None
        records.append(RawRecord(tuple(fields[:41]), fields[41], difficulty))
    return records


@dataclass(frozen=True)
class CategoryVocabulary:
    """Per categorical feature, the sorted distinct training values.

    Value ``v`` of feature ``fid`` encodes to its position in
    ``values[fid]``; anything unseen encodes to ``len(values[fid])``.
    """

    values: dict[str, tuple[str, ...]]

    def index(self, feature_id: str, value: str) -> int:
        vocab = self.values[feature_id]
        lookup = self._lookup()[feature_id]
        return lookup.get(value, len(vocab))

    def unknown_index(self, feature_id: str) -> int:
        return len(self.values[feature_id])

    def _lookup(self) -> dict[str, dict[str, int]]:
        cache = self.__dict__.get("_cache")
        if cache is None:
            cache = {fid: {v: i for i, v in enumerate(vals)} for fid, vals in self.values.items()}
            object.__setattr__(self, "_cache", cache)
        return cache

    def to_json(self) -> dict:
        return {fid: list(vals) for fid, vals in self.values.items()}

    @classmethod
    def from_json(cls, data: dict) -> "CategoryVocabulary":
        return cls({fid: tuple(vals) for fid, vals in data.items()})


def build_vocabularies(train_records: Sequence[RawRecord]) -> CategoryVocabulary:
    positions = {fid: FEATURE_IDS.index(fid) for fid in CATEGORICAL_IDS}
    values = {
        fid: tuple(sorted({r.feature_values[pos] for r in train_records}))
        for fid, pos in positions.items()
    }
    return CategoryVocabulary(values)


@dataclass(frozen=True, eq=False)
class EncodedDataset:
    """Numeric feature matrix with binary labels and attack categories."""

    matrix: np.ndarray
    column_ids: tuple[str, ...]
    labels: np.ndarray
    categories: np.ndarray
    origin: str = "train"

    def __post_init__(self):
        matrix = np.ascontiguousarray(self.matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise SchemaError("matrix must be two-dimensional")
        labels = np.asarray(self.labels, dtype=np.int8)
        categories = np.asarray(self.categories, dtype=np.uint8)
        n, d = matrix.shape
        if len(self.column_ids) != d:
            raise SchemaError(f"{len(self.column_ids)} column ids for {d} columns")
        if labels.shape != (n,) or categories.shape != (n,):
            raise SchemaError("labels/categories length differs from row count")
        if not np.isfinite(matrix).all():
            raise SchemaError("matrix contains NaN or infinity")
        if labels.size and not np.isin(labels, (0, 1)).all():
            raise SchemaError("labels must be 0 or 1")
        if np.any((categories == 0) != (labels == 0)):
            raise SchemaError("category 'normal' must coincide with label 0")
        if self.origin not in ("train", "test"):
            raise SchemaError(f"origin must be train or test, got {self.origin!r}")
        for arr in (matrix, labels, categories):
            arr.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "categories", categories)
        object.__setattr__(self, "column_ids", tuple(self.column_ids))

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_features(self) -> int:
        return self.matrix.shape[1]

    def category_names(self) -> list[str]:
        return [CATEGORY_NAMES[c] for c in self.categories]

    def subset(self, rows) -> "EncodedDataset":
        rows = np.asarray(rows)
        return EncodedDataset(
            self.matrix[rows], self.column_ids, self.labels[rows], self.categories[rows], self.origin
        )

    def with_matrix(self, matrix: np.ndarray, column_ids: Sequence[str]) -> "EncodedDataset":
        return EncodedDataset(matrix, tuple(column_ids), self.labels, self.categories, self.origin)


def encode(
    records: Sequence[RawRecord],
    vocabularies: CategoryVocabulary,
    origin: str = "train",
    encoding: str = "ordinal",
) -> EncodedDataset:
    """Turn parsed records into an :class:`EncodedDataset`.

    ``encoding="ordinal"`` keeps the 41 schema columns, categorical values
    replaced by their vocabulary index. ``encoding="onehot"`` expands each
    categorical feature into indicator columns named ``F3=http`` etc., with a
    trailing ``F3=<unk>`` column for unseen values.
    """
    if encoding not in ("ordinal", "onehot"):
        raise ValueError(f"unknown encoding {encoding!r}")
    n = len(records)
    tokens = np.array([r.feature_values for r in records], dtype=object).reshape(n, 41)
    columns = []
    column_ids: list[str] = []
    for pos, spec in enumerate(FEATURE_SCHEMA):
        col = tokens[:, pos]
        if spec.kind == "numeric":
            columns.append(col.astype(np.float64))
            column_ids.append(spec.id)
            continue
        lookup = vocabularies._lookup()[spec.id]
        unknown = vocabularies.unknown_index(spec.id)
        idx = np.fromiter((lookup.get(v, unknown) for v in col), dtype=np.int64, count=n)
        if encoding == "ordinal":
            columns.append(idx.astype(np.float64))
            column_ids.append(spec.id)
        else:
            names = list(vocabularies.values[spec.id]) + ["<unk>"]
            for j, name in enumerate(names):
                columns.append((idx == j).astype(np.float64))
                column_ids.append(f"{spec.id}={name}")
    matrix = np.column_stack(columns) if columns else np.empty((n, 0))
    labels = np.empty(n, dtype=np.int8)
    categories = np.empty(n, dtype=np.uint8)
    for i, r in enumerate(records):
        labels[i], cat = map_label(r.label)
        categories[i] = CATEGORY_NAMES.index(cat)
    return EncodedDataset(matrix, tuple(column_ids), labels, categories, origin)


def base_feature_id(column_id: str) -> str:
    """``"F3=http"`` -> ``"F3"``; plain ids pass through."""
    return column_id.split("=", 1)[0]


def _feature_number(column_id: str) -> int:
    return int(base_feature_id(column_id)[1:])


def apply_feature_policy(ds: EncodedDataset, policy) -> EncodedDataset:
    """Restrict columns by policy.

    ``policy`` is ``"all"``, ``"drop_content"`` (removes F11-F22),
    ``"basic6"`` (keeps F1, F2, F5, F6, F23, F24) or an explicit list of
    feature ids. Columns keep schema order in every case.
    """
    if isinstance(policy, str):
        if policy == "all":
            return ds
        if policy == "drop_content":
            keep = [c for c in ds.column_ids if base_feature_id(c) not in CONTENT_IDS]
        elif policy == "basic6":
            keep = [c for c in ds.column_ids if base_feature_id(c) in BASIC6_IDS]
        else:
            raise ValueError(f"unknown feature policy {policy!r}")
    else:
        wanted = list(policy)
        present = {base_feature_id(c) for c in ds.column_ids} | set(ds.column_ids)
        missing = [w for w in wanted if w not in present]
        if missing:
            raise SchemaError(f"feature ids not in dataset: {', '.join(missing)}")
        wanted_set = set(wanted)
        keep = [c for c in ds.column_ids if c in wanted_set or base_feature_id(c) in wanted_set]
    keep.sort(key=lambda c: (_feature_number(c), ds.column_ids.index(c)))
    cols = [ds.column_ids.index(c) for c in keep]
    return ds.with_matrix(ds.matrix[:, cols], keep)


STD_FLOOR = 1e-8


@dataclass(frozen=True, eq=False)
class Standardizer:
    """Per-column z-score fitted on training data.

    Columns whose standard deviation falls under ``STD_FLOOR`` are divided
    by 1, so a constant training column maps to zeros.
    """

    column_ids: tuple[str, ...]
    mean: np.ndarray
    scale: np.ndarray
    floored: np.ndarray = field(repr=False)

    def apply(self, ds: EncodedDataset) -> EncodedDataset:
        if tuple(ds.column_ids) != self.column_ids:
            raise SchemaError("dataset columns do not match the fitted standardizer")
        return ds.with_matrix((ds.matrix - self.mean) / self.scale, ds.column_ids)


def fit_standardizer(train: EncodedDataset) -> Standardizer:
    if train.origin != "train":
        raise SchemaError("standardizer must be fitted on the training split")
    mean = train.matrix.mean(axis=0)
    std = train.matrix.std(axis=0, ddof=1) if train.n_rows > 1 else np.zeros(train.n_features)
    floored = std < STD_FLOOR
    scale = np.where(floored, 1.0, std)
    # Second pass removes the residual mean left by float cancellation.
    centred = (train.matrix - mean) / scale
    mean = mean + centred.mean(axis=0) * scale
    for arr in (mean, scale, floored):
        arr.setflags(write=False)
    return Standardizer(train.column_ids, mean, scale, floored)


def stratified_indices(labels: np.ndarray, ratio: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must lie strictly between 0 and 1, got {ratio}")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    part_a = []
    for cls in np.unique(labels):
        rows = np.flatnonzero(labels == cls)
        if rows.size < 2:
            raise ValueError(f"class {cls} has fewer than 2 rows")
        take = int(round(ratio * rows.size))
        take = min(max(take, 1), rows.size - 1)
        part_a.append(rng.permutation(rows)[:take])
    a = np.sort(np.concatenate(part_a))
    mask = np.ones(labels.size, dtype=bool)
    mask[a] = False
    return a, np.flatnonzero(mask)


def stratified_split(ds: EncodedDataset, ratio: float, seed: int) -> tuple[EncodedDataset, EncodedDataset]:
    """Split rows per binary class; ``part_a`` gets ``round(ratio * count)``."""
    a, b = stratified_indices(ds.labels, ratio, seed)
    return ds.subset(a), ds.subset(b)


def load_nslkdd(
    train_path, test_path=None, encoding: str = "ordinal"
) -> tuple[EncodedDataset, EncodedDataset | None, CategoryVocabulary]:
    train_records = parse_nslkdd(train_path)
    vocab = build_vocabularies(train_records)
    train = encode(train_records, vocab, "train", encoding)
    test = None
    if test_path is not None:
        test = encode(parse_nslkdd(test_path), vocab, "test", encoding)
    return train, test, vocab


def save_dataset(ds: EncodedDataset, path) -> None:
    meta = {
        "format": DATASET_FORMAT,
        "version": DATASET_VERSION,
        "origin": ds.origin,
        "column_ids": list(ds.column_ids),
    }
    with open(path, "wb") as fh:
        np.savez(
            fh,
            __meta__=np.array(json.dumps(meta)),
            matrix=ds.matrix,
            labels=ds.labels,
            categories=ds.categories,
        )


def load_dataset(path) -> EncodedDataset:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["__meta__"]))
        if meta.get("format") != DATASET_FORMAT:
            raise ParseError(f"{path}: not a {DATASET_FORMAT} container")
        if meta.get("version") != DATASET_VERSION:
            raise ParseError(f"{path}: unsupported container version {meta.get('version')}")
        return EncodedDataset(
            data["matrix"], tuple(meta["column_ids"]), data["labels"], data["categories"], meta["origin"]
        )
