import os
from pathlib import Path

import numpy as np
import pytest

from nidsbench.dataset import build_vocabularies, encode, parse_nslkdd
from nidsbench.synthetic import generate_lines, write_split


def nslkdd_paths():
    """(train, test) paths of the real NSL-KDD files, or None.

    Looked up from NSLKDD_TRAIN / NSLKDD_TEST, then NSLKDD_DIR, then ./data.
    """
    train, test = os.environ.get("NSLKDD_TRAIN"), os.environ.get("NSLKDD_TEST")
    if train and test and Path(train).exists() and Path(test).exists():
        return Path(train), Path(test)
    for base in (os.environ.get("NSLKDD_DIR"), Path(__file__).resolve().parents[1] / "data"):
        if not base:
            continue
        tr, te = Path(base) / "KDDTrain+.txt", Path(base) / "KDDTest+.txt"
        if tr.exists() and te.exists():
            return tr, te
    return None


@pytest.fixture(scope="session")
def synthetic_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    train, test = d / "train.txt", d / "test.txt"
    write_split(train, 4000, seed=11, split="train")
    write_split(test, 1500, seed=11, split="test")
    return train, test


@pytest.fixture(scope="session")
def synthetic_splits(synthetic_files):
    train_rec = parse_nslkdd(synthetic_files[0])
    vocab = build_vocabularies(train_rec)
    return (encode(train_rec, vocab, "train"),
            encode(parse_nslkdd(synthetic_files[1]), vocab, "test"))


@pytest.fixture
def blobs():
    rng = np.random.default_rng(5)
    X = np.vstack([rng.normal(-2, 1, (150, 3)), rng.normal(2, 1, (150, 3))])
    y = np.r_[np.zeros(150), np.ones(150)].astype(np.int8)
    return X, y


@pytest.fixture
def sample_lines():
    return generate_lines(60, seed=2, split="train")
