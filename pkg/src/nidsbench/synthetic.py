"""Synthetic traffic records in the KDDTrain+/KDDTest+ text layout.

Used to exercise the pipeline end to end where the real NSL-KDD files are
not available. Each attack family gets a rough traffic signature (SYN
floods fill the serror rates, scans fill the rerror and diff-service rates,
remote-login attacks look like normal sessions apart from content columns),
and a slice of every class is blended towards normal traffic so no
classifier reaches perfect accuracy. The test split shifts the class mix
and adds attack names that never occur in training.
"""

from __future__ import annotations

import numpy as np

TRAIN_MIX = {"normal": 0.5346, "dos": 0.3646, "r2l": 0.0079, "u2r": 0.0004, "probe": 0.0925}
TEST_MIX = {"normal": 0.4307, "dos": 0.3308, "r2l": 0.1222, "u2r": 0.0089, "probe": 0.1074}

TRAIN_ATTACKS = {
    "dos": ["neptune", "smurf", "back", "teardrop", "pod", "land"],
    "r2l": ["warezclient", "guess_passwd", "warezmaster", "imap", "ftp_write", "multihop", "phf", "spy"],
    "u2r": ["buffer_overflow", "rootkit", "loadmodule", "perl"],
    "probe": ["satan", "ipsweep", "portsweep", "nmap"],
}
TEST_ONLY_ATTACKS = {
    "dos": ["apache2", "mailbomb", "processtable", "udpstorm"],
    "r2l": ["snmpgetattack", "snmpguess", "named", "sendmail", "xlock", "xsnoop", "worm"],
    "u2r": ["httptunnel", "ps", "sqlattack", "xterm"],
    "probe": ["mscan", "saint"],
}

SERVICES_NORMAL = ["http", "smtp", "ftp_data", "domain_u", "private", "telnet", "ftp", "other", "ecr_i", "urp_i"]
SERVICES_TEST_EXTRA = ["aol", "harvest", "http_2784"]


def _mix_counts(n, mix, rng):
    cats = list(mix)
    p = np.array([mix[c] for c in cats])
    counts = rng.multinomial(n, p / p.sum())
    return dict(zip(cats, counts))


def _records(cat, n, rng, test):
    """Column dict of length-n arrays for one category."""
    z = np.zeros(n)
    cols = {f"F{i}": z.copy() for i in range(1, 42)}
    proto = np.full(n, "tcp", dtype=object)
    service = np.full(n, "http", dtype=object)
    flag = np.full(n, "SF", dtype=object)
    u = rng.random

    def rate(center, spread):
        return np.clip(center + spread * rng.normal(size=n), 0.0, 1.0)

    if cat == "normal":
        proto = rng.choice(["tcp", "udp", "icmp"], size=n, p=[0.8, 0.15, 0.05]).astype(object)
        service = rng.choice(SERVICES_NORMAL, size=n).astype(object)
        flag = rng.choice(["SF", "REJ", "S0", "RSTO"], size=n, p=[0.93, 0.04, 0.02, 0.01]).astype(object)
        cols["F1"] = np.where(u(n) < 0.9, 0, rng.exponential(300, n))
        cols["F5"] = rng.lognormal(5.5, 1.5, n)
        cols["F6"] = rng.lognormal(7.0, 2.0, n) * (u(n) < 0.85)
        cols["F12"] = (u(n) < 0.7).astype(float)
        cols["F23"] = rng.poisson(8, n)
        cols["F24"] = cols["F23"] + rng.poisson(2, n)
        cols["F25"] = rate(0.01, 0.05)
        cols["F27"] = rate(0.03, 0.08)
        cols["F29"] = rate(0.95, 0.1)
        cols["F30"] = rate(0.03, 0.06)
        cols["F32"] = rng.integers(1, 256, n)
        cols["F33"] = rng.integers(1, 256, n)
        cols["F34"] = rate(0.8, 0.25)
        cols["F38"] = rate(0.01, 0.04)
        cols["F39"] = rate(0.01, 0.04)
        cols["F40"] = rate(0.04, 0.1)
    elif cat == "dos":
        kind = u(n)
        smurf = kind < 0.3
        proto = np.where(smurf, "icmp", "tcp").astype(object)
        service = np.where(smurf, "ecr_i", rng.choice(["private", "http", "telnet", "other"], size=n)).astype(object)
        flag = np.where(smurf, "SF", rng.choice(["S0", "REJ", "SF"], size=n, p=[0.75, 0.15, 0.1])).astype(object)
        cols["F5"] = np.where(smurf, rng.choice([520, 1032], size=n), rng.exponential(30, n))
        cols["F8"] = (u(n) < 0.05) * rng.integers(1, 4, n)
        cols["F23"] = rng.integers(80, 512, n)
        cols["F24"] = rng.integers(1, 40, n)
        serr = np.where(smurf, 0.0, 1.0)
        cols["F25"] = np.clip(serr - 0.05 * u(n), 0, 1)
        cols["F26"] = cols["F25"]
        cols["F29"] = rate(0.08, 0.08)
        cols["F30"] = rate(0.07, 0.05)
        cols["F32"] = np.full(n, 255.0)
        cols["F33"] = rng.integers(1, 30, n)
        cols["F34"] = rate(0.05, 0.05)
        cols["F38"] = np.clip(serr - 0.02 * u(n), 0, 1)
        cols["F39"] = cols["F38"]
    elif cat == "probe":
        proto = rng.choice(["tcp", "icmp", "udp"], size=n, p=[0.6, 0.3, 0.1]).astype(object)
        service = rng.choice(["private", "eco_i", "other", "ftp_data", "http"], size=n).astype(object)
        flag = rng.choice(["REJ", "RSTR", "SF", "S0", "SH"], size=n, p=[0.4, 0.2, 0.25, 0.1, 0.05]).astype(object)
        cols["F1"] = np.where(u(n) < 0.95, 0, rng.exponential(2000, n))
        cols["F5"] = rng.exponential(10, n)
        cols["F23"] = rng.integers(1, 300, n)
        cols["F24"] = rng.integers(1, 10, n)
        cols["F27"] = rate(0.6, 0.35)
        cols["F28"] = cols["F27"]
        cols["F29"] = rate(0.2, 0.2)
        cols["F30"] = rate(0.6, 0.3)
        cols["F32"] = rng.integers(1, 256, n)
        cols["F33"] = rng.integers(1, 20, n)
        cols["F35"] = rate(0.6, 0.3)
        cols["F36"] = rate(0.7, 0.3)
        cols["F40"] = rate(0.6, 0.35)
        cols["F41"] = cols["F40"]
    else:  # r2l / u2r: session-like traffic, distinguishable mostly by content columns
        proto = np.full(n, "tcp", dtype=object)
        service = rng.choice(["ftp", "telnet", "ftp_data", "imap4", "http", "smtp"], size=n).astype(object)
        flag = rng.choice(["SF", "RSTO", "S3"], size=n, p=[0.85, 0.1, 0.05]).astype(object)
        cols["F1"] = rng.exponential(400 if cat == "u2r" else 150, n)
        cols["F5"] = rng.lognormal(6.5 if cat == "r2l" else 7.5, 1.5, n)
        cols["F6"] = rng.lognormal(6.0, 2.5, n)
        cols["F10"] = rng.poisson(2, n)
        cols["F11"] = rng.poisson(1.5 if cat == "r2l" else 0.2, n)
        cols["F12"] = (u(n) < 0.8).astype(float)
        cols["F13"] = rng.poisson(1, n)
        cols["F14"] = (u(n) < (0.7 if cat == "u2r" else 0.05)).astype(float)
        cols["F17"] = rng.poisson(0.5, n)
        cols["F22"] = (u(n) < 0.4).astype(float)
        cols["F23"] = rng.poisson(2, n)
        cols["F24"] = rng.poisson(2, n)
        cols["F29"] = rate(0.9, 0.15)
        cols["F32"] = rng.integers(1, 60, n)
        cols["F33"] = rng.integers(1, 20, n)
        cols["F34"] = rate(0.3, 0.3)
        cols["F36"] = rate(0.5, 0.3)
        cols["F37"] = rate(0.1, 0.1)

    # Blend a share of records toward normal statistics to keep classes overlapping.
    if cat != "normal":
        share = 0.45 if test else 0.12
        blend = u(n) < share
        if blend.any():
            ref = _records("normal", n, rng, test)
            for key in ("F1", "F5", "F6", "F23", "F24", "F25", "F27", "F29", "F30", "F32",
                        "F33", "F34", "F38", "F39", "F40"):
                cols[key] = np.where(blend, ref[key], cols[key])
            proto = np.where(blend, ref["F2"], proto)
            service = np.where(blend, ref["F3"], service)
            flag = np.where(blend, ref["F4"], flag)
    if test and cat == "normal":
        service = np.where(u(n) < 0.01, rng.choice(SERVICES_TEST_EXTRA, size=n), service)

    cols["F2"], cols["F3"], cols["F4"] = proto, service, flag
    return cols


_INTEGER_COLS = {f"F{i}" for i in list(range(1, 25)) + [32, 33]} - {"F2", "F3", "F4"}


def generate_lines(n: int, seed: int = 0, split: str = "train", difficulty: bool = True) -> list[str]:
    """``n`` synthetic records as comma-separated text lines (no trailing newline)."""
    if split not in ("train", "test"):
        raise ValueError("split must be 'train' or 'test'")
    test = split == "test"
    rng = np.random.default_rng([seed, 1 if test else 0])
    counts = _mix_counts(n, TEST_MIX if test else TRAIN_MIX, rng)
    rows = []
    for cat, count in counts.items():
        if count == 0:
            continue
        cols = _records(cat, count, rng, test)
        if cat == "normal":
            labels = np.full(count, "normal", dtype=object)
        else:
            names = TRAIN_ATTACKS[cat] + (TEST_ONLY_ATTACKS[cat] if test else [])
            labels = rng.choice(names, size=count).astype(object)
        text = []
        for i in range(1, 42):
            key = f"F{i}"
            col = cols[key]
            if key in ("F2", "F3", "F4"):
                text.append(col.astype(str))
            elif key in _INTEGER_COLS:
                text.append(np.round(np.asarray(col, dtype=float)).astype(np.int64).astype(str))
            else:
                text.append(np.char.mod("%.2f", np.asarray(col, dtype=float)))
        text.append(labels.astype(str))
        if difficulty:
            text.append(rng.integers(0, 22, count).astype(str))
        rows.extend(",".join(parts) for parts in zip(*text))
    order = rng.permutation(len(rows))
    return [rows[i] for i in order]


def write_split(path, n: int, seed: int = 0, split: str = "train", difficulty: bool = True) -> None:
    with open(path, "w") as fh:
        for line in generate_lines(n, seed, split, difficulty):
            fh.write(line + "\n")
