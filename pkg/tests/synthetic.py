"""Small synthetic files in the NSL-KDD and Moore ARFF layouts, for exercising the pipeline.

They follow the real formats field-for-field but the values are invented;
reproducing the published numbers needs the real files.
"""

from __future__ import annotations

import numpy as np

from advnet.dataset import NSLKDD_FEATURES

FIRST_KDDTRAIN_LINE = (
    "0,tcp,ftp_data,SF,491,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,2,2,0.00,0.00,0.00,0.00,"
    "1.00,0.00,0.00,150,25,0.17,0.03,0.17,0.00,0.00,0.00,0.05,0.00,normal,20"
)


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if float(v).is_integer():
        return str(int(v))
    return f"{v:.2f}"


def nslkdd_lines(n_normal: int, n_dos: int, n_probe: int = 0, seed: int = 0, overlap: float = 0.0) -> str:
    """Normal rows look like short HTTP/SMTP sessions, DoS rows like SYN floods.

    ``overlap`` is the share of DoS rows given normal-looking rate features.
    """
    rng = np.random.default_rng(seed)
    rows = []
    names = list(NSLKDD_FEATURES)

    def row(kind):
        v = dict.fromkeys(names, 0)
        if kind == "normal":
            v["protocol_type"] = rng.choice(["tcp", "udp", "icmp"], p=[0.8, 0.15, 0.05])
            v["service"] = rng.choice(["http", "smtp", "domain_u", "ftp_data"])
            v["flag"] = "SF"
            v["src_bytes"] = int(rng.integers(100, 2000))
            v["dst_bytes"] = int(rng.integers(0, 8000))
            v["logged_in"] = 1
            v["count"] = int(rng.integers(1, 30))
            v["srv_count"] = int(rng.integers(1, 30))
            v["same_srv_rate"] = round(rng.uniform(0.8, 1.0), 2)
            v["dst_host_count"] = int(rng.integers(1, 255))
            v["dst_host_srv_count"] = int(rng.integers(50, 255))
            v["dst_host_same_srv_rate"] = round(rng.uniform(0.7, 1.0), 2)
            label = "normal"
        elif kind == "dos":
            v["protocol_type"] = "tcp"
            v["service"] = rng.choice(["private", "http", "other"])
            v["flag"] = rng.choice(["S0", "REJ"])
            v["count"] = int(rng.integers(100, 511))
            v["srv_count"] = int(rng.integers(1, 30))
            v["serror_rate"] = round(rng.uniform(0.9, 1.0), 2)
            v["srv_serror_rate"] = round(rng.uniform(0.9, 1.0), 2)
            v["same_srv_rate"] = round(rng.uniform(0.0, 0.2), 2)
            v["diff_srv_rate"] = round(rng.uniform(0.05, 0.1), 2)
            v["dst_host_count"] = 255
            v["dst_host_srv_count"] = int(rng.integers(1, 30))
            v["dst_host_same_srv_rate"] = round(rng.uniform(0.0, 0.1), 2)
            v["dst_host_serror_rate"] = round(rng.uniform(0.9, 1.0), 2)
            if rng.random() < overlap:
                v["serror_rate"] = v["srv_serror_rate"] = 0.0
                v["same_srv_rate"] = round(rng.uniform(0.8, 1.0), 2)
            label = rng.choice(["neptune", "smurf", "back"], p=[0.8, 0.1, 0.1])
        else:
            v["protocol_type"] = "tcp"
            v["service"] = "private"
            v["flag"] = "REJ"
            v["count"] = int(rng.integers(1, 10))
            v["rerror_rate"] = 1.0
            label = "satan"
        return ",".join(_fmt(v[n]) for n in names) + f",{label},{int(rng.integers(1, 21))}"

    kinds = ["normal"] * n_normal + ["dos"] * n_dos + ["probe"] * n_probe
    for k in rng.permutation(kinds):
        rows.append(row(k))
    return "\n".join(rows) + "\n"


MOORE_TOKENS = ("WWW", "MAIL", "FTP-DATA", "SERVICES", "DATABASE", "INTERACTIVE", "P2P", "ATTACK",
                "MULTIMEDIA", "GAMES")


def moore_arff(n_per_class: int = 40, n_features: int = 8, seed: int = 0, missing_rate: float = 0.0) -> str:
    """ARFF text with numeric flow features and the Moore class tokens; class means are separated."""
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0, 100, size=(len(MOORE_TOKENS), n_features))
    lines = ["% synthetic flows", "@relation traffic"]
    lines += [f"@attribute feat_{j} numeric" for j in range(n_features)]
    lines.append("@attribute classes {" + ",".join(MOORE_TOKENS) + "}")
    lines.append("@data")
    order = rng.permutation(np.repeat(np.arange(len(MOORE_TOKENS)), n_per_class))
    for c in order:
        x = centers[c] + rng.normal(0, 4.0, size=n_features)
        vals = ["?" if rng.random() < missing_rate else f"{v:.4f}" for v in x]
        lines.append(",".join(vals) + f",{MOORE_TOKENS[c]}")
    return "\n".join(lines) + "\n"


def blobs(n_per_class: int, centers, spread: float, seed: int = 0):
    rng = np.random.default_rng(seed)
    centers = np.asarray(centers, dtype=float)
    X = np.vstack([c + spread * rng.standard_normal((n_per_class, centers.shape[1])) for c in centers])
    y = np.repeat(np.arange(len(centers)), n_per_class)
    return np.clip(X, 0.0, 1.0), y
