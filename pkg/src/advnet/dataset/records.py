"""Raw record types and the two source-format parsers (NSL-KDD text, Moore ARFF)."""

from __future__ import annotations

import csv
import io
import logging
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence, TextIO

logger = logging.getLogger(__name__)

MISSING = None

NSLKDD_FEATURES = (
    "duration", "protocol_type", "service", "flag", "src_bytes", "dst_bytes",
    "land", "wrong_fragment", "urgent", "hot", "num_failed_logins", "logged_in",
    "num_compromised", "root_shell", "su_attempted", "num_root",
    "num_file_creations", "num_shells", "num_access_files", "num_outbound_cmds",
    "is_host_login", "is_guest_login", "count", "srv_count", "serror_rate",
    "srv_serror_rate", "rerror_rate", "srv_rerror_rate", "same_srv_rate",
    "diff_srv_rate", "srv_diff_host_rate", "dst_host_count",
    "dst_host_srv_count", "dst_host_same_srv_rate", "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate", "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate", "dst_host_srv_serror_rate", "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
)
NSLKDD_CATEGORICAL = ("protocol_type", "service", "flag")

# Attack-category table for the NSL-KDD train and test files.
NSLKDD_CATEGORIES = {
    "normal": ("normal",),
    "dos": ("back", "land", "neptune", "pod", "smurf", "teardrop", "apache2",
            "mailbomb", "processtable", "udpstorm", "worm"),
    "probe": ("ipsweep", "nmap", "portsweep", "satan", "mscan", "saint"),
    "r2l": ("ftp_write", "guess_passwd", "imap", "multihop", "phf", "spy",
            "warezclient", "warezmaster", "named", "sendmail", "snmpgetattack",
            "snmpguess", "xlock", "xsnoop", "httptunnel"),
    "u2r": ("buffer_overflow", "loadmodule", "perl", "rootkit", "ps",
            "sqlattack", "xterm"),
}
NSLKDD_LABELS = frozenset(name for names in NSLKDD_CATEGORIES.values() for name in names)

MOORE_CLASSES = ("WWW", "MAIL", "BULK", "SERV", "DB", "INT", "P2P", "ATTACK", "MMEDIA", "GAMES")

# The published Moore files use finer-grained class tokens than the ten
# application classes; this folds them onto the ten.
MOORE_CLASS_MAP = {
    "WWW": "WWW",
    "MAIL": "MAIL",
    "BULK": "BULK",
    "FTP-CONTROL": "BULK",
    "FTP-PASV": "BULK",
    "FTP-DATA": "BULK",
    "SERV": "SERV",
    "SERVICES": "SERV",
    "DB": "DB",
    "DATABASE": "DB",
    "INT": "INT",
    "INTERACTIVE": "INT",
    "P2P": "P2P",
    "ATTACK": "ATTACK",
    "MMEDIA": "MMEDIA",
    "MULTIMEDIA": "MMEDIA",
    "GAMES": "GAMES",
}


class ParseError(ValueError):
    """Malformed input; carries the 1-based line number of the offending line."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: str  # "numeric" or "categorical"
    vocabulary: tuple[str, ...] | None = None
    fill: float | None = None  # training-split median used for missing numerics

    @property
    def categorical(self) -> bool:
        return self.kind == "categorical"


@dataclass(frozen=True)
class Schema:
    attributes: tuple[Attribute, ...]
    labels: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.attributes)

    @property
    def names(self) -> list[str]:
        return [a.name for a in self.attributes]

    @property
    def categorical_positions(self) -> list[int]:
        return [i for i, a in enumerate(self.attributes) if a.categorical]

    @property
    def fitted(self) -> bool:
        return all(
            (a.vocabulary is not None) if a.categorical else (a.fill is not None)
            for a in self.attributes
        )

    def to_dict(self) -> dict:
        return {
            "attributes": [
                {"name": a.name, "kind": a.kind,
                 "vocabulary": list(a.vocabulary) if a.vocabulary is not None else None,
                 "fill": a.fill}
                for a in self.attributes
            ],
            "labels": list(self.labels),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Schema":
        attrs = tuple(
            Attribute(a["name"], a["kind"],
                      tuple(a["vocabulary"]) if a["vocabulary"] is not None else None,
                      a["fill"])
            for a in data["attributes"]
        )
        return cls(attrs, tuple(data.get("labels", ())))


@dataclass(frozen=True)
class RawRecord:
    """One parsed row: categorical tokens as str, numerics as float, missing as None."""

    features: tuple
    label: str
    line: int = field(default=0, compare=False)


NSLKDD_SCHEMA = Schema(
    tuple(
        Attribute(name, "categorical" if name in NSLKDD_CATEGORICAL else "numeric")
        for name in NSLKDD_FEATURES
    ),
    labels=tuple(sorted(NSLKDD_LABELS)),
)


def _as_stream(stream: TextIO | str) -> TextIO:
    return io.StringIO(stream) if isinstance(stream, str) else stream


def _to_float(token: str, line: int, name: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(line, f"non-numeric value {token!r} for numeric field {name!r}") from None


def parse_nslkdd(stream: TextIO | str) -> list[RawRecord]:
    """Parse NSL-KDD comma-separated records (41 features, label, optional difficulty)."""
    n = len(NSLKDD_FEATURES)
    records = []
    for lineno, line in enumerate(_as_stream(stream), start=1):
        line = line.strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) not in (n + 1, n + 2):
            raise ParseError(lineno, f"expected {n + 1} or {n + 2} fields, got {len(fields)}")
        values = []
        for attr, token in zip(NSLKDD_SCHEMA.attributes, fields[:n]):
            if attr.categorical:
                values.append(token)
            else:
                values.append(_to_float(token, lineno, attr.name))
        label = fields[n].rstrip(".")
        if label not in NSLKDD_LABELS:
            raise ParseError(lineno, f"unknown NSL-KDD label {label!r}")
        records.append(RawRecord(tuple(values), label, lineno))
    return records


def filter_binary(
    records: Iterable[RawRecord],
    normal_names: Iterable[str] = NSLKDD_CATEGORIES["normal"],
    dos_names: Iterable[str] = NSLKDD_CATEGORIES["dos"],
) -> list[RawRecord]:
    """Keep Normal and DoS records, relabelled to exactly "Normal" / "DoS"."""
    normal, dos = set(normal_names), set(dos_names)
    if normal & dos:
        raise ValueError(f"label sets overlap: {sorted(normal & dos)}")
    kept, dropped = [], 0
    for rec in records:
        if rec.label in normal:
            kept.append(replace(rec, label="Normal"))
        elif rec.label in dos:
            kept.append(replace(rec, label="DoS"))
        else:
            dropped += 1
    logger.info("filter_binary: kept %d records, dropped %d", len(kept), dropped)
    return kept


_ATTR_RE = re.compile(r"@attribute\s+('(?:[^'\\]|\\.)*'|\"[^\"]*\"|\S+)\s+(.+)$", re.IGNORECASE)


def _parse_attribute(line: str, lineno: int) -> tuple[str, str, tuple[str, ...] | None]:
    m = _ATTR_RE.match(line)
    if m is None:
        raise ParseError(lineno, f"malformed attribute declaration {line!r}")
    name = m.group(1).strip("'\"")
    kind = m.group(2).strip()
    if kind.startswith("{"):
        if not kind.endswith("}"):
            raise ParseError(lineno, "unterminated nominal value list")
        values = next(csv.reader([kind[1:-1]], quotechar="'", skipinitialspace=True))
        return name, "categorical", tuple(v.strip() for v in values)
    if kind.lower() in ("numeric", "real", "integer"):
        return name, "numeric", None
    if kind.lower() == "string":
        return name, "categorical", None
    raise ParseError(lineno, f"unsupported attribute type {kind!r}")


def parse_moore(stream: TextIO | str, class_map: dict[str, str] | None = None) -> tuple[Schema, list[RawRecord]]:
    """Parse a Moore traffic ARFF file; the last declared attribute is the class.

    Returns the feature schema and the records. "?" becomes a missing marker;
    ``class_map`` optionally renames class tokens (see ``MOORE_CLASS_MAP``).
    """
    declared: list[tuple[str, str, tuple[str, ...] | None]] = []
    records: list[RawRecord] = []
    in_data = False
    lineno = 0
    for lineno, raw in enumerate(_as_stream(stream), start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if not in_data:
            lower = line.lower()
            if lower.startswith("@relation"):
                continue
            if lower.startswith("@attribute"):
                declared.append(_parse_attribute(line, lineno))
                continue
            if lower.startswith("@data"):
                if len(declared) < 2:
                    raise ParseError(lineno, "need at least one feature and a class attribute")
                in_data = True
                continue
            raise ParseError(lineno, f"unexpected header line {line!r}")

        tokens = [t.strip() for t in next(csv.reader([line], quotechar="'", skipinitialspace=True))]
        if len(tokens) != len(declared):
            raise ParseError(lineno, f"expected {len(declared)} values, got {len(tokens)}")
        values = []
        for (name, kind, vocab), token in zip(declared[:-1], tokens[:-1]):
            if token == "?":
                values.append(MISSING)
            elif kind == "numeric":
                values.append(_to_float(token, lineno, name))
            else:
                if vocab is not None and token not in vocab:
                    raise ParseError(lineno, f"value {token!r} not declared for {name!r}")
                values.append(token)
        label = tokens[-1]
        class_vocab = declared[-1][2]
        if label == "?" or (class_vocab is not None and label not in class_vocab):
            raise ParseError(lineno, f"invalid class value {label!r}")
        if class_map is not None:
            if label not in class_map:
                raise ParseError(lineno, f"class {label!r} missing from class map")
            label = class_map[label]
        records.append(RawRecord(tuple(values), label, lineno))

    if not in_data and declared:
        raise ParseError(lineno, "no @data section")
    attrs = tuple(Attribute(name, kind) for name, kind, _ in declared[:-1])
    labels = declared[-1][2] if declared else None
    if labels is not None and class_map is not None:
        labels = tuple(dict.fromkeys(class_map[lbl] for lbl in labels if lbl in class_map))
    return Schema(attrs, tuple(labels or ())), records


def label_counts(records: Sequence[RawRecord]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for rec in records:
        counts[rec.label] = counts.get(rec.label, 0) + 1
    return counts
