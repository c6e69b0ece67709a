"""Parsing, encoding, normalization and splitting of the NSL-KDD and Moore datasets."""

from advnet.dataset.encoding import (
    REFERENCE_IDS_WIDTH,
    UNSEEN,
    Dataset,
    SplitSpec,
    decode_onehot,
    encode_onehot,
    encoded_feature_names,
    fit_norm_params,
    fit_schema,
    normalize,
    split,
    split_indices,
)
from advnet.dataset.io import load_dataset, norm_fingerprint, prepare, read_csv, save_dataset, write_csv
from advnet.dataset.records import (
    MOORE_CLASS_MAP,
    MOORE_CLASSES,
    NSLKDD_CATEGORIES,
    NSLKDD_FEATURES,
    NSLKDD_SCHEMA,
    Attribute,
    ParseError,
    RawRecord,
    Schema,
    filter_binary,
    label_counts,
    parse_moore,
    parse_nslkdd,
)

__all__ = [
    "REFERENCE_IDS_WIDTH", "UNSEEN", "Dataset", "SplitSpec", "decode_onehot", "encode_onehot",
    "encoded_feature_names", "fit_norm_params", "fit_schema", "normalize", "split",
    "split_indices", "load_dataset", "norm_fingerprint", "prepare", "read_csv", "save_dataset",
    "write_csv", "MOORE_CLASS_MAP", "MOORE_CLASSES", "NSLKDD_CATEGORIES", "NSLKDD_FEATURES",
    "NSLKDD_SCHEMA", "Attribute", "ParseError", "RawRecord", "Schema", "filter_binary",
    "label_counts", "parse_moore", "parse_nslkdd",
]
