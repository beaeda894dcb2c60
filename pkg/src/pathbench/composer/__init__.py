"""Dataset generation, disruption operators, encodings, and serialization."""

from pathbench.composer.encoding import (
    EncodedBatch,
    encode_one_hot,
    to_sequence_batch,
    to_window_batch,
    window_rows,
)
from pathbench.composer.paths import (
    Dataset,
    Disruption,
    DisruptionType,
    GenConfig,
    Path,
    delete,
    generate_dataset,
    insert,
    regenerate,
    substitute,
)
from pathbench.composer.textio import (
    DatasetFormatError,
    parse,
    parse_json,
    serialize,
    serialize_json,
)

__all__ = [
    "Dataset",
    "DatasetFormatError",
    "Disruption",
    "DisruptionType",
    "EncodedBatch",
    "GenConfig",
    "Path",
    "delete",
    "encode_one_hot",
    "generate_dataset",
    "insert",
    "parse",
    "parse_json",
    "regenerate",
    "serialize",
    "serialize_json",
    "substitute",
    "to_sequence_batch",
    "to_window_batch",
    "window_rows",
]
