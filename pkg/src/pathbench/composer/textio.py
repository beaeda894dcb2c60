"""Dataset serialization: human-readable text and a JSON machine format.

The text format lists training paths (base first, then modules) and test
paths grouped by disruption kind, as `stimuli:` / `responses:` line pairs of
space-separated `p:v` tokens and integers. Long lines may wrap: a line
holding only tokens continues the previous list. The JSON format is lossless
and additionally records the generation config and each test path's
disruption metadata.
"""

from __future__ import annotations

import json
import re

from pathbench.composer.paths import (
    Dataset,
    Disruption,
    DisruptionType,
    GenConfig,
    Path,
)

_SECTION_HEADERS = (
    "Training paths:",
    "Base path:",
    "Modular paths:",
    "Test paths:",
    "Insertion:",
    "Substitution:",
    "Deletion:",
)

_KIND_BY_HEADER = {
    "Insertion:": DisruptionType.INSERTION,
    "Substitution:": DisruptionType.SUBSTITUTION,
    "Deletion:": DisruptionType.DELETION,
}


class DatasetFormatError(ValueError):
    """Malformed dataset text, with 1-based line/column location."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------


def _stimuli_line(path: Path) -> str:
    return "stimuli: " + " ".join(f"{pid}:{value}" for pid, value in path.stimuli)


def _responses_line(path: Path) -> str:
    return "responses: " + " ".join(str(r) for r in path.responses)


def serialize(dataset: Dataset) -> str:
    """Render the dataset in the text layout, one line per stimuli/response list."""
    lines = ["Training paths:", "Base path:"]
    lines.append(_stimuli_line(dataset.base))
    lines.append(_responses_line(dataset.base))
    lines.append("Modular paths:")
    for module in dataset.modules:
        lines.append(_stimuli_line(module))
        lines.append(_responses_line(module))
    lines.append("Test paths:")
    for header, kind in _KIND_BY_HEADER.items():
        lines.append(header)
        for disruption, path in dataset.test:
            if disruption.kind is kind:
                lines.append(_stimuli_line(path))
                lines.append(_responses_line(path))
    return "\n".join(lines) + "\n"


_TOKEN_RE = re.compile(r"\S+")


class _PairCollector:
    """Accumulates stimuli/responses token lists for one path."""

    def __init__(self, line: int):
        self.start_line = line
        self.stimuli: list[tuple[int, int]] = []
        self.responses: list[int] = []
        self.seen_responses = False


def _parse_stimulus_token(token: str, line: int, column: int) -> tuple[int, int]:
    parts = token.split(":")
    if len(parts) != 2:
        raise DatasetFormatError(f"malformed stimulus token {token!r} (expected p:v)", line, column)
    try:
        pid, value = int(parts[0]), int(parts[1])
    except ValueError:
        raise DatasetFormatError(
            f"non-integer field in stimulus token {token!r}", line, column
        ) from None
    if pid < 0 or value < 0:
        raise DatasetFormatError(f"negative field in stimulus token {token!r}", line, column)
    return pid, value


def _parse_response_token(token: str, line: int, column: int) -> int:
    try:
        value = int(token)
    except ValueError:
        raise DatasetFormatError(f"malformed response token {token!r}", line, column) from None
    if value < 0:
        raise DatasetFormatError(f"negative response {token!r}", line, column)
    return value


def parse(text: str) -> Dataset:
    """Parse the text format back into a Dataset.

    The text carries no generation config, so the returned config is
    reconstructed structurally (seed 0, alphabet from observed values) and
    test disruptions record only their kind.
    """
    base_pairs: list[_PairCollector] = []
    module_pairs: list[_PairCollector] = []
    test_pairs: dict[DisruptionType, list[_PairCollector]] = {k: [] for k in DisruptionType}

    section: str | None = None
    current_sink: list[_PairCollector] | None = None
    pending: _PairCollector | None = None
    pending_field: str | None = None  # "stimuli" or "responses" for continuations

    def close_pending(line_no: int):
        nonlocal pending, pending_field
        if pending is not None and not pending.seen_responses:
            raise DatasetFormatError("stimuli line without a responses line", line_no)
        pending = None
        pending_field = None

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line in _SECTION_HEADERS:
            close_pending(line_no)
            section = line
            if line == "Base path:":
                current_sink = base_pairs
            elif line == "Modular paths:":
                current_sink = module_pairs
            elif line in _KIND_BY_HEADER:
                current_sink = test_pairs[_KIND_BY_HEADER[line]]
            else:
                current_sink = None
            continue
        if line.endswith(":") and not line.startswith(("stimuli:", "responses:")):
            raise DatasetFormatError(f"unknown section header {line!r}", line_no)

        if line.startswith("stimuli:"):
            close_pending(line_no)
            if current_sink is None:
                raise DatasetFormatError("stimuli line outside any path section", line_no)
            pending = _PairCollector(line_no)
            current_sink.append(pending)
            pending_field = "stimuli"
            body_start = raw.index("stimuli:") + len("stimuli:")
            _consume_tokens(raw, body_start, line_no, pending, "stimuli")
        elif line.startswith("responses:"):
            if pending is None:
                raise DatasetFormatError("responses line without preceding stimuli", line_no)
            if pending.seen_responses:
                raise DatasetFormatError("duplicate responses line", line_no)
            pending.seen_responses = True
            pending_field = "responses"
            body_start = raw.index("responses:") + len("responses:")
            _consume_tokens(raw, body_start, line_no, pending, "responses")
        else:
            # Bare token line: continuation of the previous list (wrapped text).
            if pending is None or pending_field is None:
                raise DatasetFormatError(f"unexpected content {line!r}", line_no)
            _consume_tokens(raw, 0, line_no, pending, pending_field)

    close_pending(len(text.splitlines()) + 1)
    return _assemble(base_pairs, module_pairs, test_pairs)


def _consume_tokens(raw: str, start: int, line_no: int, pair: _PairCollector, field: str):
    for match in _TOKEN_RE.finditer(raw, start):
        column = match.start() + 1
        if field == "stimuli":
            pair.stimuli.append(_parse_stimulus_token(match.group(), line_no, column))
        else:
            pair.responses.append(_parse_response_token(match.group(), line_no, column))


def _pair_to_path(pair: _PairCollector, path_id: int) -> Path:
    if len(pair.stimuli) != len(pair.responses):
        raise DatasetFormatError(
            f"{len(pair.stimuli)} stimuli but {len(pair.responses)} responses",
            pair.start_line,
        )
    if not pair.stimuli:
        raise DatasetFormatError("empty path", pair.start_line)
    return Path(id=path_id, stimuli=tuple(pair.stimuli), responses=tuple(pair.responses))


def _assemble(base_pairs, module_pairs, test_pairs) -> Dataset:
    if len(base_pairs) != 1:
        raise DatasetFormatError(f"expected exactly one base path, found {len(base_pairs)}", 1)
    base = _pair_to_path(base_pairs[0], 0)
    for pid, _ in base.stimuli:
        if pid != 0:
            raise DatasetFormatError(
                f"base path step carries id {pid}, expected 0", base_pairs[0].start_line
            )
    modules = []
    for index, pair in enumerate(module_pairs, start=1):
        path = _pair_to_path(pair, index)
        ids = {pid for pid, _ in path.stimuli}
        if ids != {index}:
            raise DatasetFormatError(
                f"module {index} stimuli carry ids {sorted(ids)}, expected {{{index}}}",
                pair.start_line,
            )
        modules.append(path)
    if not modules:
        raise DatasetFormatError("no modular paths", 1)

    tests = []
    for kind in DisruptionType:
        for pair in test_pairs[kind]:
            tests.append((Disruption(kind), _pair_to_path(pair, 0)))

    all_paths = [base, *modules, *(p for _, p in tests)]
    max_value = max(max(v for _, v in p.stimuli) for p in all_paths)
    max_response = max(max(p.responses) for p in all_paths)
    counts = [len(test_pairs[k]) for k in DisruptionType]
    config = GenConfig(
        seed=0,
        base_length=len(base),
        num_modules=len(modules),
        module_length_min=min(len(m) for m in modules),
        module_length_max=max(len(m) for m in modules),
        value_alphabet=max(15, max_value + 1, max_response + 1),
        tests_per_type=max(counts) if counts else 0,
    )
    return Dataset(config=config, train=(base, *modules), test=tuple(tests))


# ---------------------------------------------------------------------------
# JSON machine format
# ---------------------------------------------------------------------------


def _path_to_dict(path: Path) -> dict:
    return {
        "id": path.id,
        "stimuli": [[pid, value] for pid, value in path.stimuli],
        "responses": list(path.responses),
    }


def _path_from_dict(obj: dict) -> Path:
    return Path(
        id=int(obj["id"]),
        stimuli=tuple((int(p), int(v)) for p, v in obj["stimuli"]),
        responses=tuple(int(r) for r in obj["responses"]),
    )


def serialize_json(dataset: Dataset) -> str:
    doc = {
        "config": {
            "seed": dataset.config.seed,
            "base_length": dataset.config.base_length,
            "num_modules": dataset.config.num_modules,
            "module_length_min": dataset.config.module_length_min,
            "module_length_max": dataset.config.module_length_max,
            "value_alphabet": dataset.config.value_alphabet,
            "tests_per_type": dataset.config.tests_per_type,
        },
        "train": [_path_to_dict(p) for p in dataset.train],
        "test": [
            {
                "kind": d.kind.value,
                "module_id": d.module_id,
                "position": d.position,
                "path": _path_to_dict(p),
            }
            for d, p in dataset.test
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def parse_json(text: str) -> Dataset:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    config = GenConfig(**{k: int(v) for k, v in doc["config"].items()})
    train = tuple(_path_from_dict(p) for p in doc["train"])
    tests = []
    for entry in doc["test"]:
        kind = DisruptionType(entry["kind"])
        module_id = entry.get("module_id")
        position = entry.get("position")
        tests.append(
            (
                Disruption(
                    kind,
                    None if module_id is None else int(module_id),
                    None if position is None else int(position),
                ),
                _path_from_dict(entry["path"]),
            )
        )
    return Dataset(config=config, train=train, test=tuple(tests))
