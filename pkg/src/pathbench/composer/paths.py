"""Path types, disruption operators, and seeded dataset generation.

A dataset holds one base path (the overall task), a handful of short modular
paths, and test paths built by applying exactly one disruption -- insertion,
substitution, or deletion of a module -- to the base path.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from pathbench.numerics import Rng


class DisruptionType(enum.Enum):
    INSERTION = "insertion"
    SUBSTITUTION = "substitution"
    DELETION = "deletion"


@dataclass(frozen=True)
class Path:
    """A labeled stimulus-response sequence.

    Each stimulus is a (path_id, value) pair; in a pure path every stimulus
    carries the path's own id, while disrupted test paths keep the id of the
    training path each step originated from.
    """

    id: int
    stimuli: tuple[tuple[int, int], ...]
    responses: tuple[int, ...]

    def __post_init__(self):
        if self.id < 0:
            raise ValueError(f"path id must be nonnegative, got {self.id}")
        if len(self.stimuli) == 0:
            raise ValueError("path must have at least one step")
        if len(self.stimuli) != len(self.responses):
            raise ValueError(
                f"stimuli length {len(self.stimuli)} != responses length {len(self.responses)}"
            )

    def __len__(self) -> int:
        return len(self.stimuli)


@dataclass(frozen=True)
class GenConfig:
    """Knobs for dataset generation, fully determining the output via seed."""

    seed: int
    base_length: int = 10
    num_modules: int = 5
    module_length_min: int = 2
    module_length_max: int = 5
    value_alphabet: int = 15
    tests_per_type: int = 2

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.base_length < 1:
            raise ValueError("base_length must be positive")
        if self.num_modules < 1:
            raise ValueError("num_modules must be positive")
        if not 1 <= self.module_length_min <= self.module_length_max <= self.base_length:
            raise ValueError(
                "need 1 <= module_length_min <= module_length_max <= base_length "
                f"(got {self.module_length_min}, {self.module_length_max}, {self.base_length})"
            )
        # Deletion removes a module-length segment but may not empty the base.
        if self.tests_per_type > 0 and self.module_length_max >= self.base_length:
            raise ValueError(
                f"module_length_max {self.module_length_max} must be < base_length "
                f"{self.base_length} when test paths are requested, or deletions cannot fit"
            )
        if self.value_alphabet < 1:
            raise ValueError("value_alphabet must be positive")
        if self.tests_per_type < 0:
            raise ValueError("tests_per_type must be nonnegative")

    @property
    def stimulus_width(self) -> int:
        """One-hot width: path-id block plus value block."""
        return self.num_modules + 1 + self.value_alphabet


@dataclass(frozen=True)
class Disruption:
    """Which modification produced a test path.

    For deletions, module_id names the module whose length was removed.
    Both fields are None when a dataset was parsed from text, which does not
    record them.
    """

    kind: DisruptionType
    module_id: int | None = None
    position: int | None = None


@dataclass(frozen=True)
class Dataset:
    config: GenConfig
    train: tuple[Path, ...]
    test: tuple[tuple[Disruption, Path], ...]

    @property
    def base(self) -> Path:
        return self.train[0]

    @property
    def modules(self) -> tuple[Path, ...]:
        return self.train[1:]


# ---------------------------------------------------------------------------
# Disruption operators
# ---------------------------------------------------------------------------


def insert(base: Path, module: Path, pos: int) -> Path:
    """Splice `module` into `base` at `pos`; the suffix shifts right intact."""
    if not 0 <= pos <= len(base):
        raise ValueError(f"insert position {pos} outside [0, {len(base)}]")
    return Path(
        id=base.id,
        stimuli=base.stimuli[:pos] + module.stimuli + base.stimuli[pos:],
        responses=base.responses[:pos] + module.responses + base.responses[pos:],
    )


def substitute(base: Path, module: Path, pos: int) -> Path:
    """Replace base steps [pos, pos+len(module)) with the module's steps."""
    end = pos + len(module)
    if not 0 <= pos <= len(base) - len(module):
        raise ValueError(
            f"substitute position {pos} outside [0, {len(base) - len(module)}] "
            f"for module of length {len(module)}"
        )
    return Path(
        id=base.id,
        stimuli=base.stimuli[:pos] + module.stimuli + base.stimuli[end:],
        responses=base.responses[:pos] + module.responses + base.responses[end:],
    )


def delete(base: Path, length: int, pos: int) -> Path:
    """Remove base steps [pos, pos+length); the suffix shifts left."""
    if not 1 <= length < len(base):
        raise ValueError(f"delete length {length} outside [1, {len(base) - 1}]")
    if not 0 <= pos <= len(base) - length:
        raise ValueError(f"delete position {pos} outside [0, {len(base) - length}]")
    end = pos + length
    return Path(
        id=base.id,
        stimuli=base.stimuli[:pos] + base.stimuli[end:],
        responses=base.responses[:pos] + base.responses[end:],
    )


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


def _random_path(rng: Rng, path_id: int, length: int, alphabet: int) -> Path:
    values = [rng.uniform_int(0, alphabet - 1) for _ in range(length)]
    responses = [rng.uniform_int(0, alphabet - 1) for _ in range(length)]
    return Path(
        id=path_id,
        stimuli=tuple((path_id, v) for v in values),
        responses=tuple(responses),
    )


def generate_dataset(config: GenConfig) -> Dataset:
    """Deterministically generate train and test paths from config.seed.

    Draw order is fixed: base path, then each module (length, values,
    responses), then test paths grouped by kind in insertion /
    substitution / deletion order.
    """
    rng = Rng(config.seed)
    v = config.value_alphabet

    base = _random_path(rng, 0, config.base_length, v)
    modules = []
    for mid in range(1, config.num_modules + 1):
        length = rng.uniform_int(config.module_length_min, config.module_length_max)
        modules.append(_random_path(rng, mid, length, v))

    tests: list[tuple[Disruption, Path]] = []
    for _ in range(config.tests_per_type):
        mid = rng.uniform_int(1, config.num_modules)
        module = modules[mid - 1]
        pos = rng.uniform_int(0, len(base))
        tests.append((Disruption(DisruptionType.INSERTION, mid, pos), insert(base, module, pos)))
    for _ in range(config.tests_per_type):
        mid = rng.uniform_int(1, config.num_modules)
        module = modules[mid - 1]
        pos = rng.uniform_int(0, len(base) - len(module))
        tests.append(
            (Disruption(DisruptionType.SUBSTITUTION, mid, pos), substitute(base, module, pos))
        )
    for _ in range(config.tests_per_type):
        mid = rng.uniform_int(1, config.num_modules)
        length = len(modules[mid - 1])
        pos = rng.uniform_int(0, len(base) - length)
        tests.append((Disruption(DisruptionType.DELETION, mid, pos), delete(base, length, pos)))

    return Dataset(config=config, train=(base, *modules), test=tuple(tests))


def regenerate(dataset: Dataset) -> Dataset:
    """Rebuild a dataset from its own config; must reproduce it exactly."""
    return generate_dataset(replace(dataset.config))
