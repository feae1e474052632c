"""Time-stamped paths with jump bookkeeping, plus CSV/JSON serialization."""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .lie_groups import GroupDescriptor
from .errors import UsageError

__all__ = ["PathStyle", "CadlagPath"]


class PathStyle(str, enum.Enum):
    DISCRETE_JUMP = "DiscreteJump"
    GRID_SAMPLED = "GridSampled"


@dataclass(frozen=True, eq=False)
class CadlagPath:
    """A path sampled at ``times``.

    ``values`` has shape ``(..., T, d)``; any leading axes index independent
    paths sharing the same time grid. ``descriptor`` is the driver group, or
    ``None`` for a Euclidean state path.

    For grid-sampled drivers with jumps, ``jump_flags`` (shape ``(..., T-1)``)
    marks the steps that contain a jump and ``jump_part`` holds the pure-jump
    component of those increments (zero elsewhere).
    """

    times: np.ndarray
    values: np.ndarray
    style: PathStyle = PathStyle.GRID_SAMPLED
    descriptor: GroupDescriptor | None = None
    jump_flags: np.ndarray | None = None
    jump_part: np.ndarray | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.size == 0:
            raise UsageError("times must be a nonempty 1-d array")
        if times[0] != 0.0:
            raise UsageError("times must start at 0")
        if np.any(np.diff(times) <= 0):
            raise UsageError("times must be strictly increasing")
        if values.ndim < 2 or values.shape[-2] != times.size:
            raise UsageError(f"values shape {values.shape} does not match {times.size} times")
        if self.descriptor is not None:
            self.descriptor.check(values)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "style", PathStyle(self.style))
        if self.jump_flags is not None:
            object.__setattr__(self, "jump_flags", np.asarray(self.jump_flags, dtype=bool))

    # -- shape -----------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.values.shape[-1]

    @property
    def n_steps(self) -> int:
        return self.times.size - 1

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.values.shape[:-2]

    def __getitem__(self, index) -> "CadlagPath":
        """Select paths along the batch axes."""
        if not self.batch_shape:
            raise UsageError("path has no batch axis")
        flags = None if self.jump_flags is None else self.jump_flags[index]
        part = None if self.jump_part is None else self.jump_part[index]
        return replace(self, values=self.values[index], jump_flags=flags, jump_part=part)

    # -- evaluation ------------------------------------------------------
    def value_at(self, t):
        """Value at time ``t`` (largest listed time <= t)."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise UsageError("negative time")
        idx = np.searchsorted(self.times, t, side="right") - 1
        return np.take(self.values, idx, axis=-2)

    def increments(self) -> np.ndarray:
        """Group jumps between consecutive samples (coordinate differences on R^m)."""
        if self.descriptor is None:
            return np.diff(self.values, axis=-2)
        return self.descriptor.increments(self.values)

    def jump_times(self, atol: float = 0.0) -> np.ndarray:
        """Times at which a single (unbatched) path changes value."""
        if self.batch_shape:
            raise UsageError("jump_times needs a single path")
        d = np.abs(np.diff(self.values, axis=0)).max(axis=1)
        return self.times[1:][d > atol]

    # -- serialization ---------------------------------------------------
    def to_csv(self, path) -> None:
        if self.batch_shape:
            raise UsageError("CSV export needs a single path; index the batch first")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"coord_{i}" for i in range(self.dim)])
            for t, row in zip(self.times, self.values):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path, style=PathStyle.GRID_SAMPLED, descriptor=None) -> "CadlagPath":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        if not header or header[0] != "t":
            raise UsageError("CSV path must start with a 't' column")
        data = np.array([[float(v) for v in r] for r in body], dtype=float)
        return cls(data[:, 0], data[:, 1:], style, descriptor)

    def to_dict(self) -> dict:
        out = {
            "style": self.style.value,
            "descriptor": None if self.descriptor is None else self.descriptor.to_dict(),
            "times": self.times.tolist(),
            "values": self.values.tolist(),
        }
        if self.jump_flags is not None:
            out["jump_flags"] = self.jump_flags.tolist()
        if self.jump_part is not None:
            out["jump_part"] = np.asarray(self.jump_part).tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "CadlagPath":
        desc = data.get("descriptor")
        return cls(
            np.array(data["times"], dtype=float),
            np.array(data["values"], dtype=float),
            PathStyle(data.get("style", PathStyle.GRID_SAMPLED.value)),
            None if desc is None else GroupDescriptor.from_dict(desc),
            None if "jump_flags" not in data else np.array(data["jump_flags"], dtype=bool),
            None if "jump_part" not in data else np.array(data["jump_part"], dtype=float),
        )

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict())
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, source) -> "CadlagPath":
        if isinstance(source, (str, bytes)) and str(source).lstrip().startswith("{"):
            return cls.from_dict(json.loads(source))
        return cls.from_dict(json.loads(Path(source).read_text()))
