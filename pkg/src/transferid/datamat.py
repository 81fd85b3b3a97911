"""Data matrices for state-space identification.

Builds the stacked snapshot matrix (rows: current state, input, next state)
from recorded trajectories, checks persistency of excitation, and reads and
writes trajectory files in CSV and JSON form.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .subspace import DEFAULT_POLICY, RankPolicy

__all__ = [
    "Trajectory",
    "StackedData",
    "snapshot",
    "stack",
    "block_hankel",
    "persistency_order",
    "load_trajectory",
    "save_trajectory",
]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """An input/state record: states (n, L+1) and inputs (m, L), channel-major.

    The state sequence is one sample longer than the input sequence. m = 0
    encodes an autonomous record with no input channels.
    """

    states: np.ndarray
    inputs: np.ndarray

    def __post_init__(self) -> None:
        states = np.atleast_2d(np.array(self.states, dtype=float))
        inputs = np.array(self.inputs, dtype=float)
        if inputs.ndim == 1:
            inputs = inputs[np.newaxis, :]
        if states.ndim != 2 or inputs.ndim != 2:
            raise ValueError("states and inputs must be 2-d arrays")
        if states.shape[0] < 1:
            raise ValueError("state dimension must be at least 1")
        if states.shape[1] != inputs.shape[1] + 1:
            raise ValueError(
                f"need one more state sample than input samples, got "
                f"{states.shape[1]} states and {inputs.shape[1]} inputs"
            )
        if not (np.all(np.isfinite(states)) and np.all(np.isfinite(inputs))):
            raise ValueError("trajectory entries must be finite")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "inputs", inputs)

    @property
    def n(self) -> int:
        return self.states.shape[0]

    @property
    def m(self) -> int:
        return self.inputs.shape[0]

    @property
    def length(self) -> int:
        """Number of recorded transitions."""
        return self.inputs.shape[1]


@dataclass(frozen=True, eq=False)
class StackedData:
    """A (2n+m) x N matrix whose columns are [x(k); u(k); x(k+1)] snapshots."""

    n: int
    m: int
    matrix: np.ndarray

    def __post_init__(self) -> None:
        if self.n < 1 or self.m < 0:
            raise ValueError(f"invalid dimensions n={self.n}, m={self.m}")
        matrix = np.array(self.matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != 2 * self.n + self.m:
            raise ValueError(
                f"matrix must have {2 * self.n + self.m} rows, got shape {matrix.shape}"
            )
        object.__setattr__(self, "matrix", matrix)

    @property
    def ambient_dim(self) -> int:
        return 2 * self.n + self.m

    @property
    def n_snapshots(self) -> int:
        return self.matrix.shape[1]

    @property
    def x_minus(self) -> np.ndarray:
        return self.matrix[: self.n]

    @property
    def u_minus(self) -> np.ndarray:
        return self.matrix[self.n : self.n + self.m]

    @property
    def x_plus(self) -> np.ndarray:
        return self.matrix[self.n + self.m :]

    @classmethod
    def from_snapshots(cls, n: int, m: int, columns: np.ndarray) -> "StackedData":
        """Wrap an existing (2n+m) x N snapshot matrix."""
        return cls(n, m, columns)


def snapshot(x_prev, u_prev, x_next) -> np.ndarray:
    """Single stacked column [x(k); u(k); x(k+1)] from one transition."""
    x0 = np.asarray(x_prev, dtype=float).reshape(-1)
    x1 = np.asarray(x_next, dtype=float).reshape(-1)
    u = np.asarray(u_prev, dtype=float).reshape(-1)
    if x0.shape != x1.shape:
        raise ValueError("state vectors have different lengths")
    return np.concatenate([x0, u, x1])


def stack(traj: Trajectory) -> StackedData:
    """Stacked data matrix of a trajectory; column k is its k-th transition."""
    if traj.length < 1:
        raise ValueError("trajectory has no input samples to stack")
    matrix = np.vstack([traj.states[:, :-1], traj.inputs, traj.states[:, 1:]])
    return StackedData(traj.n, traj.m, matrix)


def _input_matrix(inputs) -> np.ndarray:
    """Coerce an input record to channel-major (m, N) form.

    2-d arrays are taken as already channel-major; sequences of vectors are
    interpreted time-major and transposed; a 1-d array is one scalar channel.
    """
    if isinstance(inputs, np.ndarray):
        arr = np.asarray(inputs, dtype=float)
        if arr.ndim == 1:
            return arr[np.newaxis, :]
        if arr.ndim == 2:
            return arr
        raise ValueError(f"cannot interpret inputs of shape {arr.shape}")
    arr = np.asarray(list(inputs), dtype=float)
    if arr.ndim == 1:
        return arr[np.newaxis, :]
    if arr.ndim == 2:
        return arr.T
    raise ValueError("inputs must be a matrix or a sequence of vectors")


def block_hankel(samples: np.ndarray, depth: int) -> np.ndarray:
    """Block Hankel matrix of a channel-major (m, N) sequence.

    Column j stacks samples j, j+1, ..., j+depth-1, giving shape
    (m * depth, N - depth + 1).
    """
    arr = _input_matrix(samples)
    m, total = arr.shape
    if depth < 1:
        raise ValueError("depth must be positive")
    if total < depth:
        raise ValueError(f"sequence of length {total} is shorter than depth {depth}")
    return np.vstack([arr[:, j : total - depth + 1 + j] for j in range(depth)])


def persistency_order(inputs, order: int, policy: RankPolicy = DEFAULT_POLICY) -> bool:
    """Whether an input sequence is persistently exciting of the given order.

    True iff the depth-``order`` block Hankel matrix of the sequence has full
    row rank m * order under the rank policy.
    """
    arr = _input_matrix(inputs)
    if order < 1:
        raise ValueError("order must be positive")
    if arr.shape[1] < order:
        raise ValueError(
            f"sequence of length {arr.shape[1]} is shorter than order {order}"
        )
    hankel = block_hankel(arr, order)
    s = np.linalg.svd(hankel, compute_uv=False)
    return policy.rank(s, hankel.shape) == arr.shape[0] * order


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

_HEADER_CELL = re.compile(r"^([xu])(\d+)$")


def _resolve_format(path: Path, format: str | None) -> str:
    if format is not None:
        if format not in ("csv", "json"):
            raise ValueError(f"unknown trajectory format {format!r}")
        return format
    suffix = path.suffix.lower().lstrip(".")
    if suffix in ("csv", "json"):
        return suffix
    raise ValueError(f"cannot infer format from {path.name!r}; pass format=")


def save_trajectory(traj: Trajectory, path, format: str | None = None) -> None:
    """Write a trajectory to CSV or JSON, losslessly (shortest exact floats)."""
    path = Path(path)
    fmt = _resolve_format(path, format)
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["t"]
            header += [f"x{i + 1}" for i in range(traj.n)]
            header += [f"u{j + 1}" for j in range(traj.m)]
            writer.writerow(header)
            for t in range(traj.length + 1):
                row = [str(t)] + [repr(float(v)) for v in traj.states[:, t]]
                if t < traj.length:
                    row += [repr(float(v)) for v in traj.inputs[:, t]]
                else:
                    row += [""] * traj.m
                writer.writerow(row)
    else:
        payload = {
            "n": traj.n,
            "m": traj.m,
            "states": [[float(v) for v in traj.states[:, t]] for t in range(traj.length + 1)],
            "inputs": [[float(v) for v in traj.inputs[:, t]] for t in range(traj.length)],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")


def _parse_header(cells: list[str], path: Path) -> tuple[int, int]:
    if not cells or cells[0].strip() != "t":
        raise ValueError(f"{path}:1: malformed header, first column must be 't'")
    n = m = 0
    for cell in cells[1:]:
        match = _HEADER_CELL.match(cell.strip())
        if match is None:
            raise ValueError(f"{path}:1: malformed header cell {cell!r}")
        kind, index = match.group(1), int(match.group(2))
        if kind == "x":
            if m or index != n + 1:
                raise ValueError(f"{path}:1: state columns out of order at {cell!r}")
            n += 1
        else:
            if index != m + 1:
                raise ValueError(f"{path}:1: input columns out of order at {cell!r}")
            m += 1
    if n < 1:
        raise ValueError(f"{path}:1: header declares no state columns")
    return n, m


def _parse_cell(cell: str, path: Path, line: int) -> float:
    try:
        return float(cell)
    except ValueError:
        raise ValueError(f"{path}:{line}: non-numeric cell {cell!r}") from None


def _load_csv(path: Path) -> Trajectory:
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh)]
    if not rows:
        raise ValueError(f"{path}: empty file")
    n, m = _parse_header(rows[0], path)
    body = rows[1:]
    if not body:
        raise ValueError(f"{path}: no data rows")
    states = np.zeros((n, len(body)))
    inputs = np.zeros((m, len(body) - 1))
    for t, row in enumerate(body):
        line = t + 2
        last = t == len(body) - 1
        allowed = {1 + n + m}
        if last:
            allowed.add(1 + n)
        if len(row) not in allowed:
            raise ValueError(
                f"{path}:{line}: row has {len(row)} cells, expected {1 + n + m}"
            )
        if _parse_cell(row[0], path, line) != t:
            raise ValueError(f"{path}:{line}: unexpected time index {row[0]!r}")
        states[:, t] = [_parse_cell(c, path, line) for c in row[1 : 1 + n]]
        u_cells = row[1 + n :]
        if last:
            if any(c.strip() for c in u_cells):
                raise ValueError(f"{path}:{line}: final row must leave input cells empty")
        else:
            inputs[:, t] = [_parse_cell(c, path, line) for c in u_cells]
    return Trajectory(states, inputs)


def _load_json(path: Path) -> Trajectory:
    text = Path(path).read_text()
    if not text.strip():
        raise ValueError(f"{path}: empty file")
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    for key in ("n", "m", "states", "inputs"):
        if key not in payload:
            raise ValueError(f"{path}: missing key {key!r}")
    n, m = int(payload["n"]), int(payload["m"])
    states_list = payload["states"]
    inputs_list = payload["inputs"]
    if len(states_list) != len(inputs_list) + 1:
        raise ValueError(
            f"{path}: need one more state sample than input samples, got "
            f"{len(states_list)} and {len(inputs_list)}"
        )
    if any(len(x) != n for x in states_list):
        raise ValueError(f"{path}: state vectors must have length n={n}")
    if any(len(u) != m for u in inputs_list):
        raise ValueError(f"{path}: input vectors must have length m={m}")
    states = np.array(states_list, dtype=float).reshape(len(states_list), n).T
    inputs = np.array(inputs_list, dtype=float).reshape(len(inputs_list), m).T
    return Trajectory(states, inputs)


def load_trajectory(path, format: str | None = None) -> Trajectory:
    """Read a trajectory file written by :func:`save_trajectory`.

    The format is inferred from the suffix unless given explicitly. Malformed
    headers, ragged rows, and non-numeric cells raise ValueError with the
    offending line number.
    """
    path = Path(path)
    fmt = _resolve_format(path, format)
    return _load_csv(path) if fmt == "csv" else _load_json(path)
