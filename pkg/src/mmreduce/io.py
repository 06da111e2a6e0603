"""File formats: trajectory CSV and the text matrix container.

Matrix container layout::

    # mmreduce matrix container v1
    # meta {"type": "statespace"}
    A 2 2
    -1 0
    0 -2
    B 2 1
    ...

Each block is a header line ``<name> <rows> <cols>`` followed by ``rows``
lines of whitespace-separated values, row-major, 17 significant digits.
Lines starting with ``#`` are comments except the optional ``# meta`` line,
which carries a JSON object.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .lti import StateSpace, Trajectory
from .rom import ReducedModel

__all__ = [
    "FormatError",
    "write_trajectory",
    "read_trajectory",
    "write_matrices",
    "read_matrices",
    "save_statespace",
    "load_statespace",
    "save_rom",
    "load_rom",
    "load_model",
]

MAGIC = "# mmreduce matrix container v1"


class FormatError(ValueError):
    """Malformed input file."""


def write_trajectory(path, traj):
    header = ",".join(["t"] + [f"ch{i}" for i in range(traj.channel_count)])
    np.savetxt(path, np.column_stack([traj.times, traj.samples]), delimiter=",",
               fmt="%.17g", header=header, comments="")


def read_trajectory(path):
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    if not header or header[0] != "t" or any(
            h != f"ch{i}" for i, h in enumerate(header[1:])):
        raise FormatError(f"{path}: expected header 't,ch0,ch1,...'")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(header):
        raise FormatError(f"{path}: row width {data.shape[1]} != header width {len(header)}")
    return Trajectory(data[:, 0], data[:, 1:])


def write_matrices(path, blocks, meta=None):
    lines = [MAGIC]
    if meta is not None:
        lines.append("# meta " + json.dumps(meta, sort_keys=True))
    for name, M in blocks.items():
        M = np.atleast_2d(np.asarray(M, dtype=float))
        if not name.isidentifier():
            raise ValueError(f"invalid block name {name!r}")
        lines.append(f"{name} {M.shape[0]} {M.shape[1]}")
        lines.extend(" ".join(f"{x:.17g}" for x in row) for row in M)
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrices(path):
    """Return ``(blocks, meta)`` from a matrix container file."""
    path = Path(path)
    raw = path.read_text().splitlines()
    if not raw or raw[0].strip() != MAGIC:
        raise FormatError(f"{path}: not a matrix container (missing '{MAGIC}')")
    meta, blocks = {}, {}
    lines = iter(enumerate(raw[1:], start=2))
    for lineno, line in lines:
        s = line.strip()
        if not s:
            continue
        if s.startswith("# meta "):
            meta = json.loads(s[len("# meta "):])
            continue
        if s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) != 3:
            raise FormatError(f"{path}:{lineno}: expected '<name> <rows> <cols>'")
        name, r, c = parts[0], int(parts[1]), int(parts[2])
        rows = []
        for _ in range(r):
            try:
                ln, row = next(lines)
            except StopIteration:
                raise FormatError(f"{path}: block {name} truncated") from None
            vals = [float(x) for x in row.split()]
            if len(vals) != c:
                raise FormatError(f"{path}:{ln}: block {name} expects {c} columns")
            rows.append(vals)
        blocks[name] = np.array(rows, dtype=float).reshape(r, c)
    return blocks, meta


def save_statespace(path, sys, meta=None):
    m = {"type": "statespace"}
    m.update(meta or {})
    write_matrices(path, {"A": sys.A, "B": sys.B, "C": sys.C}, m)


def load_statespace(path):
    blocks, _ = read_matrices(path)
    try:
        return StateSpace(blocks["A"], blocks["B"], blocks["C"])
    except KeyError as exc:
        raise FormatError(f"{path}: missing block {exc}") from None


def save_rom(path, rom, meta=None):
    blocks = {"A": rom.F, "B": rom.G, "C": rom.H}
    for name in ("S", "L", "Q", "R"):
        M = getattr(rom, name)
        if M is not None:
            blocks[name] = M
    m = {"type": "rom", "kind": rom.kind, "order": rom.order,
         "diagnostics": rom.diagnostics}
    m.update(meta or {})
    write_matrices(path, blocks, m)


def load_rom(path):
    blocks, meta = read_matrices(path)
    if meta.get("type") != "rom":
        raise FormatError(f"{path}: not a reduced model file")
    return ReducedModel(F=blocks["A"], G=blocks["B"], H=blocks["C"], kind=meta["kind"],
                        S=blocks.get("S"), L=blocks.get("L"), Q=blocks.get("Q"),
                        R=blocks.get("R"), diagnostics=meta.get("diagnostics", {}))


def load_model(path):
    """StateSpace or ReducedModel depending on the file's metadata."""
    _, meta = read_matrices(path)
    return load_rom(path) if meta.get("type") == "rom" else load_statespace(path)
