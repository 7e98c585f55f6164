"""
Storage module for scheme, group, design and catalog files.

Formats:
    .cc    ``points=<n>``, ``colors=<k>``, then n rows of n colors.
    .perm  ``degree=<n>``, then one generator per line as n images.
    .inc   ``v=<v> b=<b>``, then v rows of b characters from {0,1}.
    catalog  lines ``m=<m>: 1+a2+...+ar``.
"""
import logging
import os
import re
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from src.core import NonSquare, Scheme, verify_scheme
from src.schemas import DesignInput, PermutationGroupInput

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]

_HEADER = re.compile(r"^([a-z]+)=(\d+)$")
_CATALOG_LINE = re.compile(r"^m=(\d+):\s*(\d+(?:\+\d+)*)$")


class FormatError(ValueError):
    """A file deviates from its text format."""

    def __init__(self, message: str, path: Optional[PathLike] = None,
                 line: Optional[int] = None, column: Optional[int] = None):
        location = f"{path or '<input>'}"
        if line is not None:
            location += f":{line}"
            if column is not None:
                location += f":{column}"
        super().__init__(f"{location}: {message}")
        self.path = path
        self.line = line
        self.column = column


def _read_lines(path: PathLike) -> List[str]:
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return lines


def _header(lines: List[str], index: int, key: str, path: PathLike) -> int:
    if index >= len(lines):
        raise FormatError(f"missing '{key}=' header", path, index + 1, 1)
    match = _HEADER.match(lines[index])
    if not match or match.group(1) != key:
        raise FormatError(f"expected '{key}=<integer>', got {lines[index]!r}", path, index + 1, 1)
    return int(match.group(2))


def _integer_row(line: str, line_no: int, path: PathLike) -> List[int]:
    """Parse single-space separated non-negative integers, tracking columns."""
    if line == "":
        return []
    values = []
    column = 1
    for token in line.split(" "):
        if not token.isdigit():
            raise FormatError(f"expected a non-negative integer, got {token!r}", path, line_no, column)
        values.append(int(token))
        column += len(token) + 1
    return values


def parse_scheme(text_lines: List[str], path: Optional[PathLike] = None) -> np.ndarray:
    """Parse .cc lines into a color matrix without verifying the axioms."""
    points = _header(text_lines, 0, "points", path)
    colors = _header(text_lines, 1, "colors", path)
    body = text_lines[2:]
    if len(body) != points:
        raise NonSquare(f"{path or '<input>'}: header declares {points} rows, found {len(body)}",
                        witness=(points, len(body)))

    rows = []
    for offset, line in enumerate(body):
        line_no = offset + 3
        row = _integer_row(line, line_no, path)
        if len(row) != points:
            raise NonSquare(f"{path or '<input>'}:{line_no}: row has {len(row)} entries, expected {points}",
                            witness=(line_no, len(row)))
        column = 1
        for value in row:
            if value >= colors:
                raise FormatError(f"color {value} outside 0..{colors - 1}", path, line_no, column)
            column += len(str(value)) + 1
        rows.append(row)
    return np.array(rows, dtype=np.int64).reshape(points, points)


def read_scheme(path: PathLike) -> Scheme:
    """Read and verify a .cc file."""
    logger.info(f"Reading scheme from {path}")
    matrix = parse_scheme(_read_lines(path), path)
    return verify_scheme(matrix)


def format_scheme(s: Scheme) -> str:
    lines = [f"points={s.point_count}", f"colors={s.relation_count}"]
    lines.extend(" ".join(str(int(c)) for c in row) for row in s.color_matrix)
    return "\n".join(lines) + "\n"


def write_scheme(s: Scheme, path: PathLike) -> None:
    output_dir = os.path.dirname(os.path.abspath(path))
    os.makedirs(output_dir, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(format_scheme(s))
    logger.info(f"Wrote {s.point_count}-point scheme to {path}")


def read_permutation_group(path: PathLike) -> PermutationGroupInput:
    lines = _read_lines(path)
    degree = _header(lines, 0, "degree", path)
    generators = []
    for offset, line in enumerate(lines[1:]):
        line_no = offset + 2
        images = _integer_row(line, line_no, path)
        if len(images) != degree:
            raise FormatError(f"generator has {len(images)} images, expected {degree}", path, line_no, 1)
        generators.append(images)
    try:
        return PermutationGroupInput(degree=degree, generators=generators)
    except ValueError as e:
        raise FormatError(str(e), path) from e


def read_design(path: PathLike) -> DesignInput:
    lines = _read_lines(path)
    if not lines:
        raise FormatError("missing 'v=<v> b=<b>' header", path, 1, 1)
    match = re.match(r"^v=(\d+) b=(\d+)$", lines[0])
    if not match:
        raise FormatError(f"expected 'v=<v> b=<b>', got {lines[0]!r}", path, 1, 1)
    v, b = int(match.group(1)), int(match.group(2))
    body = lines[1:]
    if len(body) != v:
        raise FormatError(f"header declares {v} rows, found {len(body)}", path, len(lines), 1)

    rows = []
    for offset, line in enumerate(body):
        line_no = offset + 2
        if len(line) != b:
            raise FormatError(f"row has {len(line)} characters, expected {b}", path, line_no, 1)
        for column, char in enumerate(line, start=1):
            if char not in "01":
                raise FormatError(f"expected '0' or '1', got {char!r}", path, line_no, column)
        rows.append([int(char) for char in line])
    return DesignInput(incidence=rows)


def format_design(d: DesignInput) -> str:
    v, b = len(d.incidence), len(d.incidence[0])
    lines = [f"v={v} b={b}"]
    lines.extend("".join(str(x) for x in row) for row in d.incidence)
    return "\n".join(lines) + "\n"


def read_catalog(path: PathLike) -> Dict[int, List[List[int]]]:
    """Known homogeneous degree multisets per fiber size m."""
    catalog: Dict[int, List[List[int]]] = {}
    for line_no, line in enumerate(_read_lines(path), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        match = _CATALOG_LINE.match(stripped)
        if not match:
            raise FormatError(f"expected 'm=<m>: 1+a2+...', got {stripped!r}", path, line_no, 1)
        m = int(match.group(1))
        degrees = sorted(int(x) for x in match.group(2).split("+"))
        if sum(degrees) != m or degrees[0] != 1:
            raise FormatError(f"degrees {degrees} must contain 1 and sum to {m}", path, line_no, 1)
        entries = catalog.setdefault(m, [])
        if degrees not in entries:
            entries.append(degrees)
    logger.info(f"Loaded catalog with {sum(len(v) for v in catalog.values())} multisets from {path}")
    return catalog


def dump_matrices(matrices: List[np.ndarray], directory: PathLike) -> List[Path]:
    """Write each idempotent as P<i>.txt (plain rows); complex ones get a P<i>.imag.txt too."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for index, matrix in enumerate(matrices):
        target = out / f"P{index}.txt"
        np.savetxt(target, np.real(matrix), fmt="%.12g")
        written.append(target)
        if np.iscomplexobj(matrix):
            imag_target = out / f"P{index}.imag.txt"
            np.savetxt(imag_target, np.imag(matrix), fmt="%.12g")
            written.append(imag_target)
    logger.info(f"Dumped {len(matrices)} idempotent matrices to {out}")
    return written
