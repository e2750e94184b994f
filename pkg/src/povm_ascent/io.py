"""Text formats: the import file, the run output file, and the JSON export.

Import file::

    N = 2
    J = 2
    K = 2
    {{0.5,0},{0,0}}
    {{0,0},{0,0.5}}

Only the integers after the equal signs are read; header names are free.
Matrix entries are ``Real``, ``Real+ImagI``, ``ImagI``, ``I`` or ``-I``; the
imaginary unit is an upper-case ``I`` at the end of the entry.

Output file, blocks separated by one blank line: six ``name = value``
header lines (J, K, N, steepest_prob, tolerance, seed); one mutual
information per iteration; the J operators; the K final POVM elements; the
reduced POVM elements.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .errors import CountMismatch, DimensionMismatch, ParseError
from .info import holevo_bound
from .linalg import RNG_ALGORITHM, CMatrix
from .model import Ensemble, Povm
from .optimizer import OptimizerConfig, RunReport

JSON_FORMAT = "povm-ascent/1"

_NUM = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_REAL_RE = re.compile(rf"[+-]?{_NUM}")
_IMAG_RE = re.compile(rf"(?P<sign>[+-]?)(?P<im>{_NUM})?I")
_COMPLEX_RE = re.compile(rf"(?P<re>[+-]?{_NUM})(?P<sign>[+-])(?P<im>{_NUM})?I")

_TOKEN_RE = re.compile(r"(?P<open>\{)|(?P<close>\})|(?P<comma>,)|(?P<entry>[^{},]+)")

HEADER_NAMES = ("N", "J", "K")


@dataclass(frozen=True, eq=False)
class ImportFile:
    """Contents of an import file."""

    dim: int
    num_ops: int
    k_init: int
    ops: tuple[CMatrix, ...]

    def to_ensemble(self) -> Ensemble:
        return Ensemble.from_matrices(self.ops)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------
def parse_complex(token: str) -> complex:
    """Parse one matrix entry such as ``0.6``, ``-3.1-4.5I``, ``0.5I`` or ``-I``.

    Raises:
        ParseError: with the offset of the offending character.
    """
    if not token:
        raise ParseError("empty matrix entry", offset=0)
    lower = token.find("i")
    if lower >= 0:
        raise ParseError(
            f"imaginary unit must be upper-case I in {token!r}", offset=lower
        )
    unit = token.find("I")
    if 0 <= unit < len(token) - 1:
        raise ParseError(
            f"imaginary unit I must be the last character of {token!r}", offset=unit
        )

    if _REAL_RE.fullmatch(token):
        return complex(float(token), 0.0)
    if m := _IMAG_RE.fullmatch(token):
        im = float(m["im"]) if m["im"] else 1.0
        return complex(0.0, -im if m["sign"] == "-" else im)
    if m := _COMPLEX_RE.fullmatch(token):
        im = float(m["im"]) if m["im"] else 1.0
        return complex(float(m["re"]), -im if m["sign"] == "-" else im)
    raise ParseError(f"malformed number {token!r}", offset=0)


def _raw_offset(raw: str, compact_offset: int) -> int:
    """Map an offset in the whitespace-free entry back into the raw text."""
    seen = 0
    for i, ch in enumerate(raw):
        if ch.isspace():
            continue
        if seen == compact_offset:
            return i
        seen += 1
    return len(raw)


_MANTISSA_END = set("0123456789.")


def _check_interior_space(raw: str, start: int, line: int | None) -> None:
    """Reject whitespace inside an entry except around its joining sign or before ``I``.

    ``1 + 2I`` and ``0.5 I`` are accepted; ``1 0`` is two numbers with a
    missing comma and raises.
    """
    body = raw.strip()
    lead = len(raw) - len(raw.lstrip())
    for m in re.finditer(r"\s+", body):
        before = body[m.start() - 1]
        after = body[m.end()]
        ahead = body[: m.start() - 1].rstrip()[-1:]
        if after in "+-" and before in _MANTISSA_END:
            continue
        if before in "+-" and ahead and ahead in _MANTISSA_END:
            continue
        if after == "I" and m.end() == len(body) - 1:
            continue
        raise ParseError(
            "whitespace inside a number (missing ','?)", line=line, offset=start + lead + m.start()
        )


def _parse_entry(raw: str, start: int, line: int | None) -> complex:
    _check_interior_space(raw, start, line)
    try:
        return parse_complex(re.sub(r"\s+", "", raw))
    except ParseError as exc:
        offset = start + _raw_offset(raw, exc.offset or 0)
        raise ParseError(exc.reason, line=line, offset=offset) from None


def parse_matrix(text: str, line: int | None = None) -> CMatrix:
    """Parse ``{{a,b},{c,d}}`` into a square complex matrix.

    Raises:
        ParseError: on unbalanced braces, ragged rows, or a non-square shape.
    """
    tokens = [
        (m.lastgroup, m.group(), m.start())
        for m in _TOKEN_RE.finditer(text)
        if not (m.lastgroup == "entry" and not m.group().strip())
    ]
    pos = 0

    def take(expected: str, what: str) -> tuple[str, int]:
        nonlocal pos
        if pos >= len(tokens):
            raise ParseError(f"unbalanced braces: expected {what}", line=line, offset=len(text))
        kind, value, offset = tokens[pos]
        if kind not in expected.split("|"):
            raise ParseError(f"expected {what}, found {value.strip()!r}", line=line, offset=offset)
        pos += 1
        return kind, offset

    take("open", "'{'")
    rows: list[list[complex]] = []
    while True:
        take("open", "'{' to start a row")
        row: list[complex] = []
        while True:
            _, offset = take("entry", "a matrix entry")
            row.append(_parse_entry(tokens[pos - 1][1], offset, line))
            kind, _ = take("comma|close", "',' or '}'")
            if kind == "close":
                break
        rows.append(row)
        kind, _ = take("comma|close", "',' or '}'")
        if kind == "close":
            break

    if pos < len(tokens):
        raise ParseError("unexpected text after matrix", line=line, offset=tokens[pos][2])
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ParseError("ragged rows: every row needs the same number of entries", line=line)
    if width != len(rows):
        raise ParseError(f"matrix is not square ({len(rows)}x{width})", line=line)
    return np.array(rows, dtype=np.complex128)


def _parse_header(text: str, line: int, name: str) -> int:
    if "=" not in text:
        raise ParseError(f"expected '{name} = <integer>'", line=line, offset=0)
    _, _, value = text.partition("=")
    try:
        number = int(value.strip())
    except ValueError:
        raise ParseError(
            f"expected an integer after '=' for {name}, found {value.strip()!r}",
            line=line,
            offset=text.index("=") + 1,
        ) from None
    if number < 1:
        raise ParseError(f"{name} must be >= 1, got {number}", line=line)
    return number


def parse_import(text: str) -> ImportFile:
    """Parse an import file: three header lines (N, J, K) then J matrix lines.

    Raises:
        ParseError: malformed header or matrix, with its line number.
        CountMismatch: the number of matrix lines differs from J.
        DimensionMismatch: a matrix is not N x N.
    """
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()

    header = []
    for idx, name in enumerate(HEADER_NAMES):
        if idx >= len(lines):
            raise ParseError(f"missing header line for {name}", line=idx + 1)
        header.append(_parse_header(lines[idx], idx + 1, name))
    dim, num_ops, k_init = header

    body = lines[len(HEADER_NAMES):]
    if len(body) != num_ops:
        raise CountMismatch(
            f"header says J = {num_ops} but {len(body)} matrix line(s) follow",
            line=len(HEADER_NAMES) + min(len(body), num_ops) + 1,
        )

    ops = []
    for line_no, line in enumerate(body, len(HEADER_NAMES) + 1):
        m = parse_matrix(line, line=line_no)
        if m.shape[0] != dim:
            raise DimensionMismatch(
                f"line {line_no}: matrix is {m.shape[0]}x{m.shape[1]} but N = {dim}"
            )
        ops.append(m)
    return ImportFile(dim=dim, num_ops=num_ops, k_init=k_init, ops=tuple(ops))


def read_import(path: str | Path) -> ImportFile:
    return parse_import(Path(path).read_text(encoding="ascii"))


# ---------------------------------------------------------------------------
# Writing
# ---------------------------------------------------------------------------
def format_float(x: float) -> str:
    """17 significant digits, enough for an exact double round trip."""
    return f"{x:.16e}"


def format_complex(z: complex) -> str:
    if z.imag == 0:
        return format_float(z.real)
    return f"{format_float(z.real)}{z.imag:+.16e}I"


def format_matrix(m: np.ndarray) -> str:
    rows = (",".join(format_complex(complex(z)) for z in row) for row in m)
    return "{" + ",".join("{" + r + "}" for r in rows) + "}"


def write_import(f: ImportFile) -> str:
    lines = [f"N = {f.dim}", f"J = {f.num_ops}", f"K = {f.k_init}"]
    lines += [format_matrix(m) for m in f.ops]
    return "\n".join(lines) + "\n"


def write_output(report: RunReport, e: Ensemble, cfg: OptimizerConfig) -> str:
    """Render a finished run in the output-file layout."""
    blocks = [
        [
            f"J = {e.num_ops}",
            f"K = {report.k_init}",
            f"N = {e.dim}",
            f"steepest_prob = {cfg.steepest_prob!r}",
            f"tolerance = {cfg.tolerance!r}",
            f"seed = {cfg.seed}",
        ],
        [format_float(mi) for mi in report.mi_trace],
        [format_matrix(op) for op in e.ops],
        [format_matrix(pi) for pi in report.final_povm.elements],
        [format_matrix(pi) for pi in report.reduced_povm.elements],
    ]
    return "\n\n".join("\n".join(block) for block in blocks) + "\n"


# ---------------------------------------------------------------------------
# JSON export
# ---------------------------------------------------------------------------
def _matrix_to_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _matrix_from_json(data: list) -> CMatrix:
    return np.array([[complex(re_, im) for re_, im in row] for row in data], dtype=np.complex128)


def report_to_dict(report: RunReport, e: Ensemble) -> dict[str, Any]:
    """Machine-readable mirror of a run report (schema ``povm-ascent/1``)."""
    return {
        "format": JSON_FORMAT,
        "rng": RNG_ALGORITHM,
        "config": report.config_echo.to_dict(),
        "k_init": report.k_init,
        "ensemble": [_matrix_to_json(op) for op in e.ops],
        "initial_mi": report.initial_mi,
        "mi_trace": list(report.mi_trace),
        "iterations": report.iterations,
        "converged": report.converged,
        "accessible_information": report.accessible_information,
        "holevo_bound": holevo_bound(e),
        "best_restart": report.best_restart,
        "restart_mis": list(report.restart_mis),
        "steepest_steps": report.steepest_steps,
        "final_povm": [_matrix_to_json(pi) for pi in report.final_povm.elements],
        "reduced_povm": [_matrix_to_json(pi) for pi in report.reduced_povm.elements],
    }


def save_json_report(report: RunReport, e: Ensemble, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report_to_dict(report, e), indent=2))


def report_from_dict(data: dict[str, Any]) -> tuple[RunReport, Ensemble]:
    """Rebuild a report and its ensemble from :func:`report_to_dict` output."""
    if data.get("format") != JSON_FORMAT:
        raise ValueError(f"Unsupported report format {data.get('format')!r}")
    ensemble = Ensemble.from_matrices([_matrix_from_json(m) for m in data["ensemble"]])
    report = RunReport(
        mi_trace=list(data["mi_trace"]),
        final_povm=Povm.from_elements([_matrix_from_json(m) for m in data["final_povm"]]),
        reduced_povm=Povm.from_elements([_matrix_from_json(m) for m in data["reduced_povm"]]),
        iterations=data["iterations"],
        converged=data["converged"],
        config_echo=OptimizerConfig.from_dict(data["config"]),
        k_init=data["k_init"],
        initial_mi=data.get("initial_mi", 0.0),
        best_restart=data.get("best_restart", 0),
        restart_mis=list(data.get("restart_mis", [])),
        steepest_steps=data.get("steepest_steps", 0),
    )
    return report, ensemble


def load_json_report(path: str | Path) -> tuple[RunReport, Ensemble]:
    return report_from_dict(json.loads(Path(path).read_text()))
