"""Plain-text trajectory files, counts CSV and report writers.

Trajectory text holds one step per line: ``N`` opens a new class and
``E <j>`` joins class ``j`` (1-based, discovery order).  Lines starting with
``#`` are comments; a header comment records the parameters and seed.
"""
from __future__ import annotations

import csv
import enum
import io
import json
import re
from dataclasses import asdict, is_dataclass

import numpy as np

from .errors import DiscoveryOrderError, DomainError, ParseError
from .partition import NEW, Abundance, Existing, NewClass, PdpParams, Trajectory

_HEADER = re.compile(r"#\s*pdpdiv trajectory\s+alpha=(\S+)\s+theta=(\S+)(?:\s+seed=(\S+))?")
_STEP = re.compile(r"^(N|E\s+(\S+))$")


def format_trajectory(t: Trajectory) -> str:
    head = f"# pdpdiv trajectory alpha={t.params.alpha!r} theta={t.params.theta!r}"
    if t.seed is not None:
        head += f" seed={t.seed}"
    lines = [head]
    lines += ["N" if isinstance(c, NewClass) else f"E {c.j}" for c in t.steps]
    return "\n".join(lines) + "\n"


def _content_lines(text):
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield number, line


def _header_params(text):
    for raw in text.splitlines():
        m = _HEADER.match(raw.strip())
        if m:
            seed = int(m.group(3)) if m.group(3) is not None else None
            return PdpParams(float(m.group(1)), float(m.group(2))), seed
    return None, None


def parse_steps(text: str):
    """Parse ``N`` / ``E j`` lines into step choices, checking class indexes as it goes."""
    steps, k = [], 0
    for number, line in _content_lines(text):
        m = _STEP.match(line)
        if not m:
            raise ParseError(f"expected 'N' or 'E <j>', got {line!r}", line=number)
        if m.group(2) is None:
            steps.append(NEW)
            k += 1
            continue
        try:
            j = int(m.group(2))
        except ValueError:
            raise ParseError(f"class index must be an integer, got {m.group(2)!r}", line=number) from None
        if not 1 <= j <= k:
            raise ParseError(f"E {j} refers to a class that does not exist yet ({k} classes)", line=number)
        steps.append(Existing(j))
    return steps


def parse_labels(text: str):
    """Turn one species label per line into step choices.

    Arbitrary string labels are numbered by first appearance.  When every
    label is a positive integer the labels must already be in discovery
    order: each unseen label has to equal one more than the largest seen.
    """
    entries = list(_content_lines(text))
    numeric = bool(entries) and all(line.isdigit() for _, line in entries)
    seen, steps = {}, []
    for number, line in entries:
        if line in seen:
            steps.append(Existing(seen[line]))
            continue
        if numeric and int(line) != len(seen) + 1:
            raise DiscoveryOrderError(
                f"label {line} appears before label {len(seen) + 1}; integer labels must be in discovery order",
                line=number,
            )
        seen[line] = len(seen) + 1
        steps.append(NEW)
    return steps


def _looks_like_steps(text):
    return all(_STEP.match(line) for _, line in _content_lines(text))


def parse_trajectory(
    text: str, params: PdpParams | None = None, seed: int | None = None, default: PdpParams | None = None
) -> Trajectory:
    """Parse step tokens or species labels.

    Parameters come from ``params`` if given, else the header, else ``default``.
    """
    head_params, head_seed = _header_params(text)
    params = params or head_params or default
    if params is None:
        raise ParseError("no parameters given and no '# pdpdiv trajectory alpha=.. theta=..' header")
    steps = parse_steps(text) if _looks_like_steps(text) else parse_labels(text)
    if not steps:
        raise ParseError("trajectory is empty")
    return Trajectory(params, tuple(steps), seed if seed is not None else head_seed)


def read_trajectory(path, params: PdpParams | None = None) -> Trajectory:
    with open(path, encoding="utf-8") as fh:
        return parse_trajectory(fh.read(), params)


def parse_counts_csv(text: str) -> Abundance:
    """Read a CSV with a ``count`` column (other columns are ignored)."""
    reader = csv.DictReader(io.StringIO(text))
    fields = [f.strip().lower() for f in (reader.fieldnames or [])]
    if "count" not in fields:
        raise ParseError("counts CSV needs a 'count' column", line=1)
    reader.fieldnames = fields
    counts = []
    for number, row in enumerate(reader, 2):
        raw = (row.get("count") or "").strip()
        try:
            value = int(raw)
        except ValueError:
            raise ParseError(f"count must be an integer, got {raw!r}", line=number) from None
        if value < 1:
            raise ParseError(f"count must be positive, got {value}", line=number)
        counts.append(value)
    return Abundance(tuple(counts))


def parse_counts_list(text: str) -> Abundance:
    """Parse ``5,3,1`` style inline counts."""
    try:
        values = [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise ParseError(f"counts must be comma-separated integers, got {text!r}") from None
    if any(v < 1 for v in values):
        raise ParseError("counts must be positive")
    return Abundance(tuple(values))


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return value


def write_csv(stream, fieldnames, rows) -> None:
    """Write dict rows; floats use 17 significant digits so they round-trip."""
    writer = csv.DictWriter(stream, fieldnames=list(fieldnames), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(row.get(k)) for k in fieldnames})


def to_jsonable(obj):
    """Recursively convert dataclasses and numpy values to plain JSON types."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj


def dump_json(obj) -> str:
    """Serialize a report; NaN or infinite values raise :class:`DomainError`."""
    try:
        return json.dumps(to_jsonable(obj), allow_nan=False, indent=2)
    except ValueError as exc:
        raise DomainError(f"report contains a non-finite value: {exc}") from None


def ingest_observations(lines, params: PdpParams | None = None):
    """Tabulate observation lines (labels or step tokens) into ``(Abundance, Trajectory)``."""
    text = lines if isinstance(lines, str) else "\n".join(lines)
    t = parse_trajectory(text, params or PdpParams(0.0, 1.0))
    return t.abundance(), t
