"""Result files: comma-separated records and two-column plot data.

Every file starts with ``#`` comment lines carrying the run configuration as
JSON, so a run can be audited from its artifacts alone. Floats are written
with ``repr`` (shortest round-trip form).
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Sequence

from .decoders import eps_from_llr
from .montecarlo import MATCHED, FerPoint, FerSurface

FER_COLUMNS = (
    "decoder", "max_iterations", "scalarization", "label",
    "epsilon", "l0", "eps0", "trials", "frame_errors", "fer", "zero_error",
)


def fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def header_lines(meta: dict) -> list[str]:
    lines = []
    for key, value in meta.items():
        lines.append(f"# {key}: {json.dumps(value, sort_keys=True, default=str)}")
    return lines


def read_header(path) -> dict:
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition(": ")
            try:
                meta[key] = json.loads(value)
            except json.JSONDecodeError:
                meta[key] = value
    return meta


def write_table(path, meta: dict, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    buf = io.StringIO()
    for line in header_lines(meta):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    path.write_text(buf.getvalue())
    return path


def write_xy(path, meta: dict, pairs: Iterable[tuple[float, float]]) -> Path:
    """Two whitespace-separated numeric columns after the comment header."""
    path = Path(path)
    lines = header_lines(meta)
    lines += [f"{fmt(float(x))} {fmt(float(y))}" for x, y in pairs]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_xy(path) -> list[tuple[float, float]]:
    out = []
    for line in Path(path).read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        x, y = line.split()
        out.append((float(x), float(y)))
    return out


def fer_rows(surface: FerSurface) -> list[tuple]:
    md = surface.metadata
    family = md.get("decoder", "bp4")
    return [
        (
            family, md.get("max_iterations"), md.get("scalarization"), p.label,
            p.epsilon, p.l0, eps_from_llr(family, p.l0), p.trials, p.frame_errors,
            p.fer, p.zero_error,
        )
        for p in surface.points
    ]


def read_fer_records(path, decoder: str | None = None, max_iterations: int | None = None) -> FerSurface:
    """Load FER records back into a surface, optionally filtering one decoder setup."""
    meta = read_header(path)
    with open(path) as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    if not rows:
        raise ValueError(f"{path}: no FER records")
    missing = set(FER_COLUMNS) - set(rows[0])
    if missing:
        raise ValueError(f"{path}: missing columns {sorted(missing)}")
    if decoder is not None:
        rows = [r for r in rows if r["decoder"] == decoder]
    if max_iterations is not None:
        rows = [r for r in rows if int(r["max_iterations"]) == max_iterations]
    combos = {(r["decoder"], r["max_iterations"], r["scalarization"]) for r in rows}
    if len(combos) != 1:
        raise ValueError(
            f"{path}: expected records for exactly one decoder setup, found {sorted(combos)}; "
            "select one with --decoder and --iters"
        )
    family, iters, mode = combos.pop()
    points = [
        FerPoint(float(r["epsilon"]), float(r["l0"]), int(r["trials"]), int(r["frame_errors"]), r["label"])
        for r in rows
    ]
    meta.update(decoder=family, max_iterations=int(iters), scalarization=mode)
    return FerSurface(points, meta)


def series_filename(code_name: str, family: str, iters: int, label: str, eps0: float | None) -> str:
    if label == MATCHED:
        tag = "match"
    elif eps0 is not None:
        tag = "mismatch_ep0_" + f"{eps0:.6g}".replace(".", "p").replace("-", "m")
    else:
        tag = "l0_" + label.removeprefix("l0=").replace(".", "p").replace("-", "m")
    stem = code_name or "code"
    return f"{stem}_{family.upper()}_iter{iters}_{tag}.txt"
