"""Command-line front end: ``validate``, ``fer`` and ``objective``."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from collections import Counter
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .codes import CodeError, load_code
from .decoders import DecoderConfig, Family, Scalarization, UnsupportedCodeError, llr_from_eps
from .montecarlo import MATCHED, StoppingPolicy, column_label, sweep
from .objective import (
    DEFAULT_SPLIT,
    IncompleteSurfaceError,
    ObjectiveSpec,
    build_report,
    convex_reconstruction,
)
from .results import (
    FER_COLUMNS,
    fer_rows,
    header_lines,
    read_fer_records,
    series_filename,
    write_table,
    write_xy,
)

OUT_ENV = "QLDPC_MISMATCH_OUT"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    code: str = ""
    decoder: str = "bp4"
    iters: list[int] = field(default_factory=lambda: [4])
    eps: list[float] = field(default_factory=list)
    l0: list[str] = field(default_factory=list)
    eps0: list[str] = field(default_factory=list)
    seed: int = 1
    max_trials: int = 10**6
    target_errors: int = 100
    min_trials: int = 10**4
    split: float = DEFAULT_SPLIT
    weights: list[float] | None = None
    scalarization: str = Scalarization.TRACE_WEIGHTED.value
    out: str = ""
    workers: int = 1
    block_size: int = 2048
    count_unconverged: bool = False
    ref_eps0: float | None = 0.10
    delta: float = 0.05
    surface: str = ""

    def policy(self) -> StoppingPolicy:
        return StoppingPolicy(self.max_trials, self.target_errors, min(self.min_trials, self.max_trials))

    def settings(self) -> list[tuple[object, float | None]]:
        """LLR columns as (sweep setting, eps0 used to specify it or None)."""
        out: list[tuple[object, float | None]] = []
        for tok in self.eps0:
            if tok == MATCHED:
                out.append((MATCHED, None))
            else:
                e = float(tok)
                out.append((llr_from_eps(self.decoder, e), e))
        for tok in self.l0:
            out.append((MATCHED, None) if tok == MATCHED else (float(tok), None))
        return out

    def validate(self, need_code: bool = True) -> None:
        if need_code and not self.code:
            raise ConfigError("--code is required")
        if self.decoder not in (f.value for f in Family):
            raise ConfigError(f"unknown decoder {self.decoder!r}")
        if self.scalarization not in (s.value for s in Scalarization):
            raise ConfigError(f"unknown scalarization {self.scalarization!r}")
        if not self.iters or min(self.iters) < 1:
            raise ConfigError("--iters needs positive integers")
        if any(not 0.0 <= e <= 1.0 for e in self.eps):
            raise ConfigError("channel probabilities must lie in [0, 1]")
        try:
            self.policy()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def _token_list(text: str) -> list[str]:
    toks = [t.strip() for t in text.replace(",", " ").split()]
    for t in toks:
        if t != MATCHED:
            float(t)
    return toks


def log_range(text: str) -> list[float]:
    """``lo:hi:count`` log-spaced points, ``count >= 1``."""
    try:
        lo, hi, count = text.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi:count, got {text!r}") from None
    if lo <= 0 or hi <= 0 or count < 1:
        raise argparse.ArgumentTypeError("log range needs positive bounds and count >= 1")
    if count == 1:
        return [lo]
    return [float(v) for v in np.logspace(math.log10(lo), math.log10(hi), count)]


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    p.add_argument("--code", help="code file")
    p.add_argument("--decoder", choices=[f.value for f in Family])
    p.add_argument("--iters", type=lambda s: [int(t) for t in s.replace(",", " ").split()],
                   help="max iterations, e.g. 4 or 4,8")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--eps", type=_float_list, help="channel probabilities, comma separated")
    g.add_argument("--eps-range", type=log_range, dest="eps_range", help="log-spaced lo:hi:count")
    p.add_argument("--l0", type=_token_list, help="initial LLRs (or 'matched'), comma separated")
    p.add_argument("--eps0", type=_token_list,
                   help="assumed probabilities mapped to LLRs (or 'matched'), comma separated")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--max-trials", type=int, dest="max_trials")
    p.add_argument("--target-errors", type=int, dest="target_errors")
    p.add_argument("--min-trials", type=int, dest="min_trials")
    p.add_argument("--split", type=float, help="noise split threshold")
    p.add_argument("--weights", type=_float_list, help="objective weights, one per grid point")
    p.add_argument("--scalarization", choices=[s.value for s in Scalarization])
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./results)")
    p.add_argument("--workers", type=int)
    p.add_argument("--block-size", type=int, dest="block_size")
    p.add_argument("--count-unconverged", action="store_true", default=None,
                   dest="count_unconverged",
                   help="count non-converged frames whose residual is a stabilizer as successes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qldpc-mismatch", description="BP2/BP4 decoding and LLR-mismatch analysis"
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a code file and print its parameters")
    v.add_argument("code_path", nargs="?", help="code file")
    v.add_argument("--code", dest="code_opt")

    f = sub.add_parser("fer", help="FER over an (eps, L0) grid")
    _add_run_options(f)

    o = sub.add_parser("objective", help="aggregated objective over L0")
    _add_run_options(o)
    o.add_argument("--surface", help="existing FER records (fer_records.csv) instead of simulating")
    o.add_argument("--ref-eps0", type=float, dest="ref_eps0", help="reference for delta J (default 0.10)")
    o.add_argument("--delta", type=float, help="stability-region tolerance on J")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        known = {f.name for f in fields(RunConfig)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key, value in data.items():
            setattr(cfg, key, value)
        cfg.eps0 = [str(t) for t in cfg.eps0]
        cfg.l0 = [str(t) for t in cfg.l0]
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            setattr(cfg, f.name, value)
    if getattr(args, "eps_range", None):
        cfg.eps = args.eps_range
    if not cfg.out:
        cfg.out = os.environ.get(OUT_ENV, "results")
    return cfg


# -- commands -------------------------------------------------------------------


def cmd_validate(path: str) -> int:
    code = load_code(path)
    census = Counter(code.row_types)
    margin = code.overcompleteness
    print(f"n={code.n} m={code.m} k={code.k}, margin {margin}")
    print(f"rank={code.rank}")
    print("rows: " + ", ".join(f"{t}={census.get(t, 0)}" for t in ("x-type", "z-type", "mixed")))
    print("orthogonality: ok")
    if margin > 0:
        print("overcomplete: yes")
    return 0


def _run_meta(cfg: RunConfig, **extra) -> dict:
    meta = {"run_config": asdict(cfg), "seed": cfg.seed, "scalarization": cfg.scalarization,
            "version": __version__}
    meta.update(extra)
    return meta


def _run_sweeps(cfg: RunConfig, eps_grid, settings):
    code = load_code(cfg.code)
    policy = cfg.policy()
    sweep_settings = [s for s, _ in settings]
    out = []
    for iters in cfg.iters:
        dec = DecoderConfig(Family(cfg.decoder), iters, 0.0, Scalarization(cfg.scalarization))
        surface = sweep(
            code, eps_grid, sweep_settings, dec, policy, cfg.seed,
            workers=cfg.workers, block_size=cfg.block_size,
            require_convergence=not cfg.count_unconverged,
        )
        out.append((iters, surface))
    return code, out


def cmd_fer(cfg: RunConfig) -> int:
    cfg.validate()
    if not cfg.eps:
        raise ConfigError("--eps or --eps-range is required")
    settings = cfg.settings()
    if not settings:
        raise ConfigError("--l0 or --eps0 is required")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    code, runs = _run_sweeps(cfg, cfg.eps, settings)

    rows = []
    for iters, surface in runs:
        rows += fer_rows(surface)
        for setting, eps0 in settings:
            label = column_label(setting)
            pts = surface.series(label)
            name = series_filename(code.name, cfg.decoder, iters, label, eps0)
            meta = _run_meta(cfg, surface=surface.metadata, series=label, columns=["epsilon", "fer"])
            write_xy(out / name, meta, [(p.epsilon, p.fer) for p in pts])
    write_table(out / "fer_records.csv", _run_meta(cfg, surface=runs[0][1].metadata), FER_COLUMNS, rows)
    for iters, surface in runs:
        for label in surface.labels:
            for p in surface.series(label):
                print(f"iters={iters} {label} eps={p.epsilon!r} fer={p.fer!r} "
                      f"({p.frame_errors}/{p.trials})")
    return 0


def cmd_objective(cfg: RunConfig) -> int:
    cfg.validate(need_code=not cfg.surface)
    if cfg.surface:
        surface = read_fer_records(cfg.surface, decoder=cfg.decoder, max_iterations=cfg.iters[0])
        grid = tuple(cfg.eps) if cfg.eps else tuple(surface.epsilons)
    else:
        if not cfg.eps:
            raise ConfigError("--eps or --eps-range is required")
        settings = [(s, e) for s, e in cfg.settings() if s != MATCHED]
        if not settings:
            raise ConfigError("objective needs a nonempty L0 grid (--l0 or --eps0)")
        cfg.iters = cfg.iters[:1]
        _, runs = _run_sweeps(cfg, cfg.eps, settings)
        surface = runs[0][1]
        grid = tuple(cfg.eps)
    if not surface.l0_values:
        raise ConfigError("objective needs a nonempty L0 grid")
    try:
        spec = ObjectiveSpec(grid, tuple(cfg.weights) if cfg.weights else None, cfg.split)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    report = build_report(surface, spec, family=cfg.decoder, eps0_ref=cfg.ref_eps0, delta=cfg.delta)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = _run_meta(
        cfg, surface=surface.metadata,
        objective={"grid": list(spec.grid), "weights": list(spec.weights),
                   "split": spec.split_threshold, "l0_ref": report.l0_ref},
    )
    columns = ("l0", "eps0", "J", "J_low", "J_high", "mean_low", "mean_high",
               "convex_J", "sd", "delta_J", "floored_eps")
    rows = [
        (r.l0, r.eps0, r.J, r.J_low, r.J_high, _na(r.mean_low), _na(r.mean_high),
         convex_reconstruction(r, spec), r.sd, _na(r.delta_J), " ".join(repr(e) for e in r.floored))
        for r in report.rows
    ]
    write_table(out / "objective_report.csv", meta, columns, rows)
    write_xy(out / "objective_J.txt", meta, [(r.l0, r.J) for r in report.rows])
    write_xy(out / "objective_J_low.txt", meta, [(r.l0, r.J_low) for r in report.rows])
    write_xy(out / "objective_J_high.txt", meta, [(r.l0, r.J_high) for r in report.rows])
    write_xy(out / "objective_band_lo.txt", meta, [(r.l0, r.J - r.sd) for r in report.rows])
    write_xy(out / "objective_band_hi.txt", meta, [(r.l0, r.J + r.sd) for r in report.rows])
    if report.l0_ref is not None:
        write_xy(out / "objective_deltaJ.txt", meta, [(r.l0, r.delta_J) for r in report.rows])
    opt = report.optimum
    summary = [
        f"l0_star {opt.l0!r}",
        f"eps0_star {opt.eps0!r}",
        f"J_star {opt.objective!r}",
        f"region {opt.region[0]!r} {opt.region[1]!r}",
    ]
    (out / "objective_summary.txt").write_text("\n".join(header_lines(meta) + summary) + "\n")
    print(f"L0*={opt.l0!r} eps0*={opt.eps0!r} J*={opt.objective!r} "
          f"region=[{opt.region[0]!r}, {opt.region[1]!r}]")
    return 0


def _na(x):
    return "" if x is None else x


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "validate":
            path = args.code_path or args.code_opt
            if not path:
                parser.error("validate needs a code file")
            return cmd_validate(path)
        cfg = config_from_args(args)
        if args.command == "fer":
            return cmd_fer(cfg)
        return cmd_objective(cfg)
    except (CodeError, ConfigError, UnsupportedCodeError, IncompleteSurfaceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
