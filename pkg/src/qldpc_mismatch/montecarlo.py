"""Frame-error-rate estimation over (epsilon, L0) grids.

Trial ``r`` at grid index ``t`` always sees the error sampled from
``(master_seed, t, r)``, so every L0 column, decoder family and iteration
budget run on the same realizations. Work is split into index-ordered blocks;
each block returns per-trial failure indicators and the stopping rule is
applied to those indicators in trial order, which makes the result
independent of the number of workers.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterator, Sequence, Union

import numpy as np

from . import __version__
from .channel import RNG_ALGORITHM, sample_errors
from .codes import StabilizerCode
from .decoders import DecoderConfig, batch_success, decode_batch, llr_from_eps

MATCHED = "matched"
LlrSetting = Union[float, str]

DEFAULT_BLOCK = 2048


@dataclass(frozen=True)
class StoppingPolicy:
    max_trials: int = 10**6
    target_frame_errors: int = 100
    min_trials: int = 10**4

    def __post_init__(self):
        if self.max_trials < 1:
            raise ValueError("max_trials must be positive")
        if self.target_frame_errors < 1:
            raise ValueError("target_frame_errors must be at least 1")
        if not 0 <= self.min_trials <= self.max_trials:
            raise ValueError("need 0 <= min_trials <= max_trials")


@dataclass(frozen=True)
class FerPoint:
    epsilon: float
    l0: float
    trials: int
    frame_errors: int
    label: str = ""

    def __post_init__(self):
        if not 0 <= self.frame_errors <= self.trials:
            raise ValueError("need 0 <= frame_errors <= trials")

    @property
    def fer(self) -> float:
        return self.frame_errors / self.trials if self.trials else 0.0

    @property
    def zero_error(self) -> bool:
        return self.frame_errors == 0

    def record(self) -> dict:
        d = asdict(self)
        d.update(fer=self.fer, zero_error=self.zero_error)
        return d


@dataclass
class FerSurface:
    points: list[FerPoint]
    metadata: dict = field(default_factory=dict)
    # per-trial failure indicators, keyed by (label, epsilon); only when requested
    indicators: dict = field(default_factory=dict, repr=False)

    def __iter__(self) -> Iterator[FerPoint]:
        return iter(self.points)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def epsilons(self) -> list[float]:
        return sorted({p.epsilon for p in self.points})

    @property
    def l0_values(self) -> list[float]:
        return sorted({p.l0 for p in self.points if p.label != MATCHED})

    @property
    def labels(self) -> list[str]:
        return list(dict.fromkeys(p.label for p in self.points))

    def series(self, label: str) -> list[FerPoint]:
        return sorted((p for p in self.points if p.label == label), key=lambda p: p.epsilon)

    def lookup(self, epsilon: float, l0: float, rel_tol: float = 1e-12) -> FerPoint | None:
        for p in self.points:
            if p.label == MATCHED:
                continue
            if math.isclose(p.epsilon, epsilon, rel_tol=rel_tol, abs_tol=1e-15) and math.isclose(
                p.l0, l0, rel_tol=rel_tol, abs_tol=1e-15
            ):
                return p
        return None


def column_label(setting: LlrSetting) -> str:
    return MATCHED if setting == MATCHED else f"l0={float(setting)!r}"


def resolve_llr(setting: LlrSetting, family, epsilon: float) -> float:
    if setting == MATCHED:
        if not 0.0 < epsilon < 1.0:
            raise ValueError(f"matched initialization undefined at epsilon={epsilon}")
        return llr_from_eps(family, epsilon)
    return float(setting)


# -- per-trial evaluation ----------------------------------------------------


def decoder_failures(
    code: StabilizerCode,
    errors: np.ndarray,
    syndromes: np.ndarray,
    config: DecoderConfig,
    require_convergence: bool = True,
) -> np.ndarray:
    result = decode_batch(code, syndromes, config)
    return ~batch_success(code, errors, result, require_convergence)


Evaluator = Callable[..., np.ndarray]

_WORKER_CODE: StabilizerCode | None = None


def _init_worker(code: StabilizerCode) -> None:
    global _WORKER_CODE
    _WORKER_CODE = code


def _block_failures(
    code: StabilizerCode | None,
    epsilon: float,
    eps_index: int,
    master_seed: int,
    start: int,
    stop: int,
    configs: Sequence[DecoderConfig],
    evaluate: Evaluator,
    require_convergence: bool,
) -> np.ndarray:
    code = code if code is not None else _WORKER_CODE
    errors = sample_errors(epsilon, code.n, master_seed, eps_index, np.arange(start, stop))
    synd = code.syndromes(errors)
    out = np.zeros((len(configs), stop - start), dtype=bool)
    for c, cfg in enumerate(configs):
        out[c] = evaluate(code, errors, synd, cfg, require_convergence)
    return out


# -- sweeps --------------------------------------------------------------------


def _blocks(max_trials: int, block: int):
    for start in range(0, max_trials, block):
        yield start, min(start + block, max_trials)


@contextmanager
def _executor(workers: int, code: StabilizerCode):
    if workers < 1:
        raise ValueError("workers must be positive")
    if workers == 1:
        yield None
        return
    pool = ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(code,))
    try:
        yield pool
    finally:
        pool.shutdown(cancel_futures=True)


class _Tracker:
    """Applies the stopping rule to one column as index-ordered chunks arrive."""

    def __init__(self, policy: StoppingPolicy):
        self.policy = policy
        self.chunks: list[np.ndarray] = []
        self.seen = 0
        self.errors = 0
        self.result: np.ndarray | None = None

    def feed(self, f: np.ndarray) -> None:
        p = self.policy
        cum = self.errors + np.cumsum(f, dtype=np.int64)
        pos = self.seen + 1 + np.arange(f.size)  # 1-based trial counts
        self.chunks.append(f)
        self.seen += f.size
        self.errors = int(cum[-1]) if f.size else self.errors
        hit = np.flatnonzero((pos >= max(p.min_trials, 1)) & (cum >= p.target_frame_errors))
        if hit.size:
            stop = int(pos[hit[0]])
        elif self.seen >= p.max_trials:
            stop = p.max_trials
        else:
            return
        self.result = np.concatenate(self.chunks)[:stop]
        self.chunks = []


def _run_point(
    pool, workers, code, eps, t, master_seed, cols, policy, block_size, evaluate, require_convergence
) -> list[np.ndarray]:
    trackers = [_Tracker(policy) for _ in cols]
    blocks = _blocks(policy.max_trials, block_size)
    window = 2 * workers if pool is not None else 1
    pending: list = []
    active = list(range(len(cols)))
    while active:
        while len(pending) < window:
            span = next(blocks, None)
            if span is None:
                break
            args = (eps, t, master_seed, span[0], span[1], [cols[c] for c in active],
                    evaluate, require_convergence)
            if pool is None:
                pending.append((active, _block_failures(code, *args)))
            else:
                pending.append((active, pool.submit(_block_failures, None, *args)))
        if not pending:
            break
        in_block, res = pending.pop(0)
        res = res if pool is None else res.result()
        for row, c in enumerate(in_block):
            if trackers[c].result is None:
                trackers[c].feed(res[row])
        active = [c for c in range(len(cols)) if trackers[c].result is None]
    for _, fut in pending:
        if pool is not None:
            fut.cancel()
    return [tr.result for tr in trackers]


def sweep(
    code: StabilizerCode,
    eps_grid: Sequence[float],
    l0_grid: Sequence[LlrSetting],
    config: DecoderConfig,
    policy: StoppingPolicy,
    master_seed: int,
    *,
    workers: int = 1,
    block_size: int = DEFAULT_BLOCK,
    require_convergence: bool = True,
    evaluate: Evaluator = decoder_failures,
    keep_indicators: bool = False,
) -> FerSurface:
    """Estimate FER at every (epsilon, L0) pair of the two grids.

    ``l0_grid`` entries are initial LLR values or :data:`MATCHED`, which uses
    the channel's own epsilon at each grid point. ``config`` supplies the
    decoder family, iteration budget and scalarization; its initial LLR is
    replaced per column.
    """
    eps_grid = [float(e) for e in eps_grid]
    l0_grid = list(l0_grid)
    if not eps_grid or not l0_grid:
        raise ValueError("epsilon and L0 grids must be nonempty")
    if block_size < 1:
        raise ValueError("block_size must be positive")

    points: list[FerPoint] = []
    indicators: dict = {}
    with _executor(workers, code) as pool:
        for t, eps in enumerate(eps_grid):
            cols = [config.with_llr(resolve_llr(s, config.family, eps)) for s in l0_grid]
            fails = _run_point(
                pool, workers, code, eps, t, master_seed, cols, policy, block_size,
                evaluate, require_convergence,
            )
            for setting, cfg, f in zip(l0_grid, cols, fails):
                label = column_label(setting)
                points.append(FerPoint(eps, cfg.initial_llr, int(f.size), int(f.sum()), label))
                if keep_indicators:
                    indicators[(label, eps)] = f

    metadata = {
        "code": code.name,
        "n": code.n,
        "m": code.m,
        "k": code.k,
        "decoder": config.family.value,
        "max_iterations": config.max_iterations,
        "scalarization": config.scalarization.value,
        "master_seed": master_seed,
        "rng": RNG_ALGORITHM,
        "policy": asdict(policy),
        "require_convergence": require_convergence,
        "version": __version__,
    }
    return FerSurface(points, metadata, indicators)


def estimate_fer(
    code: StabilizerCode,
    epsilon: float,
    config: DecoderConfig,
    policy: StoppingPolicy,
    master_seed: int,
    *,
    epsilon_index: int = 0,
    workers: int = 1,
    block_size: int = DEFAULT_BLOCK,
    require_convergence: bool = True,
    evaluate: Evaluator = decoder_failures,
) -> FerPoint:
    """One (epsilon, L0) point; ``epsilon_index`` selects the error stream."""
    with _executor(workers, code) as pool:
        (f,) = _run_point(
            pool, workers, code, float(epsilon), epsilon_index, master_seed, [config], policy,
            block_size, evaluate, require_convergence,
        )
    return FerPoint(float(epsilon), config.initial_llr, int(f.size), int(f.sum()))
