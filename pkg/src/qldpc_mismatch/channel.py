"""I.i.d. depolarizing noise with counter-based, order-independent streams.

Every trial draws from its own Philox4x64 stream: the key is derived from
``(master_seed, epsilon_index)`` through :class:`numpy.random.SeedSequence`
and the counter is ``[0, trial_index, 0, 0]``. A sampled error is therefore a
pure function of ``(master_seed, epsilon_index, trial_index, n, epsilon)``,
whatever order or process the trial runs in.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .pauli import PauliVector

RNG_ALGORITHM = "numpy Philox4x64-10; key=SeedSequence(master_seed, spawn_key=(eps_index,)); counter=[0, trial, 0, 0]"

# symbol codes in threshold order: I, X, Y, Z
_ORDER = np.array([0, 1, 3, 2], dtype=np.uint8)


@dataclass(frozen=True)
class DepolarizingChannel:
    epsilon: float

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"depolarizing probability must be in [0, 1], got {self.epsilon}")

    def thresholds(self) -> np.ndarray:
        eps = self.epsilon
        return np.array([1.0 - eps, 1.0 - 2.0 * eps / 3.0, 1.0 - eps / 3.0])

    def probabilities(self) -> dict[str, float]:
        eps = self.epsilon
        return {"I": 1.0 - eps, "X": eps / 3.0, "Y": eps / 3.0, "Z": eps / 3.0}


@dataclass(frozen=True)
class TrialSeed:
    master_seed: int
    epsilon_index: int
    trial_index: int


@lru_cache(maxsize=256)
def _stream_key(master_seed: int, epsilon_index: int) -> np.ndarray:
    key = np.random.SeedSequence(master_seed, spawn_key=(epsilon_index,)).generate_state(2, np.uint64)
    key.setflags(write=False)
    return key


def trial_uniforms(master_seed: int, epsilon_index: int, trial_index: int, n: int) -> np.ndarray:
    key = _stream_key(int(master_seed), int(epsilon_index))
    counter = np.array([0, trial_index, 0, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key)).random(n)


def uniforms_to_codes(u: np.ndarray, epsilon: float) -> np.ndarray:
    """Map uniforms in [0, 1) to symbol codes through the cumulative thresholds.

    Intervals are half-open, [t_k, t_{k+1}), so u = 0 never yields I when
    epsilon = 1 and every draw yields I when epsilon = 0.
    """
    t = DepolarizingChannel(epsilon).thresholds()
    return _ORDER[np.searchsorted(t, u, side="right")]


def sample_error(ch: DepolarizingChannel, n: int, seed: TrialSeed) -> PauliVector:
    if n < 1:
        raise ValueError("n must be at least 1")
    u = trial_uniforms(seed.master_seed, seed.epsilon_index, seed.trial_index, n)
    return PauliVector.from_codes(uniforms_to_codes(u, ch.epsilon))


def sample_errors(
    epsilon: float, n: int, master_seed: int, epsilon_index: int, trials
) -> np.ndarray:
    """Symbol codes for a batch of trial indices, shape (len(trials), n)."""
    trials = np.asarray(trials, dtype=np.int64)
    u = np.empty((trials.size, n))
    for row, r in enumerate(trials):
        u[row] = trial_uniforms(master_seed, epsilon_index, int(r), n)
    return uniforms_to_codes(u, epsilon)
