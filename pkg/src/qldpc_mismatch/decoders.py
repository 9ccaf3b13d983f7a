"""BP2 and BP4 syndrome decoders with scalar edge messages.

Both decoders run a flooding schedule: one iteration is a full check sweep,
a full variable sweep, a hard decision and a syndrome test. The syndrome test
also runs on the initial hard decision, so a zero syndrome (with a positive
initial LLR) returns the identity at iteration 0.

The check update works in the sign / log-magnitude domain with
``phi(x) = -log(tanh(x / 2))`` (its own inverse) and exclusive prefix/suffix
sums along each check, so no ``atanh(+-1)`` is ever evaluated. All messages
and posteriors are clipped to ``[-CLIP, CLIP]``.

The BP4 a-posteriori value for hypothesis W at qubit j is
``Lam_j^W = L_ch + sum of c2v over checks i with <W, H_ij>_tr = 1``; positive
means I is favoured over W. In ``trace-weighted`` mode the variable-to-check
message on an edge with entry h is the log-ratio "commutes with h" vs
"anticommutes with h" computed from the extrinsic Lam values; ``plain`` mode
uses the unweighted sum ``L_ch + sum of other c2v`` for that message.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from typing import Sequence

import numpy as np

from .codes import MIXED, X_TYPE, Z_TYPE, StabilizerCode
from .pauli import PauliVector, symbol_trace

CLIP = 30.0


class Family(str, Enum):
    BP2 = "bp2"
    BP4 = "bp4"


class Scalarization(str, Enum):
    PLAIN = "plain"
    TRACE_WEIGHTED = "trace-weighted"


class UnsupportedCodeError(ValueError):
    """BP2 needs every check row to be purely X-type or purely Z-type."""


# -- LLR initialisation ------------------------------------------------


def _check_eps0(eps0: float) -> None:
    if not 0.0 < eps0 < 1.0:
        raise ValueError(f"assumed depolarizing probability must be in (0, 1), got {eps0}")


def llr_bp2(eps0: float) -> float:
    """ln((1 - 2 eps0/3) / (2 eps0/3)): odds that a qubit commutes with a fixed Pauli."""
    _check_eps0(eps0)
    return math.log((1.0 - 2.0 * eps0 / 3.0) / (2.0 * eps0 / 3.0))


def llr_bp4(eps0: float) -> float:
    """ln((1 - eps0) / (eps0/3)), the same for X, Y and Z."""
    _check_eps0(eps0)
    return math.log((1.0 - eps0) / (eps0 / 3.0))


def _expit_neg(x: float) -> float:
    """1 / (1 + e^x) without overflow."""
    if x >= 0:
        e = math.exp(-x)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(x))


def eps_from_llr(family: Family | str, l0: float) -> float:
    family = Family(family)
    if family is Family.BP2:
        return 1.5 * _expit_neg(l0)
    return _expit_neg(l0 - math.log(3.0))


def llr_from_eps(family: Family | str, eps0: float) -> float:
    return llr_bp2(eps0) if Family(family) is Family.BP2 else llr_bp4(eps0)


# -- scalar message rules ------------------------------------------------


def _phi(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", over="ignore"):
        return np.log1p(2.0 / np.expm1(x))


def check_update(incoming: Sequence[float], syndrome_bit: int) -> float:
    """(-1)^s * 2 atanh(prod tanh(L_k / 2)) over the given V2C messages."""
    L = np.clip(np.asarray(incoming, dtype=float), -CLIP, CLIP)
    total = 0.0
    for v in _phi(np.abs(L)):
        total += v
    mag = float(_phi(np.float64(total)))
    negative = (int(np.count_nonzero(L < 0)) + int(syndrome_bit)) & 1
    return float(np.clip(-mag if negative else mag, -CLIP, CLIP))


def variable_update(l_ch: float, incoming: Sequence[float]) -> float:
    total = l_ch
    for v in incoming:
        total += v
    return float(np.clip(total, -CLIP, CLIP))


# -- configuration and results --------------------------------------------


@dataclass(frozen=True)
class DecoderConfig:
    family: Family
    max_iterations: int
    initial_llr: float
    scalarization: Scalarization = Scalarization.TRACE_WEIGHTED

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "scalarization", Scalarization(self.scalarization))
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if not math.isfinite(self.initial_llr):
            raise ValueError("initial LLR must be finite")

    @classmethod
    def from_eps0(cls, family, eps0: float, max_iterations: int, **kw) -> "DecoderConfig":
        return cls(Family(family), max_iterations, llr_from_eps(family, eps0), **kw)

    @property
    def assumed_epsilon(self) -> float:
        return eps_from_llr(self.family, self.initial_llr)

    def with_llr(self, l0: float) -> "DecoderConfig":
        return replace(self, initial_llr=float(l0))

    def is_matched(self, epsilon: float, tol: float = 1e-12) -> bool:
        return abs(self.assumed_epsilon - epsilon) <= tol


@dataclass(frozen=True)
class DecodeResult:
    estimate: PauliVector
    converged: bool
    iterations_used: int
    success: bool | None = None


@dataclass
class BatchResult:
    """Decoder output for a batch of syndromes; estimates are symbol codes."""

    estimates: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    extra: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.estimates.shape[0]


# -- Tanner graph tables ---------------------------------------------------


class _Graph:
    """Edge-indexed Tanner graph with padded per-check and per-variable tables.

    The padding slot is edge index ``E``; callers append one dummy column to
    their (batch, E) message arrays.
    """

    def __init__(self, entries: np.ndarray):
        m, n = entries.shape
        ec, ev = np.nonzero(entries)
        self.m, self.n, self.E = m, n, ec.size
        self.edge_check = ec
        self.edge_var = ev
        self.edge_sym = entries[ec, ev].astype(np.uint8)
        self.chk_tab, self.chk_valid = self._table(ec, m)
        order = np.lexsort((ec, ev))
        var_tab, var_valid = self._table(ev[order], n)
        if self.E:
            var_tab = np.where(var_valid, order[np.minimum(var_tab, self.E - 1)], self.E)
        self.var_tab = var_tab
        self.var_valid = var_valid
        self.chk_flat = self.chk_tab[self.chk_valid]

    def _table(self, owner: np.ndarray, size: int):
        counts = np.bincount(owner, minlength=size)
        width = max(int(counts.max(initial=0)), 1)
        tab = np.full((size, width), self.E, dtype=np.int64)
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        for node in range(size):
            tab[node, : counts[node]] = np.arange(starts[node], starts[node] + counts[node])
        return tab, tab < self.E


def _check_pass(g: _Graph, v2c: np.ndarray, synd: np.ndarray) -> np.ndarray:
    B = v2c.shape[0]
    mags = np.zeros((B, g.E + 1))
    mags[:, : g.E] = _phi(np.abs(v2c))
    neg = np.zeros((B, g.E + 1), dtype=bool)
    neg[:, : g.E] = v2c < 0
    P = mags[:, g.chk_tab]
    S = neg[:, g.chk_tab]
    dc = P.shape[2]
    pre = np.zeros_like(P)
    suf = np.zeros_like(P)
    spre = np.zeros_like(S)
    ssuf = np.zeros_like(S)
    for k in range(1, dc):
        pre[:, :, k] = pre[:, :, k - 1] + P[:, :, k - 1]
        spre[:, :, k] = spre[:, :, k - 1] ^ S[:, :, k - 1]
    for k in range(dc - 2, -1, -1):
        suf[:, :, k] = suf[:, :, k + 1] + P[:, :, k + 1]
        ssuf[:, :, k] = ssuf[:, :, k + 1] ^ S[:, :, k + 1]
    out = np.minimum(_phi(pre + suf), CLIP)
    flip = spre ^ ssuf ^ synd.astype(bool)[:, :, None]
    out = np.where(flip, -out, out)
    c2v = np.empty((B, g.E))
    c2v[:, g.chk_flat] = out[:, g.chk_valid]
    return c2v


def _gather_var(g: _Graph, c2v: np.ndarray) -> np.ndarray:
    ext = np.zeros((c2v.shape[0], g.E + 1))
    ext[:, : g.E] = c2v
    return ext[:, g.var_tab]


def _ordered_sum(G: np.ndarray, weights: np.ndarray | None = None) -> np.ndarray:
    """Sum over the last axis in fixed slot order."""
    if weights is not None:
        G = G * weights
    total = G[..., 0].copy()
    for k in range(1, G.shape[-1]):
        total += G[..., k]
    return total


# -- binary BP (one projected system) ---------------------------------------


class _BinarySystem:
    def __init__(self, H: np.ndarray):
        self.H = H.astype(np.uint8)
        self.Hf = self.H.T.astype(np.float32)
        self.graph = _Graph(self.H)

    def syndromes(self, bits: np.ndarray) -> np.ndarray:
        return ((bits.astype(np.float32) @ self.Hf).astype(np.int64) & 1).astype(np.uint8)

    def run(self, synd: np.ndarray, l_ch: float, max_iter: int):
        g = self.graph
        B = synd.shape[0]
        bits = np.full((B, g.n), 1 if l_ch < 0 else 0, dtype=np.uint8)
        iters = np.zeros(B, dtype=np.int64)
        converged = np.all(self.syndromes(bits) == synd, axis=1)
        active = np.flatnonzero(~converged)
        if g.E == 0:
            iters[active] = max_iter
            return bits, converged, iters
        v2c = np.full((active.size, g.E), np.clip(l_ch, -CLIP, CLIP))
        for it in range(1, max_iter + 1):
            if active.size == 0:
                break
            s = synd[active]
            c2v = _check_pass(g, v2c, s)
            G = _gather_var(g, c2v)
            total = _ordered_sum(G)
            post = np.clip(l_ch + total, -CLIP, CLIP)
            hard = (post < 0).astype(np.uint8)
            bits[active] = hard
            iters[active] = it
            ok = np.all(self.syndromes(hard) == s, axis=1)
            converged[active[ok]] = True
            keep = ~ok
            v2c = np.clip((l_ch + total)[:, g.edge_var] - c2v, -CLIP, CLIP)[keep]
            active = active[keep]
        return bits, converged, iters


# -- BP4 on the quaternary graph ----------------------------------------------

# hypothesis order X, Y, Z as symbol codes
_HYP = (1, 3, 2)


class _QuaternarySystem:
    def __init__(self, code: StabilizerCode):
        self.code = code
        g = self.graph = _Graph(code.H)
        # anti[w, e] = <W, H_e>_tr for hypothesis w in (X, Y, Z)
        self.anti = np.array(
            [[symbol_trace(w, int(h)) for h in g.edge_sym] for w in _HYP], dtype=np.float64
        )
        anti_ext = np.zeros((3, g.E + 1))
        anti_ext[:, : g.E] = self.anti
        self.anti_var = anti_ext[:, g.var_tab]  # (3, n, dv)
        # per edge: index of the hypothesis equal to the entry, and the two anticommuting ones
        hyp_of = {1: 0, 3: 1, 2: 2}
        self.same = np.array([hyp_of[int(h)] for h in g.edge_sym], dtype=np.int64)
        others = [[w for w in range(3) if w != hyp_of[int(h)]] for h in g.edge_sym]
        self.other = np.array(others, dtype=np.int64).reshape(-1, 2).T  # (2, E)
        self.edge_range = np.arange(g.E)

    def posteriors(self, G: np.ndarray, l_ch: float) -> np.ndarray:
        """Unclipped Lam^W for (X, Y, Z): shape (3, batch, n)."""
        return np.stack([l_ch + _ordered_sum(G, self.anti_var[w]) for w in range(3)])

    def decide(self, lam: np.ndarray) -> np.ndarray:
        lam = np.clip(lam, -CLIP, CLIP)
        best = np.argmin(lam, axis=0)  # first minimum wins: X < Y < Z
        codes = np.array(_HYP, dtype=np.uint8)[best]
        identity = np.all(lam > 0, axis=0)
        return np.where(identity, np.uint8(0), codes)

    def initial_v2c(self, B: int, l_ch: float, mode: Scalarization) -> np.ndarray:
        if mode is Scalarization.PLAIN:
            return np.full((B, self.graph.E), np.clip(l_ch, -CLIP, CLIP))
        lam = np.full((3, B, self.graph.n), l_ch)
        return self._weighted_v2c(lam, np.zeros((B, self.graph.E)))

    def _weighted_v2c(self, lam: np.ndarray, c2v: np.ndarray) -> np.ndarray:
        ev = self.graph.edge_var
        at_edge = lam[:, :, ev]  # (3, B, E)
        ext = at_edge - self.anti[:, None, :] * c2v[None]
        idx = self.edge_range
        same = ext[self.same, :, idx].T
        w1 = ext[self.other[0], :, idx].T
        w2 = ext[self.other[1], :, idx].T
        msg = np.logaddexp(0.0, -same) - np.logaddexp(-w1, -w2)
        return np.clip(msg, -CLIP, CLIP)

    def run(self, synd: np.ndarray, l_ch: float, max_iter: int, mode: Scalarization):
        g = self.graph
        code = self.code
        B = synd.shape[0]
        est = self.decide(np.full((3, B, g.n), l_ch))
        iters = np.zeros(B, dtype=np.int64)
        converged = np.all(code.syndromes(est) == synd, axis=1)
        active = np.flatnonzero(~converged)
        v2c = self.initial_v2c(active.size, l_ch, mode)
        for it in range(1, max_iter + 1):
            if active.size == 0:
                break
            s = synd[active]
            c2v = _check_pass(g, v2c, s)
            G = _gather_var(g, c2v)
            lam = self.posteriors(G, l_ch)
            hard = self.decide(lam)
            est[active] = hard
            iters[active] = it
            ok = np.all(code.syndromes(hard) == s, axis=1)
            converged[active[ok]] = True
            keep = ~ok
            if mode is Scalarization.PLAIN:
                total = _ordered_sum(G)
                v2c = np.clip((l_ch + total)[:, g.edge_var] - c2v, -CLIP, CLIP)[keep]
            else:
                v2c = self._weighted_v2c(lam[:, keep], c2v[keep])
            active = active[keep]
        return est, converged, iters


@lru_cache(maxsize=32)
def _quaternary(code: StabilizerCode) -> _QuaternarySystem:
    return _QuaternarySystem(code)


@lru_cache(maxsize=32)
def _binary_pair(code: StabilizerCode):
    types = np.array(code.row_types)
    if MIXED in code.row_types:
        i = int(np.flatnonzero(types == MIXED)[0])
        raise UnsupportedCodeError(
            f"BP2 needs pure X- or Z-type rows; row {i} ({code.row_string(i)}) is mixed"
        )
    xrows = np.flatnonzero(types == X_TYPE)
    zrows = np.flatnonzero(types == Z_TYPE)
    # x-type rows see the z-components of the error, z-type rows the x-components
    assert not code.hz[xrows].any() and not code.hx[zrows].any()
    return (xrows, _BinarySystem(code.hx[xrows])), (zrows, _BinarySystem(code.hz[zrows]))


def decode_batch(code: StabilizerCode, syndromes: np.ndarray, config: DecoderConfig) -> BatchResult:
    """Decode a (batch, m) array of syndromes."""
    synd = np.atleast_2d(np.asarray(syndromes, dtype=np.uint8))
    if synd.shape[1] != code.m:
        raise ValueError(f"syndrome length {synd.shape[1]} != m = {code.m}")
    l_ch = config.initial_llr
    if config.family is Family.BP4:
        est, conv, iters = _quaternary(code).run(
            synd, l_ch, config.max_iterations, config.scalarization
        )
        return BatchResult(est, conv, iters)

    (xrows, sys_x), (zrows, sys_z) = _binary_pair(code)
    B = synd.shape[0]
    zbits, conv_a, it_a = sys_x.run(synd[:, xrows], l_ch, config.max_iterations)
    xbits, conv_b, it_b = sys_z.run(synd[:, zrows], l_ch, config.max_iterations)
    est = (xbits | (zbits << 1)).astype(np.uint8).reshape(B, code.n)
    return BatchResult(est, conv_a & conv_b, np.maximum(it_a, it_b))


def _single(code: StabilizerCode, syndrome, config: DecoderConfig) -> DecodeResult:
    r = decode_batch(code, np.asarray(syndrome, dtype=np.uint8)[None, :], config)
    return DecodeResult(
        PauliVector.from_codes(r.estimates[0]), bool(r.converged[0]), int(r.iterations[0])
    )


def bp2_decode(code: StabilizerCode, syndrome, config: DecoderConfig) -> DecodeResult:
    return _single(code, syndrome, replace(config, family=Family.BP2))


def bp4_decode(code: StabilizerCode, syndrome, config: DecoderConfig) -> DecodeResult:
    return _single(code, syndrome, replace(config, family=Family.BP4))


def decode(code: StabilizerCode, syndrome, config: DecoderConfig) -> DecodeResult:
    return _single(code, syndrome, config)


def decode_success(
    code: StabilizerCode, E_true: PauliVector, result: DecodeResult, require_convergence: bool = True
) -> bool:
    """Coset-level verdict: the residual estimate + E_true must be a stabilizer."""
    if require_convergence and not result.converged:
        return False
    residual = result.estimate + E_true
    return bool(code.contains(residual.codes()[None, :])[0])


def batch_success(
    code: StabilizerCode, errors: np.ndarray, result: BatchResult, require_convergence: bool = True
) -> np.ndarray:
    ok = code.contains(errors ^ result.estimates)
    if require_convergence:
        ok &= result.converged
    return ok
