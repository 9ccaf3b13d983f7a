"""Stabilizer codes with (possibly overcomplete) quaternary check matrices."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import gf2
from .pauli import SYMBOLS, DimensionError, PauliVector, symbol_code

X_TYPE, Z_TYPE, MIXED = "x-type", "z-type", "mixed"


class CodeError(ValueError):
    """Invalid code description: parse failure or violated stabilizer invariant."""


@dataclass(frozen=True)
class BinaryProjections:
    """Binary images of H.

    ``HZ[i, j] = 1`` iff ``H[i, j]`` is X or Y, ``HX[i, j] = 1`` iff it is Z or Y.
    """

    HX: np.ndarray
    HZ: np.ndarray
    row_type: tuple[str, ...]


@dataclass(frozen=True)
class GbCodeSpec:
    """Generalized bicycle code from circulant polynomials a(x), b(x) mod x^ell - 1."""

    ell: int
    a_exponents: tuple[int, ...]
    b_exponents: tuple[int, ...]

    def __post_init__(self):
        if self.ell < 1:
            raise CodeError("ell must be positive")
        for name in ("a_exponents", "b_exponents"):
            exps = tuple(int(e) for e in getattr(self, name))
            if not exps:
                raise CodeError(f"{name} must be nonempty")
            if any(not 0 <= e < self.ell for e in exps):
                raise CodeError(f"{name} must lie in [0, {self.ell})")
            if len(set(exps)) != len(exps):
                raise CodeError(f"{name} has repeated exponents")
            object.__setattr__(self, name, exps)


class StabilizerCode:
    """Quaternary check matrix H (m x n) plus everything derived from it.

    Construction verifies pairwise commutation of the rows; k is always
    computed from the GF(2) rank of the symplectic image. Redundant rows are
    kept as given.
    """

    def __init__(self, checks, name: str = ""):
        H = np.array(checks, dtype=np.uint8)
        if H.ndim != 2 or H.shape[0] == 0 or H.shape[1] == 0:
            raise CodeError("check matrix must be a nonempty 2-D array")
        if H.max() > 3:
            raise CodeError("check matrix entries must be symbol codes 0..3")
        H.setflags(write=False)
        self.H = H
        self.m, self.n = H.shape
        self.name = name
        self.hx = (H & 1).astype(np.uint8)  # x-bits: X or Y
        self.hz = (H >> 1).astype(np.uint8)  # z-bits: Z or Y
        for arr in (self.hx, self.hz):
            arr.setflags(write=False)

        pair = self.first_anticommuting_pair()
        if pair is not None:
            i, j = pair
            raise CodeError(
                f"rows {i} and {j} anticommute: {self.row_string(i)} vs {self.row_string(j)}"
            )
        basis, pivots = gf2.rref(self.symplectic_matrix())
        basis.setflags(write=False)
        self._basis = basis
        self._pivots = pivots
        self.rank = len(pivots)
        self.k = self.n - self.rank

    @classmethod
    def from_strings(cls, rows: Iterable[str], name: str = "") -> "StabilizerCode":
        rows = [r.strip() for r in rows]
        if not rows:
            raise CodeError("no rows given")
        if len({len(r) for r in rows}) != 1:
            raise CodeError("rows have different lengths")
        try:
            H = [[symbol_code(c) for c in r] for r in rows]
        except ValueError as exc:
            raise CodeError(str(exc)) from None
        return cls(H, name=name)

    def symplectic_matrix(self) -> np.ndarray:
        """m x 2n matrix [x-bits | z-bits]."""
        return np.hstack([self.hx, self.hz])

    def row(self, i: int) -> PauliVector:
        return PauliVector.from_codes(self.H[i])

    def row_string(self, i: int) -> str:
        return "".join(SYMBOLS[c] for c in self.H[i])

    def first_anticommuting_pair(self) -> tuple[int, int] | None:
        comm = (self.hx.astype(np.int64) @ self.hz.T.astype(np.int64)) & 1
        comm ^= comm.T
        hits = np.argwhere(np.triu(comm, 1))
        if hits.size == 0:
            return None
        i, j = hits[0]
        return int(i), int(j)

    @cached_property
    def generator_basis(self) -> list[PauliVector]:
        """n - k independent generators spanning the same group as the rows of H."""
        return [PauliVector.from_symplectic(row) for row in self._basis]

    @cached_property
    def check_neighbors(self) -> tuple[tuple[int, ...], ...]:
        """M(i): qubits touched by check i."""
        return tuple(tuple(int(j) for j in np.flatnonzero(r)) for r in self.H)

    @cached_property
    def variable_neighbors(self) -> tuple[tuple[int, ...], ...]:
        """N(j): checks touching qubit j."""
        return tuple(tuple(int(i) for i in np.flatnonzero(c)) for c in self.H.T)

    @property
    def overcompleteness(self) -> int:
        return self.m - (self.n - self.k)

    @cached_property
    def row_types(self) -> tuple[str, ...]:
        out = []
        for xr, zr in zip(self.hx, self.hz):
            if xr.any() and not zr.any():
                out.append(X_TYPE)
            elif zr.any() and not xr.any():
                out.append(Z_TYPE)
            else:
                out.append(MIXED)
        return tuple(out)

    @property
    def pure_type(self) -> bool:
        return MIXED not in self.row_types

    # -- batched kernels -------------------------------------------------

    def syndromes(self, codes: np.ndarray) -> np.ndarray:
        """Syndromes of a (batch, n) array of symbol codes, as (batch, m) uint8."""
        E = np.atleast_2d(codes)
        if E.shape[1] != self.n:
            raise DimensionError(f"error length {E.shape[1]} != n = {self.n}")
        ex = (E & 1).astype(np.float32)
        ez = (E >> 1).astype(np.float32)
        s = ex @ self.hz.T.astype(np.float32) + ez @ self.hx.T.astype(np.float32)
        return (s.astype(np.int64) & 1).astype(np.uint8)

    def contains(self, codes: np.ndarray) -> np.ndarray:
        """Stabilizer-group membership for a (batch, n) array of symbol codes."""
        E = np.atleast_2d(codes)
        if E.shape[1] != self.n:
            raise DimensionError(f"error length {E.shape[1]} != n = {self.n}")
        sym = np.hstack([E & 1, E >> 1]).astype(np.uint8)
        return gf2.in_rowspan(self._basis, self._pivots, sym)

    def __repr__(self) -> str:
        label = f"{self.name} " if self.name else ""
        return f"<StabilizerCode {label}n={self.n} m={self.m} k={self.k}>"


def circulant(ell: int, exponents: Sequence[int]) -> np.ndarray:
    """ell x ell circulant sum_e P^e with P the cyclic shift, P[i, i+1] = 1."""
    C = np.zeros((ell, ell), dtype=np.uint8)
    idx = np.arange(ell)
    for e in exponents:
        C[idx, (idx + e) % ell] ^= 1
    return C


def build_gb_code(spec: GbCodeSpec, name: str = "") -> StabilizerCode:
    """X rows from [A | B], Z rows from [B^T | A^T]; all 2*ell rows retained."""
    A = circulant(spec.ell, spec.a_exponents)
    B = circulant(spec.ell, spec.b_exponents)
    x_rows = np.hstack([A, B])  # X symbol code 1
    z_rows = np.hstack([B.T, A.T]) * 2  # Z symbol code 2
    H = np.vstack([x_rows, z_rows])
    try:
        return StabilizerCode(H, name=name or f"GB(ell={spec.ell})")
    except CodeError as exc:
        raise CodeError(f"GB construction produced an invalid code: {exc}") from exc


def syndrome(code: StabilizerCode, E: PauliVector) -> np.ndarray:
    """s_i = <H_i, E>_tr for every check row."""
    if E.n != code.n:
        raise DimensionError(f"error length {E.n} != n = {code.n}")
    return code.syndromes(E.codes()[None, :])[0]


def is_stabilizer_element(code: StabilizerCode, E: PauliVector) -> bool:
    if E.n != code.n:
        raise DimensionError(f"error length {E.n} != n = {code.n}")
    return bool(code.contains(E.codes()[None, :])[0])


def binary_projections(code: StabilizerCode) -> BinaryProjections:
    return BinaryProjections(HX=code.hz.copy(), HZ=code.hx.copy(), row_type=code.row_types)


def rank_gf2(M) -> int:
    return gf2.rank_gf2(M)


# -- code files ---------------------------------------------------------


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_code(text: str, name: str = "") -> StabilizerCode:
    """Parse the plain-text code format.

    The header may optionally declare ``k <k>``; it is only cross-checked,
    never used. ::

        n <n> m <m>
        rows
        XZZXI
        ...

    or ``gb ell <ell>`` followed by ``a: e1 e2 ...`` and ``b: e1 e2 ...``.
    """
    lines = [s for s in map(_strip, text.splitlines()) if s]
    if not lines:
        raise CodeError("empty code file")
    head = lines[0].split()
    keys = head[0::2]
    if keys not in (["n", "m"], ["n", "m", "k"]) or len(head) % 2:
        raise CodeError(f"bad header {lines[0]!r}; expected 'n <n> m <m>'")
    try:
        declared = {key: int(val) for key, val in zip(head[0::2], head[1::2])}
    except ValueError:
        raise CodeError(f"bad header {lines[0]!r}") from None
    n, m = declared["n"], declared["m"]
    if len(lines) < 2:
        raise CodeError("missing body after header")

    body = lines[1].split()
    if body == ["rows"]:
        rows = [tok for ln in lines[2:] for tok in ln.split()]
        if len(rows) != m:
            raise CodeError(f"header declares m={m} but {len(rows)} rows given")
        code = StabilizerCode.from_strings(rows, name=name)
    elif len(body) == 3 and body[:2] == ["gb", "ell"]:
        ell = int(body[2])
        polys = {}
        for ln in lines[2:]:
            key, _, rest = ln.partition(":")
            if key.strip() not in ("a", "b") or not _:
                raise CodeError(f"bad polynomial line {ln!r}")
            polys[key.strip()] = tuple(int(t) for t in rest.split())
        if set(polys) != {"a", "b"}:
            raise CodeError("gb code needs both 'a:' and 'b:' exponent lines")
        code = build_gb_code(GbCodeSpec(ell, polys["a"], polys["b"]), name=name)
    else:
        raise CodeError(f"expected 'rows' or 'gb ell <ell>', got {lines[1]!r}")

    if (code.n, code.m) != (n, m):
        raise CodeError(f"header declares n={n} m={m} but body gives n={code.n} m={code.m}")
    if "k" in declared and declared["k"] != code.k:
        raise CodeError(f"header declares k={declared['k']} but rank gives k={code.k}")
    return code


def load_code(path) -> StabilizerCode:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise CodeError(f"cannot read {path}: {exc.strerror}") from None
    return parse_code(text, name=path.stem)


def format_code(code: StabilizerCode) -> str:
    lines = [f"n {code.n} m {code.m}", "rows"]
    lines += [code.row_string(i) for i in range(code.m)]
    return "\n".join(lines) + "\n"
