"""Pauli frames over GF(4), stored as bit-packed (x, z) integers.

Each qubit carries two bits: I=(0,0), X=(1,0), Z=(0,1), Y=(1,1). Addition in
GF(4)^n is then a plain XOR of the packed words, and the trace inner product
is the parity of ``(a.x & b.z) ^ (a.z & b.x)``. Global phases are never
tracked.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

SYMBOLS = "IXZY"  # indexed by code = x | (z << 1)
_CODE = {"I": 0, "X": 1, "Z": 2, "Y": 3}


class DimensionError(ValueError):
    """Operands have incompatible lengths."""


def symbol_code(symbol: str) -> int:
    try:
        return _CODE[symbol]
    except KeyError:
        raise ValueError(f"not a Pauli symbol: {symbol!r}") from None


def symbol_trace(a: int, b: int) -> int:
    """Trace inner product of two single-qubit codes (0 commute, 1 anticommute)."""
    return ((a & 1) & (b >> 1) ^ (a >> 1) & (b & 1)) & 1


@dataclass(frozen=True)
class PauliVector:
    """Length-``n`` Pauli frame with packed x and z bit masks (bit j = qubit j)."""

    n: int
    x: int = 0
    z: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("PauliVector needs at least one qubit")
        limit = 1 << self.n
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise ValueError("bit masks exceed vector length")

    @classmethod
    def identity(cls, n: int) -> "PauliVector":
        return cls(n)

    @classmethod
    def from_string(cls, text: str) -> "PauliVector":
        return cls.from_codes([symbol_code(c) for c in text.strip()])

    @classmethod
    def from_codes(cls, codes: Iterable[int]) -> "PauliVector":
        codes = [int(c) for c in codes]
        x = z = 0
        for j, c in enumerate(codes):
            if not 0 <= c <= 3:
                raise ValueError(f"invalid symbol code {c}")
            x |= (c & 1) << j
            z |= (c >> 1) << j
        return cls(len(codes), x, z)

    @classmethod
    def from_symplectic(cls, bits: Sequence[int]) -> "PauliVector":
        """Inverse of :meth:`to_symplectic` (x block followed by z block)."""
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.ndim != 1 or bits.size % 2 or bits.size == 0:
            raise DimensionError("symplectic vector must have even, nonzero length")
        n = bits.size // 2
        return cls.from_codes(bits[:n] | (bits[n:] << 1))

    def codes(self) -> np.ndarray:
        j = np.arange(self.n)
        xs = np.array([(self.x >> int(i)) & 1 for i in j], dtype=np.uint8)
        zs = np.array([(self.z >> int(i)) & 1 for i in j], dtype=np.uint8)
        return xs | (zs << 1)

    def to_symplectic(self) -> np.ndarray:
        c = self.codes()
        return np.concatenate([c & 1, c >> 1]).astype(np.uint8)

    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    def __add__(self, other: "PauliVector") -> "PauliVector":
        return pauli_add(self, other)

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, j: int) -> str:
        if not -self.n <= j < self.n:
            raise IndexError(j)
        j %= self.n
        return SYMBOLS[((self.x >> j) & 1) | (((self.z >> j) & 1) << 1)]

    def __str__(self) -> str:
        return "".join(SYMBOLS[c] for c in self.codes())

    def __repr__(self) -> str:
        return f"PauliVector('{self}')"


def _check_lengths(a: PauliVector, b: PauliVector) -> None:
    if a.n != b.n:
        raise DimensionError(f"length mismatch: {a.n} vs {b.n}")


def pauli_add(a: PauliVector, b: PauliVector) -> PauliVector:
    """Componentwise GF(4) sum, i.e. Pauli product modulo phase."""
    _check_lengths(a, b)
    return PauliVector(a.n, a.x ^ b.x, a.z ^ b.z)


def trace_inner_product(a: PauliVector, b: PauliVector) -> int:
    """0 if the two Pauli operators commute, 1 if they anticommute."""
    _check_lengths(a, b)
    return ((a.x & b.z) ^ (a.z & b.x)).bit_count() & 1


def to_symplectic(v: PauliVector) -> np.ndarray:
    return v.to_symplectic()


def from_symplectic(bits: Sequence[int]) -> PauliVector:
    return PauliVector.from_symplectic(bits)


def codes_to_strings(codes: np.ndarray) -> list[str]:
    """Render a (batch, n) array of symbol codes as Pauli strings."""
    table = np.array(list(SYMBOLS))
    return ["".join(row) for row in table[np.atleast_2d(codes)]]
