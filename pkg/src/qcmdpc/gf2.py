"""Arithmetic in GF(2)[x]/(x^r + 1).

An r x r binary circulant is identified with the polynomial of its first
column: column j of the circulant is x^j * a(x).  Polynomials are held as
Python ints (bit j = coefficient of x^j), which makes XOR-heavy ring
arithmetic cheap even for r in the tens of thousands.

Bit vectors crossing the API boundary are numpy uint8 arrays of 0/1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class GF2Poly:
    r: int
    value: int = 0

    def __post_init__(self):
        if self.r < 1:
            raise ValueError(f"ring dimension must be positive, got {self.r}")
        object.__setattr__(self, "value", int(self.value))
        if self.value < 0 or self.value >> self.r:
            raise ValueError("coefficients extend beyond x^(r-1)")

    @classmethod
    def from_support(cls, r: int, indices: Iterable[int]) -> "GF2Poly":
        v = 0
        for i in indices:
            i = int(i)
            if not 0 <= i < r:
                raise ValueError(f"index {i} outside [0, {r})")
            v ^= 1 << i
        return cls(r, v)

    @classmethod
    def from_bits(cls, bits) -> "GF2Poly":
        bits = np.asarray(bits, dtype=np.uint8)
        return cls(len(bits), bits_to_int(bits))

    @classmethod
    def one(cls, r: int) -> "GF2Poly":
        return cls(r, 1)

    def bits(self) -> np.ndarray:
        return int_to_bits(self.value, self.r)

    def support(self) -> "SparseSupport":
        return SparseSupport(self.r, tuple(np.flatnonzero(self.bits()).tolist()))

    @property
    def weight(self) -> int:
        return self.value.bit_count()

    def __mul__(self, other: "GF2Poly") -> "GF2Poly":
        return poly_mul_mod(self, other)

    def __add__(self, other: "GF2Poly") -> "GF2Poly":
        _check_same_ring(self.r, other.r)
        return GF2Poly(self.r, self.value ^ other.value)

    __xor__ = __add__


@dataclass(frozen=True)
class SparseSupport:
    """Sorted nonzero positions of an r-bit vector."""

    r: int
    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("support indices must be strictly increasing")
        if idx and (idx[0] < 0 or idx[-1] >= self.r):
            raise ValueError(f"support index outside [0, {self.r})")

    @classmethod
    def from_iterable(cls, r: int, indices: Iterable[int]) -> "SparseSupport":
        return cls(r, tuple(sorted(set(int(i) for i in indices))))

    @property
    def weight(self) -> int:
        return len(self.indices)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def to_poly(self) -> GF2Poly:
        return GF2Poly.from_support(self.r, self.indices)

    def negated(self) -> "SparseSupport":
        """Support of a(x^-1): the first row of the circulant whose first column is self."""
        return SparseSupport.from_iterable(self.r, ((-i) % self.r for i in self.indices))


def bits_to_int(bits: np.ndarray) -> int:
    packed = np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


def int_to_bits(value: int, n: int) -> np.ndarray:
    raw = value.to_bytes((n + 7) // 8, "little")
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")[:n].copy()


def sparse_to_dense(s: SparseSupport) -> np.ndarray:
    out = np.zeros(s.r, dtype=np.uint8)
    out[list(s.indices)] = 1
    return out


def dense_to_sparse(bits) -> SparseSupport:
    bits = np.asarray(bits)
    return SparseSupport(len(bits), tuple(np.flatnonzero(bits).tolist()))


def _check_same_ring(r1: int, r2: int):
    if r1 != r2:
        raise ValueError(f"ring dimension mismatch: {r1} != {r2}")


def _fold(v: int, r: int) -> int:
    # reduce mod x^r + 1: x^(r+k) == x^k
    mask = (1 << r) - 1
    while v >> r:
        v = (v & mask) ^ (v >> r)
    return v


def _clmul(a: int, b: int) -> int:
    """Carry-less product; iterates over the set bits of a."""
    acc = 0
    while a:
        low = a & -a
        acc ^= b << (low.bit_length() - 1)
        a ^= low
    return acc


def poly_mul_mod(a: GF2Poly, b: GF2Poly) -> GF2Poly:
    _check_same_ring(a.r, b.r)
    x, y = a.value, b.value
    if x.bit_count() > y.bit_count():
        x, y = y, x
    return GF2Poly(a.r, _fold(_clmul(x, y), a.r))


def poly_inverse_mod(a: GF2Poly) -> GF2Poly | None:
    """Inverse of ``a`` modulo x^r + 1 by extended Euclid, or None if none exists.

    Even-weight polynomials vanish at x = 1 and are never invertible.
    """
    r = a.r
    u, v = a.value, (1 << r) | 1
    g1, g2 = 1, 0
    # invariant: g1*a == u and g2*a == v (mod x^r + 1)
    while u != 1:
        if u == 0:
            return None
        j = u.bit_length() - v.bit_length()
        if j < 0:
            u, v, g1, g2, j = v, u, g2, g1, -j
        u ^= v << j
        g1 ^= g2 << j
    return GF2Poly(r, _fold(g1, r))


def rotate(value: int, k: int, r: int) -> int:
    """Multiply by x^k mod x^r + 1 (cyclic left rotation of an r-bit int)."""
    k %= r
    if k == 0:
        return value
    mask = (1 << r) - 1
    return ((value << k) & mask) | (value >> (r - k))


def sparse_mul(s: SparseSupport | Sequence[int], value: int, r: int) -> int:
    """Product of a sparse polynomial with a dense one held as an int."""
    acc = 0
    for i in s:
        acc ^= rotate(value, i, r)
    return acc


def syndrome(h_supports: Sequence[SparseSupport], x) -> np.ndarray:
    """x H^T for H = [H_0 | ... | H_{n0-1}], H_i the circulant of h_supports[i].

    Computed as sum_i h_i(x) * x_i(x) mod x^r + 1 using only the sparse supports.
    """
    if not h_supports:
        raise ValueError("need at least one circulant block")
    r = h_supports[0].r
    for s in h_supports:
        _check_same_ring(s.r, r)
    x = np.asarray(x, dtype=np.uint8)
    n0 = len(h_supports)
    if x.shape != (n0 * r,):
        raise ValueError(f"expected a vector of length {n0 * r}, got shape {x.shape}")
    acc = 0
    for i, s in enumerate(h_supports):
        acc ^= sparse_mul(s, bits_to_int(x[i * r:(i + 1) * r]), r)
    return int_to_bits(acc, r)


def cyclic_shift(s: SparseSupport, k: int) -> SparseSupport:
    return SparseSupport.from_iterable(s.r, ((i + k) % s.r for i in s.indices))


def circulant_dense(s: SparseSupport) -> np.ndarray:
    """Dense r x r circulant with first column s.  Test/oracle use only."""
    r = s.r
    rows = np.arange(r)[:, None]
    cols = np.arange(r)[None, :]
    col0 = sparse_to_dense(s)
    return col0[(rows - cols) % r]
