"""L-parallel row-layered decoding: dynamic identity-block division, the
even/odd RAM U bank layout with its barrel shifter, and memory/cycle models.

Column indices used by the division are those of row 0 of each circulant,
i.e. the negated first-column support of the private key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .keygen import CodeParams, PrivateKey, sample_constrained_support
from .minsum import (
    DecoderConfig,
    DecodeOutcome,
    compressed_row_bits,
    row_columns,
    scale_csd,
)


@dataclass(frozen=True)
class IdentityBlockSchedule:
    """Top-left column of every L x L identity block, per layer and submatrix.

    ``starts[l, k, j]`` is the column (within submatrix k) where the block of
    row-0 support element j begins in layer l.
    """

    r: int
    L: int
    starts: np.ndarray  # (num_layers, n0, w)

    @classmethod
    def from_row_supports(cls, r: int, L: int, row_supports) -> "IdentityBlockSchedule":
        layers = math.ceil(r / L)
        base = np.array([sorted(s) for s in row_supports], dtype=np.int64)  # (n0, w)
        # each layer's starts are the previous layer's plus L, mod r
        starts = (base[None, :, :] + L * np.arange(layers)[:, None, None]) % r
        starts.setflags(write=False)
        return cls(r, L, starts)

    @property
    def num_layers(self) -> int:
        return self.starts.shape[0]

    @property
    def n0(self) -> int:
        return self.starts.shape[1]

    @property
    def w(self) -> int:
        return self.starts.shape[2]

    @property
    def last_layer_rows(self) -> int:
        return self.r - (self.num_layers - 1) * self.L

    def layer_rows(self, layer: int) -> int:
        return self.L if layer < self.num_layers - 1 else self.last_layer_rows

    @property
    def blocks_per_layer(self) -> int:
        return self.n0 * self.w

    def layer(self, l: int) -> list[list[int]]:
        return self.starts[l].tolist()


def dynamic_division(sk: PrivateKey, L: int) -> IdentityBlockSchedule:
    have = sk.constrained_by()
    if L > 1 and have < L:
        raise ValueError(f"key is only constrained by L={have}; an L={L} division "
                         "would produce blocks that are not identities")
    return IdentityBlockSchedule.from_row_supports(
        sk.params.r, L, [s.negated().indices for s in sk.supports])


def block_cells(schedule: IdentityBlockSchedule) -> np.ndarray:
    """(row, global column) of every cell covered by an identity block."""
    r, L = schedule.r, schedule.L
    cells = []
    for l in range(schedule.num_layers):
        rows = schedule.layer_rows(l)
        rho = np.arange(rows)
        for k in range(schedule.n0):
            for a in schedule.starts[l, k]:
                cells.append(np.stack([l * L + rho, k * r + (a + rho) % r], axis=1))
    return np.concatenate(cells)


def validate_layers(schedule: IdentityBlockSchedule) -> bool:
    """True iff no column carries two nonzeros inside any layer (wrap-around included)."""
    r, L = schedule.r, schedule.L
    rho = np.arange(L)
    # (layers, n0, w, L) global columns
    cols = (schedule.starts[..., None] + rho) % r + (np.arange(schedule.n0) * r)[None, :, None, None]
    active = np.ones(L, dtype=bool)
    for l in range(schedule.num_layers):
        if l == schedule.num_layers - 1:
            active = rho < schedule.last_layer_rows
        c = cols[l][..., active].ravel()
        if len(np.unique(c)) != len(c):
            return False
    return True


# -- fixed (straightforward) division statistics --------------------------

@dataclass(frozen=True)
class BlockStats:
    r: int
    w: int
    L: int
    samples: int
    nonzeros: int
    nonzero_blocks: int

    @property
    def mean(self) -> float:
        return self.nonzeros / self.nonzero_blocks


def fixed_block_counts(support, r: int, L: int) -> tuple[int, int]:
    """(nonzero cells, nonzero blocks) over the full L x L tiles of a circulant.

    Tile (a, b) sees diagonal offsets L(a-b) + d for |d| < L, each on L - |d|
    cells, so every tile on the same block diagonal has the same count.
    """
    m = r // L
    ind = np.zeros(r, dtype=np.int64)
    ind[np.asarray(list(support))] = 1
    d = np.arange(-L + 1, L)
    k = np.arange(-(m - 1), m)
    counts = (ind[(L * k[:, None] + d[None, :]) % r] * (L - np.abs(d))).sum(axis=1)
    mult = m - np.abs(k)
    return int((mult * counts).sum()), int((mult * (counts > 0)).sum())


def fixed_division_stats(num_samples: int, r: int, w: int, L: int,
                         rng: np.random.Generator) -> BlockStats:
    """Mean nonzeros per nonzero L x L tile when H_i is cut at fixed multiples of L.

    Samples constrained supports; tiles touching the r mod L edge residue are
    excluded.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    nz = blocks = 0
    for _ in range(num_samples):
        s = sample_constrained_support(r, w, L, rng, method="gaps")
        a, b = fixed_block_counts(s.indices, r, L)
        nz += a
        blocks += b
    return BlockStats(r, w, L, num_samples, nz, blocks)


# -- hardware cost models ------------------------------------------------

@dataclass(frozen=True)
class RamBank:
    name: str
    banks: int
    depth: int
    width: int

    @property
    def total_bits(self) -> int:
        return self.banks * self.depth * self.width


@dataclass(frozen=True)
class MemoryReport:
    rams: tuple[RamBank, ...]

    @property
    def total_bits(self) -> int:
        return sum(b.total_bits for b in self.rams)

    def __getitem__(self, name: str) -> RamBank:
        for b in self.rams:
            if b.name == name:
                return b
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "rams": [dict(name=b.name, banks=b.banks, depth=b.depth, width=b.width,
                          total_bits=b.total_bits) for b in self.rams],
            "total_bits": self.total_bits,
        }


def _index_bits(n0: int, r: int) -> int:
    return math.ceil(math.log2(n0 * r))


def memory_report(params: CodeParams, L: int, q: int, apost_width_bits: int) -> MemoryReport:
    n0, r, w = params.n0, params.r, params.w
    layers = math.ceil(r / L)
    return MemoryReport((
        RamBank("I", 1, n0 * w, _index_bits(n0, r)),
        RamBank("M", 1, layers, L * compressed_row_bits(q, n0, r)),
        RamBank("S", 1, n0 * w * layers, L),
        RamBank("U", 2, n0 * (r // (2 * L)), L * apost_width_bits),
        RamBank("T", L, n0 * w, apost_width_bits),
    ))


@dataclass(frozen=True)
class CycleReport:
    L: int
    clocks_per_iteration_worst: int
    speedup_vs_serial: Fraction

    def to_dict(self) -> dict:
        return {"L": self.L, "clocks_per_iteration_worst": self.clocks_per_iteration_worst,
                "speedup_vs_serial": float(self.speedup_vs_serial)}


def cycle_report(params: CodeParams, L: int) -> CycleReport:
    n0, r, w = params.n0, params.r, params.w
    clocks = n0 * w * math.ceil(r / L)
    return CycleReport(L, clocks, Fraction(n0 * w * r, clocks))


# -- RAM U banking -------------------------------------------------------

@dataclass(frozen=True)
class BankAddress:
    addr_bank1: int
    addr_bank0: int
    rotation: int


def _log2_pow2(L: int) -> int:
    if L < 1 or L & (L - 1):
        raise ValueError(f"bank mapping needs L to be a power of two, got {L}")
    return L.bit_length() - 1


def bank_map(a: int, L: int, n0: int, r: int) -> BankAddress:
    """Addresses of the two RAM U rows holding entries a .. a+L-1, and the shift.

    Even block columns of width L live in bank 0, odd ones in bank 1; one
    address of each bank covers a 2L-aligned pair.
    """
    k = _log2_pow2(L) + 1  # ceil(log2(2L))
    if not 0 <= a < n0 * r:
        raise ValueError(f"column index {a} outside [0, {n0 * r})")
    hi = a >> k
    return BankAddress(hi, hi + ((a >> (k - 1)) & 1), a & ((1 << k) - 1))


def shifter(entries, s: int) -> np.ndarray:
    """Cyclic left rotation by s through log2(2L) conditional power-of-two stages."""
    out = np.asarray(entries).copy()
    n = len(out)
    stages = max(1, math.ceil(math.log2(n)))
    if not 0 <= s < n:
        raise ValueError(f"shift {s} outside [0, {n})")
    for i in range(stages):
        if (s >> i) & 1:
            out = np.concatenate([out[1 << i:], out[:1 << i]])
    return out


def reverse_shifter(entries, s: int) -> np.ndarray:
    n = len(entries)
    return shifter(entries, (n - s) % n)


class ApostMemory:
    """RAM U0/U1 plus the per-submatrix register file for the trailing columns.

    Submatrix k owns bank addresses [k*D, (k+1)*D) with D = r // (2L), covering
    its columns [0, 2LD); the remaining r - 2LD columns sit in registers.  The
    RAM U index of local column c of submatrix k is k*2LD + c.
    """

    def __init__(self, n0: int, r: int, L: int, dtype=np.int64):
        _log2_pow2(L)
        self.n0, self.r, self.L = n0, r, L
        self.D = r // (2 * L)
        self.banked = 2 * L * self.D
        self.bank0 = np.zeros((n0 * self.D, L), dtype=dtype)
        self.bank1 = np.zeros((n0 * self.D, L), dtype=dtype)
        self.regs = np.zeros((n0, r - self.banked), dtype=dtype)

    def load(self, values: np.ndarray):
        v = np.asarray(values).reshape(self.n0, self.r)
        for k in range(self.n0):
            body = v[k, :self.banked].reshape(self.D, 2, self.L)
            self.bank0[k * self.D:(k + 1) * self.D] = body[:, 0]
            self.bank1[k * self.D:(k + 1) * self.D] = body[:, 1]
            self.regs[k] = v[k, self.banked:]

    def dump(self) -> np.ndarray:
        out = np.empty((self.n0, self.r), dtype=self.bank0.dtype)
        for k in range(self.n0):
            sl = slice(k * self.D, (k + 1) * self.D)
            out[k, :self.banked] = np.stack([self.bank0[sl], self.bank1[sl]], axis=1).ravel()
            out[k, self.banked:] = self.regs[k]
        return out.ravel()

    def _aligned(self, k: int, c: int) -> bool:
        # the gather also reads bank 0 one pair ahead when c sits in an odd half
        ahead = (c // self.L) & 1
        return c + self.L <= self.banked and c // (2 * self.L) + ahead < self.D

    def read(self, k: int, c: int) -> np.ndarray:
        """L consecutive values of submatrix k starting at local column c (cyclic)."""
        if self._aligned(k, c):
            ba = bank_map(k * self.banked + c, self.L, self.n0, self.r)
            window = np.concatenate([self.bank0[ba.addr_bank0], self.bank1[ba.addr_bank1]])
            return shifter(window, ba.rotation)[:self.L]
        return np.array([self._get(k, (c + i) % self.r) for i in range(self.L)],
                        dtype=self.bank0.dtype)

    def write(self, k: int, c: int, values: np.ndarray, mask: np.ndarray):
        """Write back lanes where ``mask`` is set (disabled lanes leave memory untouched)."""
        if self._aligned(k, c) and mask.all():
            ba = bank_map(k * self.banked + c, self.L, self.n0, self.r)
            window = np.concatenate([self.bank0[ba.addr_bank0], self.bank1[ba.addr_bank1]])
            rotated = shifter(window, ba.rotation)
            rotated[:self.L] = values
            window = reverse_shifter(rotated, ba.rotation)
            self.bank0[ba.addr_bank0] = window[:self.L]
            self.bank1[ba.addr_bank1] = window[self.L:]
            return
        for i in np.flatnonzero(mask):
            self._set(k, (c + int(i)) % self.r, values[i])

    def _locate(self, k: int, c: int):
        if c >= self.banked:
            return self.regs, (k, c - self.banked)
        bank = self.bank1 if (c // self.L) & 1 else self.bank0
        return bank, (k * self.D + c // (2 * self.L), c % self.L)

    def _get(self, k, c):
        arr, ix = self._locate(k, c)
        return arr[ix]

    def _set(self, k, c, value):
        arr, ix = self._locate(k, c)
        arr[ix] = value


def simulate_parallel_decode(x, sk: PrivateKey, cfg: DecoderConfig, L: int) -> DecodeOutcome:
    """Bit-accurate model of the L-parallel fixed-point row-layered decoder.

    One identity block per clock: L CNU lanes read L consecutive a-posteriori
    values through the bank map and shifter, and the rows of an incomplete
    last layer are masked off.  Slow; intended for cross-checking ``decode``.
    """
    if cfg.schedule != "layered" or cfg.arithmetic != "fixed":
        raise ValueError("the parallel model covers the fixed-point row-layered decoder only")
    p = sk.params
    x = np.asarray(x, dtype=np.uint8)
    sched = dynamic_division(sk, L)
    spec = cfg.precision.resolved(p.w)
    tab = np.array([scale_csd(m, spec.alpha, spec.f, spec.rounding) for m in range(spec.qmax + 1)])
    limit = spec.raw_limit()
    half = (1 << (spec.f - 1)) if spec.f else 0
    cols = row_columns(sk)

    def syn_weight(hard):
        return int(np.bitwise_xor.reduce(hard[cols], axis=1).sum())

    hard = x.copy()
    sw = syn_weight(hard)
    if sw == 0:
        return DecodeOutcome(True, 0, hard, 0)

    mem = ApostMemory(p.n0, p.r, L)
    mem.load(np.where(x == 1, -spec.C, spec.C) << spec.f)
    nb = sched.blocks_per_layer
    layers = sched.num_layers
    # RAM M (compressed rows) and RAM S (v2c signs), one slot per layer and lane
    m_min1 = np.zeros((layers, L), dtype=np.int64)
    m_min2 = np.zeros((layers, L), dtype=np.int64)
    m_idx = np.zeros((layers, L), dtype=np.int64)
    m_s = np.zeros((layers, L), dtype=np.int64)
    ram_s = np.zeros((layers, nb, L), dtype=np.int64)
    lanes = np.arange(L)

    for it in range(1, cfg.imax + 1):
        for l in range(layers):
            mask = lanes < sched.layer_rows(l)
            blocks = [(k, int(sched.starts[l, k, j])) for k in range(p.n0) for j in range(p.w)]
            o1, o2, oi, os_ = m_min1[l], m_min2[l], m_idx[l], m_s[l]
            ram_t = np.empty((nb, L), dtype=np.int64)
            signs = np.empty((nb, L), dtype=np.int64)
            n1 = np.full(L, spec.qmax + 1)
            n2 = np.full(L, spec.qmax + 1)
            ni = np.zeros(L, dtype=np.int64)
            npar = np.zeros(L, dtype=np.int64)
            for b, (k, a) in enumerate(blocks):
                g = mem.read(k, a)
                mag = np.where(oi == b, o2, o1)
                sc = np.where(os_ ^ ram_s[l, b], -tab[mag], tab[mag])
                u = g - sc
                ram_t[b] = u
                s = (u < 0).astype(np.int64)
                signs[b] = s
                m = np.minimum((np.abs(u) + half) >> spec.f, spec.qmax)
                first = m < n1
                second = ~first & (m < n2)
                n2 = np.where(first, n1, np.where(second, m, n2))
                ni = np.where(first, b, ni)
                n1 = np.where(first, m, n1)
                npar ^= s
            for b, (k, a) in enumerate(blocks):
                mag = np.where(ni == b, n2, n1)
                sc = np.where(npar ^ signs[b], -tab[mag], tab[mag])
                g = ram_t[b] + sc
                if np.any(np.abs(g[mask]) > limit):
                    raise OverflowError("a-posteriori overflow in parallel model")
                mem.write(k, a, g, mask)
            ram_s[l] = signs
            m_min1[l], m_min2[l], m_idx[l], m_s[l] = n1, n2, ni, npar
        hard = (mem.dump() < 0).astype(np.uint8)
        sw = syn_weight(hard)
        if sw == 0:
            return DecodeOutcome(True, it, hard, 0)
    return DecodeOutcome(False, cfg.imax, None, sw)
