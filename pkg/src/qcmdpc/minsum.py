"""Scaled Min-Sum decoding of QC-MDPC codes.

Two schedules are provided: sliced message passing (all messages refreshed at
the end of an iteration) and row-layered (each row's c2v messages feed the
a-posteriori values immediately).  Each runs either on bit-accurate
sign-magnitude fixed point or on a full-precision reference in which the
a-posteriori values and scaled c2v messages are never rounded.

Fixed-point a-posteriori values are held as integers counting units of
2^-f ("raw" values).  v2c and c2v messages are always q-bit integer
magnitudes plus a sign.

The scalar helpers below (``scale_csd``, ``layered_v2c``, ``cnu_compress`` ...)
are the per-message building blocks; ``decode`` runs the same arithmetic in
compiled kernels.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels
from .keygen import PrivateKey

CSD_DIGITS = 6  # fractional digits available to a scalar
_CSD_LITERAL = re.compile(r"[+-]?2\^-\d+([+-]2\^-\d+)?")


@dataclass(frozen=True, order=True)
class ScalarCSD:
    """Scalar with at most two signed power-of-two digits: sum(sign * 2^-shift)."""

    terms: tuple[tuple[int, int], ...]

    def __post_init__(self):
        terms = tuple((int(s), int(k)) for s, k in self.terms)
        object.__setattr__(self, "terms", terms)
        if not 1 <= len(terms) <= 2:
            raise ValueError("a CSD scalar has one or two nonzero digits")
        for s, k in terms:
            if s not in (1, -1) or not 1 <= k <= CSD_DIGITS:
                raise ValueError(f"bad CSD digit {(s, k)}")
        if len(terms) == 2 and terms[0][1] == terms[1][1]:
            raise ValueError("CSD digits must sit at distinct positions")
        if not 0 < self.value < 1:
            raise ValueError(f"scalar value {self.value} outside (0, 1)")

    @property
    def value(self) -> Fraction:
        return sum((Fraction(s, 1 << k) for s, k in self.terms), Fraction(0))

    @property
    def numerator(self) -> int:
        """Value in units of 2^-6."""
        return sum(s << (CSD_DIGITS - k) for s, k in self.terms)

    @classmethod
    def parse(cls, text: str) -> "ScalarCSD":
        """Parse literals such as ``+2^-2-2^-5`` or ``2^-3``."""
        s = text.replace(" ", "")
        if not _CSD_LITERAL.fullmatch(s):
            raise ValueError(f"not a CSD literal: {text!r}")
        digits = re.findall(r"([+-]?)2\^-(\d+)", s)
        return cls(tuple((-1 if sg == "-" else 1, int(k)) for sg, k in digits))

    def __str__(self) -> str:
        return "".join(f"{'+' if s > 0 else '-'}2^-{k}" for s, k in self.terms)

    def __float__(self) -> float:
        return float(self.value)


def csd_candidates() -> list[ScalarCSD]:
    """Every distinct scalar in (0, 1) with <= 2 nonzero digits in 6 fractional places.

    When two literals share a value the one with fewer digits is kept.
    """
    seen: dict[Fraction, ScalarCSD] = {}
    singles = [ScalarCSD(((1, k),)) for k in range(1, CSD_DIGITS + 1)]
    for c in singles:
        seen[c.value] = c
    for a in range(1, CSD_DIGITS + 1):
        for b in range(a + 1, CSD_DIGITS + 1):
            for sb in (1, -1):
                c = ScalarCSD(((1, a), (sb, b)))
                seen.setdefault(c.value, c)
    return sorted(seen.values(), key=lambda c: c.value)


def derive_p_int(alpha_max, w: int, q: int) -> int:
    """Integer magnitude bits that keep the a-posteriori values from overflowing."""
    alpha_max = Fraction(alpha_max)
    if not alpha_max < 1:
        raise ValueError("alpha_max must be < 1")
    qmax = (1 << q) - 1
    bound = alpha_max * w * qmax + qmax
    p = 0
    while (1 << p) < bound:
        p += 1
    return p


@dataclass(frozen=True)
class FixedPointSpec:
    """Finite-precision parameters.

    q: magnitude bits of v2c/c2v messages; C: channel magnitude; alpha: scalar;
    f: fractional bits kept in scaled c2v and a-posteriori values; p_int:
    integer magnitude bits of a-posteriori values (None = derive from w).
    """

    q: int = 4
    C: int = 9
    alpha: ScalarCSD = field(default_factory=lambda: ScalarCSD(((1, 2), (-1, 5))))
    f: int = 2
    p_int: int | None = None
    rounding: str = "round"

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be >= 1")
        if not 0 <= self.C <= (1 << self.q) - 1:
            raise ValueError(f"C={self.C} not representable in {self.q} magnitude bits")
        if not 0 <= self.f <= CSD_DIGITS:
            raise ValueError(f"fractional bits must be in [0, {CSD_DIGITS}]")
        if self.rounding not in ("round", "truncate"):
            raise ValueError("rounding must be 'round' or 'truncate'")

    @property
    def qmax(self) -> int:
        return (1 << self.q) - 1

    def resolved(self, w: int) -> "FixedPointSpec":
        if self.p_int is not None:
            return self
        return replace(self, p_int=derive_p_int(self.alpha.value, w, self.q))

    def apost_width(self, w: int) -> int:
        """Stored a-posteriori width: integer bits + fractional bits + sign."""
        return self.resolved(w).p_int + self.f + 1

    def raw_limit(self) -> int:
        """Largest raw a-posteriori magnitude representable with p_int + f bits."""
        if self.p_int is None:
            raise ValueError("p_int unresolved; call resolved(w) first")
        return (1 << (self.p_int + self.f)) - 1


SCHEDULES = ("layered", "sliced")
ARITHMETIC = ("fixed", "float")


@dataclass(frozen=True)
class DecoderConfig:
    schedule: str = "layered"
    arithmetic: str = "fixed"
    precision: FixedPointSpec = field(default_factory=FixedPointSpec)
    layer_rows: int = 1
    imax: int = 30

    def __post_init__(self):
        sched = "layered" if self.schedule == "row_layered" else self.schedule
        object.__setattr__(self, "schedule", sched)
        if sched not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}, got {self.schedule!r}")
        if self.arithmetic not in ARITHMETIC:
            raise ValueError(f"arithmetic must be one of {ARITHMETIC}, got {self.arithmetic!r}")
        if self.layer_rows < 1:
            raise ValueError("layer_rows must be >= 1")
        if self.imax < 0:
            raise ValueError("imax must be >= 0")


@dataclass
class DecodeOutcome:
    success: bool
    iterations: int
    codeword: np.ndarray | None
    final_syndrome_weight: int


class CompressedRowState(NamedTuple):
    min1: int
    min2: int
    idx: int
    s: int


class V2C(NamedTuple):
    full: object  # a-posteriori minus old scaled c2v, before quantization
    sign: int
    mag: int


def compressed_row_bits(q: int, n0: int, r: int) -> int:
    return 2 * q + 1 + math.ceil(math.log2(n0 * r))


# -- per-message building blocks ------------------------------------------

def scale_csd(value: int, alpha: ScalarCSD, f: int, mode: str = "round") -> int:
    """alpha * value, returned in units of 2^-f.

    The product is formed exactly (alpha has 6 fractional digits) and its
    magnitude is then rounded half away from zero, or truncated, to f bits.
    """
    mag = abs(value) * alpha.numerator  # units of 2^-6
    shift = CSD_DIGITS - f
    if shift > 0:
        if mode == "round":
            mag = (mag + (1 << (shift - 1))) >> shift
        elif mode == "truncate":
            mag >>= shift
        else:
            raise ValueError(f"unknown rounding mode {mode!r}")
    return -mag if value < 0 else mag


def quantize_message(u, spec: FixedPointSpec, exact: bool = False) -> tuple[int, int]:
    """(sign, magnitude) of a v2c message: round to integer, saturate to 2^q - 1."""
    sign = 1 if u < 0 else 0
    a = abs(u)
    if exact:
        mag = math.floor(a + Fraction(1, 2))
    elif spec.f:
        mag = (a + (1 << (spec.f - 1))) >> spec.f
    else:
        mag = a
    return sign, min(int(mag), spec.qmax)


def layered_v2c(gamma_tilde, v_prev: int, spec: FixedPointSpec, *, exact: bool = False) -> V2C:
    """v2c message of one edge in row-layered decoding.

    Fixed point: ``gamma_tilde`` is raw (units of 2^-f).  With ``exact=True``
    it is an ordinary number and the scaled c2v is alpha * v_prev unrounded.
    """
    if exact:
        full = gamma_tilde - spec.alpha.value * v_prev
        if isinstance(gamma_tilde, float):
            full = float(full)
    else:
        full = gamma_tilde - scale_csd(v_prev, spec.alpha, spec.f, spec.rounding)
    sign, mag = quantize_message(full, spec, exact)
    return V2C(full, sign, mag)


def layered_posteriori_update(gamma_tilde, v_prev: int, v_new: int, spec: FixedPointSpec,
                              *, exact: bool = False):
    """gamma_tilde - alpha*v_prev + alpha*v_new; fixed point asserts it fits p_int + f bits."""
    if exact:
        out = gamma_tilde + spec.alpha.value * (v_new - v_prev)
        return float(out) if isinstance(gamma_tilde, float) else out
    out = (gamma_tilde - scale_csd(v_prev, spec.alpha, spec.f, spec.rounding)
           + scale_csd(v_new, spec.alpha, spec.f, spec.rounding))
    if spec.p_int is not None and abs(out) > spec.raw_limit():
        raise OverflowError(f"a-posteriori value {out} exceeds {spec.p_int}+{spec.f} bits")
    return out


def cnu_compress(mags: Sequence[int], signs: Sequence[int],
                 columns: Sequence[int] | None = None) -> CompressedRowState:
    """Two smallest magnitudes, position of the smallest (first on ties), sign parity."""
    if len(mags) == 0:
        raise ValueError("check node has no incoming messages")
    if len(signs) != len(mags):
        raise ValueError("mags and signs differ in length")
    m1 = m2 = None
    pos = 0
    parity = 0
    for e, (m, s) in enumerate(zip(mags, signs)):
        parity ^= int(s) & 1
        if m1 is None or m < m1:
            m2, m1, pos = m1, m, e
        elif m2 is None or m < m2:
            m2 = m
    if m2 is None:
        m2 = m1
    idx = pos if columns is None else columns[pos]
    return CompressedRowState(int(m1), int(m2), int(idx), parity)


def cnu_expand(state: CompressedRowState, column: int, u_sign: int) -> int:
    """Signed c2v message towards ``column``."""
    mag = state.min2 if column == state.idx else state.min1
    return -mag if (state.s ^ u_sign) else mag


# -- full decoder -----------------------------------------------------------

def row_columns(sk: PrivateKey) -> np.ndarray:
    """Global column indices of each row's nonzeros, shape (r, n0*w).

    Row i of submatrix k holds (c + i) mod r for every c in the sorted row-0
    support of block k; that order is the edge order inside a row.
    """
    return _row_columns_cached(sk.params.r, tuple(s.negated().indices for s in sk.supports))


@lru_cache(maxsize=8)
def _row_columns_cached(r: int, row0: tuple[tuple[int, ...], ...]) -> np.ndarray:
    i = np.arange(r, dtype=np.int64)[:, None]
    blocks = [k * r + (np.asarray(c, dtype=np.int64)[None, :] + i) % r for k, c in enumerate(row0)]
    out = np.ascontiguousarray(np.concatenate(blocks, axis=1))
    out.setflags(write=False)
    return out


def _check_layers(sk: PrivateKey, cfg: DecoderConfig):
    if cfg.layer_rows > 1 and sk.constrained_by() < cfg.layer_rows:
        raise ValueError(f"layers of {cfg.layer_rows} rows need a key constrained by "
                         f"L >= {cfg.layer_rows}; this key only satisfies L = {sk.constrained_by()}")


def decode(x, sk: PrivateKey, cfg: DecoderConfig) -> DecodeOutcome:
    p = sk.params
    x = np.asarray(x, dtype=np.uint8)
    if x.shape != (p.n,):
        raise ValueError(f"input must have length {p.n}, got shape {x.shape}")
    _check_layers(sk, cfg)
    cols = row_columns(sk)
    spec = cfg.precision.resolved(p.w)
    num = spec.alpha.numerator
    rnd = spec.rounding == "round"
    if cfg.schedule == "layered":
        if cfg.arithmetic == "fixed":
            tab = np.array([scale_csd(m, spec.alpha, spec.f, spec.rounding)
                            for m in range(spec.qmax + 1)], dtype=np.int64)
            status, iters, hard, sw = _kernels.layered_fixed(
                x, cols, spec.C << spec.f, tab, spec.f, spec.qmax, spec.raw_limit(), cfg.imax)
        else:
            status, iters, hard, sw = _kernels.layered_float(
                x, cols, float(spec.C), float(spec.alpha.value), spec.qmax, cfg.imax)
    else:
        if cfg.arithmetic == "fixed":
            status, iters, hard, sw = _kernels.sliced_fixed(
                x, cols, spec.C, num, spec.f, rnd, spec.qmax, cfg.imax)
        else:
            status, iters, hard, sw = _kernels.sliced_float(
                x, cols, float(spec.C), float(spec.alpha.value), spec.qmax, cfg.imax)
    if status < 0:
        raise OverflowError(f"a-posteriori value overflowed {spec.p_int}+{spec.f} bits; "
                            "p_int is too small for this scalar and column weight")
    ok = status == 1
    return DecodeOutcome(ok, int(iters), hard if ok else None, int(sw))
