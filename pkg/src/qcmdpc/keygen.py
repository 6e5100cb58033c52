"""Private/public key generation with the circular-distance constraint."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gf2 import GF2Poly, SparseSupport, poly_inverse_mod, poly_mul_mod
from .stats import wilson_interval

MAX_INVERSION_ATTEMPTS = 100

# security level -> n0 -> (r, w, t)
PARAMETER_SETS = {
    80: {2: (4801, 45, 84), 3: (3593, 51, 53), 4: (3079, 55, 42)},
    128: {2: (9857, 71, 134), 3: (7433, 81, 85), 4: (6803, 85, 68)},
    256: {2: (32771, 137, 264), 3: (22531, 155, 167), 4: (20483, 161, 137)},
}


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % p for p in range(2, math.isqrt(n) + 1))


@dataclass(frozen=True)
class CodeParams:
    n0: int
    r: int
    w: int
    t: int
    L: int = 1

    def __post_init__(self):
        if self.n0 not in (2, 3, 4):
            raise ValueError(f"n0 must be 2, 3 or 4, got {self.n0}")
        if not _is_prime(self.r):
            raise ValueError(f"r must be prime, got {self.r}")
        if not 0 < self.w < self.r:
            raise ValueError(f"need 0 < w < r, got w={self.w}")
        if not 0 <= self.t < self.n0 * self.r:
            raise ValueError(f"need 0 <= t < n0*r, got t={self.t}")
        if self.L < 1:
            raise ValueError(f"L must be >= 1, got {self.L}")
        if self.w * self.L > self.r:
            raise ValueError(f"w*L = {self.w * self.L} exceeds r = {self.r}: no support can satisfy the constraint")

    @property
    def n(self) -> int:
        return self.n0 * self.r

    @property
    def k(self) -> int:
        return (self.n0 - 1) * self.r

    def with_(self, **changes) -> "CodeParams":
        fields = dict(n0=self.n0, r=self.r, w=self.w, t=self.t, L=self.L)
        fields.update(changes)
        return CodeParams(**fields)


@dataclass(frozen=True)
class PrivateKey:
    params: CodeParams
    supports: tuple[SparseSupport, ...]

    def __post_init__(self):
        p = self.params
        object.__setattr__(self, "supports", tuple(self.supports))
        if len(self.supports) != p.n0:
            raise ValueError(f"expected {p.n0} supports, got {len(self.supports)}")
        for i, s in enumerate(self.supports):
            if s.r != p.r or s.weight != p.w:
                raise ValueError(f"support {i} has r={s.r}, weight={s.weight}; expected r={p.r}, weight={p.w}")
            if not check_constraint(s, p.L):
                raise ValueError(f"support {i} is not constrained by L={p.L}")

    def constrained_by(self) -> int:
        """Largest L this key satisfies (min pairwise circular distance over all blocks)."""
        return min(min_circular_distance(s) for s in self.supports)


@dataclass(frozen=True)
class PublicKey:
    params: CodeParams
    b_cols: tuple[GF2Poly, ...]

    def __post_init__(self):
        object.__setattr__(self, "b_cols", tuple(self.b_cols))
        if len(self.b_cols) != self.params.n0 - 1:
            raise ValueError(f"expected {self.params.n0 - 1} public blocks")
        if any(b.r != self.params.r for b in self.b_cols):
            raise ValueError("public block length differs from r")


def circular_distance(i: int, j: int, r: int) -> int:
    if not (0 <= i < r and 0 <= j < r):
        raise ValueError(f"indices ({i}, {j}) outside [0, {r})")
    d = abs(i - j)
    return min(d, r - d)


def min_circular_distance(s: SparseSupport) -> int:
    """Smallest circular distance over all pairs; r // 2 + 1 when there are no pairs."""
    if s.weight < 2:
        return s.r // 2 + 1
    idx = np.asarray(s.indices)
    gaps = np.diff(np.append(idx, idx[0] + s.r))
    g = int(gaps.min())
    return min(g, s.r - g)


def check_constraint(s: SparseSupport, L: int) -> bool:
    if s.weight <= 1 or L <= 1:
        return True
    return min_circular_distance(s) >= L


def _min_gaps(rows: np.ndarray, r: int) -> np.ndarray:
    """Minimum cyclic gap per row of sorted index rows (0 flags a repeated index)."""
    gaps = np.diff(rows, axis=1, append=rows[:, :1] + r)
    return gaps.min(axis=1)


def sample_min_gaps(r: int, w: int, num_samples: int, rng: np.random.Generator,
                    batch: int = 1 << 16) -> np.ndarray:
    """Min pairwise circular distance of ``num_samples`` uniform weight-w supports.

    Draws w i.i.d. indices per row and discards rows with a repeat, which leaves
    rows uniform over w-subsets.
    """
    out = np.empty(num_samples, dtype=np.int64)
    filled = 0
    while filled < num_samples:
        rows = np.sort(rng.integers(0, r, size=(batch, w)), axis=1)
        g = _min_gaps(rows, r)
        g = g[g > 0]
        take = min(len(g), num_samples - filled)
        out[filled:filled + take] = g[:take]
        filled += take
    return out


def _sample_rejection(r, w, L, rng):
    batch = 64
    while True:
        rows = np.sort(rng.integers(0, r, size=(batch, w)), axis=1)
        ok = np.flatnonzero(_min_gaps(rows, r) >= max(L, 1))
        if len(ok):
            return SparseSupport(r, tuple(rows[ok[0]].tolist()))
        batch = min(batch * 2, 1 << 16)


def _sample_gaps(r, w, L, rng):
    # Gaps g_i = L + y_i with y a uniform composition of r - wL into w parts,
    # then a uniform rotation.  Every constrained set arises from exactly w
    # (composition, rotation) pairs, one per choice of starting element, so the
    # result is uniform over constrained sets.
    slack = r - w * L
    cuts = np.sort(rng.choice(slack + w - 1, size=w - 1, replace=False))
    parts = np.diff(np.concatenate(([-1], cuts, [slack + w - 1]))) - 1
    gaps = parts + L
    offset = int(rng.integers(r))
    pos = (offset + np.concatenate(([0], np.cumsum(gaps[:-1])))) % r
    return SparseSupport.from_iterable(r, pos.tolist())


def sample_constrained_support(r: int, w: int, L: int, rng: np.random.Generator,
                               method: str = "rejection") -> SparseSupport:
    """Uniform weight-w support whose pairwise circular distances are all >= L.

    ``method="rejection"`` draws uniform supports until one passes;
    ``method="gaps"`` builds one directly from cyclic gaps, which is far faster
    when the constrained fraction is tiny (e.g. L=32 at r=4801, w=45).
    """
    if w * max(L, 1) > r:
        raise ValueError(f"infeasible: w*L = {w * L} > r = {r}")
    if method == "rejection":
        return _sample_rejection(r, w, L, rng)
    if method == "gaps":
        if w == 1 or L <= 1:
            return _sample_rejection(r, w, L, rng)
        return _sample_gaps(r, w, L, rng)
    raise ValueError(f"unknown sampling method {method!r}")


def public_key_from_private(sk: PrivateKey) -> PublicKey:
    last = sk.supports[-1].to_poly()
    inv = poly_inverse_mod(last)
    if inv is None:
        raise ValueError("last private block is not invertible")
    return PublicKey(sk.params, tuple(poly_mul_mod(inv, s.to_poly()) for s in sk.supports[:-1]))


def generate_keypair(params: CodeParams, rng: np.random.Generator,
                     method: str = "rejection") -> tuple[PrivateKey, PublicKey]:
    p = params
    supports = [sample_constrained_support(p.r, p.w, p.L, rng, method) for _ in range(p.n0 - 1)]
    for _ in range(MAX_INVERSION_ATTEMPTS):
        last = sample_constrained_support(p.r, p.w, p.L, rng, method)
        inv = poly_inverse_mod(last.to_poly())
        if inv is not None:
            break
    else:
        raise RuntimeError(f"no invertible last block after {MAX_INVERSION_ATTEMPTS} attempts "
                           f"(w={p.w}; even weights are never invertible)")
    sk = PrivateKey(p, tuple(supports) + (last,))
    pk = PublicKey(p, tuple(poly_mul_mod(inv, s.to_poly()) for s in supports))
    return sk, pk


@dataclass(frozen=True)
class KeyspaceEstimate:
    r: int
    w: int
    L: int
    samples: int
    passed: int
    interval: tuple[float, float]

    @property
    def fraction(self) -> float:
        return self.passed / self.samples

    def log2_keys(self, n0: int) -> float:
        """log2 of (fraction * C(r, w))^n0; -inf when nothing passed."""
        if self.passed == 0:
            return float("-inf")
        return n0 * (math.log2(self.fraction) + math.log2(math.comb(self.r, self.w)))


def estimate_keyspace_fraction(r: int, w: int, L: int, num_samples: int,
                               rng: np.random.Generator) -> KeyspaceEstimate:
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    return keyspace_from_min_gaps(r, w, L, sample_min_gaps(r, w, num_samples, rng))


def keyspace_from_min_gaps(r: int, w: int, L: int, min_gaps: np.ndarray) -> KeyspaceEstimate:
    """Evaluate one L against a shared sample set (so fractions are comparable across L)."""
    n = len(min_gaps)
    passed = n if L <= 1 or w <= 1 else int(np.count_nonzero(min_gaps >= L))
    return KeyspaceEstimate(r, w, L, n, passed, wilson_interval(passed, n))


def exact_constrained_count(r: int, w: int, L: int) -> int:
    """Number of weight-w subsets of Z_r whose cyclic gaps are all >= L."""
    if L <= 1 or w <= 1:
        return math.comb(r, w)
    if w * L > r:
        return 0
    return r * math.comb(r - (L - 1) * w - 1, w - 1) // w
