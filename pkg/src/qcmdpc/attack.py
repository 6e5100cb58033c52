"""Distance-spectrum step of the reaction attack on QC-MDPC keys."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .codec import encode
from .gf2 import SparseSupport
from .keygen import CodeParams, PrivateKey, circular_distance, public_key_from_private
from .minsum import DecoderConfig, decode

MAX_PLACEMENT_RETRIES = 1000


@dataclass(frozen=True)
class DistanceSpectrum:
    r: int
    counts: dict[int, int]

    def __contains__(self, d: int) -> bool:
        return self.counts.get(d, 0) > 0

    def __getitem__(self, d: int) -> int:
        return self.counts.get(d, 0)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def min_distance(self) -> int | None:
        return min(self.counts) if self.counts else None


def distance_spectrum(s: SparseSupport) -> DistanceSpectrum:
    idx = s.indices
    c = Counter(circular_distance(a, b, s.r) for i, a in enumerate(idx) for b in idx[i + 1:])
    return DistanceSpectrum(s.r, dict(sorted(c.items())))


def crafted_error(d: int, params: CodeParams, rng: np.random.Generator,
                  t: int | None = None) -> np.ndarray:
    """Weight-t error made of floor(t/2) disjoint pairs at circular distance d in
    the first r positions; odd t adds one unpaired position there as well."""
    r = params.r
    t = params.t if t is None else t
    if not 1 <= d <= r // 2:
        raise ValueError(f"distance {d} outside [1, {r // 2}]")
    if t > r:
        raise ValueError(f"t={t} pairs do not fit in the first {r} positions")
    used = np.zeros(r, dtype=bool)
    failures = 0
    pairs = 0
    while pairs < t // 2:
        p = int(rng.integers(r))
        q = (p + d) % r
        if used[p] or used[q]:
            failures += 1
            if failures > MAX_PLACEMENT_RETRIES:
                raise RuntimeError(f"could not place {t // 2} pairs at distance {d}")
            continue
        used[p] = used[q] = True
        pairs += 1
    if t % 2:
        free = np.flatnonzero(~used)
        used[free[rng.integers(len(free))]] = True
    e = np.zeros(params.n, dtype=np.uint8)
    e[:r] = used
    return e


@dataclass(frozen=True)
class TrialCounts:
    baseline: int
    constrained: int
    reduction_fraction: Fraction


def gjs_trial_counts(r: int, L: int, M: int) -> TrialCounts:
    """Decoding trials for spectrum recovery, without and with the constraint."""
    half = r // 2
    if not 0 <= L < half:
        raise ValueError(f"need 0 <= L < floor(r/2) = {half}")
    return TrialCounts(half * M, (half - L) * M, Fraction(L, half))


@dataclass(frozen=True)
class DistanceFER:
    d: int
    failures: int
    trials: int


def fer_vs_distance(sk: PrivateKey, cfg: DecoderConfig, d_range: Iterable[int],
                    trials_per_d: int, seed: int, t: int | None = None) -> list[DistanceFER]:
    """Decode crafted-error ciphertexts for each d and count failures.

    Each (d, trial) uses its own stream derived from (seed, d, trial), so the
    table is reproducible and independent of evaluation order.  Plaintexts are
    uniform; a wrong codeword counts as a failure.
    """
    if trials_per_d < 1:
        raise ValueError("trials_per_d must be >= 1")
    p = sk.params
    pk = public_key_from_private(sk)
    rows = []
    for d in d_range:
        fails = 0
        for i in range(trials_per_d):
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(d, i)))
            m = rng.integers(0, 2, p.k, dtype=np.uint8)
            c = encode(m, pk)
            out = decode(c ^ crafted_error(d, p, rng, t), sk, cfg)
            if not out.success or not np.array_equal(out.codeword, c):
                fails += 1
        rows.append(DistanceFER(int(d), fails, trials_per_d))
    return rows
