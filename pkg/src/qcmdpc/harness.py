"""Seeded Monte-Carlo campaigns: FER / iteration statistics and scalar calibration.

Trial i draws everything (key, plaintext, error) from a stream keyed by
(master_seed, i), so reports are identical whatever the worker count.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .codec import encode, sample_error
from .keygen import CodeParams, PrivateKey, generate_keypair, public_key_from_private
from .minsum import DecoderConfig, ScalarCSD, decode
from .stats import wilson_interval

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CampaignConfig:
    params: CodeParams
    decoder: DecoderConfig
    trials: int
    master_seed: int = 0
    t_override: int | None = None
    fixed_key: PrivateKey | None = None
    workers: int = 1
    key_method: str = "rejection"

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.t_override is not None and not 0 <= self.t_override <= self.params.n:
            raise ValueError(f"t_override must lie in [0, {self.params.n}]")
        if self.fixed_key is not None and self.fixed_key.params.with_(t=self.params.t) != self.params:
            raise ValueError("fixed key parameters differ from the campaign parameters")
        if self.decoder.layer_rows > 1 and self.fixed_key is None and self.params.L < self.decoder.layer_rows:
            raise ValueError(f"layer_rows={self.decoder.layer_rows} needs keys constrained by "
                             f"L >= {self.decoder.layer_rows}, campaign uses L={self.params.L}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def t(self) -> int:
        return self.params.t if self.t_override is None else self.t_override


def decoder_descriptor(cfg: DecoderConfig) -> dict:
    p = cfg.precision
    return {"schedule": cfg.schedule, "arithmetic": cfg.arithmetic, "q": p.q, "C": p.C,
            "alpha": str(p.alpha), "alpha_value": float(p.alpha.value), "frac_bits": p.f,
            "p_int": p.p_int, "rounding": p.rounding, "layer_rows": cfg.layer_rows, "imax": cfg.imax}


@dataclass
class FERReport:
    trials: int
    failures: int
    undetected: int  # decoder converged to a wrong codeword (included in failures)
    iteration_histogram: list[int]
    config: dict
    seed: int
    wall_clock_s: float = field(default=0.0, compare=False)

    @property
    def fer(self) -> float:
        return self.failures / self.trials

    @property
    def interval(self) -> tuple[float, float]:
        return wilson_interval(self.failures, self.trials)

    @property
    def mean_iterations(self) -> float:
        h = self.iteration_histogram
        return sum(i * c for i, c in enumerate(h)) / self.trials

    def to_dict(self, include_timing: bool = False) -> dict:
        lo, hi = self.interval
        d = {"trials": self.trials, "failures": self.failures, "undetected": self.undetected,
             "fer": self.fer, "fer_wilson95": [lo, hi], "mean_iterations": self.mean_iterations,
             "iteration_histogram": self.iteration_histogram, "seed": self.seed,
             "config": self.config}
        if include_timing:
            d["wall_clock_s"] = self.wall_clock_s
        return d


def trial_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(index,)))


def _run_trials(cfg: CampaignConfig, start: int, stop: int) -> list[tuple[int, bool, bool]]:
    p = cfg.params
    fixed = cfg.fixed_key
    fixed_pk = public_key_from_private(fixed) if fixed is not None else None
    out = []
    for i in range(start, stop):
        rng = trial_rng(cfg.master_seed, i)
        if fixed is None:
            sk, pk = generate_keypair(p, rng, cfg.key_method)
        else:
            sk, pk = fixed, fixed_pk
        m = rng.integers(0, 2, p.k, dtype=np.uint8)
        c = encode(m, pk)
        res = decode(c ^ sample_error(p.n, cfg.t, rng), sk, cfg.decoder)
        correct = res.success and np.array_equal(res.codeword, c)
        out.append((res.iterations, res.success, correct))
    return out


def _chunks(n: int, parts: int) -> list[tuple[int, int]]:
    bounds = np.linspace(0, n, parts + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds, bounds[1:]) if b > a]


def _collect(cfg: CampaignConfig, start: int, stop: int) -> list[tuple[int, bool, bool]]:
    if cfg.workers == 1:
        return _run_trials(cfg, start, stop)
    spans = [(start + a, start + b) for a, b in _chunks(stop - start, cfg.workers * 4)]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        parts = pool.map(_run_trials, [cfg] * len(spans), *zip(*spans))
        return [row for part in parts for row in part]


def _report(cfg: CampaignConfig, results, elapsed: float) -> FERReport:
    hist = [0] * (cfg.decoder.imax + 1)
    failures = undetected = 0
    for iters, success, correct in results:
        hist[iters] += 1
        if not correct:
            failures += 1
            undetected += success
    config = {"params": {"n0": cfg.params.n0, "r": cfg.params.r, "w": cfg.params.w,
                         "t": cfg.t, "L": cfg.params.L},
              "decoder": decoder_descriptor(cfg.decoder), "fixed_key": cfg.fixed_key is not None,
              "key_method": cfg.key_method}
    return FERReport(len(results), failures, undetected, hist, config, cfg.master_seed, elapsed)


def run_fer(cfg: CampaignConfig) -> FERReport:
    t0 = time.perf_counter()
    report = _report(cfg, _collect(cfg, 0, cfg.trials), time.perf_counter() - t0)
    log.info("fer campaign: %d/%d failures, mean iterations %.3f",
             report.failures, report.trials, report.mean_iterations)
    return report


@dataclass
class CalibrationResult:
    best: ScalarCSD
    reports: list[tuple[ScalarCSD, FERReport]]
    trials: int

    def to_dict(self) -> dict:
        return {"best": str(self.best), "best_value": float(self.best.value),
                "candidates": [{"alpha": str(a), "alpha_value": float(a.value), "fer": r.fer,
                                "failures": r.failures, "trials": r.trials, "complete": r.trials == self.trials,
                                "mean_iterations": r.mean_iterations} for a, r in self.reports]}


def calibrate_scalar(cfg: CampaignConfig, candidates: Sequence[ScalarCSD],
                     prune_block: int | None = 100) -> CalibrationResult:
    """Pick the scalar with the lowest FER, then fewest mean iterations, then smallest value.

    Every candidate sees the same keys and error patterns (shared seed). With
    ``prune_block`` set, all candidates first run one block of trials and are
    then completed in order of that block's ranking; a candidate is abandoned
    once its failures exceed the best complete count, since it can no longer
    win. Its report then covers only the trials actually run. The chosen
    scalar is the same as without pruning.
    """
    if not candidates:
        raise ValueError("need at least one candidate scalar")
    block = min(prune_block or cfg.trials, cfg.trials)
    configs = [replace(cfg, decoder=replace(cfg.decoder, precision=replace(
        cfg.decoder.precision, alpha=a, p_int=None))) for a in candidates]
    runs = [_collect(c, 0, block) for c in configs]

    def fails(rows):
        return sum(not ok for _, _, ok in rows)

    def rank(i):
        rows = runs[i]
        return fails(rows), sum(it for it, _, _ in rows), candidates[i].value

    best_failures = None
    for i in sorted(range(len(candidates)), key=rank):
        rows = runs[i]
        while len(rows) < cfg.trials:
            if best_failures is not None and fails(rows) > best_failures:
                break
            rows += _collect(configs[i], len(rows), min(len(rows) + block, cfg.trials))
        if len(rows) == cfg.trials:
            f = fails(rows)
            best_failures = f if best_failures is None else min(best_failures, f)
        log.info("calibrate %s: %d/%d failures", candidates[i], fails(rows), len(rows))
    reports = [(a, _report(c, rows, 0.0)) for a, c, rows in zip(candidates, configs, runs)]
    complete = [ar for ar in reports if ar[1].trials == cfg.trials]
    best = min(complete, key=lambda ar: (ar[1].failures, ar[1].mean_iterations, ar[0].value))[0]
    return CalibrationResult(best, reports, cfg.trials)
