"""Configuration-driven experiment runner.

A plan fixes the link geometry, an SNR grid, decoder variants, trial counts,
and a master seed.  Per-trial generators are derived by hashing
(master seed, SNR index, trial index), never the variant, so every variant
sees the same channels, messages, dithers and noise (common random numbers)
and results are bit-identical regardless of worker count or completion
order.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .channel import LONG_TERM
from .decoders import DecoderConfig
from .lattices import NestedCode, build_loeliger_code
from .protocol import (SessionConfig, SessionStats, run_session, aggregate,
                       VARIANT_STACK, VARIANT_BABAI, VARIANT_LIST)

CSV_COLUMNS = ["snr_db", "variant", "b", "gamma_out", "trials", "fer",
               "undetected_rate", "throughput_bpcu", "mean_nodes",
               "p95_nodes", "mean_rounds"]

SESSION_CSV_COLUMNS = ["seed", "snr_db", "rounds_used", "error", "undetected",
                       "computations", "nack_causes"]


def db_to_linear(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)


@dataclass
class Variant:
    name: str
    kind: str = VARIANT_STACK          # stack | babai | list
    bias: float = 0.0
    gamma_out: int | None = None       # None = unlimited
    gamma_list: float = 0.5

    def __post_init__(self):
        if self.kind not in (VARIANT_STACK, VARIANT_BABAI, VARIANT_LIST):
            raise ValueError(f"unknown variant kind {self.kind!r}")


@dataclass
class ExperimentPlan:
    M: int = 2
    N: int = 2
    T: int = 3
    L: int = 2
    rate_r1: float = 8.0
    channel_model: str = LONG_TERM
    snr_db_grid: list = field(default_factory=lambda: list(range(8, 29, 2)))
    trials: int = 1000
    min_frame_errors: int = 0
    max_trials: int | None = None
    variants: list = field(default_factory=lambda: [
        Variant("stack-b0.6-g400", VARIANT_STACK, bias=0.6, gamma_out=400)])
    master_seed: int = 0
    p: int = 29
    k: int = 12
    code_seed: int = 42
    calib_samples: int = 20_000
    outage_precheck: bool = False
    max_stack: int = 1_000_000
    list_cap: int = 200_000
    workers: int = 1
    output_csv: str | None = None
    sessions_csv: str | None = None
    max_seconds_per_point: float | None = None
    noiseless: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.snr_db_grid:
            raise ValueError("SNR grid must be nonempty")
        self.variants = [v if isinstance(v, Variant) else Variant(**v)
                         for v in self.variants]

    @classmethod
    def from_json(cls, text: str) -> "ExperimentPlan":
        return cls(**json.loads(text))

    @classmethod
    def from_file(cls, path) -> "ExperimentPlan":
        with open(path) as fh:
            return cls.from_json(fh.read())

    def to_json(self) -> str:
        doc = asdict(self)
        return json.dumps(doc, indent=1)

    def build_code(self) -> NestedCode:
        return build_loeliger_code(self.M, self.N, self.T, self.L, self.p,
                                   self.k, self.code_seed, self.rate_r1,
                                   calib_samples=self.calib_samples)

    def session_config(self, rho: float, variant: Variant) -> SessionConfig:
        return SessionConfig(
            M=self.M, N=self.N, T=self.T, L=self.L, rate_r1=self.rate_r1,
            rho=rho, channel_model=self.channel_model,
            decoder=DecoderConfig(bias=variant.bias,
                                  gamma_out=variant.gamma_out,
                                  gamma_list=variant.gamma_list,
                                  max_stack=self.max_stack),
            outage_precheck=self.outage_precheck,
            list_cap=self.list_cap, noiseless=self.noiseless)


def trial_rng(master_seed: int, snr_index: int, trial_index: int):
    """The per-trial generator; deliberately variant-independent."""
    return np.random.default_rng(
        np.random.SeedSequence((master_seed, snr_index, trial_index)))


def _run_block(plan: ExperimentPlan, code: NestedCode, cfg: SessionConfig,
               variant: Variant, snr_index: int, trial_range):
    out = []
    for t in trial_range:
        rng = trial_rng(plan.master_seed, snr_index, t)
        out.append((t, run_session(cfg, code, rng, variant=variant.kind)))
    return out


def _run_trials(plan: ExperimentPlan, code: NestedCode, cfg: SessionConfig,
                variant: Variant, snr_index: int, start: int, count: int,
                pool) -> list:
    indices = range(start, start + count)
    if pool is None:
        return [s for _, s in _run_block(plan, code, cfg, variant, snr_index,
                                         indices)]
    chunk = max(1, math.ceil(count / (plan.workers * 4)))
    futures = [pool.submit(_run_block, plan, code, cfg, variant, snr_index,
                           list(indices[lo:lo + chunk]))
               for lo in range(0, count, chunk)]
    tagged = [pair for f in futures for pair in f.result()]
    tagged.sort(key=lambda pair: pair[0])
    return [s for _, s in tagged]


@dataclass
class ExperimentResults:
    rows: list                 # dicts keyed by CSV_COLUMNS
    flagged: bool              # True when any point stopped short
    sessions: dict             # (snr_db, variant) -> list[SessionStats]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            writer.writerows(self.rows)

    def write_sessions_csv(self, path, plan: ExperimentPlan) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(SESSION_CSV_COLUMNS)
            for (snr_db, _variant), stats in self.sessions.items():
                for t, s in enumerate(stats):
                    writer.writerow([
                        f"{plan.master_seed}/{t}", snr_db, s.rounds_used,
                        int(s.error), int(s.undetected_error),
                        s.computations, "|".join(s.nack_causes)])


def run_experiment(plan: ExperimentPlan, code: NestedCode | None = None,
                   progress=None) -> ExperimentResults:
    """Sweep the SNR grid for every variant.

    Each grid point runs ``plan.trials`` sessions, then keeps extending in
    same-sized batches until ``min_frame_errors`` frame errors are seen (or
    ``max_trials`` / the per-point time budget is hit, which flags the run).
    Batch boundaries are fixed, so results do not depend on worker count.
    """
    if code is None:
        code = plan.build_code()
    flagged = False
    rows = []
    sessions = {}
    pool = None
    if plan.workers > 1:
        pool = ProcessPoolExecutor(max_workers=plan.workers)
    try:
        for snr_index, snr_db in enumerate(plan.snr_db_grid):
            rho = db_to_linear(snr_db)
            for variant in plan.variants:
                cfg = plan.session_config(rho, variant)
                deadline = None if plan.max_seconds_per_point is None \
                    else time.monotonic() + plan.max_seconds_per_point
                stats = []
                max_trials = plan.max_trials or plan.trials * 10
                while True:
                    batch = min(plan.trials, max_trials - len(stats))
                    if batch <= 0:
                        break
                    stats.extend(_run_trials(plan, code, cfg, variant,
                                             snr_index, len(stats), batch,
                                             pool))
                    errors = sum(s.error for s in stats)
                    if errors >= plan.min_frame_errors:
                        break
                    if deadline is not None and time.monotonic() > deadline:
                        flagged = True
                        break
                metrics = aggregate(stats, plan.rate_r1, plan.L)
                sessions[(snr_db, variant.name)] = stats
                rows.append({
                    "snr_db": snr_db,
                    "variant": variant.name,
                    "b": variant.bias,
                    "gamma_out": "" if variant.gamma_out is None
                                 else variant.gamma_out,
                    "trials": metrics.sessions,
                    "fer": metrics.error_rate,
                    "undetected_rate": metrics.undetected_rate,
                    "throughput_bpcu": metrics.throughput,
                    "mean_nodes": metrics.mean_computations,
                    "p95_nodes": metrics.p95_computations,
                    "mean_rounds": metrics.mean_rounds,
                })
                if progress is not None:
                    progress(rows[-1])
    finally:
        if pool is not None:
            pool.shutdown()
    results = ExperimentResults(rows, flagged, sessions)
    if plan.output_csv:
        results.write_csv(plan.output_csv)
    if plan.sessions_csv:
        results.write_sessions_csv(plan.sessions_csv, plan)
    return results


@dataclass
class TuneResult:
    gamma_star: int
    fer_at_star: float
    fer_unlimited: float
    throughput_at_star: float
    trials: int
    flagged: bool


def _point_metrics(plan, code, variant, snr_index, rho, trials, pool=None):
    cfg = plan.session_config(rho, variant)
    stats = _run_trials(plan, code, cfg, variant, snr_index, 0, trials, pool)
    return aggregate(stats, plan.rate_r1, plan.L)


def tune_gamma_out(plan: ExperimentPlan, bias: float, snr_db: float,
                   tolerance: float = 0.1, trials: int | None = None,
                   code: NestedCode | None = None,
                   gamma_max: int = 1_000_000) -> TuneResult:
    """Smallest node budget whose frame error rate has degraded back to
    within ``tolerance`` of the budget-free decoder's.

    Shrinking the budget only adds retransmissions, so FER is nonincreasing
    as the budget shrinks; the search therefore brackets the budget at which
    FER(gamma) >= (1 - tolerance) * FER(unlimited) by bisection on a log
    scale, with common random numbers across evaluations.  If the estimates
    come out non-monotone beyond noise, the evaluation reruns once with
    doubled trials before the result is flagged.
    """
    if not 0 < tolerance < 1:
        raise ValueError("tolerance must be in (0, 1)")
    if code is None:
        code = plan.build_code()
    trials = trials or plan.trials
    rho = db_to_linear(snr_db)
    snr_index = 0
    m = 2 * plan.M * plan.T * plan.L

    def evaluate(gamma, n):
        v = Variant("tune", VARIANT_STACK, bias=bias, gamma_out=gamma)
        met = _point_metrics(plan, code, v, snr_index, rho, n)
        return met.error_rate, met.throughput

    def search(n):
        fer_unl, _ = evaluate(None, n)
        target = (1.0 - tolerance) * fer_unl
        lo, hi = m + 1, gamma_max
        fer_hi, thr_hi = evaluate(hi, n)
        if fer_hi < target:
            return None, fer_unl, hi, fer_hi, thr_hi   # never degrades back
        fer_lo, _ = evaluate(lo, n)
        if fer_lo >= target:
            return lo, fer_unl, lo, fer_lo, None       # degenerate bracket
        while hi > int(lo * 1.15) + 1:
            mid = int(round(math.sqrt(lo * hi)))
            fer_mid, thr_mid = evaluate(mid, n)
            if fer_mid >= target:
                hi, fer_hi, thr_hi = mid, fer_mid, thr_mid
            else:
                lo = mid
        return hi, fer_unl, hi, fer_hi, thr_hi

    star, fer_unl, g, fer_g, thr_g = search(trials)
    flagged = False
    if star is None or star == m + 1:
        star, fer_unl, g, fer_g, thr_g = search(2 * trials)
        trials *= 2
        flagged = star is None or star == m + 1
        star = g if star is None else star
    if thr_g is None:
        _, thr_g = evaluate(star, trials)
    return TuneResult(star, fer_g, fer_unl, thr_g, trials, flagged)
