"""Lattice decoders: biased stack search, list sphere decoder, greedy DFE.

The stack decoder assigns each partial path the metric b*k - |residual|^2
and always extends the best path in storage; the bias b trades error
performance against the number of visited nodes.  A node budget turns the
same search into the time-out decoder used at the pre-final ARQ rounds.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from . import treesearch
from .treesearch import ListSizeExceeded, StackOverflow, DEFAULT_MAX_STACK
from .equalizer import PreprocessedRound
from .lattices import NestedCode

__all__ = [
    "DecoderConfig", "DecodeOutcome", "StackNode", "ListDecodeResult",
    "stack_decode", "list_sphere_decode", "babai_dfe_decode", "coset_map",
    "node_bound_diagnostic", "write_trace_csv",
    "ListSizeExceeded", "StackOverflow",
]

DECODED = "decoded"
TIMED_OUT = "timed-out"


@dataclass
class DecoderConfig:
    bias: float = 0.0
    gamma_out: int | None = None       # node budget; None = unlimited
    gamma_list: float = 0.5            # list-radius coefficient
    max_stack: int = DEFAULT_MAX_STACK

    def __post_init__(self):
        if self.bias < 0:
            raise ValueError("bias must be >= 0")
        if self.gamma_out is not None and self.gamma_out < 1:
            raise ValueError("gamma_out must be a positive integer")
        if self.gamma_list <= 0:
            raise ValueError("gamma_list must be positive")


@dataclass
class StackNode:
    """One stack entry: a partial path and its metric."""
    depth: int
    path: tuple
    metric: float

    def recompute_metric(self, round_: PreprocessedRound, bias: float) -> float:
        m = round_.r.shape[0]
        z = [0.0] * m
        for idx, v in enumerate(self.path):
            z[m - 1 - idx] = float(v)
        dist = 0.0
        for k in range(1, self.depth + 1):
            i = m - k
            acc = float(round_.y_reduced[i])
            for j in range(i, m):
                acc -= round_.r[i, j] * z[j]
            dist += acc * acc
        return bias * self.depth - dist


@dataclass
class DecodeOutcome:
    status: str                     # DECODED | TIMED_OUT
    z: np.ndarray | None
    level_counts: np.ndarray        # visits per level, index 1..m (0 unused)
    total_nodes: int
    dist: float | None = None
    min_path_metric: float | None = None

    @property
    def decoded(self) -> bool:
        return self.status == DECODED

    @property
    def cumulative_counts(self) -> np.ndarray:
        """N_j = visited nodes up to level j; nondecreasing, N_m = total."""
        return np.cumsum(self.level_counts)


def stack_decode(round_: PreprocessedRound, cfg: DecoderConfig,
                 trace: list | None = None,
                 node_log: list | None = None) -> DecodeOutcome:
    """Best-first search over the reduced system y'' = R z.

    Returns DECODED with the accepted path when a depth-m entry tops the
    stack, TIMED_OUT when the visited-node count would exceed cfg.gamma_out
    first.  Every popped node counts exactly once, at its own depth.
    """
    m = round_.r.shape[0]
    if cfg.gamma_out is not None and cfg.gamma_out <= m:
        raise ValueError(f"gamma_out must exceed the tree depth m = {m}")
    res = treesearch.stack_search(
        round_.r, round_.y_reduced, bias=cfg.bias, node_limit=cfg.gamma_out,
        max_stack=cfg.max_stack, trace=trace, node_log=node_log)
    if not res["found"]:
        return DecodeOutcome(TIMED_OUT, None, np.array(res["counts"]),
                             res["total"])
    mus = treesearch.path_metrics(round_.r, round_.y_reduced, res["z"],
                                  bias=cfg.bias)
    return DecodeOutcome(DECODED, np.array(res["z"], dtype=np.int64),
                         np.array(res["counts"]), res["total"],
                         dist=res["dist"], min_path_metric=min(mus))


@dataclass
class ListDecodeResult:
    points: list                    # integer vectors inside the sphere
    examined: int                   # candidate partial paths evaluated

    def closest(self, round_: PreprocessedRound) -> np.ndarray | None:
        if not self.points:
            return None
        best, best_d = None, None
        for z in self.points:
            resid = round_.y_reduced - round_.r @ np.asarray(z, dtype=float)
            d = float(resid @ resid)
            if best_d is None or d < best_d:
                best, best_d = z, d
        return np.asarray(best, dtype=np.int64)


def list_sphere_decode(round_: PreprocessedRound, radius_sq: float,
                       cap: int = 200_000,
                       node_budget: int | None = None) -> ListDecodeResult:
    """Exactly the integer vectors z with |y' - B G z|^2 <= radius_sq.

    The search runs in the rotated system |y'' - R z|^2, which preserves the
    norm since Q is square orthogonal.  Raises ListSizeExceeded past ``cap``
    points or ``node_budget`` examined candidates (the caller treats either
    as a failed decoding attempt; this is what makes the baseline an
    incomplete-list decoder).
    """
    if radius_sq <= 0:
        raise ValueError("radius_sq must be positive")
    points, examined = treesearch.sphere_enumerate(
        round_.r, round_.y_reduced, radius_sq, cap=cap,
        node_budget=node_budget)
    return ListDecodeResult(points, examined)


def babai_dfe_decode(round_: PreprocessedRound) -> DecodeOutcome:
    """Single greedy rounding pass; always one node per level, N_m = m."""
    z, dist, counts = treesearch.babai_nearest(round_.r, round_.y_reduced)
    return DecodeOutcome(DECODED, np.array(z, dtype=np.int64),
                         np.array(counts), int(np.sum(counts)), dist=dist)


def coset_map(z, code: NestedCode) -> int:
    """Decoded integer path -> message index.

    With self-similar nesting every coset of the shaping lattice in the
    coding lattice is represented by the componentwise residues of z modulo
    the nesting ratio, so shifting z by any shaping-lattice vector leaves
    the message unchanged and every integer vector maps to some message.
    """
    digits = np.asarray(z, dtype=np.int64) % code.nesting_ratio
    return code.digits_to_message(digits)


def node_bound_diagnostic(round_: PreprocessedRound, cfg: DecoderConfig,
                          gamma: float) -> np.ndarray:
    """Per-level node-count bounds S'_k, index 1..m (entry 0 is nan).

    S'_k = (4 pi)^(k/2) / Gamma(k/2+1) * [b k + MTL (1+gamma)]^(k/2)
           / det(R_kk^T R_kk)^(1/2),
    with R_kk the lower k x k block and MTL = m/2.  Whenever the effective
    noise satisfies |e'|^2 <= MTL (1+gamma), the decoder's per-level visit
    counts stay below these numbers.
    """
    m = round_.r.shape[0]
    mtl = m / 2.0
    log_diag = np.log(np.diag(round_.r))
    # det(R_kk^T R_kk)^(1/2) = product of the last k diagonal entries
    log_det_tail = np.cumsum(log_diag[::-1])
    bounds = np.full(m + 1, np.nan)
    for k in range(1, m + 1):
        log_s = (0.5 * k * np.log(4 * np.pi)
                 + 0.5 * k * np.log(cfg.bias * k + mtl * (1.0 + gamma))
                 - gammaln(k / 2.0 + 1.0)
                 - log_det_tail[k - 1])
        bounds[k] = np.exp(log_s)
    return bounds


def write_trace_csv(trace, path) -> None:
    """Per-extension log rows (depth, metric, running_total) as CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["depth", "metric", "nodes"])
        writer.writerows(trace)
