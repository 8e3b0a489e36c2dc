"""Incremental-redundancy ARQ session orchestration.

One session encodes a single message into a 2MTL-dimensional lattice point,
transmits one 2MT slice per round, and at each pre-final round runs the
node-budgeted stack decoder: completing the search within the budget sends
an ACK, exceeding it sends a NACK and buys the next slice.  The final round
decodes without a budget.  Feedback is error-free and zero-delay.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .channel import LONG_TERM, SHORT_TERM, sample_channel, realify
from .decoders import (DecoderConfig, stack_decode, babai_dfe_decode,
                       list_sphere_decode, coset_map, StackOverflow,
                       ListSizeExceeded)
from .equalizer import compute_filters, preprocess, mod_rate
from .lattices import NestedCode, mod_lambda

VARIANT_STACK = "stack"
VARIANT_BABAI = "babai"
VARIANT_LIST = "list"

NACK_TIMEOUT = "timeout"
NACK_OUTAGE = "outage-precheck"
NACK_OVERFLOW = "stack-overflow"
NACK_EMPTY_LIST = "empty-list"
NACK_LIST_CAP = "list-cap"

GAMMA_FIXED = "fixed"
GAMMA_ANALYTIC = "analytic"


@dataclass
class SessionConfig:
    M: int
    N: int
    T: int
    L: int
    rate_r1: float
    rho: float
    channel_model: str = LONG_TERM
    decoder: DecoderConfig = field(default_factory=DecoderConfig)
    outage_precheck: bool = False
    gamma_mode: str = GAMMA_FIXED
    gamma_zeta: float | None = None   # zeta constant for the analytic budget
    list_cap: int = 200_000
    list_node_budget: int = 300_000
    noiseless: bool = False

    def __post_init__(self):
        if self.channel_model == LONG_TERM:
            if self.T * self.L < self.M + self.N - 1:
                raise ValueError(
                    "long-term targets need T*L >= M+N-1 "
                    f"(got T*L = {self.T * self.L})")
        elif self.channel_model == SHORT_TERM:
            if self.T < self.M + self.N - 1:
                raise ValueError(
                    f"short-term targets need T >= M+N-1 (got T = {self.T})")
        else:
            raise ValueError(f"unknown channel model {self.channel_model!r}")
        if self.gamma_mode not in (GAMMA_FIXED, GAMMA_ANALYTIC):
            raise ValueError(f"unknown gamma mode {self.gamma_mode!r}")

    @property
    def dimension(self) -> int:
        return 2 * self.M * self.T * self.L


@dataclass
class SessionStats:
    rounds_used: int
    ack_round: int | None          # None when the session ran to round L
    error: bool
    undetected_error: bool         # error together with an ACK before round L
    computations: int
    nack_causes: list
    message_sent: int
    message_decoded: int | None
    round_nodes: list              # visited nodes per attempted round
    round_mod_rates: list = field(default_factory=list)   # R_mod(ell), bpcu


def _round_gamma(cfg: SessionConfig, round_: "PreprocessedRound") -> int | None:
    if cfg.gamma_mode == GAMMA_FIXED:
        return cfg.decoder.gamma_out
    m = cfg.dimension
    zeta = cfg.gamma_zeta
    if zeta is None:
        zeta = analysis.default_zeta_const(cfg.M, cfg.N, cfg.T, cfg.L)
    bound = analysis.gamma_out_bound(round_.r, cfg.decoder.bias, m,
                                     cfg.M * cfg.T * cfg.L, zeta, cfg.rho)
    return max(int(np.ceil(bound)), m + 1)


def run_session(cfg: SessionConfig, code: NestedCode, rng,
                variant: str = VARIANT_STACK,
                decoder_override=None) -> SessionStats:
    """Play out one ARQ session and account its outcome.

    The message, dither, channel, and all rounds' noise are drawn up front
    in a fixed order, so two sessions fed generators in identical states see
    identical realizations regardless of decoder variant (common random
    numbers).  ``decoder_override``, when given, replaces the per-round
    decoder call (test hook); it receives (round, gamma_out) and must return
    a DecodeOutcome.
    """
    m = cfg.dimension
    if code.dimension != m:
        raise ValueError(f"code dimension {code.dimension} != 2MTL = {m}")

    message = int(rng.integers(code.message_count))
    dither_raw = code.shaping.basis @ rng.random(m)
    chan = sample_channel(cfg.M, cfg.N, cfg.L, cfg.channel_model, cfg.rho, rng)
    n_rx = 2 * cfg.N * cfg.T * cfg.L
    noise = np.zeros(n_rx) if cfg.noiseless else \
        rng.normal(0.0, np.sqrt(0.5), size=n_rx)

    # x = [c - u] mod shaping, folded in one pass: the Voronoi fold depends
    # only on the coset of c - u, so the raw (unfolded) dither draw serves
    # as the receiver-side dither representative as well
    point = code.coding.basis @ code.message_digits(message).astype(float) \
        + code.u0
    x = mod_lambda(point - dither_raw, code.shaping)
    full_stack = realify(chan, cfg.T, cfg.L)
    y_clean = full_stack.matrix @ x

    computations = 0
    nack_causes = []
    round_nodes = []
    round_mod_rates = []
    mtl = cfg.M * cfg.T * cfg.L

    for ell in range(1, cfg.L + 1):
        rows = 2 * cfg.N * cfg.T * ell
        stack = realify(chan, cfg.T, ell)
        forward, feedback = compute_filters(stack)
        round_ = preprocess(y_clean[:rows] + noise[:rows], dither_raw,
                            forward, feedback, code.coding.basis, ell)
        final = ell == cfg.L
        round_mod_rates.append(mod_rate(feedback, cfg.T))

        if cfg.outage_precheck and not final:
            if round_mod_rates[-1] < cfg.rate_r1:
                nack_causes.append(NACK_OUTAGE)
                round_nodes.append(0)
                continue

        gamma = None if final else _round_gamma(cfg, round_)

        if decoder_override is not None:
            outcome = decoder_override(round_, gamma)
        elif variant == VARIANT_BABAI:
            outcome = babai_dfe_decode(round_)
        elif variant == VARIANT_LIST and not final:
            radius_sq = mtl * (1.0 + cfg.decoder.gamma_list
                               * np.log2(cfg.rho))
            try:
                result = list_sphere_decode(round_, radius_sq,
                                            cap=cfg.list_cap,
                                            node_budget=cfg.list_node_budget)
            except ListSizeExceeded as exc:
                nack_causes.append(NACK_LIST_CAP)
                round_nodes.append(exc.examined)
                computations += exc.examined
                continue
            computations += result.examined
            round_nodes.append(result.examined)
            z = result.closest(round_)
            if z is None:
                nack_causes.append(NACK_EMPTY_LIST)
                continue
            decoded = coset_map(z, code)
            return SessionStats(ell, ell, decoded != message,
                                decoded != message, computations,
                                nack_causes, message, decoded, round_nodes,
                                round_mod_rates)
        else:
            # stack decoder: budgeted before round L, unlimited at round L;
            # the list baseline falls back to exact search at round L
            bias = 0.0 if (variant == VARIANT_LIST and final) \
                else cfg.decoder.bias
            run_cfg = DecoderConfig(bias=bias, gamma_out=gamma,
                                    gamma_list=cfg.decoder.gamma_list,
                                    max_stack=cfg.decoder.max_stack)
            try:
                outcome = stack_decode(round_, run_cfg)
            except StackOverflow:
                if not final:
                    computations += cfg.decoder.max_stack
                    nack_causes.append(NACK_OVERFLOW)
                    round_nodes.append(cfg.decoder.max_stack)
                    continue
                # best-effort fallback: the budget-free final round is
                # realized as a large finite search, and a search that
                # outgrows it ends in one greedy pass instead
                overflow_work = cfg.decoder.max_stack
                outcome = babai_dfe_decode(round_)
                outcome.total_nodes += overflow_work

        computations += outcome.total_nodes
        round_nodes.append(outcome.total_nodes)

        if outcome.decoded:
            decoded = coset_map(outcome.z, code)
            err = decoded != message
            return SessionStats(ell, None if final else ell, err,
                                err and not final, computations, nack_causes,
                                message, decoded, round_nodes,
                                round_mod_rates)
        if final:
            # unlimited final round only fails via the override hook
            return SessionStats(cfg.L, None, True, False, computations,
                                nack_causes, message, None, round_nodes,
                                round_mod_rates)
        nack_causes.append(NACK_TIMEOUT)

    raise AssertionError("session fell through the round loop")


@dataclass
class LinkMetrics:
    sessions: int
    throughput: float              # R1 / (1 + sum of p(ell))
    effective_rate: float          # throughput discounted by frame errors
    error_rate: float
    undetected_rate: float
    retransmission_probs: np.ndarray   # p(ell), ell = 1..L-1
    mean_computations: float
    p95_computations: float
    mean_rounds: float


def aggregate(stats_list, rate_r1: float, L: int) -> LinkMetrics:
    """Fold per-session stats into link metrics.

    p(ell) is the empirical probability that rounds 1..ell all NACKed,
    i.e. that the session was still running at round ell+1.
    """
    stats_list = list(stats_list)
    n = len(stats_list)
    if n == 0:
        raise ValueError("empty session stream")
    rounds = np.array([s.rounds_used for s in stats_list])
    errors = np.array([s.error for s in stats_list])
    undetected = np.array([s.undetected_error for s in stats_list])
    comps = np.array([s.computations for s in stats_list], dtype=float)
    p = np.array([np.mean(rounds > ell) for ell in range(1, L)])
    throughput = rate_r1 / (1.0 + float(np.sum(p)))
    fer = float(np.mean(errors))
    return LinkMetrics(
        sessions=n,
        throughput=throughput,
        effective_rate=throughput * (1.0 - fer),
        error_rate=fer,
        undetected_rate=float(np.mean(undetected)),
        retransmission_probs=p,
        mean_computations=float(np.mean(comps)),
        p95_computations=float(np.percentile(comps, 95)),
        mean_rounds=float(np.mean(rounds)),
    )
