"""MMSE-DFE preprocessing: forward/feedback filters and QR reduction.

The feedback filter is the upper-triangular factor of I + H^T H, the forward
filter is B^(-T) H^T, so B - F H = B^(-T) and the filtered observation
y' = F y + B u collapses to an upper-triangular system in the code
coefficients.  det(B^T B) then matches the channel mutual-information
determinant, raised to 2*T*ell for a long-term static channel and to the
per-round product for a short-term one.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .channel import ChannelRealization, RealChannelStack, LONG_TERM


@dataclass
class PreprocessedRound:
    ell: int
    forward: np.ndarray           # F
    feedback: np.ndarray          # B, upper triangular
    q: np.ndarray
    r: np.ndarray                 # upper triangular, positive diagonal
    y_filtered: np.ndarray        # y' = F y + B u
    y_reduced: np.ndarray         # y'' = Q^T y'
    code_matrix: np.ndarray       # G fed to the QR
    effective_noise: np.ndarray | None = None


def compute_filters(stack: RealChannelStack):
    """(F, B) for the truncated channel: B^T B = I + H^T H, F = B^(-T) H^T."""
    h = stack.matrix
    n = h.shape[1]
    gram = np.eye(n) + h.T @ h
    try:
        feedback = cholesky(gram, lower=False)
    except np.linalg.LinAlgError:
        # ill-conditioned Gram matrix: retry in extended precision
        gram_hi = np.eye(n, dtype=np.longdouble) + h.astype(np.longdouble).T \
            @ h.astype(np.longdouble)
        feedback = np.linalg.cholesky(gram_hi).T.astype(float)
    forward = solve_triangular(feedback.T, h.T, lower=True)
    return forward, feedback


def qr_positive(mat: np.ndarray):
    """Householder QR with the sign convention forcing a positive R diagonal."""
    q, r = np.linalg.qr(mat)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs[None, :], r * signs[:, None]


def preprocess(y, dither, forward, feedback, code_matrix, ell: int,
               true_codeword: np.ndarray | None = None) -> PreprocessedRound:
    """Filtered observation plus the QR-reduced code-channel system.

    ``true_codeword`` (the c' the transmitter actually sent, test mode only)
    stores the realized effective noise e' = y' - B c'.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (forward.shape[1],):
        raise ValueError(f"y has shape {y.shape}, expected "
                         f"({forward.shape[1]},)")
    y_f = forward @ y + feedback @ np.asarray(dither, dtype=float)
    q, r = qr_positive(feedback @ code_matrix)
    e = None
    if true_codeword is not None:
        e = y_f - feedback @ np.asarray(true_codeword, dtype=float)
    return PreprocessedRound(ell, forward, feedback, q, r, y_f, q.T @ y_f,
                             np.asarray(code_matrix, dtype=float), e)


def feedback_logdet(feedback: np.ndarray) -> float:
    """log det(B^T B), natural base, read off the triangular diagonal."""
    return 2.0 * float(np.sum(np.log(np.diag(feedback))))


def reference_logdet(chan: ChannelRealization, T: int, ell: int) -> float:
    """Channel-side value of log det(B^T B), natural base.

    Long-term: 2*T*ell * logdet(I + rho/M H^H H); short-term: the sum of
    2*T * logdet over the first ell rounds.
    """
    total = 0.0
    for j in range(ell):
        h = chan.matrices[j]
        gram = np.eye(chan.M) + (chan.rho / chan.M) * (h.conj().T @ h)
        total += 2.0 * T * float(np.linalg.slogdet(gram)[1].real)
        if chan.model == LONG_TERM:
            return total * ell
    return total


def mod_rate(feedback: np.ndarray, T: int) -> float:
    """Rate supported at this round, bits per channel use:
    log2 det(B^T B)^(1/2T)."""
    return feedback_logdet(feedback) / (2.0 * T * np.log(2.0))


def shrink_factor(bias: float, r_mod: float, rate: float, M: int,
                  phi: float) -> float:
    """Contraction 1 - b / (2^((R_mod - R)/M) * phi) applied to the feedback
    matrix when sandwiching the sequential decoder between two lattice
    decoders.  Valid only while it stays positive."""
    threshold = 2.0 ** ((r_mod - rate) / M) * phi
    if bias >= threshold:
        raise ValueError(
            f"bias {bias} outside the validity range (< {threshold:.6g})")
    return 1.0 - bias / threshold


def shrunk_feedback(feedback: np.ndarray, bias: float, r_mod: float,
                    rate: float, M: int, phi: float) -> np.ndarray:
    return shrink_factor(bias, r_mod, rate, M, phi) * feedback


def dump_round_csv(round_: PreprocessedRound, path_prefix: str) -> None:
    """Test-mode dump of the F, B, R matrices as CSV files."""
    for name, mat in (("F", round_.forward), ("B", round_.feedback),
                      ("R", round_.r)):
        with open(f"{path_prefix}_{name}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            for row in mat:
                writer.writerow([repr(float(v)) for v in row])
