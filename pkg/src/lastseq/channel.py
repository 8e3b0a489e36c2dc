"""Quasi-static Rayleigh MIMO ARQ channel and its stacked real-valued form.

The complex N x M channel of each round is lifted to a real block of size
2NT x 2MT; L such blocks sit on the diagonal of the full-session matrix, and
the receiver after round ell sees the first 2*N*T*ell rows.  All SNR scaling
lives in the sqrt(rho/M) factor folded into the blocks; noise is always 1/2
per real dimension.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

NOISE_VAR_PER_REAL_DIM = 0.5

LONG_TERM = "long-term"
SHORT_TERM = "short-term"


@dataclass
class ChannelRealization:
    model: str
    M: int
    N: int
    L: int
    rho: float
    matrices: np.ndarray       # (L, N, M) complex, identical rows if long-term
    eigenvalues: np.ndarray    # (L, M) ascending, of H^H H per round
    alpha: np.ndarray          # (L, M): -log(eig)/log(rho), nan at rho == 1

    def to_json(self) -> str:
        return json.dumps({
            "model": self.model, "M": self.M, "N": self.N, "L": self.L,
            "rho": self.rho,
            "re": self.matrices.real.reshape(-1).tolist(),
            "im": self.matrices.imag.reshape(-1).tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "ChannelRealization":
        doc = json.loads(text)
        shape = (doc["L"], doc["N"], doc["M"])
        mats = (np.array(doc["re"]).reshape(shape)
                + 1j * np.array(doc["im"]).reshape(shape))
        return _realization(doc["model"], doc["M"], doc["N"], doc["L"],
                            doc["rho"], mats)


def _realization(model, M, N, L, rho, mats) -> ChannelRealization:
    eigs = np.empty((L, M))
    for i in range(L):
        eigs[i] = np.sort(np.linalg.eigvalsh(mats[i].conj().T @ mats[i]).real)
    log_rho = np.log(rho)
    with np.errstate(divide="ignore"):
        if log_rho != 0.0:
            alpha = -np.log(eigs) / log_rho
        else:
            alpha = np.full_like(eigs, np.nan)
    return ChannelRealization(model, M, N, L, rho, mats, eigs, alpha)


def sample_channel(M: int, N: int, L: int, model: str, rho: float,
                   rng) -> ChannelRealization:
    """Draw i.i.d. CN(0,1) fading; one matrix replicated L times when
    long-term static, L independent draws when short-term."""
    if model not in (LONG_TERM, SHORT_TERM):
        raise ValueError(f"unknown channel model {model!r}")
    if rho <= 0:
        raise ValueError("rho must be positive")
    n_draws = 1 if model == LONG_TERM else L
    mats = (rng.standard_normal((n_draws, N, M))
            + 1j * rng.standard_normal((n_draws, N, M))) * np.sqrt(0.5)
    if model == LONG_TERM:
        mats = np.repeat(mats, L, axis=0)
    return _realization(model, M, N, L, rho, mats)


@dataclass
class RealChannelStack:
    ell: int
    block_length: int          # T
    matrix: np.ndarray         # 2*N*T*ell x 2*M*T*L
    noise_var: float = NOISE_VAR_PER_REAL_DIM


def _real_block(h_complex: np.ndarray) -> np.ndarray:
    return np.block([[h_complex.real, -h_complex.imag],
                     [h_complex.imag, h_complex.real]])


def realify(chan: ChannelRealization, T: int, ell: int) -> RealChannelStack:
    """First 2*N*T*ell rows of the L-block real-valued session matrix.

    Each diagonal block is sqrt(rho/M) * I_T kron [[Re,-Im],[Im,Re]].
    """
    if not 1 <= ell <= chan.L:
        raise ValueError(f"ell = {ell} outside 1..L = {chan.L}")
    scale = np.sqrt(chan.rho / chan.M)
    rows = 2 * chan.N * T
    cols = 2 * chan.M * T
    full = np.zeros((rows * chan.L, cols * chan.L))
    eye_t = np.eye(T)
    for r in range(chan.L):
        block = scale * np.kron(eye_t, _real_block(chan.matrices[r]))
        full[r * rows:(r + 1) * rows, r * cols:(r + 1) * cols] = block
    return RealChannelStack(ell, T, full[:rows * ell, :])


def transmit(x: np.ndarray, chan: ChannelRealization, T: int, ell: int,
             rng, noiseless: bool = False) -> np.ndarray:
    """y_ell = H_ell x + w with white real noise of variance 1/2 per entry."""
    stack = realify(chan, T, ell)
    x = np.asarray(x, dtype=float)
    if x.shape != (stack.matrix.shape[1],):
        raise ValueError(
            f"x has shape {x.shape}, expected ({stack.matrix.shape[1]},)")
    y = stack.matrix @ x
    if not noiseless:
        y = y + rng.normal(0.0, np.sqrt(stack.noise_var), size=y.shape)
    return y
