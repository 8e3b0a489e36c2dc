"""Lift a fading channel to its real form and equalize it.

The feedback filter's determinant carries the channel mutual information:
log det(B^T B) equals 2*T*ell times the log determinant of
I + rho/M H^H H for a long-term static channel, which is what the receiver
compares against the code rate when it prechecks for outage.
"""

import numpy as np

from lastseq.channel import sample_channel, realify, transmit
from lastseq.equalizer import (compute_filters, feedback_logdet,
                               reference_logdet, mod_rate)

M, N, T, L = 2, 2, 3, 2
rho_db = 20.0
rho = 10 ** (rho_db / 10)

rng = np.random.default_rng(7)
chan = sample_channel(M, N, L, "long-term", rho, rng)
print("channel eigenvalues:", np.round(chan.eigenvalues[0], 3))

for ell in (1, 2):
    stack = realify(chan, T, ell)
    print(f"\nround {ell}: real channel matrix {stack.matrix.shape}, "
          f"noise var {stack.noise_var} per dimension")
    forward, feedback = compute_filters(stack)
    lhs = feedback_logdet(feedback)
    rhs = reference_logdet(chan, T, ell)
    print(f"  log det(B^T B) = {lhs:.6f}, channel-side value = {rhs:.6f}, "
          f"difference {abs(lhs - rhs):.2e}")
    print(f"  supported rate R_mod({ell}) = {mod_rate(feedback, T):.2f} bpcu "
          f"(target R1 = 8)")

x = rng.standard_normal(2 * M * T * L) * 0.7
y = transmit(x, chan, T, 1, rng)
print(f"\ntransmit round 1: received {y.shape[0]} real samples")
