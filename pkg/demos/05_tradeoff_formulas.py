"""Closed-form corner of the library: tradeoff curves and complexity limits."""

import numpy as np

from lastseq import analysis

print("2x2 diversity-multiplexing breakpoints, one round:",
      analysis.dmt_curve(2, 2, analysis.uniform_zeta(2), 1).breakpoints)
print("same channel seen over two rounds:",
      analysis.dmt_curve(2, 2, analysis.uniform_zeta(2), 2).breakpoints)

print("\nbest ARQ diversity at effective gain 1 (M=N=L=2):")
print("  long-term :", analysis.optimal_arq_tradeoff(2, 2, 2, 1.0))
print("  short-term:", analysis.optimal_arq_tradeoff(2, 2, 2, 1.0,
                                                     "short-term"))

print("\naverage time-out budget, fixed rate (2,2,T=3,L=2):")
for snr_db in (20, 30, 40, 80):
    rho = 10 ** (snr_db / 10)
    print(f"  {snr_db:3d} dB: {analysis.avg_gamma_out_asymptotic(2, 2, 3, 2, rho):9.2f}"
          f"   sphere/stack ratio {analysis.complexity_ratio(2, 2, 3, 2, rho):6.3f}")

lam = np.array([0.6, 1.8])
from lastseq.lattices import RadiusEstimates
radii = RadiusEstimates(0.45, 1.0, 1.3, "approximate")
b = analysis.bias_schedule(lam, 100.0, (1.0, 1.0), 2, 2, 2, radii)
alpha = analysis.bias_to_alpha(b, radii)
r_b = analysis.achievable_rate(14.0, alpha, 2, 2)
print(f"\nSNR-adaptive bias at 20 dB: b = {b:.4f}, rate penalty leaves "
      f"{r_b:.2f} of 14.00 bpcu")

rng = np.random.default_rng(0)
est = analysis.outage_probability(2, 2, 1, 1, "long-term", 100.0, 8.0,
                                  (1.0, 1.0), 400_000, rng)
print(f"\n2x2 outage at 20 dB, 8 bpcu: {est.probability:.4f} "
      f"({est.events} events)")
