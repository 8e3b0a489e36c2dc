"""Build a nested mod-p codebook and inspect its geometry.

The shaping lattice is calibrated so a dither uniform over its cell has
second moment 1/2 per real dimension, which makes the transmitted vector
meet the power budget E|x|^2 = M*T*L on average.  The coding lattice is the
shaping lattice shrunk by an integer factor; the factor^m cosets carry the
message bits.
"""

import numpy as np

from lastseq import build_loeliger_code, encode, sample_dither, estimate_radii

M, N, T, L = 2, 2, 3, 2
code = build_loeliger_code(M, N, T, L, p=29, k=12, seed=42,
                           target_rate_r1=8.0, calib_samples=20_000)

print(f"dimension m = {code.dimension}, mod-p parameters p={code.p}, "
      f"k={code.k}, kappa={code.kappa:.4f}")
print(f"shaping scale zeta_s = {code.zeta_s:.4f} "
      f"(dither second moment {code.sigma_sq_estimate:.4f}, target 0.5)")
print(f"nesting ratio {code.nesting_ratio} -> "
      f"{code.message_count} messages = 2^(R1*T) = 2^{int(8.0 * T)}")
print(f"cell volumes: coding {code.coding.volume:.4g}, "
      f"shaping {code.shaping.volume:.4g}")

rng = np.random.default_rng(0)
u = sample_dither(code, rng)
x, c = encode(int(rng.integers(code.message_count)), code, u)
print(f"\none encoded frame: |x|^2 = {x @ x:.2f} (budget MTL = {M * T * L})")

powers = []
for _ in range(200):
    u = sample_dither(code, rng)
    x, _ = encode(int(rng.integers(code.message_count)), code, u)
    powers.append(x @ x)
print(f"mean |x|^2 over 200 frames: {np.mean(powers):.2f}")

radii = estimate_radii(code.shaping, rng=np.random.default_rng(1),
                       cover_samples=2000)
print(f"\nshaping radii ({radii.method}): packing {radii.r_pack:.3f}, "
      f"effective {radii.r_eff:.3f}, covering >= {radii.r_cov:.3f}")
print("descriptor round-trips through JSON:",
      len(code.to_json()), "bytes")
