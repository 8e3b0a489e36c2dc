"""Nested lattice codebooks: mod-p construction A, mod-Lambda encoding, radii.

A nested code pairs a coding lattice with a shaping sublattice obtained by
integer self-similar scaling.  Messages are cosets of the shaping lattice in
the coding lattice; the transmitted vector is the dithered coset
representative folded into the shaping Voronoi region.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import gammaln

from . import treesearch

# p^k cosets are enumerated outright up to this size; beyond it the generic
# search-based quantizer takes over
COSET_TABLE_LIMIT = 4096


def _gram_schmidt_mu(b):
    m = b.shape[1]
    q = np.zeros_like(b)
    mu = np.zeros((m, m))
    norms = np.zeros(m)
    for i in range(m):
        v = b[:, i].copy()
        for j in range(i):
            mu[i, j] = (b[:, i] @ q[:, j]) / norms[j]
            v -= mu[i, j] * q[:, j]
        q[:, i] = v
        norms[i] = v @ v
    return mu, norms


def lll_reduce(basis, delta: float = 0.75) -> np.ndarray:
    """Basis reduction (columns are generators); spans the same lattice.

    Internal preprocessing only: a reduced basis keeps the exact
    closest-point search shallow.  Plain floating-point Lenstra-Lenstra-
    Lovasz, ample for the dimensions used here.
    """
    b = np.array(basis, dtype=float)
    m = b.shape[1]
    mu, norms = _gram_schmidt_mu(b)
    k = 1
    while k < m:
        for j in range(k - 1, -1, -1):
            r = round(mu[k, j])
            if r:
                b[:, k] -= r * b[:, j]
                mu[k, :j] -= r * mu[j, :j]
                mu[k, j] -= r
        if norms[k] >= (delta - mu[k, k - 1] ** 2) * norms[k - 1]:
            k += 1
        else:
            b[:, [k - 1, k]] = b[:, [k, k - 1]]
            mu, norms = _gram_schmidt_mu(b)
            k = max(k - 1, 1)
    return b


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    f = 3
    while f * f <= p:
        if p % f == 0:
            return False
        f += 2
    return True


@dataclass
class CosetQuantizer:
    """Exact nearest-point quantizer for a construction-A lattice.

    The lattice is scale * (C + p Z^m) with C the table of code digit
    vectors, so the closest point is found by folding the target modulo the
    axis period against every coset and keeping the best.
    """

    digits: np.ndarray   # (n_cosets, m) integer digit table
    scale: float
    p: int

    @property
    def cosets(self) -> np.ndarray:
        return self.digits * self.scale

    @property
    def period(self) -> float:
        return self.scale * self.p

    def nearest(self, x: np.ndarray) -> np.ndarray:
        d = x[None, :] - self.cosets
        wrapped = d - self.period * np.round(d / self.period)
        best = int(np.argmin(np.einsum("ij,ij->i", wrapped, wrapped)))
        return x - wrapped[best]

    def nearest_batch(self, xs: np.ndarray) -> np.ndarray:
        """Batched quantization via one matmul per digit value: the distance
        to coset c decomposes as sum_i W[n, i, c_i]."""
        n_cosets = self.digits.shape[0]
        masks = [(self.digits == v).astype(float).T for v in range(self.p)]
        per = self.period
        out = np.empty_like(xs)
        chunk = max(1, (1 << 22) // n_cosets)
        for lo in range(0, xs.shape[0], chunk):
            blk = xs[lo:lo + chunk]
            dist = np.zeros((blk.shape[0], n_cosets))
            for v in range(self.p):
                d = blk - v * self.scale
                w = d - per * np.round(d / per)
                dist += (w * w) @ masks[v]
            best = np.argmin(dist, axis=1)
            d = blk - self.cosets[best]
            out[lo:lo + chunk] = blk - (d - per * np.round(d / per))
        return out


@dataclass
class LatticeGenerator:
    """Full-rank lattice basis; points are ``basis @ z`` for integer z."""

    dimension: int
    basis: np.ndarray
    volume: float
    fast_quantizer: CosetQuantizer | None = None

    @classmethod
    def from_basis(cls, basis, fast_quantizer=None) -> "LatticeGenerator":
        basis = np.asarray(basis, dtype=float)
        m = basis.shape[0]
        if basis.shape != (m, m):
            raise ValueError("basis must be square")
        sign, logdet = np.linalg.slogdet(basis)
        if sign == 0:
            raise ValueError("singular basis")
        return cls(m, basis, math.exp(logdet), fast_quantizer)

    @cached_property
    def _qr(self):
        q, r = np.linalg.qr(self.basis)
        signs = np.sign(np.diag(r))
        signs[signs == 0] = 1.0
        return q * signs[None, :], r * signs[:, None]

    @cached_property
    def _quantizer_qr(self):
        # reduced basis keeps the exact search shallow at covering distance;
        # strongest columns go last so the bottom-up search decides them first
        if self.dimension > 4:
            reduced = lll_reduce(self.basis)
            from scipy.linalg import qr as _qr_piv
            _, _, piv = _qr_piv(reduced, pivoting=True)
            reduced = reduced[:, piv[::-1]]
        else:
            reduced = self.basis
        q, r = np.linalg.qr(reduced)
        signs = np.sign(np.diag(r))
        signs[signs == 0] = 1.0
        return reduced, q * signs[None, :], r * signs[:, None]

    def is_lower_triangular(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(np.triu(self.basis, 1)) <= tol))

    def nearest_point(self, x: np.ndarray) -> np.ndarray:
        """Exact nearest lattice point to x.

        Construction-A lattices answer by coset enumeration; anything else
        goes through the zero-bias stack search on a reduced basis.
        """
        x = np.asarray(x, dtype=float)
        if self.fast_quantizer is not None:
            return self.fast_quantizer.nearest(x)
        reduced, q, r = self._quantizer_qr
        z, _ = treesearch.dfs_closest_point(r, q.T @ x)
        return reduced @ np.asarray(z, dtype=float)

    def nearest_batch(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        if self.fast_quantizer is not None:
            return self.fast_quantizer.nearest_batch(xs)
        reduced, q, r = self._quantizer_qr
        targets = xs @ q
        out = np.empty_like(xs)
        for i in range(xs.shape[0]):
            z, _ = treesearch.dfs_closest_point(r, targets[i])
            out[i] = reduced @ np.asarray(z, dtype=float)
        return out

    def scaled(self, factor: float) -> "LatticeGenerator":
        fq = self.fast_quantizer
        if fq is not None:
            fq = CosetQuantizer(fq.digits, fq.scale * factor, fq.p)
        return LatticeGenerator(self.dimension, self.basis * factor,
                                self.volume * factor ** self.dimension, fq)


def mod_lambda(x, lattice: LatticeGenerator) -> np.ndarray:
    """Fold x into the fundamental Voronoi region: x - Q(x)."""
    x = np.asarray(x, dtype=float)
    return x - lattice.nearest_point(x)


@dataclass
class RadiusEstimates:
    r_pack: float
    r_eff: float
    r_cov: float
    method: str   # "exact-enumeration" | "approximate"


def effective_radius(volume: float, m: int) -> float:
    # radius of the sphere whose volume equals the cell volume
    return math.exp((math.log(volume) + gammaln(m / 2 + 1)
                     - (m / 2) * math.log(math.pi)) / m)


def _shortest_vector_exact(lattice: LatticeGenerator, budget: int):
    q, r = lattice._qr
    m = lattice.dimension
    col_norms = np.linalg.norm(lattice.basis, axis=0)
    radius_sq = float(np.min(col_norms)) ** 2 * (1 + 1e-12)
    points, _ = treesearch.sphere_enumerate(r, np.zeros(m), radius_sq,
                                            cap=budget)
    best = None
    for z in points:
        if not any(z):
            continue
        v = lattice.basis @ np.asarray(z, dtype=float)
        n = float(v @ v)
        if best is None or n < best:
            best = n
    return math.sqrt(best)


def _shortest_vector_sampled(lattice: LatticeGenerator, rng, n=20000):
    m = lattice.dimension
    reduced = lattice._quantizer_qr[0]
    best = float(np.min(np.linalg.norm(reduced, axis=0)))
    zs = rng.integers(-2, 3, size=(n, m))
    zs = zs[np.any(zs != 0, axis=1)]
    if zs.shape[0]:
        norms = np.linalg.norm(zs @ reduced.T, axis=1)
        best = min(best, float(np.min(norms)))
    return best


def estimate_radii(lattice: LatticeGenerator, mode: str = "auto",
                   rng=None, cover_samples: int = 4096,
                   enum_budget: int = 500_000) -> RadiusEstimates:
    """Packing, effective, and covering radius estimates.

    r_eff is exact.  r_pack is exact (shortest-vector enumeration) for
    dimension <= 16 unless mode forces otherwise; above that a sampled
    approximation is used and tagged.  r_cov is a Monte Carlo lower bound
    (max quantization distance over random points) in either mode.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    m = lattice.dimension
    r_eff = effective_radius(lattice.volume, m)

    exact = mode == "exact" or (mode == "auto" and m <= 16)
    if exact:
        try:
            shortest = _shortest_vector_exact(lattice, enum_budget)
            method = "exact-enumeration"
        except treesearch.ListSizeExceeded:
            shortest = _shortest_vector_sampled(lattice, rng)
            method = "approximate"
    else:
        shortest = _shortest_vector_sampled(lattice, rng)
        method = "approximate"

    targets = (rng.random((cover_samples, m)) @ lattice.basis.T)
    folded = targets - lattice.nearest_batch(targets)
    r_cov = float(np.max(np.linalg.norm(folded, axis=1)))

    return RadiusEstimates(shortest / 2.0, r_eff, r_cov, method)


def construction_a_basis(p: int, k: int, m: int, code_rows: np.ndarray):
    """Lower-triangular mod-p basis [[I, 0], [P, pI]] scaled to unit volume.

    Returns (kappa, basis) with kappa = p^(-(m-k)/m) so that
    kappa^m * p^(m-k) = 1.
    """
    kappa = p ** (-(m - k) / m)
    g = np.zeros((m, m))
    g[:k, :k] = np.eye(k)
    g[k:, :k] = code_rows
    g[k:, k:] = p * np.eye(m - k)
    return kappa, kappa * g


def _coset_quantizer(p: int, k: int, scale: float,
                     code_rows: np.ndarray) -> CosetQuantizer | None:
    if p ** k > COSET_TABLE_LIMIT:
        return None
    m = k + code_rows.shape[0]
    digits = np.indices((p,) * k).reshape(k, -1).T     # (p^k, k)
    table = np.zeros((p ** k, m), dtype=np.int64)
    table[:, :k] = digits
    table[:, k:] = (digits @ code_rows.T.astype(np.int64)) % p
    return CosetQuantizer(table, scale, p)


@dataclass
class NestedCode:
    """Coding lattice, shaping sublattice, and the mod-p descriptor."""

    dimension: int
    p: int
    k: int
    seed: int
    kappa: float
    zeta_s: float
    rate_r1: float
    block_length: int          # channel uses per round (T)
    nesting_ratio: int         # shaping = ratio * coding
    coding: LatticeGenerator
    shaping: LatticeGenerator
    u0: np.ndarray
    sigma_sq_estimate: float = 0.5
    cover_radius_estimate: float = 0.0
    power_slack: float = 0.0

    @property
    def message_count(self) -> int:
        return self.nesting_ratio ** self.dimension

    def message_digits(self, index: int) -> np.ndarray:
        if not 0 <= index < self.message_count:
            raise ValueError(f"message index {index} outside "
                             f"[0, {self.message_count})")
        s = self.nesting_ratio
        digits = np.empty(self.dimension, dtype=np.int64)
        for i in range(self.dimension):
            digits[i] = index % s
            index //= s
        return digits

    def digits_to_message(self, digits) -> int:
        s = self.nesting_ratio
        index = 0
        for d in reversed(np.asarray(digits, dtype=np.int64) % s):
            index = index * s + int(d)
        return index

    def to_json(self) -> str:
        def rows(mat):
            return [" ".join(repr(float(v)) for v in row) for row in mat]
        doc = {
            "m": self.dimension, "p": self.p, "k": self.k, "seed": self.seed,
            "kappa": self.kappa, "zeta_s": self.zeta_s,
            "R1": self.rate_r1, "T": self.block_length,
            "nesting_ratio": self.nesting_ratio,
            "u0": [repr(float(v)) for v in self.u0],
            "coding_basis": rows(self.coding.basis),
            "shaping_basis": rows(self.shaping.basis),
            "sigma_sq_estimate": self.sigma_sq_estimate,
            "cover_radius_estimate": self.cover_radius_estimate,
            "power_slack": self.power_slack,
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "NestedCode":
        doc = json.loads(text)
        m, p, k = doc["m"], doc["p"], doc["k"]

        def parse(rows):
            return np.array([[float(v) for v in row.split()] for row in rows])

        shaping_basis = parse(doc["shaping_basis"])
        coding_basis = parse(doc["coding_basis"])
        scale = shaping_basis[0, 0]
        code_rows = np.round(shaping_basis[k:, :k] / scale)
        ratio = doc["nesting_ratio"]
        fq_s = _coset_quantizer(p, k, scale, code_rows)
        fq_c = _coset_quantizer(p, k, scale / ratio, code_rows)
        return cls(
            dimension=m, p=p, k=k, seed=doc["seed"], kappa=doc["kappa"],
            zeta_s=doc["zeta_s"], rate_r1=doc["R1"], block_length=doc["T"],
            nesting_ratio=ratio,
            coding=LatticeGenerator.from_basis(coding_basis, fq_c),
            shaping=LatticeGenerator.from_basis(shaping_basis, fq_s),
            u0=np.array([float(v) for v in doc["u0"]]),
            sigma_sq_estimate=doc["sigma_sq_estimate"],
            cover_radius_estimate=doc["cover_radius_estimate"],
            power_slack=doc["power_slack"],
        )


def build_loeliger_code(M: int, N: int, T: int, L: int, p: int, k: int,
                        seed: int, target_rate_r1: float,
                        calib_samples: int = 20_000,
                        code_rows: np.ndarray | None = None) -> NestedCode:
    """Construct a nested mod-p code for an M x N, T-use, L-round link.

    The mod-p basis kappa*[[I,0],[P,pI]] has unit fundamental volume; the
    shaping lattice is its scaled copy calibrated by Monte Carlo so the
    dither second moment per real dimension is 1/2 (giving E|u|^2 = MTL,
    the transmit power budget).  The coding lattice is the shaping lattice
    shrunk by an integer nesting ratio holding 2^(R1*T) message cosets.

    ``code_rows`` overrides the random draw of P (used by tests).
    """
    m = 2 * M * T * L
    if not is_prime(p):
        raise ValueError(f"p = {p} is not prime")
    if not 1 <= k < m:
        raise ValueError(f"k = {k} must satisfy 1 <= k < m = {m}")
    if target_rate_r1 <= 0:
        raise ValueError("target rate must be positive")

    ratio_exact = 2.0 ** (target_rate_r1 * T / m)
    ratio = round(ratio_exact)
    if ratio < 2 or abs(ratio - ratio_exact) > 1e-9:
        r_lo = max(2, math.floor(ratio_exact))
        r_hi = max(r_lo + 1, math.ceil(ratio_exact))
        raise ValueError(
            f"rate {target_rate_r1} bpcu is not achievable by integer "
            f"self-similar nesting with p={p}, k={k} (codebook p^k={p**k} "
            f"per mod-p class); nearest achievable rates are "
            f"{m * math.log2(r_lo) / T:.4f} and "
            f"{m * math.log2(r_hi) / T:.4f} bpcu")

    rng = np.random.default_rng(seed)
    if code_rows is None:
        code_rows = rng.integers(0, p, size=(m - k, k)).astype(float)
    else:
        code_rows = np.asarray(code_rows, dtype=float) % p
        if code_rows.shape != (m - k, k):
            raise ValueError("code_rows must have shape (m-k, k)")

    kappa, gp = construction_a_basis(p, k, m, code_rows)
    fq_p = _coset_quantizer(p, k, kappa, code_rows)
    lat_p = LatticeGenerator.from_basis(gp, fq_p)

    # dither second-moment calibration: sigma^2(zeta * Lambda_p) scales as
    # zeta^2, so one Monte Carlo pass on Lambda_p fixes zeta_s
    targets = rng.random((calib_samples, m)) @ gp.T
    folded = targets - lat_p.nearest_batch(targets)
    norms_sq = np.einsum("ij,ij->i", folded, folded)
    sigma_sq_p = float(np.mean(norms_sq)) / m
    zeta_s = math.sqrt(0.5 / sigma_sq_p)

    shaping = lat_p.scaled(zeta_s)
    coding = shaping.scaled(1.0 / ratio)

    mtl = M * T * L
    cover_est = zeta_s * math.sqrt(float(np.max(norms_sq)))
    return NestedCode(
        dimension=m, p=p, k=k, seed=seed, kappa=kappa, zeta_s=zeta_s,
        rate_r1=target_rate_r1, block_length=T, nesting_ratio=ratio,
        coding=coding, shaping=shaping, u0=np.zeros(m),
        sigma_sq_estimate=zeta_s ** 2 * sigma_sq_p,
        cover_radius_estimate=cover_est,
        power_slack=cover_est ** 2 / mtl - 1.0,
    )


def sample_dither(code: NestedCode, rng) -> np.ndarray:
    """Dither uniform over the shaping Voronoi region."""
    t = code.shaping.basis @ rng.random(code.dimension)
    return mod_lambda(t, code.shaping)


def encode(message_index: int, code: NestedCode, dither: np.ndarray):
    """Map a message to (transmit vector x, codeword c).

    c is the representative of the message coset inside the shaping region;
    x = [c - dither] mod shaping lattice.
    """
    digits = code.message_digits(message_index)
    point = code.coding.basis @ digits.astype(float) + code.u0
    c = mod_lambda(point, code.shaping)
    x = mod_lambda(c - np.asarray(dither, dtype=float), code.shaping)
    return x, c
