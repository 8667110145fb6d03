"""Monte Carlo experiments comparing unitary and Gaussian matrix sums.

Norm statistics of sum_j a_j U_j (x) conj(U_j) restricted to the trace-zero
space, the decoupled Gaussian comparison sum_j a_j Y_j (x) conj(Y'_j) that
dominates it, the twirl average E[Y (x) conj(Y)] (the rank-one projection
onto the identity direction), and the diagonal-product constant of |Y| whose
inverse controls the comparison.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DenseCapExceeded
from .linalg import MatrixTuple, RngSpec, sample_ginibre, sample_haar_unitary
from .parallel import ordered_map
from .superop import SuperOperator, dense_cap, operator_norm

__all__ = [
    "MomentReport",
    "ChiReport",
    "TwirlReport",
    "unitary_sum_norm",
    "gaussian_decoupled_norm",
    "chi_n_estimate",
    "twirl_identity_check",
    "matrix_coefficient_sum",
    "bootstrap_mean_ci",
]


@dataclass
class MomentReport:
    """Mean/std of a random matrix-sum norm over independent samples."""

    n: int
    N: int
    coeffs: tuple
    samples: int
    mean_norm: float
    std_norm: float
    values: tuple[float, ...] = field(repr=False, default=())
    comparison: Optional[float] = None
    ratio: Optional[float] = None
    rhs: Optional[float] = None
    seed: Optional[RngSpec] = None

    def to_json(self) -> dict:
        out = {
            "n": self.n,
            "N": self.N,
            "samples": self.samples,
            "mean_norm": float(self.mean_norm),
            "std_norm": float(self.std_norm),
        }
        if self.comparison is not None:
            out["comparison"] = float(self.comparison)
        if self.ratio is not None:
            out["ratio"] = float(self.ratio)
        if self.rhs is not None:
            out["rhs"] = float(self.rhs)
        if self.seed is not None:
            out["seed"] = self.seed.to_json()
        return out


def _coeff_l2(coeffs) -> float:
    return math.sqrt(sum(abs(a) ** 2 for a in coeffs))


def _validate_coeffs(coeffs) -> tuple:
    coeffs = tuple(complex(a) for a in coeffs)
    if not coeffs:
        raise ValueError("coeffs must be nonempty")
    return coeffs


def unitary_sum_norm(
    coeffs: Sequence[complex],
    N: int,
    samples: int,
    rng: RngSpec,
    method: str = "auto",
    tol: float = 1e-8,
) -> MomentReport:
    """Norm statistics of sum_j a_j U_j (x) conj(U_j) on the trace-zero space."""
    coeffs = _validate_coeffs(coeffs)
    if samples < 10:
        raise ValueError(f"need at least 10 samples, got {samples}")
    n = len(coeffs)
    a = np.asarray(coeffs).reshape(n, 1, 1)

    def one(s: int) -> float:
        gen = rng.substream(2, s)
        u = np.stack([sample_haar_unitary(N, gen) for _ in range(n)])
        T = SuperOperator(
            MatrixTuple(a * u), MatrixTuple(u, unitary=True), restrict_h0=True
        )
        return operator_norm(T, method=method, tol=tol, rng=gen, witness=False).value

    vals = np.array(ordered_map(one, range(samples)))
    l2 = _coeff_l2(coeffs)
    return MomentReport(
        n=n,
        N=N,
        coeffs=coeffs,
        samples=samples,
        mean_norm=float(vals.mean()),
        std_norm=float(vals.std(ddof=1)),
        values=tuple(float(v) for v in vals),
        ratio=float(vals.mean() / l2) if l2 > 0 else None,
        seed=rng,
    )


def gaussian_decoupled_norm(
    coeffs: Sequence[complex],
    N: int,
    samples: int,
    rng: RngSpec,
    method: str = "auto",
    tol: float = 1e-8,
) -> MomentReport:
    """Norm statistics of the decoupled Gaussian sum sum_j a_j Y_j (x) conj(Y'_j)."""
    coeffs = _validate_coeffs(coeffs)
    if samples < 10:
        raise ValueError(f"need at least 10 samples, got {samples}")
    n = len(coeffs)
    a = np.asarray(coeffs).reshape(n, 1, 1)

    def one(s: int) -> float:
        gen_y = rng.substream(0, s)
        gen_yp = rng.substream(1, s)
        y = np.stack([sample_ginibre(N, gen_y) for _ in range(n)])
        yp = np.stack([sample_ginibre(N, gen_yp) for _ in range(n)])
        T = SuperOperator(MatrixTuple(a * y), MatrixTuple(yp))
        return operator_norm(T, method=method, tol=tol, rng=gen_y, witness=False).value

    vals = np.array(ordered_map(one, range(samples)))
    l2 = _coeff_l2(coeffs)
    return MomentReport(
        n=n,
        N=N,
        coeffs=coeffs,
        samples=samples,
        mean_norm=float(vals.mean()),
        std_norm=float(vals.std(ddof=1)),
        values=tuple(float(v) for v in vals),
        ratio=float(vals.mean() / l2) if l2 > 0 else None,
        seed=rng,
    )


def bootstrap_mean_ci(
    values: Sequence[float], rng, resamples: int = 1000, level: float = 0.95
) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean. Non-rigorous, reporting only."""
    vals = np.asarray(values, dtype=float)
    if vals.size < 2:
        raise ValueError("need at least two values")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    idx = gen.integers(0, vals.size, size=(resamples, vals.size))
    means = vals[idx].mean(axis=1)
    lo, hi = np.quantile(means, [(1 - level) / 2, (1 + level) / 2])
    return float(lo), float(hi)


@dataclass
class ChiReport:
    """Monte Carlo estimate of E[|Y|_ii |Y|_jj] over off-diagonal pairs."""

    value: float
    ci_lo: float
    ci_hi: float
    N: int
    samples: int

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "samples": self.samples,
            "estimate": float(self.value),
            "ci_lo": float(self.ci_lo),
            "ci_hi": float(self.ci_hi),
        }


def chi_n_estimate(N: int, samples: int, rng: RngSpec) -> ChiReport:
    """Average of |Y|_ii |Y|_jj over all i != j pairs and Ginibre draws.

    |Y| is the positive square root of Y*Y via SVD. The estimate converges
    to the squared quarter-circle mean (8/(3 pi))^2 ~ 0.7205 as N grows and
    stays bounded away from 0, which is what the comparison constant needs.
    """
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    if samples < 100:
        raise ValueError(f"need at least 100 samples, got {samples}")

    def one(s: int) -> float:
        y = sample_ginibre(N, rng.substream(0, s))
        _, sv, vh = np.linalg.svd(y)
        mod = vh.conj().T @ (sv[:, None] * vh)
        d = np.real(np.diag(mod))
        total = d.sum()
        return float((total * total - np.dot(d, d)) / (N * (N - 1)))

    vals = np.array(ordered_map(one, range(samples)))
    lo, hi = bootstrap_mean_ci(vals, rng.substream(1))
    return ChiReport(float(vals.mean()), lo, hi, N, samples)


@dataclass
class TwirlReport:
    """Distance of the empirical mean of Y (x) conj(Y) from the identity projection."""

    residual: float
    centered_residual: float
    N: int
    samples: int

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "samples": self.samples,
            "residual": float(self.residual),
            "centered_residual": float(self.centered_residual),
        }


def twirl_identity_check(N: int, samples: int, rng: RngSpec, cap: int = 8) -> TwirlReport:
    """Estimate E[Y (x) conj(Y)] at small N and compare to the rank-one projection.

    Also reports the norm of the estimate composed with (I - P), which is the
    Monte Carlo form of the mean of the centered sum vanishing.
    """
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    if N > cap:
        raise DenseCapExceeded(f"twirl materializes N^4 entries; N={N} exceeds cap {cap}")
    d = N * N
    acc = np.zeros((d, d), dtype=complex)
    batch = 2048
    done = 0
    chunk_idx = 0
    while done < samples:
        take = min(batch, samples - done)
        gen = rng.substream(0, chunk_idx)
        ys = np.stack([sample_ginibre(N, gen) for _ in range(take)])
        acc += np.einsum("sac,sbd->abcd", ys, ys.conj()).reshape(d, d)
        done += take
        chunk_idx += 1
    est = acc / samples
    v = np.eye(N, dtype=complex).reshape(-1) / math.sqrt(N)
    p = np.outer(v, v.conj())
    residual = float(np.linalg.norm(est - p))
    centered = float(np.linalg.norm(est @ (np.eye(d) - p)))
    return TwirlReport(residual, centered, N, samples)


def matrix_coefficient_sum(
    coeff_mats: Sequence[np.ndarray],
    N: int,
    samples: int,
    rng: RngSpec,
) -> MomentReport:
    """Norm statistics of sum_j a_j (x) U_j (x) conj(U_j) (1-P) with k x k blocks a_j.

    Materializes the k N^2-dimensional matrix, so k N^2 must stay under the
    dense cap. Records the Gaussian-comparison right-hand side
    max(|sum a*a|, |sum a a*|)^(1/2) for headroom checks. With k = 1 this
    reduces exactly to the scalar unitary sum.
    """
    mats = [np.asarray(a, dtype=complex) for a in coeff_mats]
    if not mats:
        raise ValueError("coeff_mats must be nonempty")
    k = mats[0].shape[0]
    for a in mats:
        if a.shape != (k, k):
            raise ValueError("all coefficient blocks must be square of equal size")
    if samples < 10:
        raise ValueError(f"need at least 10 samples, got {samples}")
    d = N * N
    if k * d > dense_cap():
        raise DenseCapExceeded(
            f"k*N^2 = {k * d} exceeds dense cap {dense_cap()}"
        )
    n = len(mats)
    v = np.eye(N, dtype=complex).reshape(-1) / math.sqrt(N)
    q = np.eye(d, dtype=complex) - np.outer(v, v.conj())

    def one(s: int) -> float:
        # same stream and draw order as the scalar path, so k = 1 agrees exactly
        gen = rng.substream(2, s)
        total = np.zeros((k * d, k * d), dtype=complex)
        for a in mats:
            u = sample_haar_unitary(N, gen)
            ku = np.kron(u, u.conj()) @ q
            total += np.kron(a, ku)
        return float(np.linalg.svd(total, compute_uv=False)[0])

    vals = np.array(ordered_map(one, range(samples)))
    sq1 = np.linalg.svd(sum(a.conj().T @ a for a in mats), compute_uv=False)[0]
    sq2 = np.linalg.svd(sum(a @ a.conj().T for a in mats), compute_uv=False)[0]
    rhs = math.sqrt(max(float(sq1), float(sq2)))
    return MomentReport(
        n=n,
        N=N,
        coeffs=tuple(mats),
        samples=samples,
        mean_norm=float(vals.mean()),
        std_norm=float(vals.std(ddof=1)),
        values=tuple(float(x) for x in vals),
        rhs=rhs,
        seed=rng,
    )
