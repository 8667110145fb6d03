"""Greedy packing of separated expander tuples and covering estimates.

Desk-scale instantiation of the packing phenomenon: sample Haar tuples,
keep the certified expanders, and admit a sample when it is measurably
delta-separated from every member so far (an online maximal family). The
closed-form count bounds are evaluated on a log scale so they stay finite
for the sizes where the true counts are astronomically large.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
import numpy as np

from .expanders import certify, haar_tuple
from .geometry import orbit_distance, tuple_distance
from .linalg import MatrixTuple, RngSpec, ginibre_singular_mean, sample_haar_unitary, save_tuple
from .superop import SuperOperator, operator_norm

__all__ = [
    "PackingFamily",
    "CoverEstimate",
    "TailRow",
    "TailReport",
    "greedy_pack",
    "greedy_cover",
    "greedy_packing_count",
    "packing_upper_bound",
    "net_size_bound",
    "subgaussian_tail_check",
]


@dataclass
class PackingFamily:
    """A greedily built family of pairwise delta-separated expander tuples."""

    members: list[MatrixTuple]
    pairwise: np.ndarray
    accept_delta: float
    eps: float
    seed: RngSpec
    rejected_count: int
    gap_values: list[float] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.members)

    def log_count(self) -> float:
        return math.log(self.count) if self.count else -math.inf

    def save(self, out_dir) -> list[Path]:
        """Write member tuple files, family.csv (i, j, delta_ij) and meta.json."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        for i, m in enumerate(self.members):
            p = out / f"member_{i:04d}.json"
            save_tuple(p, m)
            paths.append(p)
        fam = out / "family.csv"
        with fam.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "j", "delta_ij"])
            for i in range(self.count):
                for j in range(i + 1, self.count):
                    w.writerow([i, j, format(self.pairwise[i, j], ".17g")])
        paths.append(fam)
        meta = out / "meta.json"
        n = self.members[0].n if self.members else 0
        N = self.members[0].dim if self.members else 0
        meta.write_text(
            json.dumps(
                {
                    "n": n,
                    "N": N,
                    "eps": self.eps,
                    "delta": self.accept_delta,
                    "seed": self.seed.to_json(),
                    "members": self.count,
                    "rejected": self.rejected_count,
                    "log_count": self.log_count() if self.count else None,
                    "log_count_upper_bound": packing_upper_bound(n, N, self.accept_delta)
                    if self.count and self.accept_delta > 0
                    else None,
                },
                indent=2,
            )
            + "\n"
        )
        paths.append(meta)
        return paths


def _pair_delta(u: MatrixTuple, v: MatrixTuple, tol: float) -> float:
    """Measured separation of two unitary tuples (self-norms are exactly n)."""
    val = operator_norm(
        SuperOperator(u, v), method="auto", tol=tol, witness=False
    ).value
    return max(1.0 - val / u.n, 0.0)


def greedy_pack(
    n: int,
    N: int,
    eps: float,
    delta: float,
    max_samples: int,
    rng: RngSpec,
    gap_tol: float = 1e-6,
    norm_tol: float = 1e-6,
) -> PackingFamily:
    """Online maximal family: admit certified samples separated from all members.

    Admission order is fixed by the sample stream, so identical seeds
    reproduce identical families. An empty family is a valid outcome.
    """
    if n < 1 or N < 1 or max_samples < 0:
        raise ValueError("n, N must be positive and max_samples non-negative")
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must be in [0, 1], got {delta}")
    members: list[MatrixTuple] = []
    gaps: list[float] = []
    rows: list[list[float]] = []
    rejected = 0
    for idx in range(max_samples):
        gen = rng.substream(idx)
        u = haar_tuple(n, N, gen)
        cert = certify(u, tol=gap_tol, rng=gen)
        if cert.epsilon < eps:
            rejected += 1
            continue
        deltas = []
        ok = True
        for m in members:
            d = _pair_delta(u, m, norm_tol)
            deltas.append(d)
            if d < delta:
                ok = False
                break
        if not ok:
            rejected += 1
            continue
        for row, d in zip(rows, deltas):
            row.append(d)
        rows.append(deltas + [0.0])
        members.append(u)
        gaps.append(cert.gap.value)
    count = len(members)
    pairwise = np.zeros((count, count))
    for i in range(count):
        for j in range(i):
            pairwise[i, j] = pairwise[j, i] = rows[i][j]
    return PackingFamily(
        members=members,
        pairwise=pairwise,
        accept_delta=delta,
        eps=eps,
        seed=rng,
        rejected_count=rejected,
        gap_values=gaps,
    )


@dataclass
class CoverEstimate:
    """Greedy cover of a tuple cloud: every point within radius of a center."""

    radius: float
    centers: list[MatrixTuple]
    metric: str
    count: int
    center_indices: list[int] = field(default_factory=list)
    max_assignment_distance: float = 0.0

    def to_json(self) -> dict:
        return {
            "radius": float(self.radius),
            "metric": self.metric,
            "count": int(self.count),
            "center_indices": list(self.center_indices),
            "max_assignment_distance": float(self.max_assignment_distance),
        }


def _metric_fn(metric: str, orbit_restarts: int, rng):
    if metric == "d":
        return tuple_distance
    if metric == "d_prime":
        def d_prime(a, b):
            return orbit_distance(a, b, restarts=orbit_restarts, rng=rng).upper

        return d_prime
    raise ValueError(f"metric must be 'd' or 'd_prime', got {metric!r}")


def greedy_cover(
    points: list[MatrixTuple],
    radius: float,
    metric: str = "d",
    orbit_restarts: int = 6,
    rng=None,
) -> CoverEstimate:
    """Farthest-point greedy cover; the count upper-bounds the covering number.

    For metric "d_prime" the distances are ascent upper bounds, which keeps
    the cover property valid (a point within the reported distance is within
    the true orbit distance too).
    """
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if not points:
        return CoverEstimate(radius, [], metric, 0)
    dist = _metric_fn(metric, orbit_restarts, rng)
    to_cover = np.full(len(points), np.inf)
    centers: list[int] = []
    next_center = 0
    while True:
        centers.append(next_center)
        c = points[next_center]
        for i, p in enumerate(points):
            if to_cover[i] > 0:
                to_cover[i] = min(to_cover[i], dist(p, c))
        worst = int(np.argmax(to_cover))
        if to_cover[worst] < radius:
            break
        next_center = worst
    return CoverEstimate(
        radius=radius,
        centers=[points[i] for i in centers],
        metric=metric,
        count=len(centers),
        center_indices=centers,
        max_assignment_distance=float(np.max(to_cover)),
    )


def greedy_packing_count(
    points: list[MatrixTuple], min_dist: float, metric: str = "d", rng=None
) -> int:
    """Size of the online maximal sub-family at pairwise distance >= min_dist."""
    dist = _metric_fn(metric, 6, rng)
    kept: list[MatrixTuple] = []
    for p in points:
        if all(dist(p, q) >= min_dist for q in kept):
            kept.append(p)
    return len(kept)


def packing_upper_bound(n: int, N: int, delta: float) -> float:
    """Log of the volume-argument cap on a delta-separated family in U(N)^n.

    log m_max <= 2 n N^2 log(1 + sqrt(2/delta)).
    """
    if n < 1 or N < 1:
        raise ValueError("n, N must be positive")
    if not 0.0 < delta <= 2.0:
        raise ValueError(f"delta must be in (0, 2], got {delta}")
    return 2.0 * n * N * N * math.log1p(math.sqrt(2.0 / delta))


def net_size_bound(n: int, N: int, delta: float) -> float:
    """Log of the generic functional-net count: 2 n N^2 log(1 + 2/delta).

    This caps how many N x N blocks any n-dimensional space needs for a
    (1-delta)^-1-embedding; the matching lower bound exp(b n N^2) holds for
    the extremal spaces with an existential constant b > 0.
    """
    if n < 1 or N < 1:
        raise ValueError("n, N must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    return 2.0 * n * N * N * math.log1p(2.0 / delta)


@dataclass
class TailRow:
    lam: float
    empirical: float
    bound: float
    sigma: float
    flagged: bool


@dataclass
class TailReport:
    """SubGaussian tail table for S = sum_j Re tr(u_j) over Haar tuples.

    bound = exp(-k_hat lam^2 / n) with k_hat = b_N^2 the squared mean
    singular value of the Ginibre ensemble; a row is flagged when the
    empirical exceedance beats the bound by more than 3 binomial sigma.
    """

    rows: list[TailRow]
    n: int
    N: int
    samples: int
    b_n: float
    k_hat: float
    empirical_variance: float

    @property
    def any_flagged(self) -> bool:
        return any(r.flagged for r in self.rows)

    def to_csv_rows(self):
        yield ["lambda", "empirical", "bound", "sigma", "flagged"]
        for r in self.rows:
            yield [
                format(r.lam, ".17g"),
                format(r.empirical, ".17g"),
                format(r.bound, ".17g"),
                format(r.sigma, ".17g"),
                int(r.flagged),
            ]


def subgaussian_tail_check(
    n: int,
    N: int,
    samples: int,
    rng: RngSpec,
    lambdas=None,
    bn_samples: int = 200,
) -> TailReport:
    """Monte Carlo exceedance frequencies of sum_j Re tr(u_j) against the tail bound."""
    if samples < 100:
        raise ValueError(f"need at least 100 samples, got {samples}")
    b_n = ginibre_singular_mean(N, bn_samples, rng.substream(0))
    k_hat = b_n * b_n
    sums = np.empty(samples)
    for s in range(samples):
        gen = rng.substream(1, s)
        total = 0.0
        for _ in range(n):
            total += float(np.trace(sample_haar_unitary(N, gen)).real)
        sums[s] = total
    if lambdas is None:
        lambdas = [0.5 * k * math.sqrt(n) for k in range(9)]
    rows = []
    for lam in lambdas:
        emp = float(np.mean(sums > lam))
        bound = math.exp(-k_hat * lam * lam / n)
        sigma = math.sqrt(max(bound * (1.0 - bound), 0.0) / samples)
        rows.append(TailRow(lam, emp, bound, sigma, emp > bound + 3.0 * sigma))
    return TailReport(
        rows=rows,
        n=n,
        N=N,
        samples=samples,
        b_n=b_n,
        k_hat=k_hat,
        empirical_variance=float(np.var(sums, ddof=1)),
    )
