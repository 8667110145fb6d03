"""Complex dense linear algebra kernel.

Traces, Hilbert-Schmidt norms, decompositions and random-matrix sampling
shared by every other module. Matrices are plain complex ``numpy`` arrays;
``MatrixTuple`` carries an n-tuple of square matrices of a common dimension,
which is the basic object everything else works on.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, TupleFormatError, UnitarityError

__all__ = [
    "UNITARY_TOL",
    "RngSpec",
    "MatrixTuple",
    "as_generator",
    "as_square_matrix",
    "normalized_trace",
    "hs_inner",
    "hs_norm",
    "svd",
    "polar_unitary",
    "trace_norm",
    "spectral_norm",
    "sample_ginibre",
    "sample_haar_unitary",
    "sample_haar_unitary_qr",
    "ginibre_singular_mean",
    "load_tuple",
    "save_tuple",
]

# Absolute tolerance on per-member unitarity residuals ||m* m - I||_F.
UNITARY_TOL = 1e-10


def as_square_matrix(m, name: str = "matrix") -> np.ndarray:
    """Validate and return ``m`` as a square complex array with finite entries."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {a.shape}")
    if a.shape[0] < 1:
        raise DimensionMismatch(f"{name} must be at least 1x1")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def normalized_trace(m) -> complex:
    """Trace divided by the dimension, so the identity has trace one."""
    a = as_square_matrix(m)
    return complex(np.trace(a)) / a.shape[0]


def hs_inner(a, b, normalized: bool = True) -> complex:
    """Hilbert-Schmidt inner product tr(a b*), divided by N when normalized."""
    x = as_square_matrix(a, "a")
    y = as_square_matrix(b, "b")
    if x.shape != y.shape:
        raise DimensionMismatch(f"shape mismatch {x.shape} vs {y.shape}")
    val = complex(np.vdot(y, x))  # tr(y* x) = tr(x y*)
    return val / x.shape[0] if normalized else val


def hs_norm(m, normalized: bool = True) -> float:
    """Hilbert-Schmidt norm; the normalized variant gives the identity norm 1."""
    a = as_square_matrix(m)
    f = float(np.linalg.norm(a))
    return f / math.sqrt(a.shape[0]) if normalized else f


def svd(m) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Singular value decomposition ``m = u @ diag(s) @ vh`` with s descending.

    LAPACK's iteration cap is the convergence authority here; a failure
    surfaces as ``numpy.linalg.LinAlgError``.
    """
    return np.linalg.svd(as_square_matrix(m))


def polar_unitary(m) -> np.ndarray:
    """Unitary factor of the polar decomposition of ``m``.

    Computed as ``u @ vh`` from the SVD, which is defined (though not unique)
    also for singular inputs. It maximizes Re tr(W* m) over unitary W with
    optimum tr|m|, which is all the optimizers in this package need.
    """
    u, _, vh = svd(m)
    return u @ vh


def trace_norm(m) -> float:
    """Sum of singular values."""
    return float(np.linalg.svd(as_square_matrix(m), compute_uv=False).sum())


def spectral_norm(m) -> float:
    """Largest singular value (operator norm on column vectors)."""
    return float(np.linalg.svd(as_square_matrix(m), compute_uv=False)[0])


# ---------------------------------------------------------------------------
# Seeding and sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RngSpec:
    """Deterministic random stream: (seed, stream_id) -> bit-identical samples.

    Parallel workers each take their own ``stream_id`` (or a ``substream``)
    so no mutable RNG state is ever shared.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if int(self.stream_id) < 0:
            raise ValueError(f"stream_id must be non-negative, got {self.stream_id}")

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        )

    def stream(self, stream_id: int) -> "RngSpec":
        return RngSpec(self.seed, stream_id)

    def substream(self, *key: int) -> np.random.Generator:
        """Generator for a nested deterministic stream, e.g. per sample index."""
        return np.random.default_rng(
            np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *key))
        )

    def to_json(self) -> dict:
        return {"seed": int(self.seed), "stream_id": int(self.stream_id)}

    @classmethod
    def from_json(cls, obj: dict) -> "RngSpec":
        unknown = set(obj) - {"seed", "stream_id"}
        if unknown:
            raise TupleFormatError(f"unknown RngSpec keys: {sorted(unknown)}")
        return cls(int(obj["seed"]), int(obj.get("stream_id", 0)))


def as_generator(rng) -> np.random.Generator:
    """Accept an RngSpec, Generator, int seed, or None (fixed default stream)."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngSpec):
        return rng.generator()
    if rng is None:
        return np.random.default_rng(0)
    return np.random.default_rng(rng)


def sample_ginibre(N: int, rng=None) -> np.ndarray:
    """Ginibre matrix: i.i.d. complex Gaussian entries with variance 1/N.

    Real and imaginary parts are independent N(0, 1/(2N)), so E tr(Y* Y) = N.
    """
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    g = as_generator(rng)
    re = g.standard_normal((N, N))
    im = g.standard_normal((N, N))
    return (re + 1j * im) / math.sqrt(2 * N)


def sample_haar_unitary(N: int, rng=None) -> np.ndarray:
    """Haar-distributed unitary: the polar factor of a Ginibre matrix."""
    return polar_unitary(sample_ginibre(N, rng))


def sample_haar_unitary_qr(N: int, rng=None) -> np.ndarray:
    """Haar unitary via QR with the R-diagonal phase fix.

    Independent construction kept as a cross-check oracle for the polar route.
    """
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    g = as_generator(rng)
    x = (g.standard_normal((N, N)) + 1j * g.standard_normal((N, N))) / math.sqrt(2)
    q, r = np.linalg.qr(x)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def ginibre_singular_mean(N: int, samples: int, rng=None) -> float:
    """Monte Carlo estimate of E[N^-1 tr|Y|] for the Ginibre ensemble.

    Converges to the quarter-circle mean 8/(3*pi) as N grows.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    g = as_generator(rng)
    vals = [trace_norm(sample_ginibre(N, g)) / N for _ in range(samples)]
    return float(np.mean(vals))


# ---------------------------------------------------------------------------
# Matrix tuples
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MatrixTuple:
    """An n-tuple of N x N complex matrices, stored stacked as shape (n, N, N).

    ``unitary`` is a validated cache: constructing with ``unitary=True``
    re-checks every member against the residual tolerance n*N*1e-10.
    """

    mats: np.ndarray
    unitary: bool = False

    def __post_init__(self):
        a = np.asarray(self.mats, dtype=complex)
        if a.ndim != 3 or a.shape[1] != a.shape[2]:
            raise DimensionMismatch(
                f"matrix tuple must have shape (n, N, N), got {a.shape}"
            )
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise DimensionMismatch(f"empty tuple of shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix tuple contains non-finite entries")
        a = np.ascontiguousarray(a)
        a.setflags(write=False)
        object.__setattr__(self, "mats", a)
        if self.unitary:
            res = self.unitarity_residual()
            tol = self.n * self.dim * UNITARY_TOL
            if res > tol:
                raise UnitarityError(
                    f"tuple flagged unitary but residual {res:.3e} exceeds {tol:.3e}"
                )

    @property
    def n(self) -> int:
        return self.mats.shape[0]

    @property
    def dim(self) -> int:
        return self.mats.shape[1]

    def __getitem__(self, j: int) -> np.ndarray:
        return self.mats[j]

    def __iter__(self):
        return iter(self.mats)

    def unitarity_residual(self) -> float:
        """Max over members of ||m* m - I||_F."""
        eye = np.eye(self.dim)
        prods = np.einsum("jba,jbc->jac", self.mats.conj(), self.mats)
        return float(max(np.linalg.norm(p - eye) for p in prods))

    def member_residuals(self) -> np.ndarray:
        eye = np.eye(self.dim)
        prods = np.einsum("jba,jbc->jac", self.mats.conj(), self.mats)
        return np.array([np.linalg.norm(p - eye) for p in prods])

    def require_unitary(self):
        if not self.unitary:
            raise ValueError("operation requires a unitary tuple (unitary flag unset)")

    def transform(self, left=None, right=None) -> "MatrixTuple":
        """Two-sided multiplication m_j -> left @ m_j @ right."""
        out = self.mats
        if left is not None:
            left = as_square_matrix(left, "left")
            out = np.einsum("ab,jbc->jac", left, out)
        if right is not None:
            right = as_square_matrix(right, "right")
            out = np.einsum("jab,bc->jac", out, right)
        flag = self.unitary
        for f in (left, right):
            if f is not None:
                flag = flag and np.linalg.norm(f.conj().T @ f - np.eye(self.dim)) <= self.dim * UNITARY_TOL
        return MatrixTuple(out, unitary=flag)

    def scale(self, c: complex) -> "MatrixTuple":
        flag = self.unitary and abs(abs(c) - 1.0) <= UNITARY_TOL
        return MatrixTuple(self.mats * c, unitary=flag)

    def adjoint(self) -> "MatrixTuple":
        """Member-wise conjugate transpose."""
        return MatrixTuple(self.mats.conj().transpose(0, 2, 1), unitary=self.unitary)

    # -- file format ---------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "N": self.dim,
            "unitary": bool(self.unitary),
            "matrices": [
                [[float(z.real), float(z.imag)] for z in m.reshape(-1)]
                for m in self.mats
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MatrixTuple":
        for key in ("n", "N", "matrices"):
            if key not in obj:
                raise TupleFormatError(f"tuple file missing field '{key}'")
        n, N = int(obj["n"]), int(obj["N"])
        mats = np.empty((n, N, N), dtype=complex)
        raw = obj["matrices"]
        if len(raw) != n:
            raise TupleFormatError(
                f"field 'matrices' has {len(raw)} members, expected n={n}"
            )
        for j, flat in enumerate(raw):
            if len(flat) != N * N:
                raise TupleFormatError(
                    f"member {j} has {len(flat)} entries, expected N*N={N * N}"
                )
            for k, pair in enumerate(flat):
                if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
                    raise TupleFormatError(
                        f"member {j}, entry {k}: expected [re, im] pair, got {pair!r}"
                    )
                mats[j, k // N, k % N] = complex(pair[0], pair[1])
        unitary = bool(obj.get("unitary", False))
        if unitary:
            t = cls(mats, unitary=False)
            residuals = t.member_residuals()
            tol = n * N * UNITARY_TOL
            worst = int(np.argmax(residuals))
            if residuals[worst] > tol:
                raise UnitarityError(
                    f"member {worst} fails unitarity: residual "
                    f"{residuals[worst]:.3e} > {tol:.3e}"
                )
        return cls(mats, unitary=unitary)


def save_tuple(path, t: MatrixTuple) -> None:
    """Write a tuple file at full double precision.

    json emits shortest round-trip representations, so every entry reloads
    bit-exactly.
    """
    Path(path).write_text(json.dumps(t.to_json()) + "\n")


def load_tuple(path) -> MatrixTuple:
    """Read and validate a tuple file, with parse context on failure."""
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TupleFormatError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(obj, dict):
        raise TupleFormatError(f"{path}: top level must be a JSON object")
    try:
        return MatrixTuple.from_json(obj)
    except TupleFormatError as exc:
        raise type(exc)(f"{path}: {exc}") from exc
