"""Seeded sampling of subgaussian Kronecker factors and empirical estimators.

Sampling is counter based: every factor entry of sample s sits at a fixed
position s * stride + offset of a Philox stream keyed by (seed, stream), so
any sample can be regenerated without generating its predecessors and batch
generation is vectorized.  Each entry consumes exactly one uniform double,
mapped through the inverse normal CDF for Gaussian entries; independent
copies use a distinct stream constant.

All reductions run single threaded in fixed order (or over fixed chunk
boundaries), so identical seeds give bit-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.random import Generator, Philox
from scipy.special import gammaln, ndtri

from .errors import ArgumentError, ShapeError, SizeError
from .identities import pair_contraction
from .tensor import ArrayLike, Dims

# Largest Kronecker vector the samplers will materialize.
KRON_MATERIALIZE_CAP = 2**26

_MASK64 = (1 << 64) - 1

# Stream-role constants; suites combine them with small per-role offsets.
STREAM_FACTORS = 0x10
STREAM_FACTORS_BAR = 0x20
STREAM_BOOTSTRAP = 0x30

# Grid on which the subgaussian norms sup_p ||Y||_p / sqrt(p) were evaluated.
_PSI2_P_GRID = np.linspace(1.0, 200.0, 20000)


def _lp_norm_curve(family: str, q: float, p: np.ndarray) -> np.ndarray:
    """Analytic ||Y||_p for each supported entry family."""
    if family == "gaussian":
        return np.sqrt(2.0) * np.exp((gammaln((p + 1.0) / 2.0) - gammaln(0.5)) / p)
    if family == "rademacher":
        return np.ones_like(p)
    if family == "uniform_sym":
        return np.sqrt(3.0) * (p + 1.0) ** (-1.0 / p)
    if family == "two_point":
        return (2.0 * q) ** (1.0 / p - 0.5)
    raise ArgumentError(f"unknown family {family!r}")


def psi2_numeric(family: str, q: float = 0.25) -> float:
    """sup_p ||Y||_p / sqrt(p) evaluated on a dense p grid."""
    curve = _lp_norm_curve(family, q, _PSI2_P_GRID) / np.sqrt(_PSI2_P_GRID)
    return float(curve.max())


# Analytic values for gaussian / rademacher (the sup is attained at p = 1);
# grid-computed upper bounds, rounded up to 3 digits, for the others.
PSI2_GAUSSIAN = math.sqrt(2.0 / math.pi)
PSI2_RADEMACHER = 1.0
PSI2_UNIFORM_SYM = 0.867


@dataclass(frozen=True)
class DistributionSpec:
    """Entry distribution: family plus its subgaussian-norm bound.

    Every family has mean 0 and variance 1.  two_point(q) takes the values
    +-sqrt(1/(2q)) with probability q each and 0 otherwise, q <= 1/2.
    ``bound_L`` is the value used inside the moment functionals, which
    require a bound that is at least 1.
    """

    family: str
    psi2_bound: float
    q: float = 0.25

    @property
    def bound_L(self) -> float:
        return max(1.0, self.psi2_bound)

    @property
    def label(self) -> str:
        return f"two_point({self.q})" if self.family == "two_point" else self.family


def distribution(family: str, q: float = 0.25) -> DistributionSpec:
    """DistributionSpec with the stored subgaussian-norm constant for the family."""
    if family == "gaussian":
        return DistributionSpec("gaussian", PSI2_GAUSSIAN)
    if family == "rademacher":
        return DistributionSpec("rademacher", PSI2_RADEMACHER)
    if family == "uniform_sym":
        return DistributionSpec("uniform_sym", PSI2_UNIFORM_SYM)
    if family == "two_point":
        if not 0.0 < q <= 0.5:
            raise ArgumentError(f"two_point needs 0 < q <= 1/2, got {q}")
        return DistributionSpec("two_point", math.ceil(psi2_numeric("two_point", q) * 1000) / 1000, q)
    raise ArgumentError(f"unknown family {family!r}")


def _map_uniforms(u: np.ndarray, dist: DistributionSpec) -> np.ndarray:
    # u lies on the lattice {0, ..., 2^53 - 1} / 2^53; the half-ulp shift
    # keeps the gaussian map finite and exactly symmetric.
    if dist.family == "gaussian":
        return ndtri(u + 2.0**-54)
    if dist.family == "rademacher":
        return np.where(u < 0.5, -1.0, 1.0)
    if dist.family == "uniform_sym":
        return (2.0 * (u + 2.0**-54) - 1.0) * math.sqrt(3.0)
    if dist.family == "two_point":
        v = math.sqrt(1.0 / (2.0 * dist.q))
        return np.where(u < dist.q, v, np.where(u >= 1.0 - dist.q, -v, 0.0))
    raise ArgumentError(f"unknown family {dist.family!r}")


class FactorSampler:
    """Counter-based sampler of the d independent factor vectors.

    Sample s occupies Philox counter block s * stride_blocks of the stream
    keyed by (seed, stream); axis l occupies a fixed slot range inside the
    block, so ``factors(s)`` reproduces row s of ``batch`` bit-identically.
    """

    def __init__(self, dims: Dims, dist: DistributionSpec, seed: int, stream: int):
        self.dims = dims
        self.dist = dist
        self.seed = int(seed) & _MASK64
        self.stream = int(stream) & _MASK64
        self.offsets = []
        pos = 0
        for n in dims.sizes:
            self.offsets.append(pos)
            pos += n
        self.entries = pos
        self.stride_blocks = (pos + 3) // 4  # Philox advances in 4-double blocks

    def _key(self):
        return np.array([self.seed, self.stream], dtype=np.uint64)

    def batch(self, start: int, count: int) -> list[np.ndarray]:
        """Factor matrices of shape (count, n_l) for samples start..start+count-1."""
        bg = Philox(key=self._key())
        if start:
            bg.advance(start * self.stride_blocks)
        u = Generator(bg).random(count * self.stride_blocks * 4)
        u = u.reshape(count, self.stride_blocks * 4)
        values = _map_uniforms(u, self.dist)
        return [
            np.ascontiguousarray(values[:, off : off + n])
            for off, n in zip(self.offsets, self.dims.sizes)
        ]

    def factors(self, s: int) -> list[np.ndarray]:
        """The d factor vectors of sample s, regenerated standalone."""
        return [m[0] for m in self.batch(s, 1)]


def sample_factors(dims: Dims, dist: DistributionSpec, seed: int,
                   stream: int = STREAM_FACTORS, sample: int = 0) -> list[np.ndarray]:
    """The d independent factor vectors of one sample."""
    return FactorSampler(dims, dist, seed, stream).factors(sample)


def kronecker_vector(factors: Sequence[np.ndarray]) -> np.ndarray:
    """Kronecker product of the factor vectors, built by outer-product expansion."""
    total = 1
    for f in factors:
        total *= len(f)
    if total > KRON_MATERIALIZE_CAP:
        raise SizeError(f"Kronecker vector of length {total} exceeds {KRON_MATERIALIZE_CAP}")
    x = np.asarray(factors[0], dtype=np.float64)
    for f in factors[1:]:
        x = (x[:, None] * np.asarray(f, dtype=np.float64)[None, :]).reshape(-1)
    return x


def kronecker_batch(factor_mats: Sequence[np.ndarray]) -> np.ndarray:
    """Row-wise Kronecker product: (S, n_1), ..., (S, n_d) -> (S, N)."""
    S = factor_mats[0].shape[0]
    total = 1
    for m in factor_mats:
        total *= m.shape[1]
    if total > KRON_MATERIALIZE_CAP:
        raise SizeError(f"Kronecker vectors of length {total} exceed {KRON_MATERIALIZE_CAP}")
    x = factor_mats[0]
    for m in factor_mats[1:]:
        x = (x[:, :, None] * m[:, None, :]).reshape(S, -1)
    return x


def _trace_reduced(A: np.ndarray) -> float:
    # same pairwise reduction as the quadratic form, so that diagonal matrices
    # with +-1 factors give an exactly zero centered statistic
    return float(np.add.reduce(np.ascontiguousarray(np.diagonal(A))))


def chaos_statistic(A: np.ndarray, factors: Sequence[np.ndarray]) -> float:
    """X^T A X - trace(A) for X the Kronecker product of the factors."""
    A = np.asarray(A, dtype=np.float64)
    x = kronecker_vector(factors)
    if A.shape != (x.size, x.size):
        raise ShapeError(f"matrix shape {A.shape} does not match N = {x.size}")
    return float(np.add.reduce(x * (A @ x))) - _trace_reduced(A)


def chaos_batch(A: np.ndarray, factor_mats: Sequence[np.ndarray]) -> np.ndarray:
    """Vector of chaos statistics across a sample batch."""
    A = np.asarray(A, dtype=np.float64)
    X = kronecker_batch(factor_mats)
    if A.shape != (X.shape[1], X.shape[1]):
        raise ShapeError(f"matrix shape {A.shape} does not match N = {X.shape[1]}")
    return np.add.reduce(X * (X @ A.T), axis=1) - _trace_reduced(A)


def norm_statistic(A: np.ndarray, factors: Sequence[np.ndarray]) -> float:
    """||A X||_2 - ||A||_F (signed; tail suites take the absolute value)."""
    A = np.asarray(A, dtype=np.float64)
    x = kronecker_vector(factors)
    if A.shape[1] != x.size:
        raise ShapeError(f"matrix has {A.shape[1]} columns, expected {x.size}")
    y = A @ x
    fro = math.sqrt(float(np.add.reduce((A * A).reshape(-1))))
    return float(np.sqrt(np.add.reduce(y * y))) - fro


def norm_batch(A: np.ndarray, factor_mats: Sequence[np.ndarray]) -> np.ndarray:
    """Vector of norm-deviation statistics across a sample batch."""
    A = np.asarray(A, dtype=np.float64)
    X = kronecker_batch(factor_mats)
    if A.shape[1] != X.shape[1]:
        raise ShapeError(f"matrix has {A.shape[1]} columns, expected {X.shape[1]}")
    Y = X @ A.T
    fro = math.sqrt(float(np.add.reduce((A * A).reshape(-1))))
    return np.sqrt(np.add.reduce(Y * Y, axis=1)) - fro


def semi_decoupled_batch(A: ArrayLike, I, J,
                         factor_mats: Sequence[np.ndarray],
                         factor_bar_mats: Sequence[np.ndarray]) -> np.ndarray:
    """Semi-decoupled term values across a sample batch (one einsum)."""
    I = frozenset(I)
    J = frozenset(J)
    d = len(factor_mats)
    if not J <= I or not I <= set(range(1, d + 1)):
        raise ArgumentError(f"need J <= I <= [{d}], got I={sorted(I)}, J={sorted(J)}")
    spec = {}
    for l in range(1, d + 1):
        if l in J:
            spec[l] = ("tie_weight", factor_mats[l - 1] ** 2 - 1.0)
        elif l in I:
            spec[l] = ("tie_sum",)
        else:
            spec[l] = ("vec2", factor_mats[l - 1], factor_bar_mats[l - 1])
    return pair_contraction(A, spec, batch=True)


@dataclass
class SampleBatch:
    """One statistic per sample, with the stream coordinates that regenerate it."""

    seed: int
    stream: int
    count: int
    values: np.ndarray


@dataclass
class EmpiricalMoment:
    """Empirical L_p norm with a bootstrap 95% band."""

    p: float
    estimate: float
    ci_low: float
    ci_high: float
    count: int


def estimate_lp(batch: SampleBatch, p: float, resamples: int = 200) -> EmpiricalMoment:
    """Empirical L_p norm ((1/S) sum |v|^p)^(1/p) with a bootstrap band.

    Rescales by the batch maximum before taking powers, so large p cannot
    overflow; the bootstrap reuses the batch seed on a dedicated stream.
    """
    if p < 1:
        raise ArgumentError(f"p = {p} must be >= 1")
    S = batch.count
    if S < 100:
        raise ArgumentError(f"need at least 100 samples, got {S}")
    v = np.abs(np.asarray(batch.values, dtype=np.float64))
    if v.size != S:
        raise ArgumentError("batch count does not match stored values")
    m = float(v.max(initial=0.0))
    if m == 0.0:
        return EmpiricalMoment(p, 0.0, 0.0, 0.0, S)
    t = (v / m) ** p

    def lp_of(mean: np.ndarray | float) -> np.ndarray | float:
        return m * mean ** (1.0 / p)

    est = float(lp_of(np.add.reduce(t) / S))
    rng = Generator(Philox(key=np.array([batch.seed & _MASK64,
                                         (STREAM_BOOTSTRAP + batch.stream) & _MASK64],
                                        dtype=np.uint64)))
    stats = np.empty(resamples)
    chunk = 20
    for lo in range(0, resamples, chunk):
        hi = min(lo + chunk, resamples)
        idx = rng.integers(0, S, size=(hi - lo, S))
        stats[lo:hi] = lp_of(np.add.reduce(t[idx], axis=1) / S)
    lo_q, hi_q = np.quantile(stats, [0.025, 0.975])
    return EmpiricalMoment(p, est, min(float(lo_q), est), max(float(hi_q), est), S)


@dataclass
class TailFrequency:
    """Empirical exceedance frequency with a Wilson 95% interval."""

    t: float
    frequency: float
    ci_low: float
    ci_high: float
    count: int


def estimate_tail(batch: SampleBatch, t: float) -> TailFrequency:
    """Fraction of |v| > t with a Wilson 95% interval."""
    S = batch.count
    if S < 100:
        raise ArgumentError(f"need at least 100 samples, got {S}")
    hits = int(np.count_nonzero(np.abs(batch.values) > t))
    z = 1.959963984540054
    phat = hits / S
    denom = 1.0 + z * z / S
    center = (phat + z * z / (2 * S)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / S + z * z / (4 * S * S)) / denom
    return TailFrequency(t, phat, max(0.0, center - half), min(1.0, center + half), S)
