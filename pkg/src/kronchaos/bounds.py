"""Closed-form bound quantities for the Kronecker chaos.

Builds the reduced arrays obtained by partial traces over paired axes, the
symmetrization that preserves the quadratic form, and the three moment
functionals: the decoupled-chaos functional on an order-d array, the main
functional on the order-2d rearrangement of a square matrix, and the
norm-deviation functional on a Gram rearrangement.  Tail-bound formulas take
an explicit constant knob; the underlying theory only guarantees that some
dimension-dependent constant works, so knobs default to 1 and calibrated
values are reported, never asserted.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ArgumentError, AxisSetError, DegenerateInputError, ShapeError
from .identities import expected_quadratic
from .norms import NormEstimate, NormOptions, DEFAULT_OPTIONS, norm_objective, tensor_norm
from .partitions import Partition, partitions_into, subsets
from .tensor import (
    ArrayLike,
    Dims,
    PartialArray,
    TensorArray,
    as_partial,
    doubled_order,
    frobenius,
    rearrange_matrix,
)

_LETTERS = string.ascii_lowercase


# ---------------------------------------------------------------------------
# reduced arrays and symmetrization


def expected_chaos(A: TensorArray) -> float:
    """Sum of the entries at fully paired indices: the trace of the matrix form."""
    return expected_quadratic(A)


def build_reduced_array(A: TensorArray, I: Iterable[int]) -> PartialArray:
    """Partial trace of an order-2d array over the paired axes in I.

    The result lives on the surviving axes (I^c) u (I^c + d); I = [d] yields
    the scalar :func:`expected_chaos`, I = empty returns the array unchanged.
    """
    d = doubled_order(A.dims)
    I = sorted(set(I))
    if any(not 1 <= l <= d for l in I):
        raise AxisSetError(f"I = {I} is not a subset of [{d}]")
    letters = list(_LETTERS[: 2 * d])
    for l in I:
        letters[l - 1 + d] = letters[l - 1]
    keep = [l for l in range(1, 2 * d + 1) if l not in I and l - d not in I]
    out = "".join(letters[l - 1] for l in keep)
    data = np.einsum("".join(letters) + "->" + out, A.data)
    return PartialArray(keep, [A.dims.size(l) for l in keep], data)


def build_reduced_array_diag(A: TensorArray, I: Iterable[int], J: Iterable[int]) -> PartialArray:
    """Reduced array that also restricts the pairs in J to their diagonal.

    Sums over the paired axes in I \\ J and zeroes every entry whose J-pair
    coordinates differ; J = empty coincides with :func:`build_reduced_array`.
    """
    d = doubled_order(A.dims)
    I = frozenset(I)
    J = frozenset(J)
    if not J <= I:
        raise AxisSetError(f"J = {sorted(J)} is not a subset of I = {sorted(I)}")
    reduced = build_reduced_array(A, I - J)
    if not J:
        return reduced
    data = reduced.data.copy()
    for l in sorted(J):
        n = reduced.size(l)
        pos_a = reduced.axes.index(l)
        pos_b = reduced.axes.index(l + d)
        shape_a = [1] * reduced.order
        shape_a[pos_a] = n
        shape_b = [1] * reduced.order
        shape_b[pos_b] = n
        ar = np.arange(n)
        data = data * (ar.reshape(shape_a) == ar.reshape(shape_b))
    return PartialArray(reduced.axes, reduced.sizes, data)


def _swap_axes_perm(d: int, I: Iterable[int]) -> list[int]:
    perm = list(range(2 * d))
    for l in I:
        perm[l - 1], perm[l - 1 + d] = perm[l - 1 + d], perm[l - 1]
    return perm


def symmetrize(A: TensorArray) -> TensorArray:
    """Average the order-2d array over all swaps of paired axes.

    Generalizes (A + A^T) / 2: the quadratic form X^T A X is preserved for
    every realization while the result satisfies the pairwise symmetry
    condition exactly (iterated two-term averages are exactly swap-invariant
    in floating point).
    """
    d = doubled_order(A.dims)
    data = A.data
    for l in range(1, d + 1):
        data = 0.5 * (data + data.transpose(_swap_axes_perm(d, [l])))
    return TensorArray(A.dims, data)


def check_symmetry(A: TensorArray) -> bool:
    """True iff the array equals every single-pair axis swap of itself, exactly."""
    d = doubled_order(A.dims)
    return all(
        np.array_equal(A.data, A.data.transpose(_swap_axes_perm(d, [l])))
        for l in range(1, d + 1)
    )


# ---------------------------------------------------------------------------
# moment functionals


@dataclass
class NormTableRow:
    """One summand of a moment functional: a reduced array, a partition, its norm."""

    reduced_axes: tuple[int, ...]
    partition: Partition
    kappa: int
    estimate: NormEstimate

    @property
    def value(self) -> float:
        return self.estimate.value


@dataclass
class MomentValue:
    """A moment-functional value together with the table it was summed from."""

    p: float
    L: float
    value: float
    rows: list[NormTableRow]
    kappa_sums: dict[int, float] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


def _collect_warnings(rows: Sequence[NormTableRow]) -> list[str]:
    out = []
    for row in rows:
        for w in row.estimate.warnings:
            out.append(f"I={row.reduced_axes} P={row.partition}: {w}")
    return out


def decoupled_norm_table(B: ArrayLike, opts: NormOptions | None = None) -> list[NormTableRow]:
    """Norms of an order-d array over every partition of its axes."""
    pa = as_partial(B)
    opts = opts or DEFAULT_OPTIONS
    rows = []
    for kappa in range(1, pa.order + 1):
        for P in partitions_into(pa.axes, kappa):
            rows.append(NormTableRow((), P, kappa, tensor_norm(pa, P, opts)))
    return rows


def mp_decoupled(B: ArrayLike, p: float, opts: NormOptions | None = None,
                 table: list[NormTableRow] | None = None) -> MomentValue:
    """Decoupled-chaos moment functional: sum of p^(kappa/2) partition norms."""
    if p < 1:
        raise ArgumentError(f"p = {p} must be >= 1")
    rows = table if table is not None else decoupled_norm_table(B, opts)
    value = sum(p ** (row.kappa / 2.0) * row.value for row in rows)
    return MomentValue(p, 1.0, value, rows, warnings=_collect_warnings(rows))


def main_norm_table(A: TensorArray, opts: NormOptions | None = None) -> list[NormTableRow]:
    """Norms of every reduced array over every partition of its surviving axes."""
    d = doubled_order(A.dims)
    opts = opts or DEFAULT_OPTIONS
    rows = []
    for I in subsets(range(1, d + 1)):
        if len(I) == d:
            continue
        reduced = build_reduced_array(A, I)
        for kappa in range(1, reduced.order + 1):
            for P in partitions_into(reduced.axes, kappa):
                rows.append(NormTableRow(I, P, kappa, tensor_norm(reduced, P, opts)))
    return rows


def mp_main(A: TensorArray, p: float, L: float = 1.0, opts: NormOptions | None = None,
            table: list[NormTableRow] | None = None) -> MomentValue:
    """Main moment functional of the order-2d rearrangement of a square matrix.

    L^(2d) * sum over kappa of p^(kappa/2) times the summed partition norms of
    every proper reduced array; block counts beyond the surviving order have
    no partitions and contribute nothing.
    """
    if p < 2:
        raise ArgumentError(f"p = {p} must be >= 2")
    if L < 1:
        raise ArgumentError(f"L = {L} must be >= 1")
    d = doubled_order(A.dims)
    rows = table if table is not None else main_norm_table(A, opts)
    value = L ** (2 * d) * sum(p ** (row.kappa / 2.0) * row.value for row in rows)
    kappa_sums: dict[int, float] = {k: 0.0 for k in range(1, 2 * d + 1)}
    for row in rows:
        kappa_sums[row.kappa] += row.value
    return MomentValue(p, L, value, rows, kappa_sums, _collect_warnings(rows))


def gram_norm_table(A: np.ndarray, dims: Dims, opts: NormOptions | None = None) -> list[NormTableRow]:
    """Main norm table of the rearranged Gram matrix A^T A."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[1] != dims.total:
        raise ShapeError(f"matrix shape {A.shape} does not match N = {dims.total}")
    gram = rearrange_matrix(A.T @ A, dims)
    return main_norm_table(gram, opts)


def mp_norm(A: np.ndarray, dims: Dims, p: float, L: float = 1.0,
            opts: NormOptions | None = None,
            table: list[NormTableRow] | None = None) -> MomentValue:
    """Moment functional for the norm deviation | ||AX||_2 - ||A||_F |.

    Per block count kappa, takes the smaller of p^(kappa/2) m_kappa / ||A||_F
    and p^(kappa/4) sqrt(m_kappa), where m_kappa sums the partition norms of
    the reduced Gram arrays; the total carries the L^(2d) factor.
    """
    if p < 2:
        raise ArgumentError(f"p = {p} must be >= 2")
    if L < 1:
        raise ArgumentError(f"L = {L} must be >= 1")
    A = np.asarray(A, dtype=np.float64)
    fro = float(np.linalg.norm(A))
    if fro == 0.0:
        raise DegenerateInputError("zero matrix")
    d = dims.order
    rows = table if table is not None else gram_norm_table(A, dims, opts)
    kappa_sums: dict[int, float] = {k: 0.0 for k in range(1, 2 * d + 1)}
    for row in rows:
        kappa_sums[row.kappa] += row.value
    value = L ** (2 * d) * sum(
        min(p ** (k / 2.0) * mk / fro, p ** (k / 4.0) * math.sqrt(mk))
        for k, mk in kappa_sums.items()
    )
    return MomentValue(p, L, value, rows, kappa_sums, _collect_warnings(rows))


# ---------------------------------------------------------------------------
# tail bounds


@dataclass
class TailBound:
    """Evaluated tail bound: the clipped minimum over the applicable regimes."""

    t: float
    value: float
    regime: str
    regimes: dict[str, float]
    exponents: dict[str, float]


def _matrix_norms(A: np.ndarray) -> tuple[float, float]:
    A = np.asarray(A, dtype=np.float64)
    fro = float(np.linalg.norm(A))
    if fro == 0.0:
        raise DegenerateInputError("zero matrix")
    spec = float(np.linalg.svd(A, compute_uv=False)[0])
    return fro, spec


def tail_regimes_ax(A: np.ndarray, dims: Dims, t: float) -> dict[str, float]:
    """Exponents (at constant knob 1) of every regime applicable at t.

    Regimes: "small-t" for t <= n^(d/2) s, "large-t" for t >= n^(d/2) s, and
    "stable-rank" on [n^((d-1)/4) s, n^((d-1)/4) f], with s and f the spectral
    and Frobenius norms; the intervals overlap and every applicable bound holds.
    """
    if t < 0:
        raise ArgumentError(f"t = {t} must be >= 0")
    n = dims.sizes[0]
    if any(m != n for m in dims.sizes):
        raise ArgumentError(f"tail bound needs equal per-axis dims, got {dims.sizes}")
    d = dims.order
    A = np.asarray(A, dtype=np.float64)
    if A.shape[1] != dims.total:
        raise ShapeError(f"matrix has {A.shape[1]} columns, expected {dims.total}")
    fro, spec = _matrix_norms(A)
    out: dict[str, float] = {}
    if t <= n ** (d / 2.0) * spec:
        out["small-t"] = t * t / (n ** (d - 1.0) * spec * spec)
    if t >= n ** (d / 2.0) * spec:
        out["large-t"] = (t / spec) ** (2.0 / d)
    if n ** ((d - 1.0) / 4.0) * spec <= t <= n ** ((d - 1.0) / 4.0) * fro:
        out["stable-rank"] = t * t / (n ** ((d - 1.0) / 2.0) * fro * fro)
    return out


def tail_bound_ax(A: np.ndarray, dims: Dims, t: float, C_d: float = 1.0) -> TailBound:
    """Three-regime tail bound for | ||AX||_2 - ||A||_F |, clipped to [0, 1]."""
    if C_d <= 0:
        raise ArgumentError(f"C_d = {C_d} must be > 0")
    exponents = tail_regimes_ax(A, dims, t)
    regimes = {name: min(1.0, math.e**2 * math.exp(-C_d * e)) for name, e in exponents.items()}
    regime = min(regimes, key=lambda k: (regimes[k], k))
    return TailBound(t, regimes[regime], regime, regimes, exponents)


def hanson_wright_exponent(A: np.ndarray, K: float, t: float) -> float:
    """min(t^2 / (K^4 ||A||_F^2), t / (K^2 ||A||_2->2)) of the order-1 tail bound."""
    if t < 0:
        raise ArgumentError(f"t = {t} must be >= 0")
    if K <= 0:
        raise ArgumentError(f"K = {K} must be > 0")
    fro, spec = _matrix_norms(A)
    return min(t * t / (K**4 * fro * fro), t / (K**2 * spec))


def tail_bound_hanson_wright(A: np.ndarray, t: float, K: float, c: float = 1.0) -> float:
    """Two-regime quadratic-form tail bound 2 exp(-c min(...)), clipped to [0, 1]."""
    if c <= 0:
        raise ArgumentError(f"c = {c} must be > 0")
    return min(1.0, 2.0 * math.exp(-c * hanson_wright_exponent(A, K, t)))


@dataclass(frozen=True)
class MixedMomentBound:
    """Moment growth sum_k min_l p^expo[k][l] * scale[k][l], valid for p >= p0."""

    p0: float
    expo: tuple[tuple[float, ...], ...]
    scale: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if self.p0 < 0:
            raise ArgumentError("p0 must be >= 0")
        if len(self.expo) < 1 or len(self.expo) != len(self.scale):
            raise ArgumentError("need at least one term and aligned exponents/scales")
        width = len(self.expo[0])
        for e_row, g_row in zip(self.expo, self.scale):
            if len(e_row) != width or len(g_row) != width or width < 1:
                raise ArgumentError("every term needs the same nonempty label set")
            if any(e <= 0 for e in e_row) or any(g <= 0 for g in g_row):
                raise ArgumentError("exponents and scales must be > 0")

    @property
    def term_count(self) -> int:
        return len(self.expo)


def moments_to_tail(M: MixedMomentBound, t: float) -> float:
    """Tail bound implied by a mixed moment bound, clipped to [0, 1].

    e^p0 * exp(-min_k max_l (t / (e * d * scale))^(1/expo)) with d the number
    of terms in the moment bound.
    """
    if t <= 0:
        raise ArgumentError(f"t = {t} must be > 0")
    dterms = M.term_count
    exponent = min(
        max((t / (math.e * dterms * g)) ** (1.0 / e) for e, g in zip(e_row, g_row))
        for e_row, g_row in zip(M.expo, M.scale)
    )
    return min(1.0, math.exp(M.p0) * math.exp(-exponent))


def compare_norm_deviation(a: float, b: float) -> tuple[float, float]:
    """Envelope for |a - b| in terms of |a^2 - b^2|: (m / 3, m) with
    m = min(|a^2 - b^2| / b, sqrt(|a^2 - b^2|))."""
    if b <= 0:
        raise ArgumentError(f"b = {b} must be > 0")
    if a < 0:
        raise ArgumentError(f"a = {a} must be >= 0")
    gap = abs(a * a - b * b)
    m = min(gap / b, math.sqrt(gap))
    return (m / 3.0, m)


# ---------------------------------------------------------------------------
# combined report


@dataclass
class BoundReport:
    """Every bound quantity for one matrix: norm tables, moment values, tail curve.

    The moment values are redundant given the tables; ``recompute_mp_main``
    and ``recompute_mp_norm`` re-sum them, so stored values can always be
    audited against the stored tables.
    """

    dims: Dims
    p_grid: list[float]
    L: float
    C_tail: float
    matrix_fro: float
    main_rows: list[NormTableRow]
    gram_rows: list[NormTableRow]
    mp_main_values: dict[float, float]
    mp_norm_values: dict[float, float]
    mp_kappa: dict[int, float]
    tail_curve: list[TailBound]
    warnings: list[str]

    def recompute_mp_main(self, p: float) -> float:
        d = self.dims.order
        return self.L ** (2 * d) * sum(p ** (r.kappa / 2.0) * r.value for r in self.main_rows)

    def recompute_mp_norm(self, p: float) -> float:
        d = self.dims.order
        sums: dict[int, float] = {}
        for r in self.gram_rows:
            sums[r.kappa] = sums.get(r.kappa, 0.0) + r.value
        return self.L ** (2 * d) * sum(
            min(p ** (k / 2.0) * v / self.matrix_fro, p ** (k / 4.0) * math.sqrt(v))
            for k, v in sums.items()
        )

    def to_dict(self) -> dict:
        def row_dict(row: NormTableRow) -> dict:
            # comma-free rendering so CSV columns stay aligned
            return {
                "I": "{" + " ".join(str(x) for x in row.reduced_axes) + "}",
                "partition": "|".join(" ".join(str(x) for x in b) for b in row.partition.blocks),
                "kappa": row.kappa,
                "method": row.estimate.method,
                "value": row.value,
                "converged": row.estimate.converged,
            }

        return {
            "norm_rows": [row_dict(r) for r in self.main_rows],
            "gram_rows": [row_dict(r) for r in self.gram_rows],
            "mp_main": {f"{p:g}": v for p, v in self.mp_main_values.items()},
            "mp_norm": {f"{p:g}": v for p, v in self.mp_norm_values.items()},
            "mp_kappa": {str(k): v for k, v in self.mp_kappa.items()},
            "tail_curve": [{"t": tb.t, "bound": tb.value, "regime": tb.regime}
                           for tb in self.tail_curve],
            "warnings": sorted(set(self.warnings)),
        }


def compute_bound_report(A: np.ndarray, dims: Dims, p_grid: Sequence[float],
                         L: float = 1.0, C_tail: float = 1.0,
                         t_grid: Sequence[float] = (),
                         opts: NormOptions | None = None) -> BoundReport:
    """Compute every applicable bound quantity for a matrix with N columns.

    The quadratic-form functional needs a square matrix; the norm-deviation
    functional needs a nonzero one; the tail curve needs equal per-axis dims.
    Inapplicable parts are skipped with a warning rather than failing.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[1] != dims.total:
        raise ShapeError(f"matrix shape {A.shape} does not match N = {dims.total}")
    opts = opts or DEFAULT_OPTIONS
    warnings: list[str] = []
    main_rows: list[NormTableRow] = []
    gram_rows: list[NormTableRow] = []
    mp_main_values: dict[float, float] = {}
    mp_norm_values: dict[float, float] = {}
    mp_kappa: dict[int, float] = {}

    if A.shape[0] == A.shape[1]:
        A2d = rearrange_matrix(A, dims)
        main_rows = main_norm_table(A2d, opts)
        for p in p_grid:
            m = mp_main(A2d, p, L, table=main_rows)
            mp_main_values[p] = m.value
            warnings.extend(m.warnings)
    else:
        warnings.append("matrix is not square: skipping the quadratic-form functional")

    if np.any(A):
        gram_rows = gram_norm_table(A, dims, opts)
        for p in p_grid:
            m = mp_norm(A, dims, p, L, table=gram_rows)
            mp_norm_values[p] = m.value
            mp_kappa = m.kappa_sums
            warnings.extend(m.warnings)
    else:
        warnings.append("zero matrix: norm-deviation functional undefined")

    tail_curve: list[TailBound] = []
    if t_grid and len(set(dims.sizes)) == 1 and np.any(A):
        tail_curve = [tail_bound_ax(A, dims, t, C_tail) for t in t_grid]
    elif t_grid:
        warnings.append("tail curve skipped: needs equal per-axis dims and a nonzero matrix")

    return BoundReport(
        dims=dims,
        p_grid=list(p_grid),
        L=L,
        C_tail=C_tail,
        matrix_fro=float(np.linalg.norm(A)),
        main_rows=main_rows,
        gram_rows=gram_rows,
        mp_main_values=mp_main_values,
        mp_norm_values=mp_norm_values,
        mp_kappa=mp_kappa,
        tail_curve=tail_curve,
        warnings=warnings,
    )


# ---------------------------------------------------------------------------
# norm-inequality verifiers for reduced arrays


@dataclass
class ReductionLiftReport:
    """Constructive check that a partial trace costs at most sqrt(prod n_l) in norm."""

    reduced_value: float
    extended_value: float
    scale_factor: float
    lift_error: float
    passed: bool


def verify_reduction_lift(A: TensorArray, I: Iterable[int], P,
                          opts: NormOptions | None = None,
                          slack: float = 1e-6) -> ReductionLiftReport:
    """Check ||A^(I)||_P <= sqrt(prod_{l in I} n_l) * ||A||_{P + pairs(I)}.

    The reduced optimizer extends to a feasible point of the full array by
    normalized diagonal blocks on the pairs in I, with objective exactly
    1 / sqrt(prod n_l) times the reduced objective; the extended estimate is
    floored at that constructed value, so the inequality check is sound for
    certified lower bounds on both sides.
    """
    opts = opts or DEFAULT_OPTIONS
    d = doubled_order(A.dims)
    I = tuple(sorted(set(I)))
    reduced = build_reduced_array(A, I)
    est_red = tensor_norm(reduced, P, opts)
    P_red = est_red.partition

    pair_blocks = [(l, l + d) for l in I]
    P_ext = Partition(list(P_red.blocks) + pair_blocks, ground=range(1, 2 * d + 1))
    est_ext = tensor_norm(A, P_ext, opts)

    scale = 1.0
    for l in I:
        scale *= A.dims.size(l)
    scale = math.sqrt(scale)

    lift_error = 0.0
    ext_value = est_ext.value
    if est_red.factors is not None:
        by_block = dict(zip(P_red.blocks, est_red.factors))
        for l in I:
            n = A.dims.size(l)
            by_block[(l, l + d)] = np.eye(n) / math.sqrt(n)
        lifted = [by_block[b] for b in P_ext.blocks]
        val = norm_objective(A, P_ext, lifted)
        lift_error = abs(val * scale - est_red.value)
        ext_value = max(ext_value, val)

    passed = est_red.value <= scale * ext_value * (1.0 + slack) + 1e-300
    return ReductionLiftReport(est_red.value, ext_value, scale, lift_error, passed)


@dataclass
class GramNormBoundReport:
    """Check of the reduced-Gram norm bounds against n^(|I|/2) ||B||_F and
    n^(d - kappa/2) ||B||_2->2."""

    reduced_value: float
    frobenius_bound: float
    spectral_bound: float
    within_frobenius: bool
    within_spectral: bool
    passed: bool


def check_gram_norm_bounds(A: np.ndarray, dims: Dims, I: Iterable[int], P,
                           opts: NormOptions | None = None,
                           slack: float = 1e-6) -> GramNormBoundReport:
    """Bound every partition norm of a reduced Gram array by matrix norms of B = A^T A.

    The left side is a certified lower bound, which can only make the check
    stricter; the right sides are exact matrix norms.
    """
    opts = opts or DEFAULT_OPTIONS
    n = dims.sizes[0]
    if any(m != n for m in dims.sizes):
        raise ArgumentError(f"needs equal per-axis dims, got {dims.sizes}")
    d = dims.order
    I = tuple(sorted(set(I)))
    A = np.asarray(A, dtype=np.float64)
    B = A.T @ A
    fro, spec = _matrix_norms(B)
    reduced = build_reduced_array(rearrange_matrix(B, dims), I)
    est = tensor_norm(reduced, P, opts)
    kappa = est.partition.kappa
    b_fro = n ** (len(I) / 2.0) * fro
    b_spec = n ** (d - kappa / 2.0) * spec
    ok_f = est.value <= b_fro * (1.0 + slack)
    ok_s = est.value <= b_spec * (1.0 + slack)
    return GramNormBoundReport(est.value, b_fro, b_spec, ok_f, ok_s, ok_f and ok_s)
