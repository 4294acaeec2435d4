"""Spectra, symbol samplings, and distribution-comparison metrics.

The comparisons all follow one recipe: sort the eigenvalues or singular
values of an assembled matrix, sort a pooled sampling of the corresponding
symbol curves over angle grids, and inspect the elementwise absolute
difference of the two sorted vectors (its sup, selected quantile entries,
and the fraction of entries above a tolerance).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .symbols import MatrixSymbol

__all__ = [
    "NotHermitian",
    "LengthMismatch",
    "SpectralSample",
    "DistributionReport",
    "RearrangedSymbol",
    "eigenvalues_hermitian",
    "singular_values",
    "grid_theta",
    "spectral_curves",
    "symbol_spectral_samples",
    "reference_counts",
    "reference_curves",
    "reference_sample",
    "trim_largest",
    "align_sorted",
    "compare_sorted",
    "interior_sup",
    "hat_function",
    "truncated_polynomial",
    "weyl_gap",
    "outlier_ratio",
    "zero_distribution_profile",
    "rearrangement",
    "sample_to_csv",
]

HERMITIAN_MATRIX_TOL = 1e-10

QUANTILE_LEVELS = (0.05, 0.25, 0.50, 0.75, 0.95)

ORIGIN_MATRIX_EIG = "matrix-eigenvalues"
ORIGIN_MATRIX_SV = "matrix-singular-values"
ORIGIN_SYMBOL_EIG = "symbol-eigenvalue-samples"
ORIGIN_SYMBOL_SV = "symbol-singular-value-samples"
ORIGIN_REARRANGEMENT = "rearrangement"


class NotHermitian(ValueError):
    """Eigenvalue comparisons are only defined for Hermitian input."""


class LengthMismatch(ValueError):
    """Sorted samples must have equal length to be compared elementwise."""


@dataclass(frozen=True)
class SpectralSample:
    """A sorted multiset of real spectral values with origin metadata."""

    values: np.ndarray
    origin: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError("spectral values must form a one-dimensional array")
        if np.any(np.diff(values) < 0):
            raise ValueError("spectral values must be sorted ascending")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size


# ----------------------------------------------------------------------
# matrix spectra
# ----------------------------------------------------------------------


def _as_array(A) -> np.ndarray:
    data = getattr(A, "data", A)
    return np.asarray(data)


def _real_if_exact(A: np.ndarray) -> np.ndarray:
    # LAPACK real paths are substantially faster; only downcast when the
    # imaginary part is identically zero so values are untouched
    if np.iscomplexobj(A) and not np.any(A.imag):
        return np.ascontiguousarray(A.real)
    return A


def eigenvalues_hermitian(A, tol: float = HERMITIAN_MATRIX_TOL) -> SpectralSample:
    """Ascending eigenvalues of a Hermitian matrix.

    Raises NotHermitian when the matrix is not Hermitian within ``tol``;
    non-Hermitian spectra are deliberately not compared elementwise, so the
    caller should fall back to singular values.
    """
    A = _as_array(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotHermitian(f"matrix of shape {A.shape} is not square")
    gap = float(np.max(np.abs(A - A.conj().T))) if A.size else 0.0
    if gap > tol:
        raise NotHermitian(f"max |A - A^*| = {gap:.3e} exceeds tolerance {tol:.1e}")
    values = np.linalg.eigvalsh(_real_if_exact(A))
    return SpectralSample(np.sort(values, kind="stable"), ORIGIN_MATRIX_EIG,
                          {"size": A.shape[0]})


def singular_values(A) -> SpectralSample:
    """Ascending singular values (min(rows, cols) of them) of any matrix."""
    A = _as_array(A)
    if A.ndim != 2:
        raise ValueError(f"expected a matrix, got array of shape {A.shape}")
    values = np.linalg.svd(_real_if_exact(A), compute_uv=False)
    return SpectralSample(np.sort(values, kind="stable"), ORIGIN_MATRIX_SV,
                          {"shape": A.shape})


# ----------------------------------------------------------------------
# angle grids and symbol samplings
# ----------------------------------------------------------------------


def grid_theta(eta: int) -> np.ndarray:
    """The eta-point uniform angle grid used by all reference samplings.

    theta_j = -pi*eta/(eta+1) + 2*j*eta*pi/((eta+1)*(eta-1)), j = 0..eta-1;
    the points are symmetric about zero and stay strictly inside (-pi, pi).
    """
    if eta < 2:
        raise ValueError(f"the angle grid needs at least 2 points, got eta={eta}")
    j = np.arange(eta, dtype=float)
    return -np.pi * eta / (eta + 1) + 2.0 * j * eta * np.pi / ((eta + 1) * (eta - 1))


def _validate_kind(kind: str) -> str:
    if kind not in ("eig", "sv"):
        raise ValueError(f"kind must be 'eig' or 'sv', got {kind!r}")
    return kind


def curve_count(F: MatrixSymbol, kind: str) -> int:
    return F.rows if _validate_kind(kind) == "eig" else min(F.rows, F.cols)


def spectral_curves(F: MatrixSymbol, thetas: Sequence[float], kind: str) -> np.ndarray:
    """Pointwise spectra of F along a grid, one ascending row per point.

    Returns an array of shape (len(thetas), r): row i holds the eigenvalues
    (kind='eig', Hermitian-valued F required) or singular values (kind='sv')
    of F(theta_i), sorted ascending, so column l is the l-th spectral curve.
    """
    _validate_kind(kind)
    thetas = np.asarray(thetas, dtype=float)
    vals = F.evaluate_grid(thetas)
    if kind == "eig":
        if not F.is_hermitian_valued():
            raise NotHermitian(
                f"symbol {F.label or F.shape} is not Hermitian-valued; "
                "eigenvalue sampling is undefined")
        return np.linalg.eigvalsh(vals)
    sv = np.linalg.svd(vals, compute_uv=False)
    return sv[:, ::-1]


def symbol_spectral_samples(F: MatrixSymbol, grid: Sequence[float], kind: str) -> SpectralSample:
    """All spectral values of F over a grid, pooled and sorted ascending."""
    curves = spectral_curves(F, grid, kind)
    origin = ORIGIN_SYMBOL_EIG if kind == "eig" else ORIGIN_SYMBOL_SV
    return SpectralSample(np.sort(curves.ravel(), kind="stable"), origin,
                          {"grid_points": len(grid), "curves": curves.shape[1]})


def reference_counts(total: int, n_curves: int) -> tuple[int, ...]:
    """Split a total sample budget across curves: equal split, remainder to
    the last (largest) curves."""
    if n_curves < 1 or total < n_curves:
        raise ValueError(f"cannot allocate {total} samples to {n_curves} curves")
    base, rem = divmod(total, n_curves)
    return tuple([base] * (n_curves - rem) + [base + 1] * rem)


def reference_curves(F: MatrixSymbol, counts: Sequence[int], kind: str
                     ) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-curve samplings: curve l on its own grid_theta(counts[l]).

    Returns one (thetas, values) pair per curve, curves indexed ascending
    (curve 0 is the smallest spectral branch).
    """
    r = curve_count(F, kind)
    counts = [int(c) for c in counts]
    if len(counts) != r:
        raise LengthMismatch(f"{r} spectral curves need {r} grid sizes, got {len(counts)}")
    by_size: dict[int, np.ndarray] = {}
    for size in sorted(set(counts)):
        by_size[size] = spectral_curves(F, grid_theta(size), kind)
    out = []
    for l, size in enumerate(counts):
        out.append((grid_theta(size), by_size[size][:, l].copy()))
    return out


def reference_sample(F: MatrixSymbol, counts: Sequence[int], kind: str) -> SpectralSample:
    """Pool the per-curve samplings into one sorted reference vector."""
    curves = reference_curves(F, counts, kind)
    pooled = np.concatenate([vals for _, vals in curves]) if curves else np.empty(0)
    origin = ORIGIN_SYMBOL_EIG if kind == "eig" else ORIGIN_SYMBOL_SV
    return SpectralSample(np.sort(pooled, kind="stable"), origin,
                          {"counts": tuple(int(c) for c in counts)})


# ----------------------------------------------------------------------
# comparisons
# ----------------------------------------------------------------------


def trim_largest(sample: SpectralSample, count: int) -> SpectralSample:
    """Drop the ``count`` largest values (used to align sample lengths)."""
    if count < 0 or count > len(sample):
        raise LengthMismatch(f"cannot trim {count} of {len(sample)} values")
    if count == 0:
        return sample
    meta = dict(sample.meta)
    meta["trimmed_largest"] = meta.get("trimmed_largest", 0) + count
    return SpectralSample(sample.values[:len(sample) - count], sample.origin, meta)


def align_sorted(a: SpectralSample, b: SpectralSample
                 ) -> tuple[SpectralSample, SpectralSample]:
    """Trim the largest values of the longer sample so lengths agree.

    The extreme top of the spectrum is where the outliers live, so when two
    samplings disagree in cardinality by a vanishing fraction this is the
    alignment that perturbs the quantile structure least.
    """
    if len(a) > len(b):
        return trim_largest(a, len(a) - len(b)), b
    if len(b) > len(a):
        return a, trim_largest(b, len(b) - len(a))
    return a, b


INTERIOR_LEVELS = (0.25, 0.50, 0.75)


def interior_sup(out: np.ndarray, levels: Sequence[float] = INTERIOR_LEVELS) -> float:
    """Largest quantile of the difference vector over the interior levels.

    The extreme levels (5 and 95 percent) and the sup are reported
    separately; they carry the outliers, which sit at the far ends of the
    difference distribution.  The interior levels measure agreement of the
    bulk.
    """
    out = np.asarray(out)
    if out.size == 0:
        return 0.0
    return float(max(np.quantile(out, level) for level in levels))


@dataclass
class DistributionReport:
    """Discrepancy metrics between two equal-length sorted samples."""

    kind: str
    length: int
    sup_discrepancy: float
    quantile_discrepancies: dict
    interior_discrepancy: float
    out: np.ndarray
    weyl_gaps: dict | None = None
    outlier_ratio: float | None = None
    outlier_threshold: float | None = None
    policy: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        data = {
            "kind": self.kind,
            "length": self.length,
            "sup_discrepancy": self.sup_discrepancy,
            "quantile_discrepancies": dict(self.quantile_discrepancies),
            "interior_discrepancy": self.interior_discrepancy,
            "policy": dict(self.policy),
            "meta": {k: v for k, v in self.meta.items()},
        }
        if self.weyl_gaps is not None:
            data["weyl_gaps"] = dict(self.weyl_gaps)
        if self.outlier_ratio is not None:
            data["outlier_ratio"] = self.outlier_ratio
            data["outlier_threshold"] = self.outlier_threshold
        return data


def compare_sorted(empirical: SpectralSample, reference: SpectralSample,
                   kind: str = "sv") -> DistributionReport:
    """Elementwise |empirical - reference| of two sorted samples.

    Reports the sup of the difference vector, its quantiles at the
    5/25/50/75/95 percent levels, and the interior discrepancy (the largest
    of the 25/50/75 percent quantiles).
    """
    if len(empirical) != len(reference):
        raise LengthMismatch(
            f"samples have lengths {len(empirical)} and {len(reference)}; "
            "align them first")
    out = np.abs(empirical.values - reference.values)
    n = out.size
    quantiles = {}
    for level in QUANTILE_LEVELS:
        quantiles[f"{int(level * 100)}%"] = float(np.quantile(out, level)) if n else 0.0
    return DistributionReport(
        kind=_validate_kind(kind),
        length=n,
        sup_discrepancy=float(np.max(out)) if n else 0.0,
        quantile_discrepancies=quantiles,
        interior_discrepancy=interior_sup(out),
        out=out,
        meta={"empirical": empirical.origin, "reference": reference.origin},
    )


# ----------------------------------------------------------------------
# ergodic test-function averages
# ----------------------------------------------------------------------


def hat_function(a: float, b: float) -> Callable[[np.ndarray], np.ndarray]:
    """The continuous hat supported on [a, b], peaking at 1 in the middle."""
    if not b > a:
        raise ValueError(f"need b > a, got [{a}, {b}]")
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)

    def hat(x):
        x = np.asarray(x, dtype=float)
        return np.clip(1.0 - np.abs(x - mid) / half, 0.0, None)

    hat.__name__ = f"hat[{a:g}..{b:g}]"
    return hat


def truncated_polynomial(coefficients: Sequence[float], a: float, b: float
                         ) -> Callable[[np.ndarray], np.ndarray]:
    """A polynomial restricted to [a, b] and zero outside."""
    if not b > a:
        raise ValueError(f"need b > a, got [{a}, {b}]")
    coefficients = list(coefficients)

    def poly(x):
        x = np.asarray(x, dtype=float)
        inside = (x >= a) & (x <= b)
        return np.polyval(coefficients[::-1], x) * inside

    coeff_text = ";".join(f"{c:g}" for c in coefficients)
    poly.__name__ = f"poly({coeff_text})[{a:g}..{b:g}]"
    return poly


def weyl_gap(A, F: MatrixSymbol, test_functions: Sequence[Callable],
             kind: str = "sv", n_quad: int = 2048) -> list[float]:
    """Per test function, |spectral average of A - symbol-side integral of F|.

    The symbol side is the angle average of the mean of the test function
    over the r spectral curves, computed with the composite trapezoid rule
    on ``n_quad`` equispaced nodes (exactly the node mean, by periodicity).
    """
    _validate_kind(kind)
    if kind == "eig":
        empirical = eigenvalues_hermitian(A).values
    else:
        empirical = singular_values(A).values
    thetas = -np.pi + 2.0 * np.pi * np.arange(n_quad) / n_quad
    curves = spectral_curves(F, thetas, kind)
    gaps = []
    for fn in test_functions:
        ergodic = float(np.mean(fn(empirical)))
        integral = float(np.mean(fn(curves)))
        gaps.append(abs(ergodic - integral))
    return gaps


# ----------------------------------------------------------------------
# outlier ratio and zero-distribution profiles
# ----------------------------------------------------------------------


def outlier_ratio(A, F: MatrixSymbol, h: float, kind: str = "sv",
                  counts: Sequence[int] | None = None) -> DistributionReport:
    """Fraction of sorted spectral values farther than ``h`` from the sorted
    symbol sampling, relative to the full spectrum size.

    Without explicit ``counts`` the reference budget equals the number of
    computed spectral values and is split equally across the curves, with
    the remainder going to the largest curves.  With explicit counts whose
    total differs, the longer of the two vectors is trimmed at the top
    before differencing; the ratio denominator stays the full spectrum size.
    """
    if h <= 0:
        raise ValueError(f"threshold h must be positive, got {h}")
    if kind == "eig":
        empirical = eigenvalues_hermitian(A)
    else:
        empirical = singular_values(A)
    d_n = len(empirical)
    r = curve_count(F, kind)
    if counts is None:
        counts = reference_counts(d_n, r)
    reference = reference_sample(F, counts, kind)
    emp_aligned, ref_aligned = align_sorted(empirical, reference)
    report = compare_sorted(emp_aligned, ref_aligned, kind)
    report.outlier_threshold = float(h)
    report.outlier_ratio = float(np.count_nonzero(report.out >= h)) / d_n
    report.policy = {
        "reference_counts": tuple(int(c) for c in counts),
        "spectrum_size": d_n,
        "trimmed_empirical": d_n - len(emp_aligned),
        "trimmed_reference": len(reference) - len(ref_aligned),
    }
    return report


def zero_distribution_profile(matrices: Iterable, eps: float) -> list[float]:
    """For each matrix, the fraction of singular values at or above ``eps``.

    For a sequence of growing size whose singular values concentrate at
    zero, the fractions tend to zero.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    fractions = []
    for A in matrices:
        sv = singular_values(A).values
        fractions.append(float(np.count_nonzero(sv >= eps)) / sv.size)
    return fractions


# ----------------------------------------------------------------------
# nondecreasing rearrangement
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class RearrangedSymbol:
    """The nondecreasing rearrangement of a symbol's spectral values on [0, 1]."""

    positions: np.ndarray
    values: np.ndarray
    resolution: int
    kind: str

    def __post_init__(self):
        self.positions.setflags(write=False)
        self.values.setflags(write=False)


def rearrangement(F: MatrixSymbol, resolution: int, kind: str = "sv") -> RearrangedSymbol:
    """Sample all spectral curves of F on a uniform grid, pool, and sort.

    The sorted values sit at midpoints x_i = (i - 1/2) / (r * N) of [0, 1],
    the canonical domain on which symbols of different shapes can be
    compared.
    """
    if resolution < 1:
        raise ValueError(f"resolution must be positive, got {resolution}")
    _validate_kind(kind)
    thetas = -np.pi + 2.0 * np.pi * (np.arange(resolution) + 0.5) / resolution
    curves = spectral_curves(F, thetas, kind)
    values = np.sort(curves.ravel(), kind="stable")
    total = values.size
    positions = (np.arange(total) + 0.5) / total
    return RearrangedSymbol(positions, values, int(resolution), kind)


# ----------------------------------------------------------------------
# serialization
# ----------------------------------------------------------------------


def sample_to_csv(sample: SpectralSample, path) -> None:
    """One value per row, tagged with its origin."""
    with open(path, "w", newline="") as fh:
        fh.write("origin,index,value\n")
        for i, v in enumerate(sample.values):
            fh.write(f"{sample.origin},{i},{float(v)!r}\n")
