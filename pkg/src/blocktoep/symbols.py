"""Matrix-valued 2pi-periodic symbols and the algebra used to combine them.

A symbol is a function f mapping [-pi, pi] (extended periodically to the real
line) into the s x t complex matrices.  Trigonometric polynomials are stored
by their finite table of Fourier coefficients, and every operation on them is
exact arithmetic on the stored coefficients.  Integrable non-polynomial
symbols carry a pointwise evaluator together with a closed-form coefficient
rule; when no rule is available, coefficients fall back to trapezoid
quadrature with a convergence self-check.

The module also provides the construction of the block distribution symbol
for a nu x nu grid of symbols with rational block-size ratios: each grid
entry f_jk is replicated along the diagonal of an m_j x m_k replication
pattern (identity padded with zero rows or columns), and the patterns are
glued into one (s*m) x (t*m) symbol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "ShapeMismatch",
    "QuadratureNotConverged",
    "RatioMismatch",
    "MatrixSymbol",
    "SymbolGrid",
    "RationalRatioVector",
    "block_symbol",
    "replication_pattern",
    "refined_symbol_grid",
    "build_distribution_symbol",
    "theta_squared",
    "wrap_angle",
]

TRIG_POLYNOMIAL = "trig-polynomial"
ANALYTIC_L1 = "analytic-l1"

HERMITIAN_TOL_TRIG = 1e-12
HERMITIAN_TOL_ANALYTIC = 1e-9
QUADRATURE_NODES = 8192
QUADRATURE_TOL = 1e-6


class ShapeMismatch(ValueError):
    """Operands have incompatible matrix shapes."""


class QuadratureNotConverged(ArithmeticError):
    """Fallback quadrature failed its resolution-doubling self-check."""


class RatioMismatch(ValueError):
    """Block-ratio vector does not match the symbol grid."""


def wrap_angle(theta):
    """Map angles to the fundamental interval [-pi, pi)."""
    return (np.asarray(theta) + np.pi) % (2.0 * np.pi) - np.pi


def _frozen(mat: np.ndarray) -> np.ndarray:
    out = np.array(mat, dtype=complex)
    out.setflags(write=False)
    return out


def _check_shape(mat: np.ndarray, rows: int, cols: int, what: str) -> np.ndarray:
    mat = np.asarray(mat, dtype=complex)
    if mat.shape != (rows, cols):
        raise ShapeMismatch(f"{what} has shape {mat.shape}, expected {(rows, cols)}")
    return mat


def _quarter_pi_power(phi: float) -> int | None:
    """If phi is an exact float multiple of pi/2, return the multiple."""
    ratio = phi / (np.pi / 2.0)
    if ratio == round(ratio) and abs(ratio) < 2**31:
        return int(round(ratio))
    return None


_UNIT_CIRCLE = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)


def _phase(k: int, phi: float) -> complex:
    # exp(i*k*phi), computed exactly on the quarter-pi lattice so that the
    # shifts actually used (pi, pi/2) compose without rounding
    r = _quarter_pi_power(phi)
    if r is not None:
        return _UNIT_CIRCLE[(r * k) % 4]
    return complex(math.cos(k * phi), math.sin(k * phi))


class MatrixSymbol:
    """A 2pi-periodic function with values in the s x t complex matrices.

    Instances are immutable: coefficient matrices are stored read-only and
    all operations return new symbols, so values can be shared freely across
    worker processes or threads.
    """

    __slots__ = (
        "rows",
        "cols",
        "kind",
        "label",
        "_coeffs",
        "_rule",
        "_evaluator",
        "_quad_nodes",
        "_quad_tol",
        "_quad_cache",
    )

    def __init__(self, *args, **kwargs):
        raise TypeError(
            "use MatrixSymbol.trig_polynomial / MatrixSymbol.analytic / "
            "MatrixSymbol.zero / MatrixSymbol.constant"
        )

    @classmethod
    def _new(cls, rows, cols, kind, label, coeffs=None, rule=None, evaluator=None,
             quad_nodes=QUADRATURE_NODES, quad_tol=QUADRATURE_TOL):
        self = object.__new__(cls)
        object.__setattr__(self, "rows", int(rows))
        object.__setattr__(self, "cols", int(cols))
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "_coeffs", coeffs)
        object.__setattr__(self, "_rule", rule)
        object.__setattr__(self, "_evaluator", evaluator)
        object.__setattr__(self, "_quad_nodes", quad_nodes)
        object.__setattr__(self, "_quad_tol", quad_tol)
        object.__setattr__(self, "_quad_cache", {})
        return self

    def __setattr__(self, name, value):
        raise AttributeError("MatrixSymbol is immutable")

    # ------------------------------------------------------------------
    # constructors
    # ------------------------------------------------------------------

    @classmethod
    def trig_polynomial(cls, coefficients: Mapping[int, object], label: str = "") -> "MatrixSymbol":
        """Build a trigonometric polynomial from a map k -> s x t matrix.

        Scalar coefficient values are accepted and promoted to 1 x 1
        matrices.  Coefficients that are exactly zero are dropped, so the
        stored support is canonical.
        """
        items = []
        rows = cols = None
        for k in sorted(coefficients):
            mat = np.atleast_2d(np.asarray(coefficients[k], dtype=complex))
            if rows is None:
                rows, cols = mat.shape
            elif mat.shape != (rows, cols):
                raise ShapeMismatch(
                    f"coefficient {k} has shape {mat.shape}, expected {(rows, cols)}"
                )
            if np.any(mat != 0):
                items.append((int(k), _frozen(mat)))
        if rows is None:
            raise ShapeMismatch(
                "a trigonometric polynomial needs at least one coefficient "
                "(use MatrixSymbol.zero for the zero symbol)")
        return cls._new(rows, cols, TRIG_POLYNOMIAL, label, coeffs=dict(items))

    @classmethod
    def analytic(cls, evaluator: Callable[[float], object], rows: int, cols: int,
                 rule: Callable[[int], object] | None = None, label: str = "",
                 quadrature_nodes: int = QUADRATURE_NODES,
                 quadrature_tol: float = QUADRATURE_TOL) -> "MatrixSymbol":
        """Build an integrable symbol from a pointwise evaluator.

        ``rule`` is an optional closed-form Fourier-coefficient rule
        k -> s x t matrix; without it coefficients come from composite
        trapezoid quadrature on ``quadrature_nodes`` equispaced nodes, with
        a node-doubling self-check at ``quadrature_tol``.
        """
        if rows < 1 or cols < 1:
            raise ShapeMismatch("symbol shape must be at least 1 x 1")
        return cls._new(int(rows), int(cols), ANALYTIC_L1, label,
                        rule=rule, evaluator=evaluator,
                        quad_nodes=int(quadrature_nodes), quad_tol=float(quadrature_tol))

    @classmethod
    def zero(cls, rows: int = 1, cols: int = 1) -> "MatrixSymbol":
        if rows < 1 or cols < 1:
            raise ShapeMismatch("symbol shape must be at least 1 x 1")
        return cls._new(int(rows), int(cols), TRIG_POLYNOMIAL, "0", coeffs={})

    @classmethod
    def constant(cls, value, label: str = "") -> "MatrixSymbol":
        mat = np.atleast_2d(np.asarray(value, dtype=complex))
        return cls.trig_polynomial({0: mat}, label=label)

    # ------------------------------------------------------------------
    # basic queries
    # ------------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def is_trig_polynomial(self) -> bool:
        return self.kind == TRIG_POLYNOMIAL

    @property
    def support(self) -> tuple[int, ...]:
        """Indices of the nonzero stored coefficients (trig polynomials only)."""
        if not self.is_trig_polynomial:
            raise TypeError("support is only defined for trigonometric polynomials")
        return tuple(sorted(self._coeffs))

    @property
    def degree(self) -> int:
        """max |k| over the stored support (0 for the zero symbol)."""
        sup = self.support
        return max((abs(k) for k in sup), default=0)

    def coefficient_map(self) -> dict[int, np.ndarray]:
        if not self.is_trig_polynomial:
            raise TypeError("coefficient_map is only defined for trigonometric polynomials")
        return dict(self._coeffs)

    def __repr__(self) -> str:
        name = self.label or "?"
        return f"MatrixSymbol({name!r}, {self.rows}x{self.cols}, {self.kind})"

    # ------------------------------------------------------------------
    # evaluation and coefficients
    # ------------------------------------------------------------------

    def evaluate(self, theta: float) -> np.ndarray:
        """Value of the symbol at an angle, interpreted 2pi-periodically."""
        if not np.isfinite(theta):
            raise ValueError(f"theta must be finite, got {theta!r}")
        if self.is_trig_polynomial:
            acc = np.zeros((self.rows, self.cols), dtype=complex)
            for k in sorted(self._coeffs):
                acc += self._coeffs[k] * np.exp(1j * k * theta)
            return acc
        return _check_shape(self._evaluator(theta), self.rows, self.cols,
                            f"evaluator of {self.label or 'symbol'}")

    def evaluate_grid(self, thetas: Sequence[float]) -> np.ndarray:
        """Vectorized evaluation; returns an array of shape (len, rows, cols)."""
        thetas = np.asarray(thetas, dtype=float)
        if thetas.ndim != 1:
            raise ValueError("thetas must be one-dimensional")
        if self.is_trig_polynomial:
            out = np.zeros((thetas.size, self.rows, self.cols), dtype=complex)
            for k in sorted(self._coeffs):
                out += np.exp(1j * k * thetas)[:, None, None] * self._coeffs[k][None, :, :]
            return out
        return np.stack([self.evaluate(t) for t in thetas]) if thetas.size else \
            np.zeros((0, self.rows, self.cols), dtype=complex)

    def _quadrature_values(self, nodes: int) -> tuple[np.ndarray, np.ndarray]:
        cached = self._quad_cache.get(nodes)
        if cached is None:
            thetas = -np.pi + 2.0 * np.pi * np.arange(nodes) / nodes
            vals = self.evaluate_grid(thetas)
            cached = (thetas, vals)
            self._quad_cache[nodes] = cached
        return cached

    def _quadrature_coefficient(self, k: int, nodes: int) -> np.ndarray:
        # for periodic integrands the composite trapezoid rule collapses to
        # the plain node average
        thetas, vals = self._quadrature_values(nodes)
        phases = np.exp(-1j * k * thetas)
        return np.tensordot(phases, vals, axes=(0, 0)) / nodes

    def fourier_coefficient(self, k: int) -> np.ndarray:
        """The k-th Fourier coefficient, an s x t complex matrix."""
        k = int(k)
        if self.is_trig_polynomial:
            mat = self._coeffs.get(k)
            if mat is None:
                return np.zeros((self.rows, self.cols), dtype=complex)
            return mat.copy()
        if self._rule is not None:
            return _check_shape(self._rule(k), self.rows, self.cols,
                                f"coefficient rule of {self.label or 'symbol'} at k={k}")
        coarse = self._quadrature_coefficient(k, self._quad_nodes)
        fine = self._quadrature_coefficient(k, 2 * self._quad_nodes)
        err = float(np.max(np.abs(fine - coarse)))
        if err > self._quad_tol:
            raise QuadratureNotConverged(
                f"quadrature for coefficient k={k} of {self.label or 'symbol'} "
                f"changed by {err:.3e} under node doubling (tol {self._quad_tol:.1e})"
            )
        return fine

    # ------------------------------------------------------------------
    # algebra
    # ------------------------------------------------------------------

    @staticmethod
    def _trig(coeffs: dict, rows: int, cols: int, label: str = "") -> "MatrixSymbol":
        # like trig_polynomial, but keeps the shape when everything is zero
        if not coeffs:
            out = MatrixSymbol.zero(rows, cols)
            return MatrixSymbol._new(rows, cols, TRIG_POLYNOMIAL, label,
                                     coeffs=out._coeffs) if label else out
        return MatrixSymbol.trig_polynomial(coeffs, label=label)

    def reverse(self) -> "MatrixSymbol":
        """The symbol theta -> f(-theta); coefficient k picks up index -k."""
        if self.is_trig_polynomial:
            return MatrixSymbol._trig(
                {-k: c for k, c in self._coeffs.items()}, self.rows, self.cols,
                label=f"reverse({self.label})" if self.label else "")
        return MatrixSymbol.analytic(
            lambda theta, f=self: f.evaluate(-theta),
            self.rows, self.cols,
            rule=lambda k, f=self: f.fourier_coefficient(-k),
            label=f"reverse({self.label})" if self.label else "",
            quadrature_nodes=self._quad_nodes, quadrature_tol=self._quad_tol)

    def adjoint(self) -> "MatrixSymbol":
        """The symbol theta -> f(theta)^*; shape transposes to t x s."""
        if self.is_trig_polynomial:
            return MatrixSymbol._trig(
                {-k: c.conj().T for k, c in self._coeffs.items()},
                self.cols, self.rows,
                label=f"adjoint({self.label})" if self.label else "")
        return MatrixSymbol.analytic(
            lambda theta, f=self: f.evaluate(theta).conj().T,
            self.cols, self.rows,
            rule=lambda k, f=self: f.fourier_coefficient(-k).conj().T,
            label=f"adjoint({self.label})" if self.label else "",
            quadrature_nodes=self._quad_nodes, quadrature_tol=self._quad_tol)

    def shift(self, phi: float) -> "MatrixSymbol":
        """The symbol theta -> f(theta + phi)."""
        phi = float(phi)
        if self.is_trig_polynomial:
            return MatrixSymbol._trig(
                {k: c * _phase(k, phi) for k, c in self._coeffs.items()},
                self.rows, self.cols,
                label=f"shift({self.label}, {phi:g})" if self.label else "")
        return MatrixSymbol.analytic(
            lambda theta, f=self, p=phi: f.evaluate(theta + p),
            self.rows, self.cols,
            rule=lambda k, f=self, p=phi: f.fourier_coefficient(k) * _phase(k, p),
            label=f"shift({self.label}, {phi:g})" if self.label else "",
            quadrature_nodes=self._quad_nodes, quadrature_tol=self._quad_tol)

    def scaled(self, factor: complex) -> "MatrixSymbol":
        factor = complex(factor)
        if self.is_trig_polynomial:
            return MatrixSymbol._trig(
                {k: factor * c for k, c in self._coeffs.items()},
                self.rows, self.cols, label=self.label)
        return MatrixSymbol.analytic(
            lambda theta, f=self, z=factor: z * f.evaluate(theta),
            self.rows, self.cols,
            rule=lambda k, f=self, z=factor: z * f.fourier_coefficient(k),
            label=self.label,
            quadrature_nodes=self._quad_nodes, quadrature_tol=self._quad_tol)

    def __neg__(self) -> "MatrixSymbol":
        return self.scaled(-1.0)

    def __add__(self, other: "MatrixSymbol") -> "MatrixSymbol":
        if not isinstance(other, MatrixSymbol):
            return NotImplemented
        if self.shape != other.shape:
            raise ShapeMismatch(f"cannot add {self.shape} and {other.shape} symbols")
        if self.is_trig_polynomial and other.is_trig_polynomial:
            out: dict[int, np.ndarray] = {}
            for k in sorted(set(self._coeffs) | set(other._coeffs)):
                out[k] = self.fourier_coefficient(k) + other.fourier_coefficient(k)
            return MatrixSymbol._trig(out, self.rows, self.cols)
        return MatrixSymbol.analytic(
            lambda theta, a=self, b=other: a.evaluate(theta) + b.evaluate(theta),
            self.rows, self.cols,
            rule=lambda k, a=self, b=other: a.fourier_coefficient(k) + b.fourier_coefficient(k),
            quadrature_nodes=max(self._quad_nodes, getattr(other, "_quad_nodes", 0)),
        )

    def __sub__(self, other: "MatrixSymbol") -> "MatrixSymbol":
        if not isinstance(other, MatrixSymbol):
            return NotImplemented
        return self + (-other)

    def __matmul__(self, other: "MatrixSymbol") -> "MatrixSymbol":
        """Pointwise matrix product; coefficients convolve."""
        if not isinstance(other, MatrixSymbol):
            return NotImplemented
        if self.cols != other.rows:
            raise ShapeMismatch(
                f"cannot multiply {self.shape} by {other.shape}: inner dimensions differ")
        rows, cols = self.rows, other.cols
        if self.is_trig_polynomial and other.is_trig_polynomial:
            out: dict[int, np.ndarray] = {}
            for k1 in sorted(self._coeffs):
                for k2 in sorted(other._coeffs):
                    term = self._coeffs[k1] @ other._coeffs[k2]
                    k = k1 + k2
                    out[k] = out[k] + term if k in out else term
            return MatrixSymbol._trig(out, rows, cols)
        # with one trig-polynomial factor the convolution is a finite sum
        rule = None
        if self.is_trig_polynomial:
            rule = lambda k, a=self, b=other: sum(
                (a.fourier_coefficient(j) @ b.fourier_coefficient(k - j) for j in a.support),
                start=np.zeros((rows, cols), dtype=complex))
        elif other.is_trig_polynomial:
            rule = lambda k, a=self, b=other: sum(
                (a.fourier_coefficient(k - j) @ b.fourier_coefficient(j) for j in b.support),
                start=np.zeros((rows, cols), dtype=complex))
        return MatrixSymbol.analytic(
            lambda theta, a=self, b=other: a.evaluate(theta) @ b.evaluate(theta),
            rows, cols, rule=rule,
            quadrature_nodes=max(self._quad_nodes, other._quad_nodes))

    # ------------------------------------------------------------------
    # predicates
    # ------------------------------------------------------------------

    def is_hermitian_valued(self, tol: float | None = None) -> bool:
        """Whether f(theta) is Hermitian for (essentially) every theta.

        Trigonometric polynomials are tested exactly on the stored
        coefficients (f_-k == f_k^*); integrable symbols are sampled on a
        1024-point grid.
        """
        if self.rows != self.cols:
            return False
        if self.is_trig_polynomial:
            if tol is None:
                tol = HERMITIAN_TOL_TRIG
            for k in set(self._coeffs) | {-k for k in self._coeffs}:
                delta = self.fourier_coefficient(-k) - self.fourier_coefficient(k).conj().T
                if delta.size and float(np.max(np.abs(delta))) > tol:
                    return False
            return True
        if tol is None:
            tol = HERMITIAN_TOL_ANALYTIC
        vals = self.evaluate_grid(-np.pi + 2.0 * np.pi * np.arange(1024) / 1024)
        gap = np.max(np.abs(vals - vals.conj().transpose(0, 2, 1)))
        return float(gap) <= tol


# ----------------------------------------------------------------------
# grids, ratios, and the distribution symbol
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class SymbolGrid:
    """A nu x nu array of symbols sharing one block shape s x t."""

    entries: tuple[tuple[MatrixSymbol, ...], ...]

    def __post_init__(self):
        nu = len(self.entries)
        if nu < 2:
            raise ShapeMismatch("a symbol grid needs at least 2 x 2 entries")
        if any(len(row) != nu for row in self.entries):
            raise ShapeMismatch("symbol grid must be square")
        s, t = self.entries[0][0].shape
        for row in self.entries:
            for f in row:
                if f.shape != (s, t):
                    raise ShapeMismatch(
                        f"grid entries must share one shape; found {f.shape} and {(s, t)}")

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[MatrixSymbol]]) -> "SymbolGrid":
        return cls(tuple(tuple(row) for row in rows))

    @property
    def nu(self) -> int:
        return len(self.entries)

    @property
    def block_shape(self) -> tuple[int, int]:
        return self.entries[0][0].shape

    def entry(self, i: int, j: int) -> MatrixSymbol:
        return self.entries[i][j]


@dataclass(frozen=True)
class RationalRatioVector:
    """Reduced positive rationals c_j summing to one, with lcm bookkeeping.

    m is the least common multiple of the reduced denominators and
    m_j = c_j * m are the integer multiplicities; sum(m_j) == m.
    """

    ratios: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.ratios) < 1:
            raise RatioMismatch("empty ratio vector")
        if any(c <= 0 for c in self.ratios):
            raise RatioMismatch(f"ratios must be positive, got {self.ratios}")
        if sum(self.ratios) != 1:
            raise RatioMismatch(f"ratios must sum to 1 exactly, got {sum(self.ratios)}")

    @classmethod
    def from_ratios(cls, ratios: Iterable[object]) -> "RationalRatioVector":
        return cls(tuple(Fraction(c) for c in ratios))

    @property
    def nu(self) -> int:
        return len(self.ratios)

    @property
    def lcm_denominator(self) -> int:
        return math.lcm(*(c.denominator for c in self.ratios))

    @property
    def multiplicities(self) -> tuple[int, ...]:
        m = self.lcm_denominator
        return tuple(int(c * m) for c in self.ratios)


def block_symbol(blocks: Sequence[Sequence[MatrixSymbol]], label: str = "") -> MatrixSymbol:
    """Glue a rectangular layout of symbols into one block symbol.

    Row heights and column widths are taken from the blocks and must be
    consistent.  The result is a trigonometric polynomial exactly when all
    blocks are.
    """
    rows = [list(r) for r in blocks]
    if not rows or not rows[0]:
        raise ShapeMismatch("block layout must be non-empty")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ShapeMismatch("block layout must be rectangular")
    heights = [r[0].rows for r in rows]
    widths = [b.cols for b in rows[0]]
    for i, r in enumerate(rows):
        for j, b in enumerate(r):
            if b.rows != heights[i] or b.cols != widths[j]:
                raise ShapeMismatch(
                    f"block ({i + 1},{j + 1}) has shape {b.shape}, "
                    f"expected {(heights[i], widths[j])}")
    total_rows, total_cols = sum(heights), sum(widths)

    if all(b.is_trig_polynomial for r in rows for b in r):
        out: dict[int, np.ndarray] = {}
        ks = sorted({k for r in rows for b in r for k in b.support})
        for k in ks:
            out[k] = np.block([[b.fourier_coefficient(k) for b in r] for r in rows])
        if not out:
            return MatrixSymbol.zero(total_rows, total_cols)
        return MatrixSymbol.trig_polynomial(out, label=label)

    def _eval(theta, rows=rows):
        return np.block([[b.evaluate(theta) for b in r] for r in rows])

    def _rule(k, rows=rows):
        return np.block([[b.fourier_coefficient(k) for b in r] for r in rows])

    nodes = max(b._quad_nodes for r in rows for b in r)
    return MatrixSymbol.analytic(_eval, total_rows, total_cols, rule=_rule,
                                 label=label, quadrature_nodes=nodes)


def replication_pattern(m_row: int, m_col: int) -> np.ndarray:
    """The m_row x m_col 0/1 pattern: identity padded right or bottom."""
    pattern = np.zeros((m_row, m_col), dtype=int)
    for i in range(min(m_row, m_col)):
        pattern[i, i] = 1
    return pattern


def refined_symbol_grid(grid: SymbolGrid, ratios: RationalRatioVector
                        ) -> list[list[MatrixSymbol]]:
    """Expand a nu x nu grid into the m x m layout of the distribution symbol.

    Block row j of the grid contributes m_j copies of its symbols placed on
    the diagonal of the replication pattern; off-pattern entries are zero.
    """
    if ratios.nu != grid.nu:
        raise RatioMismatch(
            f"ratio vector has {ratios.nu} entries for a {grid.nu} x {grid.nu} grid")
    mult = ratios.multiplicities
    m = ratios.lcm_denominator
    s, t = grid.block_shape
    zero = MatrixSymbol.zero(s, t)
    refined: list[list[MatrixSymbol]] = [[zero] * m for _ in range(m)]
    row_off = 0
    for j in range(grid.nu):
        col_off = 0
        for k in range(grid.nu):
            pattern = replication_pattern(mult[j], mult[k])
            for p in range(mult[j]):
                for q in range(mult[k]):
                    if pattern[p, q]:
                        refined[row_off + p][col_off + q] = grid.entry(j, k)
            col_off += mult[k]
        row_off += mult[j]
    return refined


def build_distribution_symbol(grid: SymbolGrid, ratios: RationalRatioVector,
                              label: str = "F") -> MatrixSymbol:
    """The (s*m) x (t*m) symbol predicted to describe the block structure.

    Diagonal grid entries are replicated m_j times along the diagonal;
    off-diagonal entries are replicated min(m_j, m_k) times and zero-padded
    on the right (m_k >= m_j) or at the bottom (m_j >= m_k).
    """
    return block_symbol(refined_symbol_grid(grid, ratios), label=label)


def theta_squared(label: str = "theta^2") -> MatrixSymbol:
    """The scalar symbol theta -> theta^2 on [-pi, pi), periodically extended.

    Its Fourier coefficients have the classical closed form pi^2/3 at k = 0
    and 2*(-1)^k / k^2 otherwise.
    """

    def _rule(k: int) -> np.ndarray:
        if k == 0:
            return np.array([[np.pi**2 / 3.0]], dtype=complex)
        sign = 1.0 if k % 2 == 0 else -1.0
        return np.array([[2.0 * sign / k**2]], dtype=complex)

    def _eval(theta: float) -> np.ndarray:
        w = float(wrap_angle(theta))
        return np.array([[w * w]], dtype=complex)

    return MatrixSymbol.analytic(_eval, 1, 1, rule=_rule, label=label)
