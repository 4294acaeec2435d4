"""Concrete matrix builders: Toeplitz and Hankel blocks, block assemblies.

Everything here is dense.  The verification experiments top out near three
thousand rows, where dense storage keeps structural identities bit-exact and
lets the comparisons use ordinary LAPACK decompositions.

Conventions: a symbol f with values in C^{s x t} generates

* ``toeplitz(f, n)``             -- block entry (i, j) = f_hat(i - j),
* ``toeplitz_rect(f, n, n')``    -- same rule on an n x n' block grid,
* ``hankel(f, n)``               -- block entry (i, j) = f_hat(i + j - 1),

all with 1-based block indices, so the Toeplitz matrix carries f_hat(0) on
the main block diagonal and the Hankel matrix only sees coefficients with
positive index.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
import numpy as np

from .symbols import (
    MatrixSymbol,
    RationalRatioVector,
    SymbolGrid,
    replication_pattern,
)

__all__ = [
    "DivisibilityError",
    "NotExactlyDivisible",
    "SizeError",
    "SizeLaw",
    "BlockStructureSpec",
    "AssembledMatrix",
    "toeplitz",
    "toeplitz_rect",
    "hankel",
    "flip",
    "permutation_pi",
    "assemble_full",
    "assemble_trimmed",
    "assemble_replicated",
    "truncation_projector",
    "compress",
    "dump_matrix_csv",
    "load_matrix_csv",
    "dump_matrix_binary",
    "load_matrix_binary",
]


class DivisibilityError(ValueError):
    """A block count does not divide the requested size."""


class NotExactlyDivisible(ValueError):
    """Block sizes are not an exact multiple of the ratio multiplicities."""


class SizeError(ValueError):
    """A requested dimension is out of range."""


# ----------------------------------------------------------------------
# elementary builders
# ----------------------------------------------------------------------


def _coefficient_table(f: MatrixSymbol, ks: np.ndarray) -> np.ndarray:
    return np.stack([f.fourier_coefficient(int(k)) for k in ks])


def toeplitz_rect(f: MatrixSymbol, n_rows: int, n_cols: int) -> np.ndarray:
    """The (s*n_rows) x (t*n_cols) matrix with block (i, j) = f_hat(i - j)."""
    if n_rows < 1 or n_cols < 1:
        raise SizeError(f"block counts must be positive, got {(n_rows, n_cols)}")
    ks = np.arange(-(n_cols - 1), n_rows)
    table = _coefficient_table(f, ks)
    idx = np.arange(n_rows)[:, None] - np.arange(n_cols)[None, :] + (n_cols - 1)
    blocks = table[idx]                      # (n_rows, n_cols, s, t)
    s, t = f.shape
    return np.ascontiguousarray(
        blocks.transpose(0, 2, 1, 3).reshape(n_rows * s, n_cols * t))


def toeplitz(f: MatrixSymbol, n: int) -> np.ndarray:
    """The square case of :func:`toeplitz_rect`."""
    return toeplitz_rect(f, n, n)


def hankel(f: MatrixSymbol, n: int) -> np.ndarray:
    """The (s*n) x (t*n) matrix with block (i, j) = f_hat(i + j - 1)."""
    if n < 1:
        raise SizeError(f"block count must be positive, got {n}")
    ks = np.arange(1, 2 * n)
    table = _coefficient_table(f, ks)
    idx = np.arange(n)[:, None] + np.arange(n)[None, :]   # (i+1)+(j+1)-1 -> k index i+j
    blocks = table[idx]
    s, t = f.shape
    return np.ascontiguousarray(blocks.transpose(0, 2, 1, 3).reshape(n * s, n * t))


def flip(mu: int) -> np.ndarray:
    """The mu x mu anti-identity; an involution."""
    if mu < 1:
        raise SizeError(f"flip size must be positive, got {mu}")
    return np.fliplr(np.eye(mu))


def permutation_pi(n: int, nu: int, mu: int = 1) -> np.ndarray:
    """The interleaving permutation for nu equal blocks of n/nu items.

    Acting on a vector laid out as nu consecutive blocks of n/nu items (each
    item of width mu), the permutation regroups it into n/nu groups of nu
    items, so that a nu x nu array of equal-size Toeplitz blocks becomes one
    Toeplitz matrix with a nu-times-larger block symbol.
    """
    if nu < 1 or mu < 1 or n < 1:
        raise SizeError(f"arguments must be positive, got {(n, nu, mu)}")
    if n % nu:
        raise DivisibilityError(f"nu={nu} does not divide n={n}")
    small = n // nu
    # source index of each output row: output (i, j) <- input (j, i)
    src = np.empty(n, dtype=int)
    for i in range(small):
        for j in range(nu):
            src[i * nu + j] = j * small + i
    out = np.zeros((n * mu, n * mu))
    rows = np.arange(n * mu)
    cols = (src[:, None] * mu + np.arange(mu)[None, :]).reshape(-1)
    out[rows, cols] = 1.0
    return out


# ----------------------------------------------------------------------
# block structures
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class SizeLaw:
    """One block-size rule n_j(eta) = scale*eta + offset (+ ceil(sqrt(eta)))."""

    scale: Fraction
    offset: int = 0
    add_sqrt_ceil: bool = False

    def __post_init__(self):
        object.__setattr__(self, "scale", Fraction(self.scale))
        if self.scale <= 0:
            raise SizeError(f"size-law scale must be positive, got {self.scale}")

    def block_count(self, eta: int) -> int:
        value = self.scale * eta
        if value.denominator != 1:
            raise SizeError(f"eta={eta} is incompatible with scale {self.scale}")
        count = int(value) + self.offset
        if self.add_sqrt_ceil:
            count += math.isqrt(eta - 1) + 1 if eta > 0 else 0
        if count < 1:
            raise SizeError(f"size law yields non-positive block count {count} at eta={eta}")
        return count

    def describe(self) -> str:
        text = f"{self.scale}*eta" if self.scale != 1 else "eta"
        if self.offset:
            text += f" {'+' if self.offset > 0 else '-'} {abs(self.offset)}"
        if self.add_sqrt_ceil:
            text += " + ceil(sqrt(eta))"
        return text


@dataclass(frozen=True)
class BlockStructureSpec:
    """A nu x nu grid of symbols together with per-block size laws.

    The asymptotic size ratios are read off the size-law scales:
    c_j = scale_j / sum(scale_k), which are exact rationals by construction.
    """

    symbols: SymbolGrid
    size_laws: tuple[SizeLaw, ...]
    label: str = ""

    def __post_init__(self):
        if len(self.size_laws) != self.symbols.nu:
            raise SizeError(
                f"{self.symbols.nu} blocks need {self.symbols.nu} size laws, "
                f"got {len(self.size_laws)}")

    @property
    def nu(self) -> int:
        return self.symbols.nu

    @property
    def block_shape(self) -> tuple[int, int]:
        return self.symbols.block_shape

    @property
    def ratios(self) -> RationalRatioVector:
        total = sum(law.scale for law in self.size_laws)
        return RationalRatioVector.from_ratios([law.scale / total for law in self.size_laws])

    def block_counts(self, eta: int) -> tuple[int, ...]:
        return tuple(law.block_count(eta) for law in self.size_laws)


@dataclass(frozen=True)
class AssembledMatrix:
    """A dense matrix plus its block layout and per-block provenance."""

    data: np.ndarray
    row_partition: tuple[int, ...]
    col_partition: tuple[int, ...]
    provenance: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if sum(self.row_partition) != self.data.shape[0]:
            raise SizeError("row partition does not cover the matrix")
        if sum(self.col_partition) != self.data.shape[1]:
            raise SizeError("column partition does not cover the matrix")
        self.data.setflags(write=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def block(self, i: int, j: int) -> np.ndarray:
        r0 = sum(self.row_partition[:i])
        c0 = sum(self.col_partition[:j])
        return self.data[r0:r0 + self.row_partition[i], c0:c0 + self.col_partition[j]]


def _assemble(grid_blocks, row_sizes, col_sizes, tags) -> AssembledMatrix:
    data = np.block(grid_blocks)
    return AssembledMatrix(
        data=data,
        row_partition=tuple(row_sizes),
        col_partition=tuple(col_sizes),
        provenance=tuple(tuple(row) for row in tags),
    )


def assemble_full(spec: BlockStructureSpec, eta: int) -> AssembledMatrix:
    """The block matrix with block (i, j) = toeplitz_rect(f_ij, n_i, n_j)."""
    counts = spec.block_counts(eta)
    s, t = spec.block_shape
    blocks, tags = [], []
    for i in range(spec.nu):
        row, tag_row = [], []
        for j in range(spec.nu):
            f = spec.symbols.entry(i, j)
            row.append(toeplitz_rect(f, counts[i], counts[j]))
            tag_row.append(f"T[{counts[i]}x{counts[j]}]({f.label or f'f{i + 1}{j + 1}'})")
        blocks.append(row)
        tags.append(tag_row)
    return _assemble(blocks, [s * c for c in counts], [t * c for c in counts], tags)


def assemble_trimmed(spec: BlockStructureSpec, eta: int) -> AssembledMatrix:
    """Like :func:`assemble_full`, but every off-diagonal block keeps only its
    leading square Toeplitz part, zero-padded back to the rectangular shape.

    The parts dropped relative to the full assembly are flipped pieces of
    Hankel matrices, so the difference carries a vanishing fraction of
    non-negligible singular values as eta grows.
    """
    counts = spec.block_counts(eta)
    s, t = spec.block_shape
    blocks, tags = [], []
    for i in range(spec.nu):
        row, tag_row = [], []
        for j in range(spec.nu):
            f = spec.symbols.entry(i, j)
            name = f.label or f"f{i + 1}{j + 1}"
            if i == j:
                row.append(toeplitz(f, counts[i]))
                tag_row.append(f"T[{counts[i]}]({name})")
                continue
            n_min = min(counts[i], counts[j])
            padded = np.zeros((s * counts[i], t * counts[j]), dtype=complex)
            padded[: s * n_min, : t * n_min] = toeplitz(f, n_min)
            row.append(padded)
            tag_row.append(f"T[{n_min}]({name}) padded to {counts[i]}x{counts[j]}")
        blocks.append(row)
        tags.append(tag_row)
    return _assemble(blocks, [s * c for c in counts], [t * c for c in counts], tags)


def assemble_replicated(spec: BlockStructureSpec, eta: int) -> AssembledMatrix:
    """The exactly-divisible surrogate built from equal-size Toeplitz tiles.

    Requires n = sum(n_j) to be a multiple of the ratio denominator m with
    n_j = m_j * (n/m) exactly.  Each grid entry f_jk is laid out as
    min(m_j, m_k) diagonal copies of toeplitz(f_jk, n/m) inside an
    m_j x m_k tile pattern, zero elsewhere; equivalently this is the full
    assembly of the refined m x m symbol grid with equal block sizes, whose
    interleaving permutation turns it into the Toeplitz matrix of the
    distribution symbol.
    """
    counts = spec.block_counts(eta)
    n = sum(counts)
    ratios = spec.ratios
    m = ratios.lcm_denominator
    mult = ratios.multiplicities
    if n % m:
        raise NotExactlyDivisible(f"m={m} does not divide n={n} at eta={eta}")
    base = n // m
    for j, (count, mj) in enumerate(zip(counts, mult)):
        if count != mj * base:
            raise NotExactlyDivisible(
                f"block {j + 1} has {count} blocks, expected {mj}*{base} at eta={eta}")
    s, t = spec.block_shape
    tiles: list[list[np.ndarray]] = [[None] * m for _ in range(m)]
    tags: list[list[str]] = [["0"] * m for _ in range(m)]
    zero_tile = np.zeros((s * base, t * base), dtype=complex)
    row_off = 0
    for j in range(spec.nu):
        col_off = 0
        for k in range(spec.nu):
            f = spec.symbols.entry(j, k)
            name = f.label or f"f{j + 1}{k + 1}"
            pattern = replication_pattern(mult[j], mult[k])
            tile = None
            for p in range(mult[j]):
                for q in range(mult[k]):
                    if pattern[p, q]:
                        if tile is None:
                            tile = toeplitz(f, base)
                        tiles[row_off + p][col_off + q] = tile
                        tags[row_off + p][col_off + q] = f"T[{base}]({name})"
                    else:
                        tiles[row_off + p][col_off + q] = zero_tile
            col_off += mult[k]
        row_off += mult[j]
    return _assemble(tiles, [s * base] * m, [t * base] * m, tags)


# ----------------------------------------------------------------------
# compression
# ----------------------------------------------------------------------


def truncation_projector(n: int, n_keep: int) -> np.ndarray:
    """The n x n_keep matrix [I; O]; columns are orthonormal."""
    if not 1 <= n_keep <= n:
        raise SizeError(f"need 1 <= n_keep <= n, got n_keep={n_keep}, n={n}")
    out = np.zeros((n, n_keep))
    out[:n_keep, :n_keep] = np.eye(n_keep)
    return out


def compress(X: np.ndarray, n_rows_keep: int, n_cols_keep: int) -> np.ndarray:
    """The leading principal submatrix, i.e. P_r^T X P_c for truncation P."""
    X = np.asarray(X)
    if not (1 <= n_rows_keep <= X.shape[0] and 1 <= n_cols_keep <= X.shape[1]):
        raise SizeError(
            f"cannot keep {(n_rows_keep, n_cols_keep)} of a {X.shape} matrix")
    return X[:n_rows_keep, :n_cols_keep].copy()


# ----------------------------------------------------------------------
# dense dumps (row-major, complex as interleaved real/imag pairs)
# ----------------------------------------------------------------------


def dump_matrix_csv(X: np.ndarray, path) -> None:
    X = np.asarray(X, dtype=complex)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rows", X.shape[0], "cols", X.shape[1]])
        for row in X:
            flat = []
            for value in row:
                flat.append(repr(float(value.real)))
                flat.append(repr(float(value.imag)))
            writer.writerow(flat)


def load_matrix_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows, cols = int(header[1]), int(header[3])
        data = np.empty((rows, cols), dtype=complex)
        for i, row in enumerate(reader):
            values = [float(v) for v in row]
            data[i] = np.array(values[0::2]) + 1j * np.array(values[1::2])
    return data


def dump_matrix_binary(X: np.ndarray, path) -> None:
    # complex128 in row-major order is exactly interleaved float64 re/im pairs
    np.ascontiguousarray(np.asarray(X, dtype=complex)).tofile(path)


def load_matrix_binary(path, shape: tuple[int, int]) -> np.ndarray:
    data = np.fromfile(path, dtype=complex)
    return data.reshape(shape)
