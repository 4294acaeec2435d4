"""Block matrices with rectangular Toeplitz blocks.

Tools for assembling block matrices whose blocks are (rectangular) Toeplitz
matrices generated by matrix-valued 2pi-periodic symbols, for constructing
the predicted block distribution symbol, and for numerically comparing the
eigenvalue / singular-value behaviour of the assembled matrices against
samplings of that symbol.
"""

from .symbols import (
    MatrixSymbol,
    QuadratureNotConverged,
    RationalRatioVector,
    RatioMismatch,
    ShapeMismatch,
    SymbolGrid,
    block_symbol,
    build_distribution_symbol,
    refined_symbol_grid,
    theta_squared,
)

__version__ = "0.1.0"

__all__ = [
    "MatrixSymbol",
    "SymbolGrid",
    "RationalRatioVector",
    "ShapeMismatch",
    "RatioMismatch",
    "QuadratureNotConverged",
    "block_symbol",
    "refined_symbol_grid",
    "build_distribution_symbol",
    "theta_squared",
    "__version__",
]
