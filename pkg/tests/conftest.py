import numpy as np
import pytest

from blocktoep.assembly import BlockStructureSpec, SizeLaw
from blocktoep.symbols import MatrixSymbol, SymbolGrid, theta_squared


def scalar(coeffs, label=""):
    return MatrixSymbol.trig_polynomial(
        {k: np.array([[v]], dtype=complex) for k, v in coeffs.items()}, label=label)


@pytest.fixture
def group1_symbols():
    return {
        "f11": scalar({0: 2, 1: -1, -1: -1}, "f11"),
        "f12": scalar({0: 1, -1: -1}, "f12"),
        "f21": scalar({0: 1, 1: -1}, "f21"),
        "f22": scalar({0: 2, 1: -1, -1: -1, 2: -3, -2: -3}, "f22"),
    }


@pytest.fixture
def group1_grid(group1_symbols):
    g = group1_symbols
    return SymbolGrid.from_rows([[g["f11"], g["f12"]], [g["f21"], g["f22"]]])


@pytest.fixture
def group1_spec_a(group1_grid):
    return BlockStructureSpec(group1_grid, (SizeLaw(1), SizeLaw(2)))


@pytest.fixture
def group1_spec_c(group1_grid):
    return BlockStructureSpec(group1_grid, (SizeLaw(1), SizeLaw(2, add_sqrt_ceil=True)))


@pytest.fixture
def group1_singular_spec(group1_symbols):
    g = group1_symbols
    grid = SymbolGrid.from_rows([[theta_squared(), g["f12"]], [g["f12"], g["f22"]]])
    return BlockStructureSpec(grid, (SizeLaw(1), SizeLaw(2, add_sqrt_ceil=True)))


def q2_projector_symbol():
    return MatrixSymbol.trig_polynomial({
        0: np.array([[3 / 4, 3 / 8], [0, 1]]),
        1: np.array([[0, 3 / 8], [0, 0]]),
        -1: np.array([[3 / 4, -1 / 8], [1, 0]]),
        -2: np.array([[0, -1 / 8], [0, 0]]),
    }, label="pQ2")


def q2_stiffness_symbol():
    return MatrixSymbol.trig_polynomial({
        0: np.array([[16, -8], [-8, 14]]) / 3,
        1: np.array([[0, -8], [0, 1]]) / 3,
        -1: np.array([[0, 0], [-8, 1]]) / 3,
    }, label="fQ2")


def spline20_symbol():
    return MatrixSymbol.trig_polynomial({
        0: np.array([[4, -2], [-2, 8]]) / 3,
        1: np.array([[0, -2], [0, -2]]) / 3,
        -1: np.array([[0, 0], [-2, -2]]) / 3,
    }, label="f20")


def stencil2_symbol():
    return MatrixSymbol.trig_polynomial({
        0: np.array([[2, -1], [-1, 2]]),
        1: np.array([[0, -1], [0, 0]]),
        -1: np.array([[0, 0], [-1, 0]]),
    }, label="fd2")
