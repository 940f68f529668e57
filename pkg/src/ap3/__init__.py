"""Three-term progression counting and density transfer on cyclic groups."""

from ap3.zn_core import (
    GridFunction,
    ResidueSet,
    Spectrum,
    dft,
    expectation,
    idft,
    lambda3_direct,
    lambda3_exact,
    lambda3_spectral,
    norm,
)

__version__ = "0.1.0"

__all__ = [
    "GridFunction",
    "ResidueSet",
    "Spectrum",
    "dft",
    "expectation",
    "idft",
    "lambda3_direct",
    "lambda3_exact",
    "lambda3_spectral",
    "norm",
]
