"""Selected configuration interaction: heat-bath CI and a simulated HI-VQE loop."""

from hivqe.determinants import Determinant, hf_determinant, matrix_element
from hivqe.integrals import IntegralSet, parse_fcidump, read_fcidump, write_fcidump
from hivqe.solver import CIVector, SubspaceResult

__all__ = [
    "CIVector",
    "Determinant",
    "IntegralSet",
    "SubspaceResult",
    "hf_determinant",
    "matrix_element",
    "parse_fcidump",
    "read_fcidump",
    "write_fcidump",
]

__version__ = "0.1.0"
