"""Corner-spectrum analysis and singularity guided Nyström solves for the 2D Lamé double layer."""

from .geometry import Shape, make_shape
from .kernels import ElasticParams
from .mellin import assemble_A, assemble_F, kernel_vector, mapping_B, mellin_I0, mellin_I1, mellin_I2
from .panelizer import Mesh, refine, uniform_mesh
from .solver import assemble, eval_interior, relative_error, solve_dense
from .spectrum import BranchId, CornerSpectrum, corner_spectrum

__all__ = [
    "BranchId", "CornerSpectrum", "ElasticParams", "Mesh", "Shape", "assemble", "assemble_A", "assemble_F",
    "corner_spectrum", "eval_interior", "kernel_vector", "make_shape", "mapping_B", "mellin_I0", "mellin_I1",
    "mellin_I2", "refine", "relative_error", "solve_dense", "uniform_mesh",
]
