"""Incremental ridge solvers for broad learning networks."""

from .linalg import (
    NotPositiveDefiniteError,
    ShapeError,
    cholesky,
    gram_plus_lambda,
    inverse_cholesky,
    matmul,
    solve_triangular,
)
from .solvers import (
    SOLVERS,
    CholSolver,
    GenCholSolver,
    GrevilleSolver,
    LambdaTooSmallError,
    RidgeInverseSolver,
    StandardSolver,
    make_solver,
    standard_ridge,
)
from .flops import FlopModel, dominant_flops, flops_init, flops_per_update
from .network import BlsConfig, BlsNetwork
from .data import Dataset, load_csv, load_idx, load_mnist, synth_blobs

__all__ = [
    "NotPositiveDefiniteError",
    "ShapeError",
    "cholesky",
    "gram_plus_lambda",
    "inverse_cholesky",
    "matmul",
    "solve_triangular",
    "SOLVERS",
    "CholSolver",
    "GenCholSolver",
    "GrevilleSolver",
    "LambdaTooSmallError",
    "RidgeInverseSolver",
    "StandardSolver",
    "make_solver",
    "standard_ridge",
    "FlopModel",
    "dominant_flops",
    "flops_init",
    "flops_per_update",
    "BlsConfig",
    "BlsNetwork",
    "Dataset",
    "load_csv",
    "load_idx",
    "load_mnist",
    "synth_blobs",
]

__version__ = "0.1.0"
