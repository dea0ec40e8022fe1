"""Benchmark PDEs: problems, differential operators and reference data."""

from .grid import GroundTruthError, GroundTruthGrid, load_ground_truth, save_ground_truth
from .operators import (
    Kernels,
    exact_solution,
    kernels,
    pde_loss,
    pde_loss_generic,
    residual,
    residual_generic,
    surrogate,
    surrogate_generic,
    surrogate_jets,
)
from .problems import (
    PROBLEMS,
    AllenCahn,
    Burgers,
    Condition,
    Diffusion,
    DriftDiffusion,
    PdeProblem,
    UnsupportedProblemError,
    Wave,
    get_problem,
)
from .reference import (
    DATA_DIR_ENV,
    generate_ground_truth,
    ground_truth_path,
    load_problem_grid,
)
