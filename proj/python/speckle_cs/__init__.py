"""Compressive speckle imaging: speckle synthesis, l1 and generator-prior reconstruction."""

from ._core import (
    BpdnConfig,
    GeneratorModel,
    ReconConfig,
    SolveReport,
    __version__,
    aggregate,
    build_matrix,
    fixture_model,
    forward,
    generate_speckle,
    load_model,
    loss_and_gradient,
    low_pass,
    measure,
    pearson,
    project_l1_ball,
    reconstruct,
    save_model,
    simulate_acquisition,
    solve_bp,
    solve_bpdn,
    solve_lasso,
    synthetic_digit,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
