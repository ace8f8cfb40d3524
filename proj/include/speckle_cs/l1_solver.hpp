#pragma once

#include <optional>
#include <vector>

#include "speckle_cs/image.hpp"

namespace speckle_cs {

/// Settings for the Pareto-curve BPDN solver. `delta` is a bound on the
/// residual norm ||Ax - y||_2 (not its square).
struct BpdnConfig {
    double delta = 0.0;
    int max_outer = 40;
    int max_inner = 10000;
    double opt_tol = 1e-6;
    // Absolute tolerance on |phi(tau) - delta|; defaults to 1e-5 * max(1, ||y||_2).
    std::optional<double> pareto_tol;
};

struct SolveReport {
    Vector solution;
    double residual_norm = 0.0;
    double l1_norm = 0.0;
    double tau = 0.0;
    int iterations = 0;        // projected-gradient iterations, all subproblems
    int outer_iterations = 0;  // root-finding updates of tau
    bool converged = false;
    // Objective 0.5*||Ax - y||^2 after each accepted step (solve_lasso only).
    std::vector<double> objective_trace;
};

/// Euclidean projection of v onto the l1 ball of radius tau.
Vector project_l1_ball(const Vector& v, double tau);

/// min ||Ax - y||_2 subject to ||x||_1 <= tau by spectral projected gradient,
/// optionally warm-started from x0.
SolveReport solve_lasso(const RowMajorMatrix& a, const Vector& y, double tau, const BpdnConfig& config,
                        const Vector* x0 = nullptr);

/// min ||x||_1 subject to ||Ax - y||_2 <= delta, by Newton root-finding on the
/// Pareto curve phi(tau) = delta.
SolveReport solve_bpdn(const RowMajorMatrix& a, const Vector& y, const BpdnConfig& config);

/// Basis pursuit: solve_bpdn with delta = 0 and pareto_tol = 1e-6 * max(1, ||y||_2).
SolveReport solve_bp(const RowMajorMatrix& a, const Vector& y, BpdnConfig config = {});

struct DeltaChoice {
    double delta = 0.0;
    std::optional<double> r;
    SolveReport report;
};

/// Evaluation-mode tuning: solves BPDN for every delta in `grid` and keeps the
/// one whose solution correlates best with `truth`. Ties keep the earlier delta.
DeltaChoice tune_delta(const RowMajorMatrix& a, const Vector& y, const GrayImage& truth,
                       const std::vector<double>& grid, const BpdnConfig& base = {});

/// `count` log-spaced deltas between lo_frac * ||y|| and hi_frac * ||y||.
std::vector<double> log_spaced_deltas(double y_norm, int count = 8, double lo_frac = 1e-3,
                                      double hi_frac = 0.3);

}  // namespace speckle_cs
