#include "speckle_cs/l1_solver.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <numeric>
#include <string>

#include "speckle_cs/errors.hpp"
#include "speckle_cs/metrics.hpp"

namespace speckle_cs {
namespace {

constexpr double kMinStep = 1e-10;
constexpr double kMaxStep = 1e10;
constexpr int kHistory = 10;
constexpr double kArmijo = 1e-4;
constexpr int kMaxLineSearch = 40;

void check_inputs(const RowMajorMatrix& a, const Vector& y) {
    if (a.rows() != y.size()) {
        throw ArgumentError("matrix has " + std::to_string(a.rows()) + " rows but y has " +
                            std::to_string(y.size()) + " entries");
    }
    if (!a.allFinite() || !y.allFinite()) {
        throw NumericError("non-finite entries in A or y");
    }
}

double pareto_tolerance(const BpdnConfig& config, double y_norm) {
    return config.pareto_tol.value_or(1e-5 * std::max(1.0, y_norm));
}

struct SpgState {
    Vector x;
    Vector r;  // y - A x
    Vector g;  // -A^T r
    double f = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Decides whether the current subproblem iterate is good enough to stop early.
using StopRule = std::function<bool(const SpgState&, double pg_norm)>;

SpgState spg(const RowMajorMatrix& a, const Vector& y, double tau, const Vector& x_init,
             const BpdnConfig& config, const StopRule& extra_stop, std::vector<double>* trace) {
    SpgState s;
    s.x = project_l1_ball(x_init, tau);
    s.r = y - a * s.x;
    s.g = -(a.transpose() * s.r);
    s.f = 0.5 * s.r.squaredNorm();
    if (trace != nullptr) {
        trace->push_back(s.f);
    }

    const double pg_tol = config.opt_tol * (1.0 + y.norm());
    std::deque<double> history{s.f};

    Vector dx = project_l1_ball(s.x - s.g, tau) - s.x;
    const double dx_inf = dx.lpNorm<Eigen::Infinity>();
    double step = dx_inf < 1.0 / kMaxStep ? kMaxStep : std::clamp(1.0 / dx_inf, kMinStep, kMaxStep);
    bool reset_once = false;

    for (; s.iterations < config.max_inner; ++s.iterations) {
        const double pg_norm = (project_l1_ball(s.x - s.g, tau) - s.x).norm();
        if (pg_norm < pg_tol || (extra_stop && extra_stop(s, pg_norm))) {
            s.converged = true;
            break;
        }

        const Vector d = project_l1_ball(s.x - step * s.g, tau) - s.x;
        const double gtd = s.g.dot(d);
        if (!(gtd < 0.0)) {
            // No descent along the projected direction: stationary to working precision.
            s.converged = true;
            break;
        }
        const double f_ref = *std::max_element(history.begin(), history.end());

        double alpha = 1.0;
        Vector x_new;
        Vector r_new;
        double f_new = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < kMaxLineSearch; ++ls) {
            x_new = s.x + alpha * d;
            r_new = y - a * x_new;
            f_new = 0.5 * r_new.squaredNorm();
            if (f_new <= f_ref + kArmijo * alpha * gtd) {
                accepted = true;
                break;
            }
            // Safeguarded quadratic interpolation.
            const double denom = 2.0 * (f_new - s.f - alpha * gtd);
            double next = denom > 0.0 ? -gtd * alpha * alpha / denom : 0.5 * alpha;
            if (next < 0.1 * alpha || next > 0.9 * alpha) {
                next = 0.5 * alpha;
            }
            alpha = next;
        }
        if (!accepted) {
            if (reset_once) {
                break;
            }
            // One retry from a unit BB step before giving up.
            reset_once = true;
            step = 1.0;
            continue;
        }
        reset_once = false;
        if (!std::isfinite(f_new)) {
            throw NumericError("non-finite objective in projected-gradient iteration");
        }

        Vector g_new = -(a.transpose() * r_new);
        const Vector s_vec = x_new - s.x;
        const Vector y_vec = g_new - s.g;
        const double sts = s_vec.squaredNorm();
        const double sty = s_vec.dot(y_vec);
        step = sty <= 0.0 ? kMaxStep : std::clamp(sts / sty, kMinStep, kMaxStep);

        s.x = std::move(x_new);
        s.r = std::move(r_new);
        s.g = std::move(g_new);
        s.f = f_new;
        if (trace != nullptr) {
            trace->push_back(s.f);
        }
        history.push_back(s.f);
        if (static_cast<int>(history.size()) > kHistory) {
            history.pop_front();
        }
    }
    return s;
}

SolveReport make_report(SpgState&& s, double tau) {
    SolveReport report;
    report.residual_norm = s.r.norm();
    report.l1_norm = s.x.lpNorm<1>();
    report.tau = tau;
    report.iterations = s.iterations;
    report.converged = s.converged;
    report.solution = std::move(s.x);
    return report;
}

}  // namespace

Vector project_l1_ball(const Vector& v, double tau) {
    if (tau < 0.0 || std::isnan(tau)) {
        throw ArgumentError("l1-ball radius must be >= 0");
    }
    if (v.lpNorm<1>() <= tau) {
        return v;
    }
    if (tau == 0.0) {
        return Vector::Zero(v.size());
    }
    std::vector<double> mags(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        mags[static_cast<std::size_t>(i)] = std::abs(v[i]);
    }
    std::sort(mags.begin(), mags.end(), std::greater<>());

    // Largest k with mags[k-1] > (sum of top k - tau) / k fixes the threshold.
    double cumulative = 0.0;
    double theta = 0.0;
    for (std::size_t k = 0; k < mags.size(); ++k) {
        cumulative += mags[k];
        const double candidate = (cumulative - tau) / static_cast<double>(k + 1);
        if (candidate >= mags[k]) {
            break;
        }
        theta = candidate;
    }

    Vector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double shrunk = std::max(std::abs(v[i]) - theta, 0.0);
        out[i] = std::copysign(shrunk, v[i]);
    }
    return out;
}

SolveReport solve_lasso(const RowMajorMatrix& a, const Vector& y, double tau, const BpdnConfig& config,
                        const Vector* x0) {
    check_inputs(a, y);
    if (tau < 0.0) {
        throw ArgumentError("tau must be >= 0");
    }
    const Vector start = x0 != nullptr ? *x0 : Vector::Zero(a.cols());
    std::vector<double> trace;
    SpgState s = spg(a, y, tau, start, config, nullptr, &trace);
    SolveReport report = make_report(std::move(s), tau);
    report.objective_trace = std::move(trace);
    return report;
}

// For delta = 0 the solution satisfies A_S x_S = y on its support S. A minimum-norm
// correction on S removes the residual left by the Pareto tolerance; it is kept
// only if every sign on S survives and the residual shrinks.
void polish_on_support(const RowMajorMatrix& a, const Vector& y, SpgState& state) {
    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < state.x.size(); ++i) {
        if (state.x[i] != 0.0) {
            support.push_back(i);
        }
    }
    if (support.empty() || static_cast<Eigen::Index>(support.size()) > a.rows()) {
        return;
    }
    Eigen::MatrixXd a_s(a.rows(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t k = 0; k < support.size(); ++k) {
        a_s.col(static_cast<Eigen::Index>(k)) = a.col(support[k]);
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a_s);
    if (qr.rank() < a_s.cols()) {
        return;
    }
    const Vector correction = qr.solve(state.r);
    Vector x = state.x;
    for (std::size_t k = 0; k < support.size(); ++k) {
        const double updated = x[support[k]] + correction[static_cast<Eigen::Index>(k)];
        if ((updated > 0.0) != (x[support[k]] > 0.0) || updated == 0.0) {
            return;
        }
        x[support[k]] = updated;
    }
    Vector r = y - a * x;
    if (!(r.norm() < state.r.norm())) {
        return;
    }
    state.x = std::move(x);
    state.r = std::move(r);
    state.g = -(a.transpose() * state.r);
    state.f = 0.5 * state.r.squaredNorm();
}

constexpr int kMaxRefineSteps = 60;
constexpr double kRefineRelGap = 1e-9;

SolveReport solve_bpdn(const RowMajorMatrix& a, const Vector& y, const BpdnConfig& config) {
    check_inputs(a, y);
    if (config.delta < 0.0) {
        throw ArgumentError("delta must be >= 0");
    }
    const double y_norm = y.norm();
    const double tol = pareto_tolerance(config, y_norm);

    if (y_norm <= config.delta) {
        SolveReport report;
        report.solution = Vector::Zero(a.cols());
        report.residual_norm = y_norm;
        report.converged = true;
        return report;
    }

    const double delta = config.delta;
    double tau = 0.0;
    Vector x = Vector::Zero(a.cols());
    int total_inner = 0;
    SpgState state;
    int outer = 0;
    bool converged = false;
    // Largest tau known to be infeasible, and the best dual lower bound on the optimal l1 norm.
    double tau_low = 0.0;
    double l1_lower = 0.0;

    BpdnConfig inner_config = config;
    inner_config.opt_tol = 0.0;
    auto solve_at = [&](double t, const Vector& start) {
        // The subproblem only needs phi accurate to a fraction of its distance from
        // delta; the duality gap bounds that error by about gap / phi.
        StopRule early = [&](const SpgState& s, double) {
            const double r_norm = s.r.norm();
            if (std::abs(r_norm - delta) <= tol) {
                return true;
            }
            const double g_inf = s.g.lpNorm<Eigen::Infinity>();
            const double gap = s.r.dot(s.r - y) + t * g_inf;
            return gap <= 0.1 * r_norm * std::abs(r_norm - delta);
        };
        SpgState s = spg(a, y, t, start, inner_config, early, nullptr);
        total_inner += s.iterations;
        return s;
    };
    // Any residual w gives (y.w - delta*||w||) / ||A^T w||_inf <= min ||x||_1 by weak duality.
    // tau is only known to be infeasible when the duality gap certifies phi*(tau) > delta + tol.
    auto note_infeasible = [&](const SpgState& s, double t) {
        const double g_inf = s.g.lpNorm<Eigen::Infinity>();
        const double phi = s.r.norm();
        const double gap = s.r.dot(s.r - y) + t * g_inf;
        if (phi * phi - 2.0 * gap > (delta + tol) * (delta + tol)) {
            tau_low = std::max(tau_low, t);
        }
        if (g_inf > 0.0) {
            l1_lower = std::max(l1_lower, (y.dot(s.r) - delta * phi) / g_inf);
        }
    };

    for (; outer <= config.max_outer; ++outer) {
        state = solve_at(tau, x);
        x = state.x;

        const double phi = state.r.norm();
        if (std::abs(phi - delta) <= tol) {
            converged = true;
            break;
        }
        note_infeasible(state, tau);
        if (outer == config.max_outer) {
            break;
        }
        const double g_inf = state.g.lpNorm<Eigen::Infinity>();
        if (g_inf <= 0.0) {
            break;
        }
        // Newton step on phi(tau) = delta using phi'(tau) = -||A^T r||_inf / ||r||_2.
        const double next_tau = std::max(0.0, tau + phi * (phi - delta) / g_inf);
        if (std::abs(next_tau - tau) <= 1e-14 * std::max(1.0, tau)) {
            // Stalled: delta is not attainable.
            break;
        }
        tau = next_tau;
    }

    if (converged) {
        // Inexact Newton steps can overshoot the smallest feasible tau, where any
        // feasible point of the larger ball is accepted. Bisect back towards the
        // lower bounds until the l1 gap is negligible.
        for (int step = 0; step < kMaxRefineSteps; ++step) {
            const double low = std::max(tau_low, l1_lower);
            if (tau - low <= kRefineRelGap * std::max(1.0, tau)) {
                break;
            }
            const double trial = 0.5 * (low + tau);
            const auto certified_infeasible = [&](const SpgState& s) {
                const double phi = s.r.norm();
                const double gap = s.r.dot(s.r - y) + trial * s.g.lpNorm<Eigen::Infinity>();
                return phi * phi - 2.0 * gap > (delta + tol) * (delta + tol);
            };
            StopRule classified = [&](const SpgState& s, double) {
                return s.r.norm() <= delta + tol || certified_infeasible(s);
            };
            BpdnConfig strict = config;
            strict.opt_tol = 0.0;
            SpgState s = spg(a, y, trial, state.x, strict, classified, nullptr);
            total_inner += s.iterations;
            if (s.r.norm() <= delta + tol) {
                tau = trial;
                state = std::move(s);
            } else if (certified_infeasible(s)) {
                note_infeasible(s, trial);
            } else {
                break;
            }
        }
    }

    if (converged && delta == 0.0) {
        polish_on_support(a, y, state);
    }

    SolveReport report = make_report(std::move(state), tau);
    report.iterations = total_inner;
    report.outer_iterations = outer;
    report.converged = converged;
    return report;
}

SolveReport solve_bp(const RowMajorMatrix& a, const Vector& y, BpdnConfig config) {
    config.delta = 0.0;
    config.pareto_tol = 1e-6 * std::max(1.0, y.norm());
    return solve_bpdn(a, y, config);
}

DeltaChoice tune_delta(const RowMajorMatrix& a, const Vector& y, const GrayImage& truth,
                       const std::vector<double>& grid, const BpdnConfig& base) {
    if (grid.empty()) {
        throw ArgumentError("tune_delta needs a non-empty delta grid");
    }
    std::optional<DeltaChoice> best;
    for (double delta : grid) {
        BpdnConfig config = base;
        config.delta = delta;
        SolveReport report = solve_bpdn(a, y, config);
        const GrayImage image = GrayImage::from_flat(truth.width(), truth.height(), report.solution);
        const auto r = pearson(image, truth);
        const bool better = !best || (r && (!best->r || *r > *best->r));
        if (better) {
            best = DeltaChoice{delta, r, std::move(report)};
        }
    }
    return std::move(*best);
}

std::vector<double> log_spaced_deltas(double y_norm, int count, double lo_frac, double hi_frac) {
    if (count < 1 || lo_frac <= 0.0 || hi_frac < lo_frac) {
        throw ArgumentError("invalid delta grid specification");
    }
    std::vector<double> grid(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        grid[static_cast<std::size_t>(i)] = y_norm * lo_frac * std::pow(hi_frac / lo_frac, t);
    }
    return grid;
}

}  // namespace speckle_cs
