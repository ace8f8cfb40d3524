#include "speckle_cs/gan_recon.hpp"

#include <cmath>
#include <limits>

#include "speckle_cs/errors.hpp"
#include "speckle_cs/metrics.hpp"
#include "speckle_cs/parallel.hpp"
#include "speckle_cs/rng.hpp"

namespace speckle_cs {
namespace {

struct RestartRun {
    bool ok = false;
    double initial_loss = std::numeric_limits<double>::quiet_NaN();
    double final_loss = std::numeric_limits<double>::infinity();
    Vector z;
    std::vector<double> trace;
    std::string error;
};

RestartRun run_restart(const GeneratorModel& model, const RowMajorMatrix& a, const Vector& y,
                       const ReconConfig& config, int index) {
    RestartRun run;
    run.z = random_latent(model.latent_dim(), derive_seed(config.seed, {static_cast<std::uint64_t>(index)}));
    AdamState adam({config.lr, config.beta1, config.beta2, config.epsilon}, run.z.size());
    run.trace.reserve(static_cast<std::size_t>(config.steps) + 1);
    try {
        bool plateaued = false;
        for (int step = 0; step < config.steps; ++step) {
            const LossGradient lg = loss_and_gradient(model, run.z, a, y);
            if (!std::isfinite(lg.loss) || !lg.gradient.allFinite()) {
                throw NumericError("non-finite loss or gradient at step " + std::to_string(step));
            }
            run.trace.push_back(lg.loss);
            if (config.plateau_stop && step >= config.plateau_window) {
                const double before = run.trace[run.trace.size() - 1 - static_cast<std::size_t>(config.plateau_window)];
                if (before - lg.loss <= config.plateau_rel_tol * std::max(before, 1e-300)) {
                    plateaued = true;
                    break;
                }
            }
            adam_step(adam, run.z, lg.gradient);
        }
        if (!plateaued) {
            const double last = loss_and_gradient(model, run.z, a, y).loss;
            if (!std::isfinite(last)) {
                throw NumericError("non-finite final loss");
            }
            run.trace.push_back(last);
        }
        run.initial_loss = run.trace.front();
        run.final_loss = run.trace.back();
        run.ok = true;
    } catch (const NumericError& e) {
        run.error = e.what();
    }
    return run;
}

}  // namespace

void ReconConfig::validate() const {
    if (steps < 0) {
        throw ArgumentError("steps must be >= 0");
    }
    if (restarts < 1) {
        throw ArgumentError("restarts must be >= 1");
    }
    if (!(lr > 0.0)) {
        throw ArgumentError("learning rate must be > 0");
    }
}

ReconResult reconstruct(const GeneratorModel& model, const RowMajorMatrix& a, const Vector& y,
                        const ReconConfig& config) {
    config.validate();
    if (a.cols() != model.output_size() || a.rows() != y.size()) {
        throw ArgumentError("inconsistent dimensions between model, A and y");
    }
    std::vector<RestartRun> runs(static_cast<std::size_t>(config.restarts));
    parallel_for(runs.size(), config.jobs,
                 [&](std::size_t r) { runs[r] = run_restart(model, a, y, config, static_cast<int>(r)); });

    ReconResult result;
    result.best_loss = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < runs.size(); ++r) {
        result.restart_initial_losses.push_back(runs[r].initial_loss);
        if (!runs[r].ok) {
            result.restart_losses.push_back(std::nullopt);
            result.warnings.push_back("restart " + std::to_string(r) + " discarded: " + runs[r].error);
            continue;
        }
        result.restart_losses.push_back(runs[r].final_loss);
        if (runs[r].final_loss < result.best_loss) {
            result.best_loss = runs[r].final_loss;
            result.best_restart = static_cast<int>(r);
        }
    }
    if (result.best_restart < 0) {
        throw ReconstructionError("all " + std::to_string(config.restarts) + " restarts failed");
    }
    RestartRun& best = runs[static_cast<std::size_t>(result.best_restart)];
    result.latent = std::move(best.z);
    result.loss_trace = std::move(best.trace);
    result.image = to_measurement_domain(forward(model, result.latent));
    return result;
}

DigitCaseResult reconstruct_digit_case(const GeneratorModel& model, const GrayImage& truth, int m, double cutoff,
                                       double noise_level, std::uint64_t seed, ReconConfig config) {
    if (m < 1) {
        throw ArgumentError("measurement count m must be >= 1");
    }
    const Acquisition acq = simulate_acquisition(truth, m, cutoff, noise_level, seed);
    config.seed = derive_seed(seed, {3});
    DigitCaseResult out;
    out.recon = reconstruct(model, acq.matrix.values, acq.signal.values, config);
    out.r = pearson(out.recon.image, truth);
    return out;
}

}  // namespace speckle_cs
