#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "speckle_cs/forward_model.hpp"
#include "speckle_cs/generator.hpp"

namespace speckle_cs {

struct ReconConfig {
    int steps = 2000;
    int restarts = 10;
    double lr = 0.1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    // Optional loss-plateau stop for interactive use; off by default.
    bool plateau_stop = false;
    int plateau_window = 100;
    double plateau_rel_tol = 1e-6;
    // Restarts run concurrently on up to this many threads (<= 0: all cores).
    int jobs = 1;

    void validate() const;
};

struct ReconResult {
    GrayImage image;  // (G(z_hat) + 1) / 2
    Vector latent;
    double best_loss = 0.0;
    int best_restart = -1;
    // Final loss per restart; nullopt for restarts discarded after a numeric failure.
    std::vector<std::optional<double>> restart_losses;
    std::vector<double> restart_initial_losses;
    // Loss at every step of the winning restart, including the starting point.
    std::vector<double> loss_trace;
    std::vector<std::string> warnings;
};

/// Multi-restart Adam descent on L(z) = ||A (G(z)+1)/2 - y||^2. Restart r starts
/// from a standard-normal z seeded by derive_seed(config.seed, {r}); the restart
/// with the lowest final loss wins (lowest index on ties).
ReconResult reconstruct(const GeneratorModel& model, const RowMajorMatrix& a, const Vector& y,
                        const ReconConfig& config);

struct DigitCaseResult {
    ReconResult recon;
    std::optional<double> r;
};

/// Simulate (m, nu, noise) acquisition of `truth`, reconstruct, and correlate with truth.
DigitCaseResult reconstruct_digit_case(const GeneratorModel& model, const GrayImage& truth, int m, double cutoff,
                                       double noise_level, std::uint64_t seed, ReconConfig config = {});

}  // namespace speckle_cs
