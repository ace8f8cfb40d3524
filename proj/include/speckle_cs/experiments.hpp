#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "speckle_cs/dataset.hpp"
#include "speckle_cs/gan_recon.hpp"
#include "speckle_cs/generator.hpp"
#include "speckle_cs/l1_solver.hpp"
#include "speckle_cs/metrics.hpp"

namespace speckle_cs {

enum class Method { bp, bpdn, gan, diffraction };

std::string to_string(Method method);
Method parse_method(const std::string& name);

struct CorrelationRecord {
    double nu = 0.0;
    int m = 0;
    double noise = 0.0;
    Method method = Method::bp;
    int digit = 0;
    int rep = 0;
    std::optional<double> r;
    bool converged = true;

    bool operator==(const CorrelationRecord&) const = default;
};

struct SweepGrid {
    std::vector<double> cutoffs{0.1, 0.2, 0.3, 0.5, 0.7};
    std::vector<int> measurements{10, 40, 70, 100, 200, 300, 400, 500, 750};
    std::vector<double> noise_levels{0.0, 0.05, 0.10, 0.20};
    std::vector<Method> methods{Method::bp, Method::gan, Method::diffraction};
    int repetitions = 1;
    std::uint64_t seed = 0;

    void validate() const;
    /// |nu| * |m| * |noise| * |methods| * 10 * repetitions.
    std::size_t record_count() const;
};

/// One unit of sweep work: all ten digit classes of one (nu, m, noise, method, rep).
struct SweepCell {
    double nu = 0.0;
    int m = 0;
    double noise = 0.0;
    Method method = Method::bp;
    int rep = 0;

    std::string key() const;
};

std::vector<SweepCell> enumerate_cells(const SweepGrid& grid);

struct SweepOptions {
    ReconConfig recon;
    BpdnConfig bpdn;
    int delta_grid_points = 8;
    int jobs = 1;
    // Directory for per-record PNG reconstructions; empty disables image export.
    std::filesystem::path image_dir;
    // Called once per finished cell with its ten records (serialized by the caller's lock).
    std::function<void(const SweepCell&, const std::vector<CorrelationRecord>&)> on_cell;
    // Cells for which this returns true are skipped (used for resuming).
    std::function<bool(const SweepCell&)> skip_cell;
    // When set, an exception inside a cell is reported here and the cell yields no
    // records; otherwise the first failure is rethrown once all workers finish.
    std::function<void(const SweepCell&, const std::string&)> on_failure;
};

/// Seed of the acquisition shared by every method of a (nu, m, noise, rep, digit) sample.
std::uint64_t sample_seed(std::uint64_t master, double nu, int m, double noise, int rep, int digit);

/// Runs one cell: ten records, one per digit class, ordered by digit.
std::vector<CorrelationRecord> run_cell(const SweepCell& cell, const SweepGrid& grid,
                                        const std::vector<LabeledSample>& digits, const GeneratorModel* model,
                                        const SweepOptions& options);

/// Full sweep over `grid`. Digits are drawn per repetition with
/// pick_one_per_class(dataset, derive_seed(grid.seed, {rep})). Output order
/// follows enumerate_cells, independent of `options.jobs`.
std::vector<CorrelationRecord> run_sweep(const SweepGrid& grid, const GeneratorModel* model,
                                         const std::vector<LabeledSample>& dataset, const SweepOptions& options);

struct AggregateRow {
    double nu = 0.0;
    int m = 0;
    double noise = 0.0;
    Method method = Method::bp;
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation
    int count = 0;
    int undefined = 0;  // records with undefined r, excluded from mean/std
};

/// Mean and std of r per (nu, m, noise, method), ordered by that key.
std::vector<AggregateRow> aggregate(const std::vector<CorrelationRecord>& records);

/// Nyquist reference: m equal to the pixel count n.
int nyquist_line(int n);
bool is_sub_nyquist(int m, int n);

inline constexpr const char* kRecordsHeader = "nu,m,noise,method,digit,rep,r,converged";

std::string format_number(double v);
std::string record_csv_line(const CorrelationRecord& record);
void write_records_csv(std::ostream& out, const std::vector<CorrelationRecord>& records, bool header = true);
std::vector<CorrelationRecord> read_records_csv(std::istream& in);
void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);

/// `{method}_nu{nu}_m{m}_noise{level}_d{digit}.png`, with `_r{rep}` appended for rep > 0.
std::string image_file_name(const CorrelationRecord& record);

}  // namespace speckle_cs
