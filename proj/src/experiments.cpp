#include "speckle_cs/experiments.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <tuple>

#include "speckle_cs/errors.hpp"
#include "speckle_cs/forward_model.hpp"
#include "speckle_cs/io.hpp"
#include "speckle_cs/parallel.hpp"
#include "speckle_cs/rng.hpp"
#include "speckle_cs/speckle.hpp"

namespace speckle_cs {
namespace {

std::uint64_t bits(double v) { return std::bit_cast<std::uint64_t>(v); }

CorrelationRecord base_record(const SweepCell& cell, int digit) {
    CorrelationRecord rec;
    rec.nu = cell.nu;
    rec.m = cell.m;
    rec.noise = cell.noise;
    rec.method = cell.method;
    rec.digit = digit;
    rec.rep = cell.rep;
    return rec;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, sep)) {
        out.push_back(item);
    }
    if (!line.empty() && line.back() == sep) {
        out.emplace_back();
    }
    return out;
}

}  // namespace

std::string to_string(Method method) {
    switch (method) {
        case Method::bp: return "bp";
        case Method::bpdn: return "bpdn";
        case Method::gan: return "gan";
        case Method::diffraction: return "diffraction";
    }
    return "?";
}

Method parse_method(const std::string& name) {
    if (name == "bp") return Method::bp;
    if (name == "bpdn") return Method::bpdn;
    if (name == "gan") return Method::gan;
    if (name == "diffraction") return Method::diffraction;
    throw ArgumentError("unknown method '" + name + "' (expected bp, bpdn, gan or diffraction)");
}

void SweepGrid::validate() const {
    if (cutoffs.empty() || measurements.empty() || noise_levels.empty() || methods.empty()) {
        throw ArgumentError("sweep grid lists must be non-empty");
    }
    if (repetitions < 1) {
        throw ArgumentError("repetitions must be >= 1");
    }
    for (double nu : cutoffs) {
        validate_cutoff(nu);
    }
    for (int m : measurements) {
        if (m < 1) {
            throw ArgumentError("measurement counts must be >= 1");
        }
    }
    for (double level : noise_levels) {
        if (!(level >= 0.0)) {
            throw ArgumentError("noise levels must be >= 0");
        }
    }
}

std::size_t SweepGrid::record_count() const {
    return cutoffs.size() * measurements.size() * noise_levels.size() * methods.size() * 10 *
           static_cast<std::size_t>(repetitions);
}

std::string SweepCell::key() const {
    return to_string(method) + "_nu" + format_number(nu) + "_m" + std::to_string(m) + "_noise" +
           format_number(noise) + "_r" + std::to_string(rep);
}

std::vector<SweepCell> enumerate_cells(const SweepGrid& grid) {
    std::vector<SweepCell> cells;
    for (double nu : grid.cutoffs) {
        for (int m : grid.measurements) {
            for (double noise : grid.noise_levels) {
                for (Method method : grid.methods) {
                    for (int rep = 0; rep < grid.repetitions; ++rep) {
                        cells.push_back({nu, m, noise, method, rep});
                    }
                }
            }
        }
    }
    return cells;
}

std::uint64_t sample_seed(std::uint64_t master, double nu, int m, double noise, int rep, int digit) {
    return derive_seed(master, {bits(nu), static_cast<std::uint64_t>(m), bits(noise),
                                static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(digit)});
}

std::vector<CorrelationRecord> run_cell(const SweepCell& cell, const SweepGrid& grid,
                                        const std::vector<LabeledSample>& digits, const GeneratorModel* model,
                                        const SweepOptions& options) {
    if (cell.method == Method::gan && model == nullptr) {
        throw ArgumentError("method gan requires a generator model");
    }
    std::vector<CorrelationRecord> records;
    records.reserve(digits.size());
    for (const auto& sample : digits) {
        const GrayImage& truth = sample.image;
        CorrelationRecord rec = base_record(cell, sample.label);
        GrayImage recon;
        if (cell.method == Method::diffraction) {
            // Independent of m and noise: the same low-pass view at every m.
            recon = diffraction_limited_image(truth, cell.nu);
        } else {
            const std::uint64_t seed = sample_seed(grid.seed, cell.nu, cell.m, cell.noise, cell.rep, sample.label);
            const Acquisition acq = simulate_acquisition(truth, cell.m, cell.nu, cell.noise, seed);
            const auto& a = acq.matrix.values;
            const auto& y = acq.signal.values;
            if (cell.method == Method::bp) {
                const SolveReport report = solve_bp(a, y, options.bpdn);
                rec.converged = report.converged;
                recon = GrayImage::from_flat(truth.width(), truth.height(), report.solution);
            } else if (cell.method == Method::bpdn) {
                const auto grid_deltas = log_spaced_deltas(y.norm(), options.delta_grid_points);
                const DeltaChoice choice = tune_delta(a, y, truth, grid_deltas, options.bpdn);
                rec.converged = choice.report.converged;
                recon = GrayImage::from_flat(truth.width(), truth.height(), choice.report.solution);
            } else {
                ReconConfig cfg = options.recon;
                cfg.seed = derive_seed(seed, {3});
                cfg.jobs = 1;
                try {
                    recon = reconstruct(*model, a, y, cfg).image;
                } catch (const ReconstructionError&) {
                    rec.converged = false;
                    rec.r = std::nullopt;
                    records.push_back(rec);
                    continue;
                }
            }
        }
        rec.r = pearson(recon, truth);
        if (!options.image_dir.empty()) {
            write_png(options.image_dir / image_file_name(rec), clip_nonnegative(recon));
        }
        records.push_back(rec);
    }
    return records;
}

std::vector<CorrelationRecord> run_sweep(const SweepGrid& grid, const GeneratorModel* model,
                                         const std::vector<LabeledSample>& dataset, const SweepOptions& options) {
    grid.validate();
    const bool needs_model =
        std::find(grid.methods.begin(), grid.methods.end(), Method::gan) != grid.methods.end();
    if (needs_model && model == nullptr) {
        throw ArgumentError("method gan requires a generator model");
    }
    std::vector<std::vector<LabeledSample>> digits_by_rep;
    for (int rep = 0; rep < grid.repetitions; ++rep) {
        digits_by_rep.push_back(pick_one_per_class(dataset, derive_seed(grid.seed, {static_cast<std::uint64_t>(rep)})));
    }
    const auto cells = enumerate_cells(grid);
    std::vector<std::vector<CorrelationRecord>> per_cell(cells.size());
    std::mutex callback_mutex;
    parallel_for(cells.size(), options.jobs, [&](std::size_t i) {
        const SweepCell& cell = cells[i];
        if (options.skip_cell && options.skip_cell(cell)) {
            return;
        }
        try {
            per_cell[i] = run_cell(cell, grid, digits_by_rep[static_cast<std::size_t>(cell.rep)], model, options);
        } catch (const std::exception& e) {
            if (!options.on_failure) {
                throw;
            }
            std::lock_guard lock(callback_mutex);
            options.on_failure(cell, e.what());
            return;
        }
        if (options.on_cell) {
            std::lock_guard lock(callback_mutex);
            options.on_cell(cell, per_cell[i]);
        }
    });
    std::vector<CorrelationRecord> records;
    records.reserve(grid.record_count());
    for (auto& cell_records : per_cell) {
        records.insert(records.end(), cell_records.begin(), cell_records.end());
    }
    return records;
}

std::vector<AggregateRow> aggregate(const std::vector<CorrelationRecord>& records) {
    if (records.empty()) {
        throw ArgumentError("aggregate of an empty record list");
    }
    using Key = std::tuple<double, int, double, int>;
    std::map<Key, std::vector<const CorrelationRecord*>> groups;
    for (const auto& rec : records) {
        groups[{rec.nu, rec.m, rec.noise, static_cast<int>(rec.method)}].push_back(&rec);
    }
    std::vector<AggregateRow> rows;
    for (const auto& [key, members] : groups) {
        AggregateRow row;
        row.nu = std::get<0>(key);
        row.m = std::get<1>(key);
        row.noise = std::get<2>(key);
        row.method = static_cast<Method>(std::get<3>(key));
        double sum = 0.0;
        std::optional<double> first;
        for (const auto* rec : members) {
            if (rec->r) {
                if (!first) {
                    first = *rec->r;
                }
                sum += *rec->r - *first;
                ++row.count;
            } else {
                ++row.undefined;
            }
        }
        if (row.count > 0) {
            row.mean = *first + sum / row.count;
            double ss = 0.0;
            for (const auto* rec : members) {
                if (rec->r) {
                    ss += (*rec->r - row.mean) * (*rec->r - row.mean);
                }
            }
            row.stddev = std::sqrt(ss / row.count);
        } else {
            row.mean = std::nan("");
            row.stddev = std::nan("");
        }
        rows.push_back(row);
    }
    return rows;
}

int nyquist_line(int n) {
    if (n < 1) {
        throw ArgumentError("pixel count must be >= 1");
    }
    return n;
}

bool is_sub_nyquist(int m, int n) { return m < nyquist_line(n); }

std::string format_number(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string record_csv_line(const CorrelationRecord& rec) {
    std::string r = "nan";
    if (rec.r) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", *rec.r);
        r = buf;
    }
    return format_number(rec.nu) + "," + std::to_string(rec.m) + "," + format_number(rec.noise) + "," +
           to_string(rec.method) + "," + std::to_string(rec.digit) + "," + std::to_string(rec.rep) + "," + r + "," +
           (rec.converged ? "true" : "false");
}

void write_records_csv(std::ostream& out, const std::vector<CorrelationRecord>& records, bool header) {
    if (header) {
        out << kRecordsHeader << '\n';
    }
    for (const auto& rec : records) {
        out << record_csv_line(rec) << '\n';
    }
}

std::vector<CorrelationRecord> read_records_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kRecordsHeader) {
        throw FormatError("records CSV must start with header '" + std::string(kRecordsHeader) + "'");
    }
    std::vector<CorrelationRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 8) {
            throw FormatError("records CSV row has " + std::to_string(f.size()) + " fields: " + line);
        }
        CorrelationRecord rec;
        try {
            rec.nu = std::stod(f[0]);
            rec.m = std::stoi(f[1]);
            rec.noise = std::stod(f[2]);
            rec.method = parse_method(f[3]);
            rec.digit = std::stoi(f[4]);
            rec.rep = std::stoi(f[5]);
            if (f[6] != "nan" && !f[6].empty()) {
                rec.r = std::stod(f[6]);
            }
            rec.converged = f[7] == "true";
        } catch (const std::logic_error&) {
            throw FormatError("unparseable records CSV row: " + line);
        }
        records.push_back(rec);
    }
    return records;
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
    out << "nu,m,noise,method,mean_r,std_r,count,undefined\n";
    char buf[80];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", row.mean, row.stddev);
        out << format_number(row.nu) << ',' << row.m << ',' << format_number(row.noise) << ','
            << to_string(row.method) << ',' << buf << ',' << row.count << ',' << row.undefined << '\n';
    }
}

std::string image_file_name(const CorrelationRecord& rec) {
    std::string name = to_string(rec.method) + "_nu" + format_number(rec.nu) + "_m" + std::to_string(rec.m) +
                       "_noise" + format_number(rec.noise) + "_d" + std::to_string(rec.digit);
    if (rec.rep > 0) {
        name += "_r" + std::to_string(rec.rep);
    }
    return name + ".png";
}

}  // namespace speckle_cs
