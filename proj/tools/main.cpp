#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "settings.hpp"
#include "speckle_cs/dataset.hpp"
#include "speckle_cs/errors.hpp"
#include "speckle_cs/experiments.hpp"
#include "speckle_cs/fixtures.hpp"
#include "speckle_cs/forward_model.hpp"
#include "speckle_cs/gan_recon.hpp"
#include "speckle_cs/generator.hpp"
#include "speckle_cs/io.hpp"
#include "speckle_cs/l1_solver.hpp"
#include "speckle_cs/metrics.hpp"
#include "speckle_cs/parallel.hpp"
#include "speckle_cs/rng.hpp"
#include "speckle_cs/speckle.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace speckle_cs;
using namespace speckle_cs::cli;

namespace {

constexpr int kSyntheticPerClass = 20;

void require_file(const std::string& path, const std::string& what) {
    if (path.empty()) {
        throw MissingArtifact(what + " not given");
    }
    if (!fs::is_regular_file(path)) {
        throw MissingArtifact(what + " not found: " + path);
    }
}

fs::path prepare_out(const Settings& s) {
    const fs::path out = s.text("out");
    if (out.empty()) {
        throw ConfigError("--out must not be empty");
    }
    fs::create_directories(out);
    return out;
}

int jobs_of(const Settings& s) {
    const long long j = s.integer("jobs");
    if (j < 0) {
        throw ConfigError("--jobs must be >= 0");
    }
    return j == 0 ? default_jobs() : static_cast<int>(j);
}

int positive_int(const Settings& s, const std::string& key) {
    const long long v = s.integer(key);
    if (v < 1 || v > 1'000'000) {
        throw ConfigError("--" + key + " must be a positive integer");
    }
    return static_cast<int>(v);
}

// Keys shared by every subcommand that picks a ground-truth digit.
void declare_truth(Settings& s) {
    s.declare("image", nullptr, "ground-truth image (PGM), center-cropped and resized to 28x28");
    s.declare("dataset-dir", nullptr, "MNIST-layout directory; its test split supplies the truth");
    s.declare("index", -1, "sample index into the test split (overrides digit)");
    s.declare("digit", 0, "digit class; a seeded random sample of this class is used");
}

std::vector<LabeledSample> load_dataset(const Settings& s) {
    const std::string dir = s.text("dataset-dir");
    if (dir.empty()) {
        return synthetic_dataset(kSyntheticPerClass, derive_seed(s.seed(), {0x5D}));
    }
    if (!fs::is_directory(dir)) {
        throw MissingArtifact("dataset directory not found: " + dir);
    }
    const auto paths = mnist_paths(dir);
    require_file(paths.test_images.string(), "test images");
    require_file(paths.test_labels.string(), "test labels");
    return load_test_split(dir);
}

GrayImage pick_truth(const Settings& s) {
    const std::string image = s.text("image");
    if (!image.empty()) {
        require_file(image, "image");
        return resize_area(center_crop_square(read_pgm(image)), kMnistSide, kMnistSide);
    }
    const long long digit = s.integer("digit");
    if (digit < 0 || digit > 9) {
        throw ConfigError("--digit must be in 0..9");
    }
    const auto samples = load_dataset(s);
    const long long index = s.integer("index");
    if (index >= 0) {
        if (static_cast<std::size_t>(index) >= samples.size()) {
            throw ConfigError("--index beyond the dataset (" + std::to_string(samples.size()) + " samples)");
        }
        return samples[static_cast<std::size_t>(index)].image;
    }
    return pick_one_per_class(samples, s.seed())[static_cast<std::size_t>(digit)].image;
}

void save_image_set(const fs::path& dir, const std::string& stem, const GrayImage& image) {
    write_f64(data_path(dir / stem), image.pixels());
    write_sidecar(sidecar_path(dir / stem), {{"shape", {image.height(), image.width()}}});
    write_pgm(dir / (stem + ".pgm"), clip_nonnegative(image));
    write_png(dir / (stem + ".png"), clip_nonnegative(image));
}

// Raw float64 stem with a [h, w] sidecar, or a PGM file.
GrayImage load_image_any(const std::string& path) {
    if (fs::path(path).extension() == ".pgm") {
        require_file(path, "image");
        return read_pgm(path);
    }
    require_file(data_path(path).string(), "image data");
    require_file(sidecar_path(path).string(), "image sidecar");
    const auto meta = read_sidecar(sidecar_path(path));
    const auto shape = meta.at("shape").get<std::vector<int>>();
    if (shape.size() != 2) {
        throw FormatError(path + ": image shape must be [height, width]");
    }
    const auto values = read_f64(data_path(path));
    return GrayImage(shape[1], shape[0], values);
}

GeneratorModel load_weights(const Settings& s) {
    const std::string weights = s.text("weights");
    require_file(weights, "generator weights (--weights)");
    return load_model(weights);
}

void declare_solver(Settings& s) {
    s.declare("bpdn.max-outer", 40, "Pareto root-finding iterations");
    s.declare("bpdn.max-inner", 10000, "projected-gradient iterations per LASSO solve");
    s.declare("bpdn.opt-tol", 1e-6, "projected-gradient optimality tolerance");
    s.declare("bpdn.pareto-tol", 0.0, "absolute |phi - delta| tolerance; 0 selects 1e-5*max(1,||y||)");
}

BpdnConfig solver_config(const Settings& s) {
    BpdnConfig c;
    c.max_outer = positive_int(s, "bpdn.max-outer");
    c.max_inner = positive_int(s, "bpdn.max-inner");
    c.opt_tol = s.real("bpdn.opt-tol");
    if (!(c.opt_tol > 0.0)) {
        throw ConfigError("--bpdn.opt-tol must be positive");
    }
    const double pareto = s.real("bpdn.pareto-tol");
    if (pareto < 0.0 || !std::isfinite(pareto)) {
        throw ConfigError("--bpdn.pareto-tol must be >= 0");
    }
    if (pareto > 0.0) {
        c.pareto_tol = pareto;
    }
    return c;
}

void declare_recon(Settings& s) {
    const ReconConfig d;
    s.declare("recon.steps", d.steps, "Adam steps per restart");
    s.declare("recon.restarts", d.restarts, "random latent restarts");
    s.declare("recon.lr", d.lr, "Adam learning rate");
    s.declare("recon.beta1", d.beta1, "Adam beta1");
    s.declare("recon.beta2", d.beta2, "Adam beta2");
    s.declare("recon.epsilon", d.epsilon, "Adam epsilon");
    s.declare("recon.plateau-stop", d.plateau_stop, "stop a restart once its loss plateaus");
}

ReconConfig recon_config(const Settings& s) {
    ReconConfig c;
    c.steps = static_cast<int>(s.integer("recon.steps"));
    c.restarts = static_cast<int>(s.integer("recon.restarts"));
    c.lr = s.real("recon.lr");
    c.beta1 = s.real("recon.beta1");
    c.beta2 = s.real("recon.beta2");
    c.epsilon = s.real("recon.epsilon");
    c.plateau_stop = s.flag("recon.plateau-stop");
    c.seed = s.seed();
    try {
        c.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
    }
    return c;
}

// --- speckle -------------------------------------------------------------------

void declare_speckle(Settings& s) {
    s.declare("m", 9, "number of patterns");
    s.declare("nu", 0.5, "normalized cutoff frequency in (0, 1]");
    s.declare("grid", kMnistSide, "pattern side length");
    s.declare("seed", 0, "master seed");
    s.declare("out", "speckle_out", "output directory");
    s.declare("save-images", false, "also write one PNG per pattern");
    s.declare("jobs", 0, "worker threads (0: all cores)");
}

int cmd_speckle(const Settings& s) {
    SpeckleConfig config;
    config.grid = positive_int(s, "grid");
    config.cutoff = s.real("nu");
    config.seed = s.seed();
    config.validate();
    const int m = positive_int(s, "m");
    const fs::path out = prepare_out(s);
    const auto matrix = build_matrix(m, config, jobs_of(s));
    std::vector<GrayImage> patterns;
    for (int i = 0; i < m; ++i) {
        patterns.push_back(GrayImage::from_flat(config.grid, config.grid, matrix.values.row(i).transpose()));
    }
    save_speckle_stack(out / "speckle", patterns, config.seed, config.cutoff);
    std::vector<std::string> outputs{"speckle.f64", "speckle.json"};
    if (s.flag("save-images")) {
        for (int i = 0; i < m; ++i) {
            double peak = patterns[static_cast<std::size_t>(i)].flatten().maxCoeff();
            GrayImage scaled = patterns[static_cast<std::size_t>(i)];
            if (peak > 0) {
                scaled = GrayImage::from_flat(config.grid, config.grid, scaled.flatten() / peak);
            }
            const std::string name = "pattern_" + std::to_string(i) + ".png";
            write_png(out / name, scaled);
            outputs.push_back(name);
        }
    }
    write_manifest(out, s, outputs);
    std::cerr << "wrote " << m << " patterns to " << out.string() << "\n";
    return kOk;
}

// --- measure -------------------------------------------------------------------

void declare_acquisition(Settings& s) {
    s.declare("m", 100, "number of measurements");
    s.declare("nu", 0.5, "normalized cutoff frequency in (0, 1]");
    s.declare("noise", 0.0, "noise level (fraction of the entries' standard deviation)");
    s.declare("seed", 0, "master seed");
    s.declare("jobs", 0, "worker threads (0: all cores)");
    declare_truth(s);
}

Acquisition acquire(const Settings& s, const GrayImage& truth) {
    validate_cutoff(s.real("nu"));
    const double noise = s.real("noise");
    if (!(noise >= 0.0)) {
        throw ConfigError("--noise must be >= 0");
    }
    return simulate_acquisition(truth, positive_int(s, "m"), s.real("nu"), noise, s.seed(), jobs_of(s));
}

int cmd_measure(const Settings& s) {
    const GrayImage truth = pick_truth(s);
    const Acquisition acq = acquire(s, truth);
    const fs::path out = prepare_out(s);
    const json extra{{"seed", s.seed()}, {"nu", s.real("nu")}, {"noise", s.real("noise")}};
    save_matrix(out / "A", acq.matrix, extra);
    save_signal(out / "y", acq.signal, extra);
    write_signal_csv(out / "y.csv", acq.signal);
    save_image_set(out, "truth", truth);
    write_manifest(out, s,
                   {"A.f64", "A.json", "y.f64", "y.json", "y.csv", "truth.f64", "truth.json", "truth.pgm", "truth.png"});
    std::cerr << "measured " << acq.signal.size() << " buckets into " << out.string() << "\n";
    return kOk;
}

// --- reconstruct ---------------------------------------------------------------

int cmd_reconstruct(const Settings& s) {
    const Method method = [&] {
        try {
            return parse_method(s.text("method"));
        } catch (const ArgumentError& e) {
            throw ConfigError(e.what());
        }
    }();
    if (method == Method::diffraction) {
        throw ConfigError("reconstruct supports bp, bpdn and gan");
    }
    std::optional<GeneratorModel> model;
    if (method == Method::gan) {
        model = load_weights(s);
    }
    const double delta = s.real("delta");
    if (!(delta >= 0.0)) {
        throw ConfigError("--delta must be >= 0");
    }

    MeasurementMatrix a;
    BucketSignal y;
    std::optional<GrayImage> truth;
    const std::string matrix_stem = s.text("matrix");
    const std::string signal_stem = s.text("signal");
    if (!matrix_stem.empty() || !signal_stem.empty()) {
        require_file(data_path(matrix_stem).string(), "matrix (--matrix)");
        require_file(data_path(signal_stem).string(), "signal (--signal)");
        a = load_matrix(matrix_stem);
        y = load_signal(signal_stem);
        if (a.rows() != y.size()) {
            throw ConfigError("matrix rows and signal length differ");
        }
        if (s.is_set("truth")) {
            truth = load_image_any(s.text("truth"));
        }
    } else {
        truth = pick_truth(s);
        const Acquisition acq = acquire(s, *truth);
        a = acq.matrix;
        y = acq.signal;
    }

    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(a.cols()))));
    if (side * side != a.cols()) {
        throw ConfigError("matrix columns do not form a square image");
    }
    const fs::path out = prepare_out(s);
    std::vector<std::string> outputs;
    json report;
    report["method"] = to_string(method);
    report["seed"] = s.seed();
    GrayImage image(side, side, 0.0);
    if (method == Method::gan) {
        ReconConfig config = recon_config(s);
        config.seed = derive_seed(s.seed(), {3});
        config.jobs = jobs_of(s);
        const ReconResult result = reconstruct(*model, a.values, y.values, config);
        if (result.image.width() != side || result.image.height() != side) {
            throw ConfigError("generator output does not match the matrix column count");
        }
        image = result.image;
        report.update(to_json(result));
        std::ostringstream trace;
        trace << "step,loss\n";
        char buf[64];
        for (std::size_t i = 0; i < result.loss_trace.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, result.loss_trace[i]);
            trace << buf;
        }
        write_text_atomic(out / "loss_trace.csv", trace.str());
        outputs.push_back("loss_trace.csv");
        for (const auto& w : result.warnings) {
            std::cerr << "warning: " << w << "\n";
        }
    } else {
        BpdnConfig config = solver_config(s);
        SolveReport solved;
        if (method == Method::bp) {
            solved = solve_bp(a.values, y.values, config);
        } else {
            config.delta = delta;
            solved = solve_bpdn(a.values, y.values, config);
        }
        if (!solved.solution.allFinite()) {
            throw NumericError("solver produced non-finite values");
        }
        image = GrayImage::from_flat(side, side, solved.solution);
        report.update(to_json(solved));
        report["delta"] = method == Method::bp ? 0.0 : delta;
        if (!solved.converged) {
            std::cerr << "warning: solver did not reach its tolerance\n";
        }
    }
    if (truth) {
        const auto r = pearson(image, *truth);
        report["r"] = r ? json(*r) : json(nullptr);
        std::cout << "r = " << (r ? format_number(*r) : std::string("nan")) << "\n";
    }
    save_image_set(out, "recon", image);
    write_text_atomic(out / "report.json", report.dump(2) + "\n");
    outputs.insert(outputs.end(), {"recon.f64", "recon.json", "recon.pgm", "recon.png", "report.json"});
    write_manifest(out, s, outputs);
    return kOk;
}

// --- sweep ---------------------------------------------------------------------

json comparable(json config) {
    for (const char* k : {"jobs", "stop-after"}) {
        config.erase(k);
    }
    return config;
}

std::vector<std::string> read_marker(const fs::path& path) {
    std::ifstream in(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            lines.push_back(line);
        }
    }
    return lines;
}

int cmd_sweep(const Settings& s) {
    SweepGrid grid;
    grid.cutoffs = s.reals("grid.nu");
    grid.noise_levels = s.reals("grid.noise");
    grid.measurements.clear();
    for (long long m : s.integers("grid.m")) {
        grid.measurements.push_back(static_cast<int>(m));
    }
    grid.methods.clear();
    for (const auto& name : s.texts("grid.methods")) {
        try {
            grid.methods.push_back(parse_method(name));
        } catch (const ArgumentError& e) {
            throw ConfigError(e.what());
        }
    }
    grid.repetitions = static_cast<int>(s.integer("grid.repetitions"));
    grid.seed = s.seed();
    try {
        grid.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
    }

    SweepOptions options;
    options.recon = recon_config(s);
    options.bpdn = solver_config(s);
    options.delta_grid_points = positive_int(s, "delta-grid");
    options.jobs = jobs_of(s);

    std::optional<GeneratorModel> model;
    if (std::find(grid.methods.begin(), grid.methods.end(), Method::gan) != grid.methods.end()) {
        model = load_weights(s);
    }
    const auto dataset = load_dataset(s);

    const fs::path out = prepare_out(s);
    const fs::path manifest_path = out / "manifest.json";
    if (fs::exists(manifest_path)) {
        json previous;
        try {
            std::ifstream in(manifest_path);
            previous = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError(manifest_path.string() + ": " + e.what());
        }
        if (comparable(previous.value("config", json::object())) != comparable(s.effective())) {
            throw ConfigError(out.string() + " holds a sweep with a different configuration");
        }
    }
    write_manifest(out, s, {});
    const fs::path cells_dir = out / "cells";
    fs::create_directories(cells_dir);
    if (s.flag("save-images")) {
        options.image_dir = out / "images";
        fs::create_directories(options.image_dir);
    }

    const auto cells = enumerate_cells(grid);
    const long long stop_after = s.integer("stop-after");
    std::atomic<long long> started{0};
    std::atomic<bool> stopped{false};
    std::size_t done = 0;
    std::size_t resumed = 0;
    std::vector<std::string> failures;
    auto marker = [&](const SweepCell& cell) { return cells_dir / (cell.key() + ".csv"); };
    for (const auto& cell : cells) {
        resumed += fs::exists(marker(cell)) ? 1 : 0;
    }
    done = resumed;
    if (resumed > 0) {
        std::cerr << "resuming: " << resumed << "/" << cells.size() << " cells already complete\n";
    }
    options.skip_cell = [&](const SweepCell& cell) {
        if (fs::exists(marker(cell))) {
            return true;
        }
        if (stop_after >= 0 && started.fetch_add(1) >= stop_after) {
            stopped = true;
            return true;
        }
        return false;
    };
    options.on_cell = [&](const SweepCell& cell, const std::vector<CorrelationRecord>& records) {
        std::string text;
        for (const auto& rec : records) {
            text += record_csv_line(rec) + "\n";
        }
        write_text_atomic(marker(cell), text);
        ++done;
        std::cerr << "[" << done << "/" << cells.size() << "] " << cell.key() << "\n";
    };
    options.on_failure = [&](const SweepCell& cell, const std::string& what) {
        failures.push_back(cell.key() + ": " + what);
        std::cerr << "failed " << cell.key() << ": " << what << "\n";
    };
    run_sweep(grid, model ? &*model : nullptr, dataset, options);

    if (!failures.empty()) {
        std::cerr << failures.size() << " of " << cells.size()
                  << " cells failed; rerun the same command to retry them\n";
        return kNumericFailure;
    }
    if (stopped) {
        std::cerr << "stopped after " << stop_after << " new cells; rerun to resume\n";
        return kOk;
    }

    std::ostringstream records_text;
    records_text << kRecordsHeader << "\n";
    for (const auto& cell : cells) {
        for (const auto& line : read_marker(marker(cell))) {
            records_text << line << "\n";
        }
    }
    write_text_atomic(out / "records.csv", records_text.str());
    std::istringstream parse(records_text.str());
    const auto records = read_records_csv(parse);
    if (records.size() != grid.record_count()) {
        throw ConsistencyError("assembled " + std::to_string(records.size()) + " records, expected " +
                               std::to_string(grid.record_count()));
    }
    std::ostringstream agg;
    write_aggregate_csv(agg, aggregate(records));
    write_text_atomic(out / "aggregate.csv", agg.str());
    std::vector<std::string> outputs{"records.csv", "aggregate.csv", "cells/"};
    if (!options.image_dir.empty()) {
        outputs.push_back("images/");
    }
    write_manifest(out, s, outputs);
    std::cerr << "wrote " << records.size() << " records to " << (out / "records.csv").string() << "\n";
    return kOk;
}

// --- eval ----------------------------------------------------------------------

int cmd_eval(const Settings& s) {
    const std::string records_path = s.text("records");
    const std::string image = s.text("image");
    const std::string reference = s.text("reference");
    if (records_path.empty() && (image.empty() || reference.empty())) {
        throw ConfigError("eval needs --records, or both --image and --reference");
    }
    const int n = positive_int(s, "pixels");
    std::cout << "nyquist m = " << nyquist_line(n) << "\n";
    std::vector<std::string> outputs;
    std::optional<fs::path> out;
    if (!s.text("out").empty()) {
        out = prepare_out(s);
    }
    if (!records_path.empty()) {
        require_file(records_path, "records CSV");
        std::ifstream in(records_path);
        const auto records = read_records_csv(in);
        const auto rows = aggregate(records);
        std::ostringstream agg;
        write_aggregate_csv(agg, rows);
        std::cout << agg.str();
        if (out) {
            write_text_atomic(*out / "aggregate.csv", agg.str());
            outputs.push_back("aggregate.csv");
        }
    }
    if (!image.empty() && !reference.empty()) {
        const auto r = pearson(load_image_any(image), load_image_any(reference));
        std::cout << "r = " << (r ? format_number(*r) : std::string("nan")) << "\n";
        if (out) {
            write_text_atomic(*out / "eval.json", json{{"r", r ? json(*r) : json(nullptr)}}.dump() + "\n");
            outputs.push_back("eval.json");
        }
    }
    if (out) {
        write_manifest(*out, s, outputs);
    }
    return kOk;
}

// --- export-fixture ------------------------------------------------------------

int cmd_export_fixture(const Settings& s) {
    const std::string kind = s.text("kind");
    const fs::path out = prepare_out(s);
    std::vector<std::string> outputs;
    if (kind == "model") {
        const std::string name = s.text("name").empty() ? "fixture_model.ggw1" : s.text("name");
        const auto model = fixture_model(s.seed(), positive_int(s, "latent-dim"), positive_int(s, "base-channels"));
        save_model(model, out / name);
        outputs.push_back(name);
    } else if (kind == "dataset") {
        write_test_split(out, synthetic_dataset(positive_int(s, "per-class"), s.seed()));
        outputs = {"t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"};
    } else {
        throw ConfigError("--kind must be model or dataset");
    }
    write_manifest(out, s, outputs);
    return kOk;
}

struct Subcommand {
    std::string name;
    std::string help;
    Settings settings;
    int (*run)(const Settings&);
};

std::vector<Subcommand> make_subcommands() {
    std::vector<Subcommand> subs;

    Subcommand speckle{"speckle", "generate a stack of speckle patterns", Settings("speckle"), cmd_speckle};
    declare_speckle(speckle.settings);
    subs.push_back(std::move(speckle));

    Subcommand measure{"measure", "simulate a single-pixel acquisition", Settings("measure"), cmd_measure};
    declare_acquisition(measure.settings);
    measure.settings.declare("out", "measure_out", "output directory");
    subs.push_back(std::move(measure));

    Subcommand recon{"reconstruct", "recover an image from (A, y)", Settings("reconstruct"), cmd_reconstruct};
    declare_acquisition(recon.settings);
    declare_solver(recon.settings);
    declare_recon(recon.settings);
    recon.settings.declare("method", "bp", "bp, bpdn or gan");
    recon.settings.declare("delta", 0.0, "BPDN residual bound ||Ax - y||");
    recon.settings.declare("matrix", nullptr, "measurement matrix stem (from measure)");
    recon.settings.declare("signal", nullptr, "bucket signal stem (from measure)");
    recon.settings.declare("truth", nullptr, "truth image stem or PGM, for the correlation report");
    recon.settings.declare("weights", nullptr, "generator weights (GGW1)");
    recon.settings.declare("out", "recon_out", "output directory");
    subs.push_back(std::move(recon));

    Subcommand sweep{"sweep", "correlation sweep over (nu, m, noise, method)", Settings("sweep"), cmd_sweep};
    {
        Settings& st = sweep.settings;
        const SweepGrid d;
        std::vector<std::string> methods;
        for (auto m : d.methods) {
            methods.push_back(to_string(m));
        }
        st.declare("grid.nu", d.cutoffs, "cutoff values");
        st.declare("grid.m", d.measurements, "measurement counts");
        st.declare("grid.noise", d.noise_levels, "noise levels");
        st.declare("grid.methods", methods, "methods (bp, bpdn, gan, diffraction)");
        st.declare("grid.repetitions", d.repetitions, "digit draws per cell");
        st.declare("seed", 0, "master seed");
        st.declare("out", "sweep_out", "output directory");
        st.declare("dataset-dir", nullptr, "MNIST-layout directory (default: synthetic digits)");
        st.declare("weights", nullptr, "generator weights (GGW1), needed for gan");
        st.declare("save-images", false, "write one PNG per record");
        st.declare("stop-after", -1, "stop after this many newly computed cells (-1: run all)");
        st.declare("delta-grid", 8, "BPDN deltas tried per record");
        st.declare("jobs", 0, "parallel cells (0: all cores)");
        declare_solver(st);
        declare_recon(st);
    }
    subs.push_back(std::move(sweep));

    Subcommand eval{"eval", "aggregate records or correlate two images", Settings("eval"), cmd_eval};
    eval.settings.declare("records", nullptr, "records CSV from sweep");
    eval.settings.declare("image", nullptr, "image (PGM or float64 stem)");
    eval.settings.declare("reference", nullptr, "reference image (PGM or float64 stem)");
    eval.settings.declare("pixels", kMnistSide * kMnistSide, "pixel count n for the Nyquist line");
    eval.settings.declare("out", nullptr, "optional output directory");
    eval.settings.declare("seed", 0, "master seed (recorded only)");
    subs.push_back(std::move(eval));

    Subcommand fixture{"export-fixture", "write a test generator or synthetic dataset", Settings("export-fixture"),
                       cmd_export_fixture};
    fixture.settings.declare("kind", "model", "model or dataset");
    fixture.settings.declare("out", "fixture_out", "output directory");
    fixture.settings.declare("name", nullptr, "model file name");
    fixture.settings.declare("latent-dim", kDefaultLatentDim, "latent dimension");
    fixture.settings.declare("base-channels", 16, "generator base width");
    fixture.settings.declare("per-class", 20, "synthetic samples per class");
    fixture.settings.declare("seed", 20240501, "seed");
    subs.push_back(std::move(fixture));

    return subs;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Compressive speckle imaging toolkit"};
    app.set_version_flag("--version", SPECKLE_CS_VERSION);
    app.require_subcommand(1);
    auto subs = make_subcommands();
    std::vector<CLI::App*> apps;
    for (auto& sub : subs) {
        CLI::App* a = app.add_subcommand(sub.name, sub.help);
        sub.settings.bind(*a);
        apps.push_back(a);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }
    try {
        for (std::size_t i = 0; i < subs.size(); ++i) {
            if (apps[i]->parsed()) {
                subs[i].settings.resolve();
                return subs[i].run(subs[i].settings);
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const ArgumentError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const MissingArtifact& e) {
        std::cerr << "missing artifact: " << e.what() << "\n";
        return kMissingArtifact;
    } catch (const FormatError& e) {
        std::cerr << "bad artifact: " << e.what() << "\n";
        return kMissingArtifact;
    } catch (const ConsistencyError& e) {
        std::cerr << "bad artifact: " << e.what() << "\n";
        return kMissingArtifact;
    } catch (const SelectionError& e) {
        std::cerr << "bad artifact: " << e.what() << "\n";
        return kMissingArtifact;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kNumericFailure;
    } catch (const ReconstructionError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kNumericFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kConfigError;
}
