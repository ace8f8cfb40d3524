#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace CLI {
class App;
class Option;
}  // namespace CLI

namespace speckle_cs::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kMissingArtifact = 3, kNumericFailure = 4 };

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MissingArtifact : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat dotted-key settings for one subcommand.
///
/// Resolution order, lowest to highest: declared default, SPECKLE_CS_SEED
/// (for "seed" only), the JSON config file, then --key=value flags. A config
/// file is a flat object of dotted keys; nested objects are flattened, and a
/// run manifest (an object carrying "subcommand" and "config") is accepted too.
class Settings {
public:
    explicit Settings(std::string subcommand) : subcommand_(std::move(subcommand)) {}

    /// Registers `key` with its default; the default's JSON type fixes how flag
    /// strings are parsed. A null default declares an optional string.
    void declare(const std::string& key, nlohmann::json default_value, const std::string& help);

    /// Adds --config and one --key option per declared key to `app`.
    void bind(CLI::App& app);

    /// Applies env, config file and flags. Call after CLI parsing.
    void resolve();

    /// Same as resolve() but with explicit inputs (for tests).
    void resolve(const std::map<std::string, std::string>& flags, const std::string& config_path,
                 const char* env_seed);

    const nlohmann::json& at(const std::string& key) const;
    bool is_set(const std::string& key) const { return !at(key).is_null(); }

    double real(const std::string& key) const;
    long long integer(const std::string& key) const;
    bool flag(const std::string& key) const;
    std::string text(const std::string& key) const;
    std::vector<double> reals(const std::string& key) const;
    std::vector<long long> integers(const std::string& key) const;
    std::vector<std::string> texts(const std::string& key) const;
    std::uint64_t seed() const;

    const std::string& subcommand() const { return subcommand_; }
    /// Every key with its effective value.
    nlohmann::json effective() const;

private:
    nlohmann::json parse_flag(const std::string& key, const std::string& raw) const;
    void apply_config_file(const std::string& path);

    std::string subcommand_;
    std::map<std::string, nlohmann::json> defaults_;
    std::map<std::string, nlohmann::json> values_;
    std::map<std::string, std::string> help_;
    std::map<std::string, std::string> flag_strings_;
    std::map<std::string, CLI::Option*> options_;
    std::string config_path_;
};

/// Writes `<dir>/manifest.json` with the effective settings and listed outputs.
void write_manifest(const std::filesystem::path& dir, const Settings& settings,
                    const std::vector<std::string>& outputs);

}  // namespace speckle_cs::cli
