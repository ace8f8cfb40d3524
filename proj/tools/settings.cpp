#include "settings.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "speckle_cs/io.hpp"

namespace speckle_cs::cli {
namespace {

using nlohmann::json;

void flatten(const json& node, const std::string& prefix, std::map<std::string, json>& out) {
    for (auto it = node.begin(); it != node.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (it->is_object()) {
            flatten(*it, key, out);
        } else {
            out[key] = *it;
        }
    }
}

std::vector<std::string> split_list(const std::string& raw) {
    std::vector<std::string> parts;
    std::stringstream ss(raw);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            parts.push_back(item);
        }
    }
    return parts;
}

json parse_scalar_like(const json& prototype, const std::string& raw, const std::string& key) {
    try {
        std::size_t used = 0;
        if (prototype.is_boolean()) {
            if (raw == "true" || raw == "1" || raw == "yes") return true;
            if (raw == "false" || raw == "0" || raw == "no") return false;
            throw ConfigError("--" + key + " expects true/false, got '" + raw + "'");
        }
        if (prototype.is_number_integer()) {
            const long long v = std::stoll(raw, &used);
            if (used != raw.size()) throw std::invalid_argument(raw);
            return v;
        }
        if (prototype.is_number()) {
            const double v = std::stod(raw, &used);
            if (used != raw.size()) throw std::invalid_argument(raw);
            return v;
        }
    } catch (const std::logic_error&) {
        throw ConfigError("--" + key + ": cannot parse '" + raw + "'");
    }
    return raw;
}

// Config values must match the declared type (integers are accepted for reals).
void check_type(const json& prototype, const json& value, const std::string& key) {
    auto same_kind = [](const json& p, const json& v) {
        if (p.is_null() || p.is_string()) return v.is_string() || v.is_null();
        if (p.is_boolean()) return v.is_boolean();
        if (p.is_number_integer()) return v.is_number_integer();
        if (p.is_number()) return v.is_number();
        return false;
    };
    if (prototype.is_array()) {
        if (!value.is_array()) {
            throw ConfigError("config key '" + key + "' must be a list");
        }
        const json elem = prototype.empty() ? json("") : prototype.front();
        for (const auto& v : value) {
            if (!same_kind(elem, v)) {
                throw ConfigError("config key '" + key + "' has an element of the wrong type");
            }
        }
        return;
    }
    if (!same_kind(prototype, value)) {
        throw ConfigError("config key '" + key + "' has the wrong type");
    }
}

}  // namespace

void Settings::declare(const std::string& key, json default_value, const std::string& help) {
    defaults_[key] = default_value;
    values_[key] = std::move(default_value);
    help_[key] = help;
}

void Settings::bind(CLI::App& app) {
    app.add_option("--config", config_path_, "JSON config file (flat dotted keys) or a run manifest");
    for (const auto& [key, def] : defaults_) {
        std::string help = help_[key];
        if (!def.is_null()) {
            help += " [" + def.dump() + "]";
        }
        options_[key] = app.add_option("--" + key, flag_strings_[key], help)
                           ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    }
}

void Settings::resolve() {
    std::map<std::string, std::string> flags;
    for (const auto& [key, opt] : options_) {
        if (opt->count() > 0) {
            flags[key] = flag_strings_[key];
        }
    }
    resolve(flags, config_path_, std::getenv("SPECKLE_CS_SEED"));
}

void Settings::resolve(const std::map<std::string, std::string>& flags, const std::string& config_path,
                       const char* env_seed) {
    if (env_seed != nullptr && defaults_.count("seed") != 0) {
        values_["seed"] = parse_flag("seed", env_seed);
    }
    if (!config_path.empty()) {
        apply_config_file(config_path);
    }
    for (const auto& [key, raw] : flags) {
        if (defaults_.count(key) == 0) {
            throw ConfigError("unknown option --" + key);
        }
        values_[key] = parse_flag(key, raw);
    }
}

json Settings::parse_flag(const std::string& key, const std::string& raw) const {
    const json& prototype = defaults_.at(key);
    if (prototype.is_array()) {
        const json elem = prototype.empty() ? json("") : prototype.front();
        json out = json::array();
        for (const auto& part : split_list(raw)) {
            out.push_back(parse_scalar_like(elem, part, key));
        }
        return out;
    }
    return parse_scalar_like(prototype, raw, key);
}

void Settings::apply_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw MissingArtifact("cannot open config file " + path);
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    if (!doc.is_object()) {
        throw ConfigError(path + ": config must be a JSON object");
    }
    if (doc.contains("subcommand") && doc.contains("config")) {
        if (doc["subcommand"] != subcommand_) {
            throw ConfigError(path + ": manifest is for '" + doc["subcommand"].get<std::string>() + "', not '" +
                              subcommand_ + "'");
        }
        doc = doc["config"];
    }
    std::map<std::string, json> flat;
    flatten(doc, "", flat);
    for (const auto& [key, value] : flat) {
        const auto it = defaults_.find(key);
        if (it == defaults_.end()) {
            throw ConfigError(path + ": unknown key '" + key + "' for '" + subcommand_ + "'");
        }
        check_type(it->second, value, key);
        values_[key] = value;
    }
}

const json& Settings::at(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        throw std::logic_error("undeclared setting '" + key + "'");
    }
    return it->second;
}

double Settings::real(const std::string& key) const { return at(key).get<double>(); }
long long Settings::integer(const std::string& key) const { return at(key).get<long long>(); }
bool Settings::flag(const std::string& key) const { return at(key).get<bool>(); }

std::string Settings::text(const std::string& key) const {
    const json& v = at(key);
    return v.is_null() ? std::string() : v.get<std::string>();
}

std::vector<double> Settings::reals(const std::string& key) const { return at(key).get<std::vector<double>>(); }
std::vector<long long> Settings::integers(const std::string& key) const {
    return at(key).get<std::vector<long long>>();
}
std::vector<std::string> Settings::texts(const std::string& key) const {
    return at(key).get<std::vector<std::string>>();
}

std::uint64_t Settings::seed() const {
    const long long s = integer("seed");
    if (s < 0) {
        throw ConfigError("seed must be non-negative");
    }
    return static_cast<std::uint64_t>(s);
}

json Settings::effective() const {
    json out = json::object();
    for (const auto& [key, value] : values_) {
        out[key] = value;
    }
    return out;
}

void write_manifest(const std::filesystem::path& dir, const Settings& settings,
                    const std::vector<std::string>& outputs) {
    json manifest;
    manifest["tool"] = "speckle-cs";
    manifest["version"] = SPECKLE_CS_VERSION;
    manifest["subcommand"] = settings.subcommand();
    manifest["seed"] = settings.seed();
    manifest["config"] = settings.effective();
    manifest["outputs"] = outputs;
    write_text_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace speckle_cs::cli
