#pragma once

#include <cbc/mechanism.hpp>
#include <cbc/montecarlo.hpp>
#include <cbc/simulator.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cbc::cli {

using json = nlohmann::json;

// Thrown for schema problems; `path` names the offending field (dotted).
class ConfigError : public ValidationError {
public:
    ConfigError(std::string path, const std::string& msg)
        : ValidationError(path + ": " + msg), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

struct NamedModel {
    std::string name;
    CbcModel model;
};

struct McSettings {
    std::size_t n = 10000;
    std::optional<std::uint64_t> seed;
    unsigned workers = 1;
    double threshold = 3.0;  // |z| bound for single comparisons
};

struct RunConfig {
    json raw;  // after overrides
    std::vector<NamedModel> models;
    SimConfig sim;
    McSettings mc;
    json command = json::object();
    std::string hash;  // FNV-1a over the canonical dump, workers excluded

    const CbcModel& model() const { return models.front().model; }
    std::uint64_t require_seed() const;
};

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

// key=value with a dotted key; the value is parsed as JSON when possible, else taken as a string.
void apply_override(json& doc, const std::string& assignment);

Mechanism parse_mechanism(const json& j, MechanismKind role, const std::string& path);
CbcModel parse_model(const json& j, const std::string& path);
SimConfig parse_sim(const json& j, const std::string& path);
RunConfig parse_config(json doc);
RunConfig load_config(const std::string& file, const std::vector<std::string>& overrides);

// Typed accessors with path-carrying errors.
double get_number(const json& obj, const std::string& key, const std::string& path, std::optional<double> fallback = {});
bool get_bool(const json& obj, const std::string& key, const std::string& path, std::optional<bool> fallback = {});
std::string get_string(const json& obj, const std::string& key, const std::string& path,
                       std::optional<std::string> fallback = {});
std::vector<double> get_numbers(const json& obj, const std::string& key, const std::string& path,
                                std::optional<std::vector<double>> fallback = {});
void allow_keys(const json& obj, const std::vector<std::string>& keys, const std::string& path);

}  // namespace cbc::cli
