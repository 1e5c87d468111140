#include "output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace cbc::cli {

std::string version() { return CBC_VERSION; }

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

Output::Output(std::filesystem::path dir, const RunConfig& rc, std::optional<std::uint64_t> seed)
    : dir_(std::move(dir)), hash_(rc.hash), seed_(seed) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw ConfigError("--out", "cannot create \"" + dir_.string() + "\": " + ec.message());
}

std::string Output::provenance() const {
    return "# cbc " + version() + " config=fnv1a64:" + hash_ + " seed=" + (seed_ ? std::to_string(*seed_) : "none");
}

void Output::csv(const std::string& file, const Row& header, const std::vector<Row>& rows) const {
    std::ofstream out(dir_ / file, std::ios::binary);
    if (!out) throw ConfigError("--out", "cannot write \"" + (dir_ / file).string() + "\"");
    out << provenance() << '\n';
    auto line = [&](const Row& r) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
        out << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
}

void Output::series(const std::string& name, const std::vector<double>& x, const std::vector<double>& y) const {
    std::vector<Row> rows;
    rows.reserve(x.size());
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) rows.push_back({num(x[i]), num(y[i])});
    csv("series_" + name + ".csv", {"x", "y"}, rows);
}

void Output::note(const std::string& key, const std::string& value) { report_.emplace_back(key, value); }

void Output::write_report() const {
    std::ofstream out(dir_ / "report.txt", std::ios::binary);
    if (!out) throw ConfigError("--out", "cannot write report.txt");
    out << "version: " << version() << '\n';
    out << "config_hash: fnv1a64:" << hash_ << '\n';
    out << "seed: " << (seed_ ? std::to_string(*seed_) : "none") << '\n';
    for (const auto& [k, v] : report_) out << k << ": " << v << '\n';
}

}  // namespace cbc::cli
