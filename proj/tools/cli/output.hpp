#pragma once

#include "config.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cbc::cli {

std::string version();
// Shortest text that round-trips at 12 significant digits; "inf", "-inf", "nan" spelled out.
std::string num(double v);

// Artifacts of one run: report.txt plus CSV files, each carrying a provenance comment.
class Output {
public:
    Output(std::filesystem::path dir, const RunConfig& rc, std::optional<std::uint64_t> seed);

    using Row = std::vector<std::string>;
    void csv(const std::string& file, const Row& header, const std::vector<Row>& rows) const;
    // series_<name>.csv with columns x,y.
    void series(const std::string& name, const std::vector<double>& x, const std::vector<double>& y) const;

    void note(const std::string& key, const std::string& value);
    void note(const std::string& key, double value) { note(key, num(value)); }
    void write_report() const;

    const std::vector<std::pair<std::string, std::string>>& report() const { return report_; }
    std::string provenance() const;
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    std::string hash_;
    std::optional<std::uint64_t> seed_;
    std::vector<std::pair<std::string, std::string>> report_;
};

}  // namespace cbc::cli
