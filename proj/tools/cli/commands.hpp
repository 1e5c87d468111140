#pragma once

#include "config.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace cbc::cli {

enum Exit : int {
    kOk = 0,
    kInternal = 1,
    kValidation = 2,
    kInconclusive = 3,
    kCheckFailed = 4,
};

struct Flags {
    bool mc = false;  // fpt: add the Monte Carlo column
};

const std::vector<std::string>& command_names();

// Executes one command and writes its artifacts into `out`. Errors propagate as exceptions;
// the returned code distinguishes success, Inconclusive-blocked analyses and failed checks.
int run_command(const std::string& command, const RunConfig& rc, const std::filesystem::path& out,
                const Flags& flags, std::ostream& log);

}  // namespace cbc::cli
