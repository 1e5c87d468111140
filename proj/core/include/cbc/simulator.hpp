#pragma once

#include <cbc/mechanism.hpp>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace cbc {

enum class Scheme { Direct, TimeChange };
// Z: the CBC; Y: the CBM; U, V: the dual diffusions.
enum class Process { Z, Y, U, V };
enum class PassageDirection { Down, Up };

const char* to_string(Scheme s);
const char* to_string(Process p);

struct SimConfig {
    double dt = 1e-3;         // base step
    double delta = 0.0;       // jump truncation; 0 selects the default rule
    double z_cap = 1e12;      // explosion threshold
    double zero_eps = 1e-12;  // absorption threshold
    bool ar_correction = false;
    double horizon = 1.0;
    Scheme scheme = Scheme::Direct;

    // Largest relative change of the state per step due to the drift (superlinear drifts).
    double rel_step = 0.02;
    // Brownian-bridge test for level/zero crossings inside a step.
    bool bridge = true;
    long long max_steps = 200'000'000;

    // States are also reported at these times (sorted, <= horizon).
    std::vector<double> observe;
    // Keep the full skeleton (times, states) in the sample.
    bool record = false;
    // Record the first passage through this level; stop there when stop_at_passage.
    std::optional<double> passage_level;
    PassageDirection passage_direction = PassageDirection::Down;
    bool stop_at_passage = true;

    void validate() const;
};

// Independent substream per (master seed, stream, path index).
struct PathRng {
    Rng engine;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::uint64_t index = 0;
};
PathRng path_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);
std::uint64_t splitmix64(std::uint64_t x);

struct FirstPassage {
    double level = 0.0;
    double time = 0.0;
};

struct PathEvents {
    std::optional<double> explosion_time;
    std::optional<double> extinction_time;
    std::optional<FirstPassage> first_passage;
};

struct PathSample {
    std::vector<double> times;   // filled when SimConfig::record
    std::vector<double> states;
    std::vector<double> observed;  // one per SimConfig::observe entry; +inf after explosion
    double terminal_state = 0.0;
    double terminal_time = 0.0;
    double min_state = 0.0;
    double max_state = 0.0;
    PathEvents events;
    long long steps = 0;
    std::uint64_t seed = 0, stream = 0, index = 0;
    std::string warning;
};

// Truncation rule: the neglected small-jump mean square at the reference state stays below
// 1e-4 of the Gaussian variance; without a Gaussian part, the jump rate at the reference
// state is held to one per base step. Either way the rate is capped at 100 per base step.
double default_delta(const CbcModel& model, double ref_state, double dt);

PathSample simulate_cbc(const CbcModel& model, double z0, const SimConfig& cfg, PathRng& rng);
PathSample simulate_cbm(const CbcModel& model, double y0, const SimConfig& cfg, PathRng& rng);
PathSample simulate_U(const CbcModel& model, double x0_state, const SimConfig& cfg, PathRng& rng);
PathSample simulate_V(const CbcModel& model, double y0_state, const SimConfig& cfg, PathRng& rng);
PathSample simulate(Process p, const CbcModel& model, double start, const SimConfig& cfg, PathRng& rng);

struct PassageTime {
    bool hit = false;
    double time = 0.0;  // the horizon when censored
};

PassageTime sample_first_passage(const CbcModel& model, Process process, double start, double level,
                                 PassageDirection direction, const SimConfig& cfg, PathRng& rng);

}  // namespace cbc
