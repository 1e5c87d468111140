#pragma once

#include <stdexcept>
#include <string>

namespace cbc {

// Bad input: parameters outside the admissible region, violated preconditions.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A decision could not be made reliably (numeric and analytic paths disagree,
// extrapolation stalled, ...). Never converted into a guess.
class InconclusiveError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A numerical routine failed to reach its accuracy target.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Decision { No, Yes, Inconclusive };

inline const char* to_string(Decision d) {
    switch (d) {
    case Decision::No: return "No";
    case Decision::Yes: return "Yes";
    case Decision::Inconclusive: return "Inconclusive";
    }
    return "?";
}

}  // namespace cbc
