#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rr {

/// Base class for all engine errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A velocity with u.u <= 0 was passed where a time-like vector is required.
/// Usually signals integrator blow-up upstream.
struct NonTimelikeVelocity : Error {
    using Error::Error;
};

/// A history was queried beyond its stored frontier.
struct FutureQuery : Error {
    using Error::Error;
};

/// The delay-time equation had no sign change within the search horizon.
struct RootNotBracketed : Error {
    using Error::Error;
};

/// Not enough stored samples to form the requested finite-difference stencil.
struct InsufficientHistory : Error {
    using Error::Error;
};

struct EmptyEnsemble : Error {
    using Error::Error;
};

struct InsufficientSnapshots : Error {
    using Error::Error;
};

/// Argument outside the mathematical domain of a special function.
struct DomainError : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

/// Carries every validation failure found in a config, not just the first.
struct ValidationError : Error {
    std::vector<std::string> issues;
    explicit ValidationError(std::vector<std::string> list)
        : Error(join(list)), issues(std::move(list)) {}
    explicit ValidationError(const std::string& one)
        : ValidationError(std::vector<std::string>{one}) {}

  private:
    static std::string join(const std::vector<std::string>& list) {
        std::string out;
        for (const auto& s : list) {
            if (!out.empty()) out += "; ";
            out += s;
        }
        return out;
    }
};

} // namespace rr
