#pragma once

#include <stdexcept>
#include <string>

namespace nest {

/// Caller misuse: bad arguments, invalid configuration, refused resume.
/// The CLI maps this to exit status 2.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Failure during an otherwise valid run (sampler exhaustion, invalid
/// likelihood value, I/O failure). Partial results may still exist.
/// The CLI maps this to exit status 3.
class RunError : public std::runtime_error {
public:
    explicit RunError(const std::string& msg) : std::runtime_error(msg) {}
};

/// The constrained sampler could not produce a point above the threshold
/// within its budget. Callers keep the partial dead sequence.
class SamplerExhausted : public RunError {
public:
    explicit SamplerExhausted(const std::string& msg) : RunError(msg) {}
};

} // namespace nest
