#pragma once

#include <stdexcept>
#include <string>

namespace banis {

// Bad user input: shape mismatches, out-of-range config values, malformed
// arguments. The CLI maps this to the "validation" error category.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Filesystem / codec failures. Message always names the offending path.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed text inputs (config files, manifests, CSVs); message carries a
// line number where one is known.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training stage machine violations (e.g. applying refinement twice).
class StageError : public std::logic_error {
public:
    explicit StageError(const std::string& msg) : std::logic_error(msg) {}
};

// Checkpoint format or config-hash mismatches.
class CheckpointError : public std::runtime_error {
public:
    explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace banis
