#pragma once

#include <stdexcept>
#include <string>

namespace pointjepa {

// Non-finite value produced somewhere in a forward/backward pass. Carries
// enough context (block / step) for the CLI to report where training died.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& msg, long long block = -1, long long step = -1)
        : std::runtime_error(msg), block_index(block), step_index(step) {}
    long long block_index;
    long long step_index;
};

// Malformed file on disk: bad magic, truncation, unsupported version.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Checkpoint and run configuration disagree (model dims, config hash).
class MismatchError : public std::runtime_error {
public:
    explicit MismatchError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad configuration file or missing/unknown key.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace pointjepa
