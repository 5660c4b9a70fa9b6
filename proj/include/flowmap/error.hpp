#pragma once

#include <stdexcept>
#include <string>

namespace flowmap {

/// Error thrown for invalid inputs and failed preconditions throughout the
/// library. The message is meant to be printed verbatim by the CLI.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace flowmap
