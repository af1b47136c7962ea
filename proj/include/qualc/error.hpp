#pragma once

#include <stdexcept>
#include <string>

namespace qualc {

/// Base error type for toolkit failures that are not parse errors
/// (eligibility violations, unresolved names, oversized inputs, ...).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace qualc
