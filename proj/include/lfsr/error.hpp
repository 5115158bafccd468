#pragma once

#include <stdexcept>
#include <string>

namespace lfsr {

/// A precondition or shape contract was violated by the caller.
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An index was outside its valid range.
class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// File or format problem while reading or writing artifacts.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw ContractError(message);
}

} // namespace lfsr
