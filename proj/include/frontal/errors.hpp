#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace frontal {

// Operand shapes disagree with an operation's shape contract.
class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An API precondition was violated (missing gradient, non-scalar loss,
// invalid configuration value, ...).
class ContractError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A finite value was required but a NaN/Inf appeared.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Geometric preconditions of the interpolators (zero-length or antipodal
// inputs).
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Loaded state is valid but incompatible with the requested configuration
// (e.g. checkpoint latent width differs from the config).
class CompatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File-format violation. Carries the error class and the byte offset at
// which parsing stopped.
class ParseError : public std::runtime_error {
public:
    enum class Kind {
        BadMagic,         // unrecognized leading magic bytes
        BadHeader,        // malformed/missing/invalid header field
        UnsupportedValue, // well-formed but unsupported (e.g. PGM maxval != 255)
        TruncatedPayload, // payload shorter than the header promised
    };

    ParseError(Kind kind, std::size_t offset, const std::string& what)
        : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"),
          kind_(kind),
          offset_(offset) {}

    Kind kind() const { return kind_; }
    std::size_t offset() const { return offset_; }

private:
    Kind kind_;
    std::size_t offset_;
};

} // namespace frontal
