#pragma once

#include <stdexcept>
#include <string>

namespace qkd {

/// A configuration field violates one of its invariants.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// An operation precondition does not hold (invalid bound inputs, empty
/// tally classes, truncation failures and the like).
class ValidityError : public std::runtime_error {
  public:
    explicit ValidityError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
  public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Sifting session failure; carries the offending message type code
/// (0 when the failure is not tied to a specific message).
class ProtocolError : public std::runtime_error {
  public:
    ProtocolError(std::uint8_t type_code, const std::string& what)
        : std::runtime_error(what), type_code_(type_code) {}
    std::uint8_t type_code() const { return type_code_; }

  private:
    std::uint8_t type_code_;
};

}  // namespace qkd
