#pragma once

#include <stdexcept>
#include <string>

namespace sann {

/// Operand dimensions do not fit together.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A value lies outside the domain an operation accepts (negative NMF
/// input, constant sequence handed to a correlation, empty image).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Invalid counts, rates or ranges in a configuration.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Malformed file contents.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition that cannot be expressed in
/// the types, e.g. a forward trace used after the network changed.
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Numerical failure during a run (non-finite training error).
struct RunError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sann
