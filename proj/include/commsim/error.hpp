#pragma once

#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <string>

namespace commsim {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (edge lists, partition files, configs, CSV dumps).
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_ = 0;
};

/// A state left the region where an expansion is valid, or a
/// precondition on the inputs of an operation does not hold.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Blow-up, non-finite sample values, or an imaginary residue that
/// indicates a broken expansion.
class NumericError : public Error {
public:
  using Error::Error;
};

/// Missing files or inconsistent run configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Number of coupling-kernel evaluations performed; the
/// hardware-independent complexity witness used by the benchmarks.
struct KernelCounter {
  std::uint64_t evals = 0;

  void add(std::uint64_t n) noexcept { evals += n; }
  void reset() noexcept { evals = 0; }
};

namespace detail {

inline bool& quiet_flag() {
  static bool quiet = false;
  return quiet;
}

inline void warn(const std::string& msg) {
  if (!quiet_flag()) std::clog << "commsim: warning: " << msg << '\n';
}

}  // namespace detail

/// Silence library warnings (tests and benchmarks).
inline void set_quiet(bool quiet) { detail::quiet_flag() = quiet; }

}  // namespace commsim
