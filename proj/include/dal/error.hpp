#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dal {

/// Raised when a caller breaks an operation's precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed binary input (bad magic, inconsistent header).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input shorter than its header promises.
class TruncationError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Bad configuration value. Carries the offending key and, when known, the
/// 1-based source line (0 when the value came from a command-line override).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, std::size_t line, const std::string& what)
      : std::runtime_error(what), key_(std::move(key)), line_(line) {}

  const std::string& key() const noexcept { return key_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string key_;
  std::size_t line_;
};

/// File-system failure; the message always names the path.
class IoError : public std::runtime_error {
 public:
  IoError(std::string path, const std::string& what)
      : std::runtime_error(what + ": " + path), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

namespace detail {
[[noreturn]] inline void contract_failed(const char* expr, const std::string& msg) {
  throw ContractViolation(msg.empty() ? std::string("requirement failed: ") + expr : msg);
}
}  // namespace detail

}  // namespace dal

#define DAL_REQUIRE(cond, msg)                          \
  do {                                                  \
    if (!(cond)) ::dal::detail::contract_failed(#cond, (msg)); \
  } while (false)
