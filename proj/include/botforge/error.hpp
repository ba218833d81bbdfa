#pragma once

#include <stdexcept>
#include <string>

namespace botforge {

// Exit-code category carried by every library error.
enum class ErrorKind { validation = 1, io = 2, backend = 3 };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

class ValidationError : public Error {
public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

class BackendError : public Error {
public:
  explicit BackendError(const std::string& what) : Error(ErrorKind::backend, what) {}
};

// Backend produced text that is not the structured document we asked for.
// The raw text is kept so callers can log it.
class BackendParseError : public BackendError {
public:
  BackendParseError(const std::string& what, std::string raw)
      : BackendError(what + "\n--- raw backend output ---\n" + raw), raw_(std::move(raw)) {}

  const std::string& raw() const noexcept { return raw_; }

private:
  std::string raw_;
};

}  // namespace botforge
