#pragma once

#include <stdexcept>
#include <string>

namespace vcrank {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: schema violation, broken invariant, precondition failure.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A text key with no vector in the active embedding source.
class MissingEmbedding : public ValidationError {
 public:
  explicit MissingEmbedding(const std::string& key)
      : ValidationError("no embedding for key \"" + key + "\""), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Filesystem failure (open, read, write).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace vcrank
