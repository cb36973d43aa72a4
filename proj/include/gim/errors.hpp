#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace gim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TypeSyntaxError : public Error {
 public:
  using Error::Error;
};

class UnknownToken : public Error {
 public:
  explicit UnknownToken(std::string token)
      : Error("unknown token: " + token), token_(std::move(token)) {}
  const std::string& token() const { return token_; }

 private:
  std::string token_;
};

// Offending span is [offset, offset + length) in the parsed text.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset, std::size_t length)
      : Error(what), offset_(offset), length_(length) {}
  std::size_t offset() const { return offset_; }
  std::size_t length() const { return length_; }

 private:
  std::size_t offset_;
  std::size_t length_;
};

class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class DuplicateToken : public Error {
 public:
  explicit DuplicateToken(const std::string& token)
      : Error("duplicate token_id: " + token) {}
};

class UnknownBuiltin : public Error {
 public:
  explicit UnknownBuiltin(const std::string& name)
      : Error("unknown builtin: " + name) {}
};

class ResourceExceeded : public Error {
 public:
  using Error::Error;
};

class EmptySpace : public Error {
 public:
  using Error::Error;
};

class InconsistentFeedback : public Error {
 public:
  using Error::Error;
};

class SessionClosed : public Error {
 public:
  using Error::Error;
};

class TypeMismatch : public Error {
 public:
  using Error::Error;
};

class NoConstruction : public Error {
 public:
  using Error::Error;
};

class UnknownTask : public Error {
 public:
  explicit UnknownTask(const std::string& id) : Error("unknown task: " + id) {}
};

}  // namespace gim
