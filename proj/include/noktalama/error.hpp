#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace noktalama {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidUtf8 : public Error {
 public:
  explicit InvalidUtf8(std::size_t byte_offset)
      : Error("invalid UTF-8 at byte " + std::to_string(byte_offset)),
        byte_offset_(byte_offset) {}
  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

class EmptyWord : public Error {
 public:
  EmptyWord() : Error("empty word") {}
};

class IoError : public Error {
 public:
  using Error::Error;
};

class DuplicateToken : public Error {
 public:
  DuplicateToken(std::size_t line, const std::string& token)
      : Error("duplicate vocabulary token '" + token + "' at line " +
              std::to_string(line)),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class MissingUnkToken : public Error {
 public:
  explicit MissingUnkToken(const std::string& unk)
      : Error("vocabulary does not contain the unknown token '" + unk + "'") {}
};

class MissingColumn : public Error {
 public:
  explicit MissingColumn(const std::string& column)
      : Error("missing column '" + column + "'"), column_(column) {}
  const std::string& column() const { return column_; }

 private:
  std::string column_;
};

class MalformedRecord : public Error {
 public:
  MalformedRecord(std::size_t line, const std::string& what)
      : Error("malformed record at line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class EmptyTrainingSet : public Error {
 public:
  EmptyTrainingSet() : Error("training set is empty") {}
};

class BackendUnavailable : public Error {
 public:
  using Error::Error;
};

class LengthExceeded : public Error {
 public:
  LengthExceeded(std::size_t length, std::size_t limit)
      : Error("length exceeded: " + std::to_string(length) + " tokens, limit " +
              std::to_string(limit)) {}
};

class LengthMismatch : public Error {
 public:
  LengthMismatch(std::size_t index, const std::string& what)
      : Error("length mismatch at " + std::to_string(index) + ": " + what),
        index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class Timeout : public Error {
 public:
  using Error::Error;
};

class DanglingContinuation : public Error {
 public:
  DanglingContinuation()
      : Error("sequence starts with a continuation token") {}
};

class UnknownClass : public Error {
 public:
  explicit UnknownClass(const std::string& label)
      : Error("unknown class '" + label + "'") {}
};

/// Configuration or usage problem; the CLI maps it to exit code 2.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error("invalid config field '" + field + "': " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace noktalama
