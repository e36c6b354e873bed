#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace oocheck {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's contract (empty request, bad argument).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class InvalidElement : public Error {
 public:
  using Error::Error;
};

class InvalidField : public Error {
 public:
  using Error::Error;
};

// backend
class TransportError : public Error {
 public:
  using Error::Error;
};

/// The remote side answered with a non-2xx status.
class BackendRefused : public Error {
 public:
  BackendRefused(int status, const std::string& message)
      : Error("backend refused request (HTTP " + std::to_string(status) + "): " + message),
        status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class ImageUnavailable : public Error {
 public:
  using Error::Error;
};

class EmptyText : public Error {
 public:
  using Error::Error;
};

/// A scripted mock had no rule for the request and no default.
class ScriptMiss : public Error {
 public:
  using Error::Error;
};

// prompts
class CatalogError : public Error {
 public:
  using Error::Error;
};

class EmptyEvidence : public Error {
 public:
  using Error::Error;
};

// parser
class MissingField : public Error {
 public:
  explicit MissingField(std::string field)
      : Error("missing field: " + field), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// instructgen
class EmptyDataset : public Error {
 public:
  using Error::Error;
};

class InsufficientReals : public Error {
 public:
  using Error::Error;
};

// evidence / ingestion
class FileUnreadable : public Error {
 public:
  using Error::Error;
};

/// A JSON Lines record failed validation. `line` is 1-based.
class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, const std::string& message)
      : Error("line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// metrics
class MissingLabel : public Error {
 public:
  explicit MissingLabel(std::string claim_id)
      : Error("no gold label for claim " + claim_id), claim_id_(std::move(claim_id)) {}
  const std::string& claim_id() const noexcept { return claim_id_; }

 private:
  std::string claim_id_;
};

class ZeroLength : public Error {
 public:
  using Error::Error;
};

}  // namespace oocheck
