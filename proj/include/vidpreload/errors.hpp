#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace vidpreload {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyFeed : public Error {
 public:
  EmptyFeed() : Error("feed contains no videos") {}
};

class InvalidPlan : public Error {
 public:
  using Error::Error;
};

/// A plan step refers to a chunk that has already started playing.
class StaleChunk : public Error {
 public:
  using Error::Error;
};

/// Every single-step decision at the root was pruned for compute stall.
class InfeasibleAllPruned : public Error {
 public:
  using Error::Error;
};

class SpaceTooLarge : public Error {
 public:
  using Error::Error;
};

class TraceMismatch : public Error {
 public:
  using Error::Error;
};

/// Malformed input. `where()` names the line number or field path.
class ParseError : public Error {
 public:
  ParseError(std::string where, const std::string& what)
      : Error(where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

class InvalidManifest : public Error {
 public:
  explicit InvalidManifest(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

}  // namespace vidpreload
