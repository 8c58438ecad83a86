#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ambipose {

// Base of every fault raised by the library. Expected outcomes such as an
// all-rejected frame are values (std::optional), not exceptions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NearPiRotation : public Error {
 public:
  explicit NearPiRotation(double angle);
  double angle() const { return angle_; }

 private:
  double angle_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NonPositiveScale : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class AllZeroErrors : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class EmptyList : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class EmptyModel : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class BehindCamera : public Error {
 public:
  using Error::Error;
};

class DegenerateConfiguration : public Error {
 public:
  using Error::Error;
};

class InsufficientPoints : public Error {
 public:
  using Error::Error;
};

class DuplicateTime : public Error {
 public:
  using Error::Error;
};

class RankDeficient : public Error {
 public:
  RankDeficient(const std::string& what, std::vector<std::string> state_ids)
      : Error(what), state_ids_(std::move(state_ids)) {}
  const std::vector<std::string>& state_ids() const { return state_ids_; }

 private:
  std::vector<std::string> state_ids_;
};

// Text input that does not match its schema. line() is 1-based, 0 if unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

// A file or directory could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// A run configuration is malformed or out of range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ambipose
