#pragma once

#include <stdexcept>
#include <string>

namespace pdmc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// File contents do not follow the expected format.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Inputs violate an operation's preconditions or a type invariant.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A geometric fit could not produce a model (degenerate point set).
class DegenerateFit : public Error {
 public:
  using Error::Error;
};

/// Bitstream is truncated, corrupted or inconsistent with the side information.
class DecodeError : public Error {
 public:
  using Error::Error;
};

}  // namespace pdmc
