// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace seqrec {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Item index or item id outside the vocabulary.
class VocabularyError : public Error {
 public:
  using Error::Error;
};

/// Invalid or incompatible configuration. Maps to exit code 2 in the CLI.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Misuse of an API (e.g. backward on a value that was not recorded).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed input row; the message carries the line number.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Input file unreadable or empty.
class IngestError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values during optimisation.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// A batch without a single unmasked prediction target.
class DegenerateBatchError : public Error {
 public:
  using Error::Error;
};

/// Uplift over a baseline whose recall is zero.
class UndefinedUpliftError : public Error {
 public:
  using Error::Error;
};

/// Gradient check could not be carried out.
class CheckError : public Error {
 public:
  using Error::Error;
};

/// Caller broke a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Corrupt or incompatible binary container.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace seqrec
