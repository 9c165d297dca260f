#pragma once

#include <stdexcept>
#include <string>

namespace mscnn {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents disagree with what an operation requires.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An operation was called out of order (e.g. backward before forward).
class StateError : public Error {
 public:
  using Error::Error;
};

/// A numeric parameter is outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A class label is outside {0,1,2,3}.
class LabelError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent network or run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Degenerate data, e.g. zero variance in the standardization population.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A dataset record failed to load; carries the record id.
class RecordError : public Error {
 public:
  RecordError(std::string record_id, const std::string& what)
      : Error("record '" + record_id + "': " + what), record_id_(std::move(record_id)) {}
  const std::string& record_id() const noexcept { return record_id_; }

 private:
  std::string record_id_;
};

class MaskError : public RecordError {
 public:
  using RecordError::RecordError;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

class BadMagicError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class VersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class TruncatedError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

/// Filesystem failure (open/read/write).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mscnn
