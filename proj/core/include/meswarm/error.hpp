#pragma once

#include <stdexcept>
#include <string>

namespace meswarm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or invalid arguments to an operation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (CSV files, streams).
class DataError : public Error {
 public:
  using Error::Error;
};

/// An observation the filter cannot process (unknown landmark, self-observation).
class ObservationError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: singular update matrix, non-SPD gain, divergence.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The (I + dt K E ...) update matrix is singular or too badly conditioned.
class UpdateSingularError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Decentralised nodes disagree on the propagation epoch being exchanged.
class SyncError : public Error {
 public:
  using Error::Error;
};

/// Protocol misuse between nodes, e.g. originating an inter-vehicle update
/// before the peer state has been requested.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace meswarm
