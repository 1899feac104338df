#pragma once

#include <stdexcept>
#include <string>

namespace planeval {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite or otherwise unusable numeric input.
struct InvalidInputError : Error {
  using Error::Error;
};

/// An agent in scope has no (or an empty) predicted trajectory.
struct MissingPredictionError : Error {
  using Error::Error;
};

/// Rollout sequences are not time-aligned.
struct MalformedRolloutError : Error {
  using Error::Error;
};

/// Hessian stayed non-positive-definite after regularization.
struct IllConditionedError : Error {
  IllConditionedError(const std::string& what, double min_eig)
      : Error(what), min_eigenvalue(min_eig) {}
  double min_eigenvalue = 0.0;
};

struct EmptyInputError : Error {
  using Error::Error;
};

/// Trajectory lengths disagree where equal horizons are required.
struct ShapeError : Error {
  using Error::Error;
};

/// Covariance is not symmetric positive definite.
struct InvalidCovarianceError : Error {
  using Error::Error;
};

/// Fewer samples than the estimator needs.
struct InsufficientSamplesError : Error {
  using Error::Error;
};

/// Fewer history points than the predictor needs.
struct InsufficientHistoryError : Error {
  using Error::Error;
};

/// Two maps that must share a key set do not.
struct KeyMismatchError : Error {
  using Error::Error;
};

/// Scene record rejected; message names the first failed check and the
/// JSON path it was found at.
struct ParseError : Error {
  ParseError(const std::string& what, std::string json_path)
      : Error(what), path(std::move(json_path)) {}
  std::string path;
};

}  // namespace planeval
