// copest - cooperative rigid-payload estimation
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

namespace copest {

/// Base class for all copest errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid configuration values (filter cutoffs, trim lengths, scenario files, ...).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

/// Frame tag mismatch between a transform and the quantity it is applied to.
class FrameMismatch : public Error {
 public:
  explicit FrameMismatch(const std::string& what) : Error(what) {}
};

/// Measurement data does not excite the parameter space; carries the
/// unobservable directions (unit vectors in the parameter space of the
/// failing solve).
class InsufficientExcitation : public Error {
 public:
  InsufficientExcitation(const std::string& what,
                         std::vector<Eigen::VectorXd> null_directions)
      : Error(what), null_directions(std::move(null_directions)) {}

  std::vector<Eigen::VectorXd> null_directions;
};

/// Static-hold orientations do not make the center of mass observable.
class InsufficientOrientations : public Error {
 public:
  InsufficientOrientations(const std::string& what, Eigen::Vector3d direction)
      : Error(what), unobservable_direction(std::move(direction)) {}

  Eigen::Vector3d unobservable_direction;
};

}  // namespace copest
