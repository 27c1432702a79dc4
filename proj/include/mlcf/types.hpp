#ifndef MLCF_TYPES_HPP
#define MLCF_TYPES_HPP

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace mlcf {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using CMatrix = Eigen::MatrixXcd;
using CRowVector = Eigen::RowVectorXcd;
using Complex = std::complex<double>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or arguments (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Singular systems, non-finite values (CLI exit code 3).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A landmark whose weight row has (numerically) vanished, so its closed-form
/// column update is undefined.
class DeadLandmark : public NumericError {
 public:
  explicit DeadLandmark(Index landmark)
      : NumericError("landmark " + std::to_string(landmark) + " has no weight mass"),
        landmark_(landmark) {}
  Index landmark() const noexcept { return landmark_; }

 private:
  Index landmark_;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

inline void require_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

}  // namespace mlcf

#endif  // MLCF_TYPES_HPP
