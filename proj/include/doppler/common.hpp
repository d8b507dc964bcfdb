#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace doppler {

constexpr double kPi = 3.141592653589793238462643383279502884;

using Complex = std::complex<double>;

// h x w fields indexed (depth row, beam column).
using RealField = Eigen::ArrayXXd;
using ComplexField = Eigen::ArrayXXcd;
using MaskField = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

using Vec2 = Eigen::Vector2d;

// Bad user-supplied configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent data files / inputs (CLI exit code 3).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failure such as non-finite values where finite are required
// (CLI exit code 4).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require_config(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

inline void require_data(bool ok, const std::string& what) {
  if (!ok) throw DataError(what);
}

}  // namespace doppler
