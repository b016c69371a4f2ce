#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wsmgp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Error raised for invalid inputs and numerical failures anywhere in the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Floor applied to every assignment probability so that sigma^2 / pi stays finite.
inline constexpr double kPiFloor = 1e-10;

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

}  // namespace wsmgp
