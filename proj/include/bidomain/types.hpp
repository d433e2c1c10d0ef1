#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bidomain {

using Real = double;
using Index = Eigen::Index;

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using SpMat = Eigen::SparseMatrix<Real>;
using Triplet = Eigen::Triplet<Real>;

/// The three unknown fields of the coupled system.
enum class Field : int { Ui = 0, Ue = 1, W = 2 };
inline constexpr int kNumFields = 3;

/// Thrown when a run configuration violates a precondition
/// (non-divisible decomposition, negative extent, ...).
class InvalidConfig : public std::invalid_argument {
public:
  explicit InvalidConfig(const std::string& what) : std::invalid_argument(what) {}
};

/// Thrown on fatal numerical failures (inverted element, singular factorization).
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bidomain
