#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace dde {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using BinaryMatrix =
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Latent configurations are packed into 64-bit words: bit k holds alpha_k.
using Config = std::uint64_t;
inline constexpr Index kMaxLayerWidth = 64;

inline int config_bit(Config c, Index k) { return static_cast<int>((c >> k) & 1u); }

}  // namespace dde
