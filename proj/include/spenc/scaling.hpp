#pragma once

#include <Eigen/Dense>

#include "spenc/count_matrix.hpp"
#include "spenc/errors.hpp"

namespace spenc {

// Floor applied to per-item means so the item link maps stay defined on
// all-zero columns.
constexpr double kEtaFloor = 1e-6;

struct ItemMeans {
  Eigen::VectorXd eta;  // strictly positive after the floor
};

enum class XiMode { unit, overdispersed };

struct UserScales {
  Eigen::VectorXd xi;  // strictly positive; mean 1 in overdispersed mode
};

// eta_i = max(column mean of Y, kEtaFloor).
inline ItemMeans compute_item_means(const CountMatrix& Y) {
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(Y.cols());
  for (long r = 0; r < Y.rows(); ++r) {
    for (const auto& item : Y.row(r)) {
      eta[item.col] += static_cast<double>(item.count);
    }
  }
  eta /= static_cast<double>(Y.rows());
  return {eta.cwiseMax(kEtaFloor)};
}

// unit: xi_u = 1.  overdispersed: xi_u = U * rowsum_u / total.
inline UserScales compute_user_scales(const CountMatrix& Y, XiMode mode) {
  if (mode == XiMode::unit) {
    return {Eigen::VectorXd::Ones(Y.rows())};
  }
  const double total = static_cast<double>(Y.total_sum());
  if (total <= 0.0) {
    throw ValidationError(
        "overdispersed user scales require a positive total count");
  }
  Eigen::VectorXd xi(Y.rows());
  const double scale = static_cast<double>(Y.rows()) / total;
  for (long r = 0; r < Y.rows(); ++r) {
    xi[r] = scale * static_cast<double>(Y.row_sum(r));
  }
  return {xi};
}

}  // namespace spenc
