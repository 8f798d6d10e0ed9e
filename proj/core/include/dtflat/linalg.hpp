#pragma once

#include <Eigen/Dense>

namespace dtflat {

// Numeric rank: count of singular values above rel_threshold * sigma_max.
// A zero matrix has rank 0 regardless of threshold.
[[nodiscard]] int numeric_rank(const Eigen::MatrixXd& M, double rel_threshold = 1e-9,
                               Eigen::VectorXd* singular_values = nullptr);

}  // namespace dtflat
