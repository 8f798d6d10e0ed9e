#include "dtflat/linalg.hpp"

#include <Eigen/SVD>

namespace dtflat {

int numeric_rank(const Eigen::MatrixXd& M, double rel_threshold,
                 Eigen::VectorXd* singular_values) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (singular_values) *singular_values = sv;
  if (sv.size() == 0) return 0;
  const double cutoff = rel_threshold * sv(0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff && sv(i) > 0.0) ++rank;
  return rank;
}

}  // namespace dtflat
