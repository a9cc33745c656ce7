#include "fimsketch/fim.hpp"

#include <Eigen/Eigenvalues>

namespace fimsketch {

Fim Fim::from_matrix(const Eigen::MatrixXd& m) {
    Fim f;
    f.matrix = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f.matrix);
    f.eigenvalues = es.eigenvalues();  // ascending
    f.lambda_min = f.eigenvalues(0);
    f.lambda_max = f.eigenvalues(f.eigenvalues.size() - 1);
    f.c_inv = f.lambda_max > 0.0 ? f.lambda_min / f.lambda_max : 0.0;
    if (f.c_inv < 0.0) f.c_inv = 0.0;
    return f;
}

}  // namespace fimsketch
