#pragma once

#include <Eigen/Core>

namespace fimsketch {

// Symmetric PSD information matrix with its eigen summary.
struct Fim {
    Eigen::MatrixXd matrix;
    Eigen::VectorXd eigenvalues;  // ascending
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double c_inv = 0.0;  // lambda_min/lambda_max, 0 when lambda_max <= 0

    static Fim from_matrix(const Eigen::MatrixXd& m);
};

}  // namespace fimsketch
