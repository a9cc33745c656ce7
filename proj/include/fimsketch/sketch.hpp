#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>

#include "fimsketch/fim.hpp"
#include "fimsketch/schrodinger.hpp"

namespace fimsketch {

// Importance density over a discrete support. `mass` are sampling
// probabilities (sum to 1 when normalized); the density relative to the base
// measure is mass/base.
struct DensityField {
    Eigen::VectorXd mass;          // per support point, >= 0
    Eigen::VectorXd base_weights;  // base measure, > 0, sums to 1
    Eigen::MatrixXd support;       // n x L coordinates
    double normalization = 0.0;    // Z = sum_i base_i * |row_i|^2
    bool normalized = true;

    double density(int i) const { return mass(i) / base_weights(i); }
};

// Output of the row-sampling sketch: c weighted rows C_{j,:}.
struct SampledSketch {
    Eigen::MatrixXd points;   // c x L sampled support coordinates
    std::vector<int> indices; // support indices of the draws
    Eigen::VectorXd weights;  // 1/sqrt(c*pi(u_j))
    Eigen::MatrixXd rows;     // c x K, already weighted
};

// Row-norm importance density: mass_i = base_i*|row_i|^2 / Z.
DensityField optimal_density(const Eigen::MatrixXd& rows,
                             const Eigen::VectorXd& base_weights,
                             const Eigen::MatrixXd& support = {});
DensityField optimal_density(const Quasimatrix& qm);

// c i.i.d. draws with replacement from the density; deterministic given seed
// and independent of evaluation order (per-draw substreams).
SampledSketch sketch_rows(const Quasimatrix& qm, const DensityField& density,
                          int c, std::uint64_t seed);

// C^T C, symmetrized.
Fim sketch_product(const SampledSketch& sketch);

// Sample-size bound: ceil(frob_sq^2 * (1+sqrt(8/beta*ln(1/delta)))^2 / (beta*eps^2)).
std::int64_t sample_size_bound(double frob_sq, double beta, double eps,
                               double delta);

// C^T C of a c-draw sketch without materializing the c rows: the multinomial
// draw counts per support point are sampled directly, which is equivalent in
// distribution and O(N) instead of O(c). Used when the Theorem-2 sample size
// is large.
Fim sampled_fim_multinomial(const Quasimatrix& qm, const DensityField& density,
                            std::int64_t c, std::uint64_t seed);

// Fraction of trials where |A^T A - C^T C|_F exceeds the concentration bound
// (1+sqrt(8/beta*ln(1/delta)))/sqrt(beta*c) * |A|_F^2.
double concentration_trial(const Quasimatrix& qm, const DensityField& density,
                           double beta, int c, double delta, int trials,
                           std::uint64_t seed);

}  // namespace fimsketch
