#include "fimsketch/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fimsketch/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fimsketch {

DensityField optimal_density(const Eigen::MatrixXd& rows,
                             const Eigen::VectorXd& base_weights,
                             const Eigen::MatrixXd& support) {
    if (rows.rows() != base_weights.size())
        throw std::invalid_argument("rows/base_weights size mismatch");
    const Eigen::VectorXd norms_sq = rows.rowwise().squaredNorm();
    const double z = (norms_sq.array() * base_weights.array()).sum();
    if (z <= 0.0) throw std::runtime_error("degenerate quasimatrix");

    DensityField d;
    d.mass = (norms_sq.array() * base_weights.array() / z).matrix();
    d.base_weights = base_weights;
    d.support = support;
    d.normalization = z;
    d.normalized = true;
    return d;
}

DensityField optimal_density(const Quasimatrix& qm) {
    return optimal_density(qm.rows, qm.base_weights, qm.support);
}

namespace {

std::vector<double> cumulative(const Eigen::VectorXd& mass) {
    std::vector<double> cum(mass.size());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < mass.size(); ++i) {
        acc += mass(i);
        cum[static_cast<std::size_t>(i)] = acc;
    }
    return cum;
}

int draw_index(const std::vector<double>& cum, double total, double u01) {
    const auto it = std::lower_bound(cum.begin(), cum.end(), u01 * total);
    return static_cast<int>(std::min<std::ptrdiff_t>(
        it - cum.begin(), static_cast<std::ptrdiff_t>(cum.size()) - 1));
}

}  // namespace

SampledSketch sketch_rows(const Quasimatrix& qm, const DensityField& density,
                          int c, std::uint64_t seed) {
    if (c < 1) throw std::invalid_argument("sketch_rows: c must be >= 1");
    if (!density.normalized)
        throw std::invalid_argument("sketch_rows requires a normalized density");
    const std::vector<double> cum = cumulative(density.mass);
    const double total = cum.empty() ? 0.0 : cum.back();
    if (total <= 0.0) throw std::runtime_error("density has zero total mass");

    const int K = static_cast<int>(qm.rows.cols());
    const int L = static_cast<int>(qm.support.cols());
    SampledSketch sk;
    sk.points.resize(c, L);
    sk.indices.resize(c);
    sk.weights.resize(c);
    sk.rows.resize(c, K);

    // Per-draw substreams: the result does not depend on loop order.
    for (int j = 0; j < c; ++j) {
        auto eng = substream(seed, j);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        const int idx = draw_index(cum, total, u01(eng));
        const double pi = density.density(idx);
        sk.indices[j] = idx;
        sk.points.row(j) = qm.support.row(idx);
        sk.weights(j) = 1.0 / std::sqrt(static_cast<double>(c) * pi);
        sk.rows.row(j) = qm.rows.row(idx) * sk.weights(j);
    }
    return sk;
}

Fim sketch_product(const SampledSketch& sketch) {
    return Fim::from_matrix(sketch.rows.transpose() * sketch.rows);
}

std::int64_t sample_size_bound(double frob_sq, double beta, double eps,
                               double delta) {
    if (!(frob_sq > 0.0)) throw std::invalid_argument("frob_sq must be positive");
    if (!(beta > 0.0 && beta <= 1.0))
        throw std::invalid_argument("beta must be in (0,1]");
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("delta must be in (0,1)");
    const double a = 1.0 + std::sqrt(8.0 / beta * std::log(1.0 / delta));
    const double c = frob_sq * frob_sq * a * a / (beta * eps * eps);
    return static_cast<std::int64_t>(std::ceil(c));
}

Fim sampled_fim_multinomial(const Quasimatrix& qm, const DensityField& density,
                            std::int64_t c, std::uint64_t seed) {
    if (c < 1) throw std::invalid_argument("c must be >= 1");
    const int n = static_cast<int>(density.mass.size());
    const int K = static_cast<int>(qm.rows.cols());
    auto eng = substream(seed);

    // Sequential binomial decomposition of Multinomial(c, mass).
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(K, K);
    std::int64_t remaining = c;
    double mass_left = 1.0;
    for (int i = 0; i < n && remaining > 0; ++i) {
        const double p = std::min(1.0, density.mass(i) / mass_left);
        std::int64_t count;
        if (p >= 1.0) {
            count = remaining;
        } else {
            std::binomial_distribution<std::int64_t> bin(remaining, p);
            count = bin(eng);
        }
        if (count > 0) {
            const double w = static_cast<double>(count) /
                             (static_cast<double>(c) * density.density(i));
            m += w * qm.rows.row(i).transpose() * qm.rows.row(i);
        }
        remaining -= count;
        mass_left -= density.mass(i);
        if (mass_left <= 0.0) break;
    }
    return Fim::from_matrix(m);
}

double concentration_trial(const Quasimatrix& qm, const DensityField& density,
                           double beta, int c, double delta, int trials,
                           std::uint64_t seed) {
    if (trials <= 0) throw std::invalid_argument("no trials");
    const Eigen::MatrixXd exact =
        qm.rows.transpose() * qm.base_weights.asDiagonal() * qm.rows;
    const double frob_sq = qm.frob_sq();
    const double bound = (1.0 + std::sqrt(8.0 / beta * std::log(1.0 / delta))) /
                         std::sqrt(beta * c) * frob_sq;

    int failures = 0;
#ifdef _OPENMP
#pragma omp parallel for reduction(+ : failures) schedule(dynamic)
#endif
    for (int t = 0; t < trials; ++t) {
        const auto sk = sketch_rows(qm, density, c, mix_seed(seed, t));
        const Eigen::MatrixXd approx = sk.rows.transpose() * sk.rows;
        if ((exact - approx).norm() > bound) ++failures;
    }
    return static_cast<double>(failures) / trials;
}

}  // namespace fimsketch
