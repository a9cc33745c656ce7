#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "fimsketch/rng.hpp"
#include "fimsketch/schrodinger.hpp"
#include "fimsketch/sketch.hpp"

using namespace fimsketch;

namespace {

Quasimatrix make_qm(const Eigen::MatrixXd& rows) {
    Quasimatrix qm;
    qm.rows = rows;
    const int n = static_cast<int>(rows.rows());
    qm.base_weights = Eigen::VectorXd::Constant(n, 1.0 / n);
    qm.support.resize(n, 1);
    for (int i = 0; i < n; ++i) qm.support(i, 0) = i;
    return qm;
}

Eigen::MatrixXd exact_product(const Quasimatrix& qm) {
    return qm.rows.transpose() * qm.base_weights.asDiagonal() * qm.rows;
}

}  // namespace

TEST_CASE("optimal_density: equal norms and uniform base give uniform mass") {
    Eigen::MatrixXd rows(4, 2);
    rows << 1, 0, 0, 1, -1, 0, 0, -1;
    const auto d = optimal_density(make_qm(rows));
    for (int i = 0; i < 4; ++i) CHECK(d.mass(i) == doctest::Approx(0.25));
    CHECK(d.mass.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("optimal_density: squared norms (1,3) give (0.25, 0.75)") {
    Eigen::MatrixXd rows(2, 1);
    rows << 1.0, std::sqrt(3.0);
    const auto d = optimal_density(make_qm(rows));
    CHECK(d.mass(0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(d.mass(1) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(d.normalization == doctest::Approx(0.5 * (1.0 + 3.0)).epsilon(1e-12));
}

TEST_CASE("optimal_density: all-zero rows rejected") {
    CHECK_THROWS_WITH_AS(optimal_density(make_qm(Eigen::MatrixXd::Zero(3, 2))),
                         "degenerate quasimatrix", std::runtime_error);
}

TEST_CASE("optimal_density: invariant under global row rescaling") {
    std::mt19937_64 eng(7);
    std::normal_distribution<double> n01;
    Eigen::MatrixXd rows(6, 3);
    for (int i = 0; i < 6; ++i)
        for (int k = 0; k < 3; ++k) rows(i, k) = n01(eng);
    const auto d1 = optimal_density(make_qm(rows));
    const auto d2 = optimal_density(make_qm(Eigen::MatrixXd(-17.5 * rows)));
    for (int i = 0; i < 6; ++i)
        CHECK(std::abs(d1.mass(i) - d2.mass(i)) < 1e-12);
}

TEST_CASE("sketch_rows: single-point support reproduces the product exactly") {
    Eigen::MatrixXd rows(1, 3);
    rows << 2, -1, 0.5;
    const auto qm = make_qm(rows);
    const auto d = optimal_density(qm);
    for (const int c : {1, 7}) {
        const auto sk = sketch_rows(qm, d, c, 99);
        const Eigen::MatrixXd prod = sk.rows.transpose() * sk.rows;
        CHECK((prod - rows.transpose() * rows).norm() < 1e-14);
    }
}

TEST_CASE("sketch_rows: deterministic given seed") {
    Eigen::MatrixXd rows(5, 2);
    rows << 1, 0, 0, 1, 1, 1, 2, 0, 0, 3;
    const auto qm = make_qm(rows);
    const auto d = optimal_density(qm);
    const auto a = sketch_rows(qm, d, 40, 1234);
    const auto b = sketch_rows(qm, d, 40, 1234);
    CHECK(a.rows == b.rows);
    CHECK(a.indices == b.indices);
    CHECK(sketch_rows(qm, d, 40, 1235).indices != a.indices);
}

TEST_CASE("sketch_rows: mean over seeds near the exact product") {
    // Uniform density (not the optimal one), so the estimator is still
    // unbiased but has nonzero variance.
    Eigen::MatrixXd rows(3, 2);
    rows << 1, 0, 0, 1, 1, 1;
    const auto qm = make_qm(rows);
    DensityField uniform;
    uniform.mass = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
    uniform.base_weights = qm.base_weights;
    uniform.support = qm.support;
    uniform.normalization = 1.0;

    const Eigen::MatrixXd exact = exact_product(qm);  // [[2,1],[1,2]]/3
    CHECK((exact - Eigen::MatrixXd{{2.0 / 3, 1.0 / 3}, {1.0 / 3, 2.0 / 3}}).norm() <
          1e-14);

    const int c = 2000, n_seeds = 200;
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(2, 2);
    Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(2, 2);
    for (int s = 0; s < n_seeds; ++s) {
        const auto sk = sketch_rows(qm, uniform, c, 1000 + s);
        const Eigen::MatrixXd prod = sk.rows.transpose() * sk.rows;
        mean += prod;
        m2 += prod.cwiseProduct(prod);
    }
    mean /= n_seeds;
    m2 /= n_seeds;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const double var = m2(i, j) - mean(i, j) * mean(i, j);
            const double se = std::sqrt(std::max(var, 1e-30) / n_seeds);
            CHECK(std::abs(mean(i, j) - exact(i, j)) < 3.0 * se + 1e-12);
        }
}

TEST_CASE("sketch_rows: zero-mass density rejected") {
    Eigen::MatrixXd rows(2, 1);
    rows << 1, 1;
    const auto qm = make_qm(rows);
    DensityField d;
    d.mass = Eigen::VectorXd::Zero(2);
    d.base_weights = qm.base_weights;
    d.support = qm.support;
    CHECK_THROWS_AS(sketch_rows(qm, d, 3, 1), std::runtime_error);
}

TEST_CASE("sketch_product: c=1 gives a rank-1 matrix") {
    SampledSketch sk;
    sk.rows = Eigen::MatrixXd(1, 3);
    sk.rows << 1, 2, 3;
    const Fim f = sketch_product(sk);
    CHECK((f.matrix - sk.rows.transpose() * sk.rows).norm() < 1e-14);
    CHECK(f.eigenvalues(0) < 1e-12 * f.lambda_max);
    CHECK(f.eigenvalues(1) < 1e-12 * f.lambda_max);
}

TEST_CASE("sketch_product: orthonormal rows give the identity") {
    SampledSketch sk;
    sk.rows = Eigen::MatrixXd::Identity(3, 3);
    CHECK((sketch_product(sk).matrix - Eigen::MatrixXd::Identity(3, 3)).norm() <
          1e-14);
}

TEST_CASE("sketch_product: matches triple-loop oracle and is PSD") {
    std::mt19937_64 eng(3);
    std::normal_distribution<double> n01;
    SampledSketch sk;
    sk.rows.resize(5, 3);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 3; ++j) sk.rows(i, j) = n01(eng);

    Eigen::MatrixXd oracle = Eigen::MatrixXd::Zero(3, 3);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int i = 0; i < 5; ++i) oracle(a, b) += sk.rows(i, a) * sk.rows(i, b);

    const Fim f = sketch_product(sk);
    CHECK((f.matrix - oracle).norm() < 1e-12);
    CHECK(f.matrix == f.matrix.transpose().eval());
    CHECK(f.lambda_min >= -1e-10 * f.lambda_max);
}

TEST_CASE("sample_size_bound: closed-form values") {
    CHECK(sample_size_bound(1.0, 1.0, 1.0, std::exp(-1.0)) == 15);

    // eps -> eps/2 quadruples the bound (up to ceiling).
    const auto c1 = sample_size_bound(2.0, 1.0, 0.5, 0.1);
    const auto c2 = sample_size_bound(2.0, 1.0, 0.25, 0.1);
    CHECK(c2 >= 4 * (c1 - 1));
    CHECK(c2 <= 4 * c1);

    // beta=1 vs beta=0.25 at fixed delta,eps.
    const double delta = 0.1, eps = 1.0;
    const double l = std::log(1.0 / delta);
    const double f1 = std::pow(1.0 + std::sqrt(8.0 * l), 2);
    const double f2 = std::pow(1.0 + std::sqrt(32.0 * l), 2);
    // Large frob_sq so the ceiling is negligible against the ratio.
    const auto b1 = sample_size_bound(100.0, 1.0, eps, delta);
    const auto b2 = sample_size_bound(100.0, 0.25, eps, delta);
    CHECK(static_cast<double>(b2) ==
          doctest::Approx(4.0 * f2 / f1 * static_cast<double>(b1)).epsilon(0.01));
}

TEST_CASE("sample_size_bound: rejects out-of-range parameters") {
    CHECK_THROWS_AS(sample_size_bound(1.0, 0.0, 1.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(sample_size_bound(1.0, 1.5, 1.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(sample_size_bound(1.0, 1.0, 0.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(sample_size_bound(1.0, 1.0, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(sample_size_bound(-1.0, 1.0, 1.0, 0.5), std::invalid_argument);
}

TEST_CASE("concentration_trial: failure rate within the guarantee") {
    std::mt19937_64 eng(11);
    std::normal_distribution<double> n01;
    Eigen::MatrixXd rows(6, 2);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 2; ++j) rows(i, j) = n01(eng);
    const auto qm = make_qm(rows);
    const auto d = optimal_density(qm);

    CHECK(concentration_trial(qm, d, 1.0, 50, 0.1, 1000, 5) <= 0.1);
    CHECK_THROWS_WITH_AS(concentration_trial(qm, d, 1.0, 50, 0.1, 0, 5),
                         "no trials", std::invalid_argument);
}

TEST_CASE("concentration_trial: failure rate non-increasing on a c ladder") {
    std::mt19937_64 eng(13);
    std::normal_distribution<double> n01;
    Eigen::MatrixXd rows(8, 3);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 3; ++j) rows(i, j) = n01(eng);
    const auto qm = make_qm(rows);
    const auto d = optimal_density(qm);

    double prev = 1.0;
    for (const int c : {2, 8, 32, 128}) {
        const double rate = concentration_trial(qm, d, 1.0, c, 0.5, 1000, 21);
        CHECK(rate <= prev);
        prev = rate;
    }
}

TEST_CASE("unbiasedness: seed-average error decays like M^-1/2") {
    std::mt19937_64 eng(17);
    std::normal_distribution<double> n01;
    Eigen::MatrixXd rows(5, 2);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 2; ++j) rows(i, j) = n01(eng);
    const auto qm = make_qm(rows);
    const auto d = optimal_density(qm);
    const Eigen::MatrixXd exact = exact_product(qm);

    const int c = 4, reps = 30;
    std::vector<double> log_m, log_err;
    for (const int m_samples : {100, 1000, 10000}) {
        double err_sum = 0.0;
        for (int r = 0; r < reps; ++r) {
            Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(2, 2);
            for (int s = 0; s < m_samples; ++s) {
                const auto sk = sketch_rows(qm, d, c, mix_seed(777, r, s));
                mean += sk.rows.transpose() * sk.rows;
            }
            err_sum += (mean / m_samples - exact).norm();
        }
        log_m.push_back(std::log(static_cast<double>(m_samples)));
        log_err.push_back(std::log(err_sum / reps));
    }
    // Least-squares slope over the three points.
    const int n = 3;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sx += log_m[i];
        sy += log_err[i];
        sxx += log_m[i] * log_m[i];
        sxy += log_m[i] * log_err[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope == doctest::Approx(-0.5).epsilon(0.3));
    CHECK(std::abs(slope + 0.5) < 0.15);
}

TEST_CASE("sampled_fim_multinomial agrees with per-draw sketching in mean") {
    Eigen::MatrixXd rows(4, 2);
    rows << 1, 0, 0, 2, 1, 1, -1, 1;
    const auto qm = make_qm(rows);
    const auto d = optimal_density(qm);
    const Eigen::MatrixXd exact = exact_product(qm);

    const int c = 500, reps = 300;
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(2, 2);
    for (int s = 0; s < reps; ++s)
        mean += sampled_fim_multinomial(qm, d, c, mix_seed(31, s)).matrix;
    mean /= reps;
    CHECK((mean - exact).norm() < 0.05 * exact.norm());
}

TEST_CASE("System C density bounded above by 0.0031 on the 30x30 grid") {
    SchrodingerProblem problem(Grid(30), Potential::preset("systemC"));
    const auto qm = problem.full_quasimatrix(SourceSpec::constant(1e4));
    const auto d = optimal_density(qm);
    CHECK(d.mass.maxCoeff() <= 0.0031);
    CHECK(d.mass.sum() == doctest::Approx(1.0).epsilon(1e-10));
}
