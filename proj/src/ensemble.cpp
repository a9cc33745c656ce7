#include "fimsketch/ensemble.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fimsketch/rng.hpp"

namespace fimsketch {

double PotentialEvaluator::phi(const Eigen::VectorXd& u) const {
    return -std::log(row(u).squaredNorm());
}

Eigen::MatrixXd ensemble_covariance(const Eigen::MatrixXd& particles) {
    const Eigen::RowVectorXd mean = particles.colwise().mean();
    const Eigen::MatrixXd centered = particles.rowwise() - mean;
    return centered.transpose() * centered / particles.rows();
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * lam.cwiseSqrt().asDiagonal() *
           es.eigenvectors().transpose();
}

namespace {

Eigen::MatrixXd standard_normal(int rows, int cols, std::uint64_t seed,
                                int step_index) {
    Eigen::MatrixXd z(rows, cols);
    for (int j = 0; j < rows; ++j) {
        auto eng = substream(seed, step_index, j);
        std::normal_distribution<double> n01(0.0, 1.0);
        for (int l = 0; l < cols; ++l) z(j, l) = n01(eng);
    }
    return z;
}

void clamp_rows(Eigen::MatrixXd& particles, const Box& box) {
    for (int j = 0; j < particles.rows(); ++j)
        particles.row(j) =
            box.clamp(particles.row(j).transpose()).transpose();
}

}  // namespace

Ensemble eks_step(const Ensemble& e, const PotentialEvaluator& pot,
                  double dt0, double eps) {
    const int c = e.count();
    const int L = e.dim();
    if (c < 2) throw std::invalid_argument("eks_step requires c >= 2");

    Eigen::MatrixXd rows;  // c x K
    for (int j = 0; j < c; ++j) {
        const Eigen::VectorXd r = pot.row(e.particles.row(j).transpose());
        if (j == 0) rows.resize(c, r.size());
        if (r.squaredNorm() == 0.0)
            throw std::runtime_error("particle in degenerate region");
        rows.row(j) = r.transpose();
    }
    const Eigen::RowVectorXd mean_row = rows.colwise().mean();

    // D_{j,j'} = 2/(c*|J_j|^2) * (J_{j'} - mean) . J_j
    Eigen::MatrixXd drift_matrix(c, c);
    const Eigen::MatrixXd centered = rows.rowwise() - mean_row;
    for (int j = 0; j < c; ++j) {
        const double scale = 2.0 / (c * rows.row(j).squaredNorm());
        drift_matrix.row(j) = scale * (centered * rows.row(j).transpose()).transpose();
    }
    const double dt = dt0 / (drift_matrix.norm() + eps);

    const Eigen::MatrixXd cov_sqrt = psd_sqrt(ensemble_covariance(e.particles));
    const Eigen::MatrixXd noise =
        standard_normal(c, L, e.seed, e.step_index) * cov_sqrt.transpose();

    Ensemble out = e;
    out.particles = e.particles + dt * drift_matrix * e.particles +
                    std::sqrt(2.0 * dt) * noise;
    clamp_rows(out.particles, out.box);
    out.step_index = e.step_index + 1;
    return out;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> cbs_weighted_moments(
    const Ensemble& e, const PotentialEvaluator& pot, double beta) {
    const int c = e.count();
    const int L = e.dim();
    if (c < 2) throw std::invalid_argument("cbs moments require c >= 2");

    Eigen::VectorXd log_w(c);
    for (int j = 0; j < c; ++j)
        log_w(j) = -beta * pot.phi(e.particles.row(j).transpose());
    const Eigen::VectorXd w_unnorm = (log_w.array() - log_w.maxCoeff()).exp();
    const Eigen::VectorXd w = w_unnorm / w_unnorm.sum();

    const Eigen::VectorXd mean = e.particles.transpose() * w;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(L, L);
    for (int j = 0; j < c; ++j) {
        const Eigen::VectorXd d = e.particles.row(j).transpose() - mean;
        cov += w(j) * d * d.transpose();
    }
    cov = 0.5 * (cov + cov.transpose()).eval();
    return {mean, cov};
}

Ensemble cbs_step(const Ensemble& e, const PotentialEvaluator& pot,
                  double beta, double dt) {
    const auto [mean, cov] = cbs_weighted_moments(e, pot, beta);
    const double contraction = std::exp(-dt);
    const double noise_scale =
        std::sqrt((1.0 - std::exp(-2.0 * dt)) * (1.0 + beta));
    const Eigen::MatrixXd cov_sqrt = psd_sqrt(cov);
    const Eigen::MatrixXd noise =
        standard_normal(e.count(), e.dim(), e.seed, e.step_index) *
        cov_sqrt.transpose();

    Ensemble out = e;
    out.particles = contraction * e.particles;
    out.particles.rowwise() += (1.0 - contraction) * mean.transpose();
    out.particles += noise_scale * noise;
    clamp_rows(out.particles, out.box);
    out.step_index = e.step_index + 1;
    return out;
}

Ensemble make_ensemble(int c, const Box& box, const InitSpec& init,
                       std::uint64_t seed) {
    Ensemble e;
    e.box = box;
    e.seed = seed;
    e.step_index = 0;
    e.particles.resize(c, box.dim());
    if (init.kind == InitSpec::Kind::Normal) {
        const Eigen::MatrixXd z = standard_normal(c, box.dim(), seed, 0);
        e.particles = init.sigma * z;
        e.particles.rowwise() += box.center().transpose();
    } else {
        for (int j = 0; j < c; ++j) {
            auto eng = substream(seed, 0, j);
            std::uniform_real_distribution<double> u01(0.0, 1.0);
            for (int l = 0; l < box.dim(); ++l)
                e.particles(j, l) = box.lo(l) + u01(eng) * (box.hi(l) - box.lo(l));
        }
    }
    clamp_rows(e.particles, box);
    e.step_index = 1;
    return e;
}

Ensemble resample_step(const Ensemble& e, const InitSpec& proposal) {
    Ensemble out = e;
    if (proposal.kind == InitSpec::Kind::Normal) {
        out.particles =
            proposal.sigma * standard_normal(e.count(), e.dim(), e.seed, e.step_index);
        out.particles.rowwise() += e.box.center().transpose();
    } else {
        for (int j = 0; j < e.count(); ++j) {
            auto eng = substream(e.seed, e.step_index, j);
            std::uniform_real_distribution<double> u01(0.0, 1.0);
            for (int l = 0; l < e.dim(); ++l)
                out.particles(j, l) =
                    e.box.lo(l) + u01(eng) * (e.box.hi(l) - e.box.lo(l));
        }
    }
    clamp_rows(out.particles, out.box);
    out.step_index = e.step_index + 1;
    return out;
}

Ensemble resample_step(const Ensemble& e, const DensityField& proposal) {
    std::vector<double> cum(proposal.mass.size());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < proposal.mass.size(); ++i)
        cum[static_cast<std::size_t>(i)] = (acc += proposal.mass(i));
    if (acc <= 0.0) throw std::runtime_error("proposal has zero mass");

    Ensemble out = e;
    for (int j = 0; j < e.count(); ++j) {
        auto eng = substream(e.seed, e.step_index, j);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        const auto it =
            std::lower_bound(cum.begin(), cum.end(), u01(eng) * acc);
        const auto idx = std::min<std::ptrdiff_t>(
            it - cum.begin(), static_cast<std::ptrdiff_t>(cum.size()) - 1);
        out.particles.row(j) = proposal.support.row(static_cast<int>(idx));
    }
    clamp_rows(out.particles, out.box);
    out.step_index = e.step_index + 1;
    return out;
}

std::pair<Ensemble, std::vector<TraceRow>> greedy_iterate(
    const Ensemble& e, const UpdateRule& rule, const GreedyCriterion& crit,
    int iterations, const Eigen::MatrixXd* full_fim) {
    if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto deviation = [&](const Fim& f) {
        return full_fim ? (f.matrix - *full_fim).norm() : nan;
    };

    Ensemble current = e;
    Fim current_fim = crit.fim_of(current);
    double current_q = crit.q(current_fim);

    std::vector<TraceRow> trace;
    trace.reserve(iterations);
    for (int i = 1; i <= iterations; ++i) {
        Ensemble prop = rule(current);
        const Fim prop_fim = crit.fim_of(prop);
        const double prop_q = crit.q(prop_fim);
        const bool accept = prop_q > current_q;
        if (accept) {
            current = std::move(prop);
            current_fim = prop_fim;
            current_q = prop_q;
        } else {
            // Keep the state but advance the noise stream so rejected
            // proposals are not re-proposed verbatim.
            current.step_index = prop.step_index;
        }
        trace.push_back({i, current_q, current_fim.lambda_min, current_fim.c_inv,
                         deviation(current_fim), accept});
    }
    return {current, trace};
}

}  // namespace fimsketch
