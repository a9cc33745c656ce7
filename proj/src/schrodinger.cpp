#include "fimsketch/schrodinger.hpp"

#include <atomic>
#include <cmath>
#include <iostream>
#include <numbers>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fimsketch {

double Potential::eval(double x1, double x2) const {
    double p = background;
    for (int k = 0; k < dim(); ++k) p += coeffs(k) * modes[k].eval(x1, x2);
    return p;
}

std::vector<BasisMode> Potential::cosine_basis_3x3() {
    std::vector<BasisMode> modes;
    for (int k1 = 0; k1 < 3; ++k1)
        for (int k2 = 0; k2 < 3; ++k2)
            modes.push_back({k1 * std::numbers::pi, k2 * std::numbers::pi});
    return modes;
}

std::vector<BasisMode> Potential::cosine_basis_2x2() {
    std::vector<BasisMode> modes;
    for (int k1 = 0; k1 < 2; ++k1)
        for (int k2 = 0; k2 < 2; ++k2)
            modes.push_back({k1 * std::numbers::pi, k2 * std::numbers::pi});
    return modes;
}

Potential Potential::landscape2d(double p1, double p2) {
    // Same pi-scaled frequency convention as the K=9 cosine basis; the
    // unscaled variant makes the two sensitivity fields nearly parallel and
    // the information matrix effectively rank one.
    Potential p;
    p.modes = {{std::numbers::pi, 0.0}, {0.0, std::numbers::pi}};
    p.coeffs = Eigen::Vector2d(p1, p2);
    p.background = 12.0;
    return p;
}

Potential Potential::preset(const std::string& name, double alpha) {
    Potential p;
    p.modes = cosine_basis_3x3();
    p.coeffs.resize(9);
    if (name == "systemA") {
        p.coeffs << 13.6, 10, 10, 10, 10, 10, 10, 10, 10;
    } else if (name == "systemB") {
        p.coeffs << 5.856, 0.103, 3.168, 3.7441, 2.493, 1.124, 0.9902, 3.803, 0.846;
    } else if (name == "systemC") {
        p.coeffs << 11, 8.889, 7.778, 6.667, 5.556, 4.444, 3.333, 2.222, 1.111;
    } else if (name == "systemD") {
        p.coeffs << 10, 0, 0, 0, 0, 0, 0, 0, 0;
    } else {
        throw std::invalid_argument("unknown preset: " + name);
    }
    p.coeffs *= alpha;
    return p;
}

SchrodingerProblem::SchrodingerProblem(Grid grid, Potential potential)
    : grid_(grid), potential_(std::move(potential)) {
    const int m = grid_.inner_per_dim;
    const int n = grid_.num_inner;
    const double inv_h2 = 1.0 / (grid_.h * grid_.h);

    // Once per process: candidate scans (e.g. loss landscapes) legitimately
    // visit sign-indefinite potentials and would otherwise flood the log.
    static std::atomic<bool> negative_warned{false};
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(5 * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int ix = i % m;
        const int iy = i / m;
        const Eigen::Vector2d x = grid_.inner_coords(i);
        const double p = potential_.eval(x(0), x(1));
        if (p < 0 && !negative_warned.exchange(true)) {
            std::cerr << "warning: potential negative at node (" << x(0) << ","
                      << x(1) << "): " << p << "\n";
        }
        trips.emplace_back(i, i, 4.0 * inv_h2 + p);
        if (ix > 0) trips.emplace_back(i, i - 1, -inv_h2);
        if (ix < m - 1) trips.emplace_back(i, i + 1, -inv_h2);
        if (iy > 0) trips.emplace_back(i, i - m, -inv_h2);
        if (iy < m - 1) trips.emplace_back(i, i + m, -inv_h2);
    }
    op_.resize(n, n);
    op_.setFromTriplets(trips.begin(), trips.end());
    solver_.compute(op_);
    if (solver_.info() != Eigen::Success)
        throw std::runtime_error("operator factorization failed");
}

Eigen::VectorXd SchrodingerProblem::solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd x = solver_.solve(rhs);
    if (solver_.info() != Eigen::Success)
        throw std::runtime_error("linear solve failed");
    return x;
}

Eigen::VectorXd SchrodingerProblem::solve_forward(const SourceSpec& s) const {
    const int n = grid_.num_inner;
    Eigen::VectorXd rhs(n);
    for (int i = 0; i < n; ++i) {
        const Eigen::Vector2d x = grid_.inner_coords(i);
        rhs(i) = s.eval(x(0), x(1));
    }
    return solve(rhs);
}

Eigen::VectorXd SchrodingerProblem::solve_adjoint(int sensor_inner_index) const {
    if (sensor_inner_index < 0 || sensor_inner_index >= grid_.num_inner)
        throw std::invalid_argument("sensor must be an inner node");
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(grid_.num_inner);
    // Discrete nodal delta, -1/h^2, so that h^2 * sum_n rhs_n v_n = -v(x).
    rhs(sensor_inner_index) = -1.0 / (grid_.h * grid_.h);
    return solve(rhs);
}

const Eigen::VectorXd& SchrodingerProblem::forward_cached(const SourceSpec& s) const {
    const auto q = [](double v) {
        return static_cast<std::int64_t>(std::llround(v * 1e6));
    };
    const std::pair<std::int64_t, std::int64_t> key{q(s.gamma1), q(s.gamma2)};
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        auto it = forward_cache_.find(key);
        if (it != forward_cache_.end()) return *it->second;
    }
    auto field = std::make_unique<Eigen::VectorXd>(solve_forward(s));
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto [it, inserted] = forward_cache_.emplace(key, std::move(field));
    return *it->second;
}

const Eigen::VectorXd& SchrodingerProblem::adjoint_cached(int sensor) const {
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        auto it = adjoint_cache_.find(sensor);
        if (it != adjoint_cache_.end()) return *it->second;
    }
    auto field = std::make_unique<Eigen::VectorXd>(solve_adjoint(sensor));
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto [it, inserted] = adjoint_cache_.emplace(sensor, std::move(field));
    return *it->second;
}

Eigen::VectorXd SchrodingerProblem::sensitivity_row(const DesignPoint& d) const {
    const int node = grid_.nearest_inner(d.sensor(0), d.sensor(1));
    const Eigen::VectorXd& u = forward_cached(d.source);
    const Eigen::VectorXd& g = adjoint_cached(node);
    const double h2 = grid_.h * grid_.h;
    const int K = param_dim();
    Eigen::VectorXd row(K);
    for (int k = 0; k < K; ++k) {
        double acc = 0.0;
        for (int i = 0; i < grid_.num_inner; ++i) {
            const Eigen::Vector2d x = grid_.inner_coords(i);
            acc += g(i) * potential_.modes[k].eval(x(0), x(1)) * u(i);
        }
        row(k) = h2 * acc;
    }
    return row;
}

Quasimatrix SchrodingerProblem::full_quasimatrix(const SourceSpec& s,
                                                 bool parallel) const {
    const int n = grid_.num_inner;
    const int K = param_dim();
    const double h2 = grid_.h * grid_.h;
    const Eigen::VectorXd u = solve_forward(s);

    // phi_k(xi) * u(xi) per column, shared by all sensors.
    Eigen::MatrixXd phiu(n, K);
    for (int i = 0; i < n; ++i) {
        const Eigen::Vector2d x = grid_.inner_coords(i);
        for (int k = 0; k < K; ++k)
            phiu(i, k) = potential_.modes[k].eval(x(0), x(1)) * u(i);
    }

    Quasimatrix qm;
    qm.rows.resize(n, K);
    qm.base_weights = Eigen::VectorXd::Constant(n, 1.0 / n);
    qm.support.resize(n, 2);
    for (int i = 0; i < n; ++i) qm.support.row(i) = grid_.inner_coords(i);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd g = solve_adjoint(i);
        qm.rows.row(i) = h2 * (g.transpose() * phiu);
    }
    return qm;
}

double SchrodingerProblem::data_misfit(const SchrodingerProblem& candidate,
                                       const std::vector<int>& sensor_nodes,
                                       const Eigen::VectorXd& weights,
                                       const SourceSpec& s) const {
    if (sensor_nodes.empty()) throw std::invalid_argument("empty design");
    const Eigen::VectorXd& y = forward_cached(s);
    const Eigen::VectorXd& f = candidate.forward_cached(s);
    double acc = 0.0;
    for (std::size_t j = 0; j < sensor_nodes.size(); ++j) {
        const double r = y(sensor_nodes[j]) - f(sensor_nodes[j]);
        acc += weights(static_cast<int>(j)) * r * r;
    }
    return acc;
}

}  // namespace fimsketch
