#pragma once

#include <Eigen/Core>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "fimsketch/grid.hpp"

namespace fimsketch {

// One basis mode phi(x) = cos(f1*x1)*cos(f2*x2).
struct BasisMode {
    double f1;
    double f2;
    double eval(double x1, double x2) const {
        return std::cos(f1 * x1) * std::cos(f2 * x2);
    }
};

// Potential p(x) = background + sum_k coeffs[k]*phi_k(x).
struct Potential {
    std::vector<BasisMode> modes;
    Eigen::VectorXd coeffs;
    double background = 0.0;

    int dim() const { return static_cast<int>(modes.size()); }
    double eval(double x1, double x2) const;

    // K=9 cosine tensor basis cos(k1*pi*x1)*cos(k2*pi*x2), k1,k2 in {0,1,2};
    // coefficient index k = 3*k1 + k2.
    static std::vector<BasisMode> cosine_basis_3x3();
    // K=4 reduced basis, k1,k2 in {0,1}.
    static std::vector<BasisMode> cosine_basis_2x2();
    // Two-parameter family p1*cos(x1) + p2*cos(x2) + 12.
    static Potential landscape2d(double p1, double p2);

    // Named ground-truth presets over the 3x3 basis.
    static Potential preset(const std::string& name, double alpha = 1.0);
};

// Source gamma(x) = gamma1*x1 + gamma2*x2 + offset.
struct SourceSpec {
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    double offset = 0.0;

    static SourceSpec constant(double g) { return {0.0, 0.0, g}; }
    static SourceSpec linear(double g1, double g2, double offset = 10.0) {
        return {g1, g2, offset};
    }
    double eval(double x1, double x2) const {
        return gamma1 * x1 + gamma2 * x2 + offset;
    }
    bool is_constant() const { return gamma1 == 0.0 && gamma2 == 0.0; }
};

// One experimental configuration: a sensor position (continuous; snapped to
// the nearest inner node when rows are evaluated) and a source.
struct DesignPoint {
    Eigen::Vector2d sensor;
    SourceSpec source;
};

// Discrete quasimatrix: one sensitivity row per support point plus the base
// measure weight of each point.
struct Quasimatrix {
    Eigen::MatrixXd rows;          // N x K
    Eigen::VectorXd base_weights;  // N, sums to 1
    Eigen::MatrixXd support;       // N x L support coordinates

    double frob_sq() const {
        return (rows.rowwise().squaredNorm().array() * base_weights.array()).sum();
    }
};

// Discrete 2D Schroedinger operator (-Lap + p) with homogeneous Dirichlet
// boundary on [-1,1]^2, 5-point stencil. One factorization per (grid, p) is
// cached and shared by all forward and adjoint solves.
class SchrodingerProblem {
public:
    SchrodingerProblem(Grid grid, Potential potential);

    const Grid& grid() const { return grid_; }
    const Potential& potential() const { return potential_; }
    int param_dim() const { return potential_.dim(); }

    // Solution over inner nodes (boundary values are identically zero).
    Eigen::VectorXd solve_forward(const SourceSpec& s) const;
    // Adjoint field for a point measurement at an inner node.
    Eigen::VectorXd solve_adjoint(int sensor_inner_index) const;
    // Generic solve against the cached factorization.
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

    // Row of the sensitivity quasimatrix at a design point:
    //   [J]_k = h^2 * sum_n g(xi_n) phi_k(xi_n) u(xi_n).
    Eigen::VectorXd sensitivity_row(const DesignPoint& d) const;

    // All rows at the inner nodes for a shared source, uniform base weights.
    Quasimatrix full_quasimatrix(const SourceSpec& s, bool parallel = true) const;
    Quasimatrix full_quasimatrix_serial(const SourceSpec& s) const {
        return full_quasimatrix(s, false);
    }

    // Weighted squared data misfit of candidate potential p against
    // noise-free data from this problem's potential, at the given sensors.
    double data_misfit(const SchrodingerProblem& candidate,
                       const std::vector<int>& sensor_nodes,
                       const Eigen::VectorXd& weights, const SourceSpec& s) const;

    // Cached-forward accessor for source-design mode; gamma quantized to 1e-6.
    const Eigen::VectorXd& forward_cached(const SourceSpec& s) const;
    const Eigen::VectorXd& adjoint_cached(int sensor_inner_index) const;

private:
    Grid grid_;
    Potential potential_;
    Eigen::SparseMatrix<double> op_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;

    mutable std::mutex cache_mutex_;
    mutable std::map<std::pair<std::int64_t, std::int64_t>,
                     std::unique_ptr<Eigen::VectorXd>> forward_cache_;
    mutable std::map<int, std::unique_ptr<Eigen::VectorXd>> adjoint_cache_;
};

}  // namespace fimsketch
