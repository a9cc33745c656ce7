#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fimsketch/ensemble.hpp"
#include "fimsketch/fim.hpp"
#include "fimsketch/schrodinger.hpp"
#include "fimsketch/sketch.hpp"

namespace fimsketch {

// A finite design: selected points with (optional) sampling probabilities.
// Weighted mode carries the density pi(u_j) relative to the base measure;
// unweighted mode averages plainly (source-design, where Z is unavailable).
struct Design {
    Eigen::MatrixXd points;            // c x L
    std::optional<Eigen::VectorXd> pis;
    int count() const { return static_cast<int>(points.rows()); }
};

// (1/N) sum_n J_n^T J_n over the full discrete design space.
Fim full_fim(const Quasimatrix& qm);

// Reweighted FIM: sum_j 1/(c*pi_j) J_j^T J_j, or the plain average when the
// design is unweighted.
Fim design_fim(const Eigen::MatrixXd& rows, const Design& design);

struct DesignReport {
    std::string scenario;
    std::string mode;    // "fixed-source" | "source-design"
    std::string method;  // "full" | "init" | "eks" | "cbs" | "resample" | ...
    int c = 0;
    double lambda_min = 0.0;
    double c_inv = 0.0;
    double frob_dev = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t seed = 0;
};

// CSV table, rows sorted by scenario then method; stable column order.
std::string compare_designs(std::vector<DesignReport> reports);

// Glue used by the greedy wrapper and the CLI: maps an ensemble to a design
// by snapping particles to inner grid nodes and looking up precomputed rows.
class GridDesignObjective {
public:
    // Fixed-source mode: reweight by the optimal density pi-tilde.
    GridDesignObjective(const Grid& grid, Eigen::MatrixXd node_rows,
                        DensityField pi_tilde);
    // Unweighted mode (rows provided per call by the evaluator).
    explicit GridDesignObjective(const Grid& grid);

    Fim evaluate(const Ensemble& e) const;
    Fim evaluate_rows(const Eigen::MatrixXd& rows) const;  // unweighted

    // Snap sensor coordinates (first two columns) to inner nodes.
    std::vector<int> snap(const Ensemble& e) const;

private:
    Grid grid_;
    Eigen::MatrixXd node_rows_;
    std::optional<DensityField> pi_tilde_;
};

}  // namespace fimsketch
