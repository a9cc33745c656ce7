#include "fimsketch/design_eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fimsketch/csv.hpp"

namespace fimsketch {

Fim full_fim(const Quasimatrix& qm) {
    return Fim::from_matrix(qm.rows.transpose() * qm.base_weights.asDiagonal() *
                            qm.rows);
}

Fim design_fim(const Eigen::MatrixXd& rows, const Design& design) {
    const int c = design.count();
    if (c == 0) throw std::invalid_argument("empty design");
    if (rows.rows() != c) throw std::invalid_argument("rows/design size mismatch");
    const int K = static_cast<int>(rows.cols());

    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(K, K);
    if (design.pis) {
        for (int j = 0; j < c; ++j) {
            const double pi = (*design.pis)(j);
            if (pi <= 0.0)
                throw std::runtime_error("design point with zero probability");
            m += rows.row(j).transpose() * rows.row(j) / (c * pi);
        }
    } else {
        m = rows.transpose() * rows / c;
    }
    return Fim::from_matrix(m);
}

std::string compare_designs(std::vector<DesignReport> reports) {
    if (reports.empty()) throw std::invalid_argument("no reports");
    std::stable_sort(reports.begin(), reports.end(),
                     [](const DesignReport& a, const DesignReport& b) {
                         if (a.scenario != b.scenario) return a.scenario < b.scenario;
                         return a.method < b.method;
                     });
    std::ostringstream out;
    out << "scenario,mode,method,c,lambda_min,c_inv,frob_dev,seed\n";
    for (const auto& r : reports) {
        out << r.scenario << "," << r.mode << "," << r.method << "," << r.c << ","
            << format_double(r.lambda_min) << "," << format_double(r.c_inv) << ","
            << (std::isnan(r.frob_dev) ? "" : format_double(r.frob_dev)) << ","
            << r.seed << "\n";
    }
    return out.str();
}

GridDesignObjective::GridDesignObjective(const Grid& grid,
                                         Eigen::MatrixXd node_rows,
                                         DensityField pi_tilde)
    : grid_(grid), node_rows_(std::move(node_rows)), pi_tilde_(std::move(pi_tilde)) {}

GridDesignObjective::GridDesignObjective(const Grid& grid) : grid_(grid) {}

std::vector<int> GridDesignObjective::snap(const Ensemble& e) const {
    std::vector<int> nodes(e.count());
    for (int j = 0; j < e.count(); ++j)
        nodes[j] = grid_.nearest_inner(e.particles(j, 0), e.particles(j, 1));
    return nodes;
}

Fim GridDesignObjective::evaluate(const Ensemble& e) const {
    if (!pi_tilde_)
        throw std::logic_error("objective constructed without node rows");
    const std::vector<int> nodes = snap(e);
    const int c = static_cast<int>(nodes.size());
    Design d;
    d.points.resize(c, 2);
    Eigen::VectorXd pis(c);
    Eigen::MatrixXd rows(c, node_rows_.cols());
    for (int j = 0; j < c; ++j) {
        rows.row(j) = node_rows_.row(nodes[j]);
        pis(j) = pi_tilde_->density(nodes[j]);
        d.points.row(j) = pi_tilde_->support.row(nodes[j]);
    }
    d.pis = pis;
    return design_fim(rows, d);
}

Fim GridDesignObjective::evaluate_rows(const Eigen::MatrixXd& rows) const {
    Design d;
    d.points.resize(rows.rows(), 2);
    d.points.setZero();
    return design_fim(rows, d);
}

}  // namespace fimsketch
