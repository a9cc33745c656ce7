#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fimsketch/fim.hpp"
#include "fimsketch/sketch.hpp"

namespace fimsketch {

struct Box {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    Eigen::VectorXd clamp(const Eigen::VectorXd& u) const {
        return u.cwiseMax(lo).cwiseMin(hi);
    }
    Eigen::VectorXd center() const { return 0.5 * (lo + hi); }
    int dim() const { return static_cast<int>(lo.size()); }
};

// Interacting particle system in design space. Value type; all step
// functions return a new ensemble with step_index advanced.
struct Ensemble {
    Eigen::MatrixXd particles;  // c x L
    Box box;
    int step_index = 0;
    std::uint64_t seed = 0;

    int count() const { return static_cast<int>(particles.rows()); }
    int dim() const { return static_cast<int>(particles.cols()); }
};

// Target potential Phi(u) = -log |J_{u,:}|^2; EKS additionally needs the
// rows themselves.
class PotentialEvaluator {
public:
    virtual ~PotentialEvaluator() = default;
    virtual Eigen::VectorXd row(const Eigen::VectorXd& u) const = 0;
    virtual double phi(const Eigen::VectorXd& u) const;
};

// Empirical covariance C(U) = (1/c) sum (u_j - mean)(u_j - mean)^T.
Eigen::MatrixXd ensemble_covariance(const Eigen::MatrixXd& particles);

// Symmetric PSD square root; negative eigenvalues clipped to zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m);

// One Euler-Maruyama EKS step with adaptive dt = dt0/(|D|_F + eps).
Ensemble eks_step(const Ensemble& e, const PotentialEvaluator& pot,
                  double dt0 = 1.0, double eps = 1e-8);

// Laplace-weighted mean and covariance, weights proportional to
// exp(-beta*Phi(u_j)), computed with max-subtraction.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> cbs_weighted_moments(
    const Ensemble& e, const PotentialEvaluator& pot, double beta);

// One exponential-integrator CBS step.
Ensemble cbs_step(const Ensemble& e, const PotentialEvaluator& pot,
                  double beta = 1.0, double dt = 0.05);

// Proposal for the repeated-random baseline and for initialization.
struct InitSpec {
    enum class Kind { Normal, Uniform };
    Kind kind = Kind::Normal;
    double sigma = 0.3;  // per-coordinate std for Normal, centered in the box
};

Ensemble make_ensemble(int c, const Box& box, const InitSpec& init,
                       std::uint64_t seed);

// Fresh i.i.d. redraw of all particles from the proposal.
Ensemble resample_step(const Ensemble& e, const InitSpec& proposal);
Ensemble resample_step(const Ensemble& e, const DensityField& proposal);

enum class CriterionTag { MinEigenvalue, InverseConditionNumber };

// Quantity of interest maximized by the greedy wrapper, evaluated on the
// reweighted FIM of the ensemble-induced design.
struct GreedyCriterion {
    CriterionTag tag = CriterionTag::InverseConditionNumber;
    std::function<Fim(const Ensemble&)> fim_of;

    double q(const Fim& f) const {
        return tag == CriterionTag::MinEigenvalue ? f.lambda_min : f.c_inv;
    }
};

struct TraceRow {
    int iteration;
    double q;
    double lambda_min;
    double c_inv;
    double frob_dev;  // NaN when the full FIM is unavailable
    bool accepted;
};

using UpdateRule = std::function<Ensemble(const Ensemble&)>;

// Greedy acceptance wrapper: propose, keep only strict improvements of Q.
std::pair<Ensemble, std::vector<TraceRow>> greedy_iterate(
    const Ensemble& e, const UpdateRule& rule, const GreedyCriterion& crit,
    int iterations, const Eigen::MatrixXd* full_fim = nullptr);

}  // namespace fimsketch
