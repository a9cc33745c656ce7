#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "fimsketch/design_eval.hpp"
#include "fimsketch/ensemble.hpp"
#include "fimsketch/schrodinger.hpp"
#include "fimsketch/sketch.hpp"

namespace fimsketch {

// Experiment configuration; every field is exposed as a config key and a CLI
// flag of the same name.
struct ScenarioConfig {
    std::string scenario = "systemC";  // systemA..systemD | landscape2d
    int nx = 30;
    double alpha = 1.0;
    std::string mode = "fixed";      // fixed | source
    std::string sampler = "eks";     // eks | cbs | resample
    std::string init = "normal";     // normal | uniform
    int c = 18;
    int iterations = 25;
    std::string criterion = "c_inv";  // c_inv | lambda_min
    std::uint64_t seed = 42;
    std::string outdir = "out";
    double dt0 = 1.0;
    double eps = 1e-8;
    double beta = 1.0;       // CBS weight parameter
    double dt = 0.05;        // CBS time step
    double init_sigma = 0.3;
    double gamma = 1e4;      // constant source in fixed mode

    void validate() const;  // throws std::invalid_argument naming the key
};

// Flat key=value config file; '#' starts a comment. Unknown keys rejected.
ScenarioConfig load_config(const std::string& path);
void apply_override(ScenarioConfig& cfg, const std::string& key,
                    const std::string& value);
std::string config_echo(const ScenarioConfig& cfg);

// Precomputed fixed-source machinery shared across samplers and seeds.
struct FixedSourceSetup {
    std::shared_ptr<SchrodingerProblem> problem;
    Quasimatrix qm;
    DensityField pi_tilde;
    Fim full;
    std::shared_ptr<GridDesignObjective> objective;
};

FixedSourceSetup make_fixed_setup(const ScenarioConfig& cfg);

// Potential evaluator over sensor space backed by precomputed node rows.
class NodeRowEvaluator : public PotentialEvaluator {
public:
    NodeRowEvaluator(Grid grid, Eigen::MatrixXd node_rows)
        : grid_(grid), node_rows_(std::move(node_rows)) {}
    Eigen::VectorXd row(const Eigen::VectorXd& u) const override {
        return node_rows_.row(grid_.nearest_inner(u(0), u(1))).transpose();
    }

private:
    Grid grid_;
    Eigen::MatrixXd node_rows_;
};

// Evaluator over the 4-D sensor x source design space.
class SourceDesignEvaluator : public PotentialEvaluator {
public:
    explicit SourceDesignEvaluator(std::shared_ptr<SchrodingerProblem> problem)
        : problem_(std::move(problem)) {}
    Eigen::VectorXd row(const Eigen::VectorXd& u) const override;

private:
    std::shared_ptr<SchrodingerProblem> problem_;
};

struct ScenarioResult {
    DesignReport init_report;
    DesignReport final_report;
    std::vector<DesignReport> all_reports;
    std::vector<TraceRow> trace;
    Ensemble final_ensemble;
};

// One greedy-sampler arm; writes nothing.
ScenarioResult run_arm(const ScenarioConfig& cfg, const FixedSourceSetup* setup);

// Full scenario run with all file outputs (density, ensembles, trace,
// report, manifest).
void run_scenario(const ScenarioConfig& cfg);

// pi-tilde CSV over inner nodes: x1,x2,value; values sum to 1.
void emit_density(const FixedSourceSetup& setup, const std::string& path);

// Medians and IQR of lambda_min and c_inv per method across seeds.
std::string reproduce_tables(const ScenarioConfig& base,
                             const std::vector<std::uint64_t>& seeds);

// Weighted squared-loss landscape over the two-parameter potential family.
struct LandscapeSpec {
    double p1_lo = -4.0, p1_hi = 6.0;
    double p2_lo = 5.0, p2_hi = 15.0;
    int resolution = 21;
};

Eigen::MatrixXd loss_landscape(const SchrodingerProblem& truth,
                               const SourceSpec& s,
                               const std::vector<int>& sensor_nodes,
                               const Eigen::VectorXd& weights,
                               const LandscapeSpec& spec);

}  // namespace fimsketch
