#include "fimsketch/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "fimsketch/csv.hpp"
#include "fimsketch/rng.hpp"

namespace fimsketch {

namespace {

const std::set<std::string> kScenarios = {"systemA", "systemB", "systemC",
                                          "systemD", "landscape2d"};

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw std::invalid_argument("config key '" + key + "': " + what);
}

}  // namespace

void ScenarioConfig::validate() const {
    require(kScenarios.count(scenario) > 0, "scenario", "unknown scenario " + scenario);
    require(nx >= 4 && nx <= 512, "nx", "must be in [4,512]");
    require(alpha > 0, "alpha", "must be positive");
    require(mode == "fixed" || mode == "source", "mode", "must be fixed|source");
    require(sampler == "eks" || sampler == "cbs" || sampler == "resample",
            "sampler", "must be eks|cbs|resample");
    require(init == "normal" || init == "uniform", "init", "must be normal|uniform");
    require(c >= 2, "c", "must be >= 2");
    require(iterations >= 0, "iterations", "must be >= 0");
    require(criterion == "c_inv" || criterion == "lambda_min", "criterion",
            "must be c_inv|lambda_min");
    require(dt0 > 0, "dt0", "must be positive");
    require(eps > 0, "eps", "must be positive");
    require(beta > 0, "beta", "must be positive");
    require(dt > 0, "dt", "must be positive");
    require(init_sigma > 0, "init_sigma", "must be positive");
    require(!(mode == "source" && scenario == "landscape2d"), "mode",
            "source mode is not defined for landscape2d");
}

void apply_override(ScenarioConfig& cfg, const std::string& key,
                    const std::string& value) {
    try {
        if (key == "scenario") cfg.scenario = value;
        else if (key == "nx") cfg.nx = std::stoi(value);
        else if (key == "alpha") cfg.alpha = std::stod(value);
        else if (key == "mode") cfg.mode = value;
        else if (key == "sampler") cfg.sampler = value;
        else if (key == "init") cfg.init = value;
        else if (key == "c") cfg.c = std::stoi(value);
        else if (key == "iterations" || key == "iters") cfg.iterations = std::stoi(value);
        else if (key == "criterion") cfg.criterion = value;
        else if (key == "seed") cfg.seed = std::stoull(value);
        else if (key == "outdir") cfg.outdir = value;
        else if (key == "dt0") cfg.dt0 = std::stod(value);
        else if (key == "eps") cfg.eps = std::stod(value);
        else if (key == "beta") cfg.beta = std::stod(value);
        else if (key == "dt") cfg.dt = std::stod(value);
        else if (key == "init_sigma") cfg.init_sigma = std::stod(value);
        else if (key == "gamma") cfg.gamma = std::stod(value);
        else throw std::invalid_argument("unknown config key: " + key);
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': bad value " + value);
    }
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read config file: " + path);
    ScenarioConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key=value");
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        apply_override(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

std::string config_echo(const ScenarioConfig& c) {
    std::ostringstream o;
    o << "scenario=" << c.scenario << "\nnx=" << c.nx << "\nalpha=" << format_double(c.alpha)
      << "\nmode=" << c.mode << "\nsampler=" << c.sampler << "\ninit=" << c.init
      << "\nc=" << c.c << "\niterations=" << c.iterations
      << "\ncriterion=" << c.criterion << "\nseed=" << c.seed
      << "\noutdir=" << c.outdir << "\ndt0=" << format_double(c.dt0)
      << "\neps=" << format_double(c.eps) << "\nbeta=" << format_double(c.beta)
      << "\ndt=" << format_double(c.dt)
      << "\ninit_sigma=" << format_double(c.init_sigma)
      << "\ngamma=" << format_double(c.gamma) << "\n";
    return o.str();
}

FixedSourceSetup make_fixed_setup(const ScenarioConfig& cfg) {
    Grid grid(cfg.nx);
    Potential pot = cfg.scenario == "landscape2d"
                        ? Potential::landscape2d(1.0, 10.0)
                        : Potential::preset(cfg.scenario, cfg.alpha);
    FixedSourceSetup s;
    s.problem = std::make_shared<SchrodingerProblem>(grid, std::move(pot));
    s.qm = s.problem->full_quasimatrix(SourceSpec::constant(cfg.gamma));
    s.pi_tilde = optimal_density(s.qm);
    s.full = full_fim(s.qm);
    s.objective = std::make_shared<GridDesignObjective>(grid, s.qm.rows, s.pi_tilde);
    return s;
}

Eigen::VectorXd SourceDesignEvaluator::row(const Eigen::VectorXd& u) const {
    double g1 = std::clamp(u(2), -2.0, 2.0);
    double g2 = std::clamp(u(3), -2.0, 2.0);
    DesignPoint d{Eigen::Vector2d(u(0), u(1)), SourceSpec::linear(g1, g2)};
    return problem_->sensitivity_row(d);
}

namespace {

Box sensor_box() {
    Box b;
    b.lo = Eigen::Vector2d(-1, -1);
    b.hi = Eigen::Vector2d(1, 1);
    return b;
}

Box source_box() {
    Box b;
    b.lo = Eigen::Vector4d(-1, -1, -2, -2);
    b.hi = Eigen::Vector4d(1, 1, 2, 2);
    return b;
}

// Source-design initial ensemble: Gaussian sensors, uniform source params.
Ensemble make_source_ensemble(const ScenarioConfig& cfg) {
    const Box box = source_box();
    Ensemble e;
    e.box = box;
    e.seed = cfg.seed;
    e.particles.resize(cfg.c, 4);
    for (int j = 0; j < cfg.c; ++j) {
        auto eng = substream(cfg.seed, 0, j);
        std::normal_distribution<double> n01(0.0, 1.0);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        if (cfg.init == "normal") {
            e.particles(j, 0) = cfg.init_sigma * n01(eng);
            e.particles(j, 1) = cfg.init_sigma * n01(eng);
        } else {
            e.particles(j, 0) = -1.0 + 2.0 * u01(eng);
            e.particles(j, 1) = -1.0 + 2.0 * u01(eng);
        }
        e.particles(j, 2) = -2.0 + 4.0 * u01(eng);
        e.particles(j, 3) = -2.0 + 4.0 * u01(eng);
        e.particles.row(j) = box.clamp(e.particles.row(j).transpose()).transpose();
    }
    e.step_index = 1;
    return e;
}

UpdateRule make_rule(const ScenarioConfig& cfg,
                     std::shared_ptr<const PotentialEvaluator> pot,
                     const InitSpec& init_spec) {
    if (cfg.sampler == "eks")
        return [pot, cfg](const Ensemble& e) {
            return eks_step(e, *pot, cfg.dt0, cfg.eps);
        };
    if (cfg.sampler == "cbs")
        return [pot, cfg](const Ensemble& e) {
            return cbs_step(e, *pot, cfg.beta, cfg.dt);
        };
    return [init_spec](const Ensemble& e) { return resample_step(e, init_spec); };
}

DesignReport make_report(const ScenarioConfig& cfg, const std::string& method,
                         const Fim& fim, const Eigen::MatrixXd* full) {
    DesignReport r;
    r.scenario = cfg.scenario;
    r.mode = cfg.mode == "source" ? "source-design" : "fixed-source";
    r.method = method;
    r.c = cfg.c;
    r.lambda_min = fim.lambda_min;
    r.c_inv = fim.c_inv;
    if (full) r.frob_dev = (fim.matrix - *full).norm();
    r.seed = cfg.seed;
    return r;
}

}  // namespace

ScenarioResult run_arm(const ScenarioConfig& cfg, const FixedSourceSetup* setup) {
    cfg.validate();
    const InitSpec init_spec{cfg.init == "normal" ? InitSpec::Kind::Normal
                                                  : InitSpec::Kind::Uniform,
                             cfg.init_sigma};

    GreedyCriterion crit;
    crit.tag = cfg.criterion == "lambda_min" ? CriterionTag::MinEigenvalue
                                             : CriterionTag::InverseConditionNumber;

    Ensemble e;
    std::shared_ptr<const PotentialEvaluator> pot;
    const Eigen::MatrixXd* full_matrix = nullptr;

    FixedSourceSetup local;
    if (cfg.mode == "fixed") {
        if (!setup) {
            local = make_fixed_setup(cfg);
            setup = &local;
        }
        e = make_ensemble(cfg.c, sensor_box(), init_spec, cfg.seed);
        pot = std::make_shared<NodeRowEvaluator>(setup->problem->grid(),
                                                 setup->qm.rows);
        auto objective = setup->objective;
        crit.fim_of = [objective](const Ensemble& en) {
            return objective->evaluate(en);
        };
        full_matrix = &setup->full.matrix;
    } else {
        auto problem = setup && setup->problem
                           ? setup->problem
                           : std::make_shared<SchrodingerProblem>(
                                 Grid(cfg.nx),
                                 Potential::preset(cfg.scenario, cfg.alpha));
        e = make_source_ensemble(cfg);
        auto ev = std::make_shared<SourceDesignEvaluator>(problem);
        pot = ev;
        crit.fim_of = [ev](const Ensemble& en) {
            Eigen::MatrixXd rows;
            for (int j = 0; j < en.count(); ++j) {
                const Eigen::VectorXd r = ev->row(en.particles.row(j).transpose());
                if (j == 0) rows.resize(en.count(), r.size());
                rows.row(j) = r.transpose();
            }
            return Fim::from_matrix(rows.transpose() * rows / en.count());
        };
    }

    const UpdateRule rule = make_rule(cfg, pot, init_spec);

    ScenarioResult res;
    const Fim init_fim = crit.fim_of(e);
    res.init_report = make_report(cfg, "init-" + cfg.init, init_fim, full_matrix);

    auto [final_e, trace] = greedy_iterate(e, rule, crit, cfg.iterations, full_matrix);
    const Fim final_fim = crit.fim_of(final_e);
    res.final_report =
        make_report(cfg, cfg.sampler + "-" + cfg.init, final_fim, full_matrix);
    res.trace = std::move(trace);
    res.final_ensemble = std::move(final_e);
    res.all_reports = {res.init_report, res.final_report};
    return res;
}

void emit_density(const FixedSourceSetup& setup, const std::string& path) {
    CsvWriter csv(path);
    csv.header({"x1", "x2", "value"});
    for (Eigen::Index i = 0; i < setup.pi_tilde.mass.size(); ++i)
        csv.row(format_double(setup.pi_tilde.support(i, 0)),
                format_double(setup.pi_tilde.support(i, 1)),
                format_double(setup.pi_tilde.mass(i)));
}

namespace {

void write_ensemble(const Ensemble& e, const std::string& path) {
    CsvWriter csv(path);
    std::vector<std::string> cols = {"particle"};
    for (int l = 0; l < e.dim(); ++l) cols.push_back("coord_" + std::to_string(l + 1));
    csv.header(cols);
    for (int j = 0; j < e.count(); ++j) {
        std::vector<std::string> cells = {std::to_string(j)};
        for (int l = 0; l < e.dim(); ++l) cells.push_back(format_double(e.particles(j, l)));
        csv.row_strings(cells);
    }
}

void write_trace(const std::vector<TraceRow>& trace, const std::string& path) {
    CsvWriter csv(path);
    csv.header({"iteration", "Q", "lambda_min", "c_inv", "frob_dev", "accepted"});
    for (const auto& t : trace)
        csv.row(t.iteration, format_double(t.q), format_double(t.lambda_min),
                format_double(t.c_inv),
                std::isnan(t.frob_dev) ? std::string() : format_double(t.frob_dev),
                t.accepted ? 1 : 0);
}

void write_landscape(const Eigen::MatrixXd& loss, const LandscapeSpec& spec,
                     const std::string& path) {
    CsvWriter csv(path);
    csv.header({"p1", "p2", "loss"});
    for (int i = 0; i < spec.resolution; ++i) {
        const double p1 = spec.p1_lo + (spec.p1_hi - spec.p1_lo) * i /
                                           (spec.resolution - 1);
        for (int j = 0; j < spec.resolution; ++j) {
            const double p2 = spec.p2_lo + (spec.p2_hi - spec.p2_lo) * j /
                                               (spec.resolution - 1);
            csv.row(format_double(p1), format_double(p2), format_double(loss(i, j)));
        }
    }
}

}  // namespace

Eigen::MatrixXd loss_landscape(const SchrodingerProblem& truth,
                               const SourceSpec& s,
                               const std::vector<int>& sensor_nodes,
                               const Eigen::VectorXd& weights,
                               const LandscapeSpec& spec) {
    if (sensor_nodes.empty()) throw std::invalid_argument("empty design");
    if (spec.resolution < 2) throw std::invalid_argument("resolution must be >= 2");
    Eigen::MatrixXd loss(spec.resolution, spec.resolution);
    for (int i = 0; i < spec.resolution; ++i) {
        const double p1 =
            spec.p1_lo + (spec.p1_hi - spec.p1_lo) * i / (spec.resolution - 1);
        for (int j = 0; j < spec.resolution; ++j) {
            const double p2 =
                spec.p2_lo + (spec.p2_hi - spec.p2_lo) * j / (spec.resolution - 1);
            SchrodingerProblem candidate(truth.grid(),
                                         Potential::landscape2d(p1, p2));
            loss(i, j) = truth.data_misfit(candidate, sensor_nodes, weights, s);
        }
    }
    return loss;
}

void run_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(cfg.outdir);
    const auto path = [&](const std::string& name) {
        return (fs::path(cfg.outdir) / name).string();
    };

    FixedSourceSetup setup;
    const bool fixed = cfg.mode == "fixed";
    if (fixed) {
        setup = make_fixed_setup(cfg);
        emit_density(setup, path("density.csv"));
    }

    ScenarioResult res = run_arm(cfg, fixed ? &setup : nullptr);

    // Reproduce the initial ensemble for the snapshot (run_arm owns the
    // stream layout, init draws use step index 0).
    if (fixed) {
        const InitSpec init_spec{cfg.init == "normal" ? InitSpec::Kind::Normal
                                                      : InitSpec::Kind::Uniform,
                                 cfg.init_sigma};
        Box b;
        b.lo = Eigen::Vector2d(-1, -1);
        b.hi = Eigen::Vector2d(1, 1);
        write_ensemble(make_ensemble(cfg.c, b, init_spec, cfg.seed),
                       path("ensemble_init.csv"));
    } else {
        write_ensemble(make_source_ensemble(cfg), path("ensemble_init.csv"));
    }
    write_ensemble(res.final_ensemble, path("ensemble_final.csv"));
    write_trace(res.trace, path("trace.csv"));

    std::vector<DesignReport> reports = res.all_reports;
    if (fixed) {
        DesignReport full = make_report(cfg, "full", setup.full, nullptr);
        full.c = setup.problem->grid().num_inner;
        reports.insert(reports.begin(), full);
    }
    std::ofstream(path("report.csv")) << compare_designs(reports);

    if (cfg.scenario == "landscape2d") {
        LandscapeSpec lspec;
        const Grid& grid = setup.problem->grid();
        std::vector<int> all_nodes(grid.num_inner);
        for (int i = 0; i < grid.num_inner; ++i) all_nodes[i] = i;
        const SourceSpec src = SourceSpec::constant(cfg.gamma);
        write_landscape(loss_landscape(*setup.problem, src, all_nodes,
                                       setup.qm.base_weights, lspec),
                        lspec, path("landscape_full.csv"));
        const std::vector<int> nodes = setup.objective->snap(res.final_ensemble);
        const Eigen::VectorXd w =
            Eigen::VectorXd::Constant(static_cast<int>(nodes.size()),
                                      1.0 / nodes.size());
        write_landscape(loss_landscape(*setup.problem, src, nodes, w, lspec),
                        lspec, path("landscape_final.csv"));
    }

    std::ofstream manifest(path("manifest.txt"));
    manifest << config_echo(cfg) << "version=0.1.0\n";
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    manifest << "timestamp="
             << std::chrono::duration_cast<std::chrono::seconds>(now).count()
             << "\n";
}

std::string reproduce_tables(const ScenarioConfig& base,
                             const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) throw std::invalid_argument("no seeds");
    const bool fixed = base.mode == "fixed";

    FixedSourceSetup setup;
    std::shared_ptr<SchrodingerProblem> source_problem;
    if (fixed) {
        setup = make_fixed_setup(base);
    } else {
        source_problem = std::make_shared<SchrodingerProblem>(
            Grid(base.nx), Potential::preset(base.scenario, base.alpha));
        setup.problem = source_problem;
    }

    struct Agg {
        std::vector<double> lmin, cinv;
    };
    std::map<std::string, Agg> agg;
    std::vector<std::string> order;
    auto record = [&](const std::string& method, double lmin, double cinv) {
        if (!agg.count(method)) order.push_back(method);
        agg[method].lmin.push_back(lmin);
        agg[method].cinv.push_back(cinv);
    };

    if (fixed) record("full", setup.full.lambda_min, setup.full.c_inv);

    for (const std::string& init : {"normal", "uniform"}) {
        for (const std::uint64_t seed : seeds) {
            bool init_recorded = false;
            for (const std::string& sampler : {"eks", "cbs", "resample"}) {
                ScenarioConfig cfg = base;
                cfg.init = init;
                cfg.sampler = sampler;
                cfg.seed = seed;
                ScenarioResult res = run_arm(cfg, &setup);
                if (!init_recorded) {
                    record("init-" + init, res.init_report.lambda_min,
                           res.init_report.c_inv);
                    init_recorded = true;
                }
                record(sampler + "-" + init, res.final_report.lambda_min,
                       res.final_report.c_inv);
            }
        }
    }

    auto quantile = [](std::vector<double> v, double q) {
        std::sort(v.begin(), v.end());
        const double pos = q * (v.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
        return v[lo] + (pos - lo) * (v[hi] - v[lo]);
    };

    std::ostringstream out;
    out << "scenario,mode,method,lambda_min_median,lambda_min_iqr,"
           "c_inv_median,c_inv_iqr\n";
    for (const auto& method : order) {
        const Agg& a = agg.at(method);
        out << base.scenario << ","
            << (fixed ? "fixed-source" : "source-design") << "," << method << ","
            << format_double(quantile(a.lmin, 0.5)) << ","
            << format_double(quantile(a.lmin, 0.75) - quantile(a.lmin, 0.25)) << ","
            << format_double(quantile(a.cinv, 0.5)) << ","
            << format_double(quantile(a.cinv, 0.75) - quantile(a.cinv, 0.25))
            << "\n";
    }
    return out.str();
}

}  // namespace fimsketch
