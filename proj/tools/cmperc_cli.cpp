// Command-line front end: degree-sequence generation, percolation,
// exploration, limit-process simulation and the Monte Carlo experiments.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cmperc/degrees.hpp"
#include "cmperc/explore.hpp"
#include "cmperc/graph.hpp"
#include "cmperc/harness.hpp"
#include "cmperc/limit.hpp"
#include "cmperc/nearcritical.hpp"
#include "cmperc/params.hpp"

namespace {

using namespace cmperc;

std::vector<std::int64_t> parse_ladder(const std::string& s) {
    std::vector<std::int64_t> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stoll(tok));
    }
    return out;
}

DegreeSequence make_or_load_degrees(const std::string& degrees_file,
                                    const ModelParams& params,
                                    const std::string& kase) {
    if (!degrees_file.empty()) return load_degrees(degrees_file);
    if (kase == "iid") {
        Rng rng = make_stream(params.seed, 0, Phase::degrees);
        return iid_degrees(params, rng);
    }
    return quantile_degrees(params);
}

std::ostream& open_or_stdout(std::ofstream& f, const std::string& path) {
    if (path.empty()) return std::cout;
    f.open(path);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    return f;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"percolation on scale-free configuration models"};
    app.require_subcommand(1);

    ModelParams params;
    params.n = 1000;
    std::string n_spec = "1000";
    std::string out_path;
    std::string format = "jsonl";
    std::string degrees_file;
    std::string kase = "quantile";
    std::string config_file;
    double p = -1.0;
    double p_exponent = std::numeric_limits<double>::quiet_NaN();
    int reps = 100;
    int threads = 0;
    double horizon = 30.0;
    double tail = 1e-3;
    std::string method = "retain";
    std::string experiment = "oracle_suite";
    int paths = 1;

    auto add_model_flags = [&](CLI::App* cmd) {
        cmd->add_option("--tau", params.tau, "power-law exponent in (2,3)");
        cmd->add_option("--lambda", params.lambda, "critical window location");
        cmd->add_option("--cf", params.c_F, "power-law constant c_F");
        cmd->add_option("--n", n_spec, "vertex count (comma list = ladder)");
        cmd->add_option("--seed", params.seed, "master seed");
        cmd->add_option("--out", out_path, "output path (default stdout)");
    };

    auto* gen = app.add_subcommand("gen-degrees", "construct a degree sequence");
    add_model_flags(gen);
    gen->add_option("--case", kase, "quantile|iid");

    auto* perc = app.add_subcommand("percolate", "percolate and emit the edge list");
    add_model_flags(perc);
    perc->add_option("--degrees", degrees_file, "load degree sequence from file");
    perc->add_option("--p", p, "percolation probability (default p_c(lambda))");
    perc->add_option("--method", method, "retain|fountoulakis");
    perc->add_flag("--diagnostics", "print percolated-degree diagnostics");

    auto* expl = app.add_subcommand("explore", "explore components of a percolated graph");
    add_model_flags(expl);
    expl->add_option("--degrees", degrees_file, "load degree sequence from file");
    expl->add_option("--p", p, "percolation probability (default p_c(lambda))");
    expl->add_option("--trace-out", out_path, "trace CSV path")->excludes("--out");
    std::string components_out;
    expl->add_option("--components-out", components_out, "component CSV path");

    auto* lim = app.add_subcommand("limit-sim", "simulate the limiting process");
    add_model_flags(lim);
    double mu_opt = -1.0;
    lim->add_option("--mu", mu_opt, "mu (default: l_n/n of the quantile sequence)");
    lim->add_option("--horizon", horizon, "time horizon T");
    lim->add_option("--paths", paths, "number of paths");
    lim->add_option("--tail", tail, "l2 tail threshold for truncation");
    lim->add_flag("--compensate", "fold the truncated clock mass into the drift");
    std::string excursions_out;
    lim->add_option("--excursions-out", excursions_out, "excursion table CSV path");

    auto* exp_cmd = app.add_subcommand("experiment", "run a Monte Carlo experiment");
    add_model_flags(exp_cmd);
    exp_cmd->add_option("--experiment", experiment,
                        "critical_window|diameter|subcritical|supercritical|"
                        "limit_compare|hub_poisson|oracle_suite");
    exp_cmd->add_option("--reps", reps, "replicates");
    exp_cmd->add_option("--p-exponent", p_exponent, "p_n = n^-gamma exponent");
    exp_cmd->add_option("--format", format, "jsonl|csv");
    exp_cmd->add_option("--threads", threads, "worker threads (0 = hardware)");
    exp_cmd->add_option("--horizon", horizon, "limit-process horizon");
    exp_cmd->add_option("--tail", tail, "limit-process truncation threshold");
    exp_cmd->add_option("--config", config_file, "key=value config file; flags override");

    CLI11_PARSE(app, argc, argv);

    try {
        // config file values apply wherever the flag was not given on the CLI
        if (!config_file.empty()) {
            auto kv = parse_config_file(config_file);
            auto take = [&](const char* key, auto& target, auto conv) {
                auto it = kv.find(key);
                if (it == kv.end()) return;
                if (exp_cmd->count(std::string("--") + key) == 0) target = conv(it->second);
            };
            take("tau", params.tau, [](const std::string& s) { return std::stod(s); });
            take("lambda", params.lambda, [](const std::string& s) { return std::stod(s); });
            take("cf", params.c_F, [](const std::string& s) { return std::stod(s); });
            take("n", n_spec, [](const std::string& s) { return s; });
            take("reps", reps, [](const std::string& s) { return std::stoi(s); });
            take("p-exponent", p_exponent, [](const std::string& s) { return std::stod(s); });
            take("seed", params.seed, [](const std::string& s) { return std::stoull(s); });
            take("out", out_path, [](const std::string& s) { return s; });
            take("format", format, [](const std::string& s) { return s; });
            take("experiment", experiment, [](const std::string& s) { return s; });
            take("threads", threads, [](const std::string& s) { return std::stoi(s); });
            take("horizon", horizon, [](const std::string& s) { return std::stod(s); });
            take("tail", tail, [](const std::string& s) { return std::stod(s); });
        }
        auto ladder = parse_ladder(n_spec);
        if (ladder.empty()) ladder.push_back(1000);
        params.n = ladder.back();

        if (gen->parsed()) {
            const DegreeSequence seq = make_or_load_degrees("", params, kase);
            std::ofstream f;
            auto& os = open_or_stdout(f, out_path);
            save_degrees(os, seq);
            return 0;
        }

        if (perc->parsed()) {
            const DegreeSequence seq = make_or_load_degrees(degrees_file, params, kase);
            if (p < 0.0) p = critical_p(params.lambda, criticality_parameter(seq.d));
            Rng rng = make_stream(params.seed, 0, Phase::percolate);
            auto outcome = method == "fountoulakis"
                               ? percolate_fountoulakis(seq, p, rng)
                               : percolate_retain(seq, p, rng);
            std::ofstream f;
            auto& os = open_or_stdout(f, out_path);
            write_edge_list(os, *outcome.graph);
            if (perc->count("--diagnostics")) {
                auto diag = percolated_degree_diagnostics(outcome, seq, p);
                std::cerr << "p=" << p << " retained=" << outcome.retained_half_edges;
                if (diag.degenerate) {
                    std::cerr << " (degenerate: no retained half-edges)\n";
                } else {
                    std::cerr << " nu_tilde=" << diag.nu_tilde
                              << " nu_ratio=" << diag.nu_ratio
                              << " ell_ratio=" << diag.ell_ratio << "\n";
                }
            }
            return 0;
        }

        if (expl->parsed()) {
            const DegreeSequence seq = make_or_load_degrees(degrees_file, params, kase);
            if (p < 0.0) p = critical_p(params.lambda, criticality_parameter(seq.d));
            Rng perc_rng = make_stream(params.seed, 0, Phase::percolate);
            Rng expl_rng = make_stream(params.seed, 0, Phase::explore);
            auto outcome = percolate_retain(seq, p, perc_rng, false);
            auto trace = explore(outcome, expl_rng);
            std::ofstream f;
            auto& os = open_or_stdout(f, out_path);
            write_trace_csv(os, trace);
            if (!components_out.empty()) {
                auto recs = components_from_trace(trace, outcome, true);
                Adjacency adj = build_adjacency(trace.n, trace.edges);
                BfsWorkspace ws;
                for (std::size_t k = 0; k < trace.tau.size(); ++k) {
                    auto verts = component_vertices(trace, k);
                    auto [dm, exact] = diameter(adj, verts, ws);
                    recs[k].diameter = dm;
                    recs[k].diameter_exact = exact;
                }
                std::ofstream cf(components_out);
                if (!cf) throw std::runtime_error("cannot open " + components_out);
                write_components_csv(cf, recs);
            }
            return 0;
        }

        if (lim->parsed()) {
            double mu = mu_opt;
            if (mu <= 0.0) {
                const DegreeSequence seq = quantile_degrees(params);
                mu = static_cast<double>(seq.total) / static_cast<double>(params.n);
            }
            const ThetaSequence theta =
                theta_limits(params, truncation_for_tail(params, tail));
            std::ofstream f;
            auto& os = open_or_stdout(f, out_path);
            std::ofstream ef;
            if (!excursions_out.empty()) {
                ef.open(excursions_out);
                if (!ef) throw std::runtime_error("cannot open " + excursions_out);
                ef << "path,l,r,length,area,marks,open_flag\n";
                ef.precision(17);
            }
            os << "path,jump_time,jump_size\n";
            os.precision(17);
            const bool compensate = lim->count("--compensate") > 0;
            for (int k = 0; k < paths; ++k) {
                Rng lim_rng = make_stream(params.seed, static_cast<std::uint64_t>(k), Phase::limit);
                Rng mark_rng = make_stream(params.seed, static_cast<std::uint64_t>(k), Phase::marks);
                auto path = simulate_limit_path(theta, params.lambda, mu, horizon,
                                                lim_rng, compensate, tail);
                for (std::size_t i = 0; i < path.jumps(); ++i)
                    os << k << "," << path.time[i] << "," << path.size[i] << "\n";
                if (ef.is_open()) {
                    auto excs = excursions(path);
                    mark_surplus(excs, theta, params.lambda, mu, mark_rng);
                    for (const auto& e : excs)
                        ef << k << "," << e.l << "," << e.r << "," << e.length << ","
                           << e.area << "," << e.marks << "," << (e.open ? 1 : 0) << "\n";
                }
            }
            return 0;
        }

        if (exp_cmd->parsed()) {
            ExperimentConfig cfg;
            cfg.id = experiment_from_string(experiment);
            cfg.model = params;
            cfg.n_ladder = ladder.size() > 1 ? ladder : std::vector<std::int64_t>{};
            if (ladder.size() == 1) cfg.model.n = ladder[0];
            cfg.replicates = reps;
            cfg.p_exponent = p_exponent;
            cfg.horizon = horizon;
            cfg.tail_threshold = tail;
            cfg.threads = threads;
            cfg.out_path = out_path;
            cfg.format = format;
            Report report = run_experiment(cfg);
            write_report(report, out_path, format);
            print_summary(std::cout, report);
            return report.exit_code;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
