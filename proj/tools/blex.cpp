// Command line front end over the pipelines. Every subcommand writes
// <out-dir>/<name>.csv and prints a one-line verdict; exit 0 on pass, 2 when
// a statistical gate fails, 1 on any error.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <blex/blex.hpp>

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0xB1EF;
    unsigned workers = 1;
    std::uint64_t replications = 0; // 0: keep the config value
    std::vector<double> t_grid;
};

blex::Config resolve_config(const GlobalArgs& args) {
    blex::Config cfg;
    if (!args.config_path.empty()) cfg = blex::load_config(args.config_path);
    if (args.replications > 0) cfg.experiment.replications = args.replications;
    if (!args.t_grid.empty()) cfg.experiment.t_grid = args.t_grid;
    cfg.validate();
    return cfg;
}

int emit(const blex::PipelineResult& result, const std::string& out_dir) {
    const std::string path = out_dir + "/" + result.name + ".csv";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << result.csv;
    out.close();
    std::cout << result.summary << "\n";
    std::cout << "report: " << path << "\n";
    std::cout << (result.pass ? "PASS" : "FAIL") << "\n";
    return result.pass ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"branching Levy extremes laboratory"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalArgs args;
    app.add_option("--config", args.config_path, "JSON config file (defaults used when omitted)");
    app.add_option("--seed", args.seed, "master seed (64-bit unsigned)");
    app.add_option("--workers", args.workers, "worker threads for replication fan-out");
    app.add_option("--out-dir", args.out_dir, "directory for CSV reports");
    app.add_option("--replications", args.replications, "override experiment.replications");
    app.add_option("--t-grid", args.t_grid, "override experiment.t_grid")->expected(-1);

    auto* simulate = app.add_subcommand("simulate", "population and rightmost positions per t");
    auto* limit = app.add_subcommand("limit", "limit-process sampler self-consistency");
    std::uint64_t draws = 0;
    double truncation = 0.0;
    limit->add_option("--draws", draws, "override experiment.limit_draws");
    limit->add_option("--truncation", truncation, "override experiment.truncation");
    auto* verify_max = app.add_subcommand("verify-max", "order statistics vs the limit laws");
    auto* verify_laplace =
        app.add_subcommand("verify-laplace", "Laplace functional vs the limit value");
    auto* verify_cluster = app.add_subcommand("verify-cluster", "cluster-size law and vartheta");
    verify_cluster->add_option("--draws", draws, "override experiment.limit_draws");
    auto* front = app.add_subcommand("front", "front positions, speed, and band check");
    double level = 0.0;
    front->add_option("--level", level, "override experiment.front_level");
    auto* diagnostics =
        app.add_subcommand("diagnostics", "many-to-one and one-large-jump diagnostics");
    double cut_s = 0.0, jump_theta = 0.0;
    diagnostics->add_option("--cut-s", cut_s, "override experiment.cut_s");
    diagnostics->add_option("--jump-theta", jump_theta, "override experiment.jump_theta");

    CLI11_PARSE(app, argc, argv);

    try {
        blex::Config cfg = resolve_config(args);
        const blex::RunOptions opt{args.seed, args.workers};
        if (limit->parsed()) {
            if (draws > 0) cfg.experiment.limit_draws = draws;
            if (truncation > 0.0) cfg.experiment.truncation = truncation;
            cfg.validate();
            return emit(blex::run_limit(cfg, opt), args.out_dir);
        }
        if (verify_cluster->parsed()) {
            if (draws > 0) cfg.experiment.limit_draws = draws;
            cfg.validate();
            return emit(blex::run_verify_cluster(cfg, opt), args.out_dir);
        }
        if (front->parsed()) {
            if (level > 0.0) cfg.experiment.front_level = level;
            cfg.validate();
            return emit(blex::run_front(cfg, opt), args.out_dir);
        }
        if (diagnostics->parsed()) {
            if (cut_s > 0.0) cfg.experiment.cut_s = cut_s;
            if (jump_theta > 0.0) cfg.experiment.jump_theta = jump_theta;
            cfg.validate();
            return emit(blex::run_diagnostics(cfg, opt), args.out_dir);
        }
        if (verify_max->parsed()) return emit(blex::run_verify_max(cfg, opt), args.out_dir);
        if (verify_laplace->parsed()) return emit(blex::run_verify_laplace(cfg, opt), args.out_dir);
        if (simulate->parsed()) return emit(blex::run_simulate(cfg, opt), args.out_dir);
        std::cerr << "error: no subcommand\n";
        return 1;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
}
