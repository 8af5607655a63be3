#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <sqhhg/cli.hpp>

int main(int argc, char** argv)
{
    CLI::App app{"Squeezed-light HHG ensemble simulator"};
    app.set_version_flag("--version", SQHHG_VERSION);
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string out_dir = ".";
    unsigned workers = 1;
    std::uint64_t seed = 0;
    std::vector<std::string> overrides;
    bool print_config = false;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--workers", workers, "maximum worker threads")->check(CLI::PositiveNumber);
    auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides ensemble.master_seed)");
    app.add_option("--set", overrides, "dotted key=value override (repeatable)")->take_all();
    app.add_flag("--print-config", print_config, "print the effective config and exit");

    app.add_subcommand("calibrate", "calibrate the soft-core atom and run the convergence ladder");
    app.add_subcommand("run", "run one ensemble");
    app.add_subcommand("sweep", "run ensembles over r or theta against an SQL reference");
    app.add_subcommand("analytics", "tabulate yield and cutoff predictions versus r");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : sqhhg::cli::config_error;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        sqhhg::ConfigValues values;
        if (!config_path.empty()) values.merge_file(config_path);
        for (const auto& o : overrides) values.apply_override(o);
        if (*seed_opt) values.set("ensemble.master_seed", seed);
        const auto cfg = sqhhg::build_config(values);
        if (print_config) {
            std::cout << values.to_json().dump(2) << '\n';
            return 0;
        }
        sqhhg::cli::CliOptions opt;
        opt.out = out_dir;
        opt.workers = workers;
        if (command == "calibrate") sqhhg::cli::cmd_calibrate(cfg, values, opt);
        else if (command == "run") sqhhg::cli::cmd_run(cfg, values, opt);
        else if (command == "sweep") sqhhg::cli::cmd_sweep(cfg, values, opt);
        else sqhhg::cli::cmd_analytics(cfg, values, opt);
    } catch (const sqhhg::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return sqhhg::cli::exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return sqhhg::cli::numerical_failure;
    }
    return 0;
}
