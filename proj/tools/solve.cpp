#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pucci/config.hpp"
#include "pucci/runner.hpp"

using namespace pucci;

int main(int argc, char** argv) {
    CLI::App app{"exit-time stochastic control solver (maximal-operator Dirichlet problems)"};
    std::string config_path;
    int threads = 0;
    bool print_defaults = false;
    std::string study;
    std::string output_dir;

    app.add_option("config", config_path, "configuration file ([problem]/[solver] sections)");
    app.add_flag("--print-defaults", print_defaults,
                 "print the default configuration and exit");
    app.add_option("--threads", threads,
                   "worker threads (overrides the config and PUCCI_KAC_THREADS)");
    app.add_option("--study", study,
                   "convergence study, e.g. --study dt=4e-3,1e-3,2.5e-4 (knob: dt|h|n_paths)");
    app.add_option("--output", output_dir, "override the output directory");

    CLI11_PARSE(app, argc, argv);

    if (print_defaults) {
        std::cout << default_config_text();
        return 0;
    }
    if (config_path.empty()) {
        std::cerr << "solve: a config file is required (or --print-defaults)\n";
        return 1;
    }

    try {
        LoadedConfig cfg = load_config(config_path);
        if (threads == 0) {
            if (const char* env = std::getenv("PUCCI_KAC_THREADS"); env && *env)
                threads = std::atoi(env);
        }
        if (threads > 0) cfg.run.threads = threads;
        if (!output_dir.empty()) cfg.run.output_dir = output_dir;

        RunOutcome out = run(cfg, std::cout);

        if (!study.empty()) {
            std::size_t eq = study.find('=');
            if (eq == std::string::npos || eq == 0 || eq + 1 == study.size()) {
                std::cerr << "solve: --study expects knob=v1,v2,...\n";
                return 1;
            }
            std::vector<double> vals;
            std::stringstream ss(study.substr(eq + 1));
            std::string tok;
            while (std::getline(ss, tok, ',')) vals.push_back(std::strtod(tok.c_str(), nullptr));
            std::ostringstream table;
            StudyResult sr = convergence_study(cfg, study.substr(0, eq), vals, table);
            (void)sr;
            std::cout << "\n" << table.str();
            std::ofstream append(std::filesystem::path(cfg.run.output_dir) / "report.txt",
                                 std::ios::binary | std::ios::app);
            append << "\n" << table.str();
        }

        if (out.exit_code != 0)
            std::cerr << "solve: consistency failure: " << out.note << "\n";
        return out.exit_code;
    } catch (const ConfigError& e) {
        std::cerr << "solve: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "solve: error: " << e.what() << "\n";
        return 1;
    }
}
