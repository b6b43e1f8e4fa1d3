#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pucci/exprlang.hpp"
#include "pucci/geometry.hpp"
#include "pucci/simulate.hpp"

namespace pucci {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ProblemSpec {
    int dim = 2;
    double lam = 1.0;
    double Lam = 2.0;
    Domain domain = Domain::ball({0.0, 0.0}, 1.0);
    ScalarField f = ScalarField::constant(1.0, 2);
    ScalarField g = ScalarField::constant(0.0, 2);
};

enum class SolverKind { mc_fixed_control, dpp_grid, fd_oracle, cross_check };

const char* solver_kind_name(SolverKind k);

struct RunConfig {
    SolverKind solver = SolverKind::dpp_grid;
    double h = 0.05;
    double dt = 1e-3;  // path time step
    double dt_dpp = 0.0;  // 0: h^2 / (dim * Lam)
    int angles = 8;
    int levels = 2;
    std::uint64_t n_paths = 10000;
    std::uint64_t seed = 12345;
    double tol = 0.0;      // 0: 1e-5 * value scale
    long max_iter = 100000;
    double max_time = 0.0;  // 0: 50 * diam^2 / lam
    ExitRefinement exit_refinement = ExitRefinement::segment_projection;
    std::string mc_control = "lam";  // lam | Lam: isotropic control for the mc solver
    bool cascade = true;
    int fd_K = 8;
    std::vector<Point> eval_points;  // empty: the domain's interior anchor
    std::string output_dir = "out";
    int threads = 1;
};

struct LoadedConfig {
    ProblemSpec problem;
    RunConfig run;
};

// INI-style text: [problem] and [solver] sections, '#' comments, every key
// optional.  Unknown keys and malformed values raise ConfigError naming the
// key.
LoadedConfig parse_config_text(const std::string& text);
LoadedConfig load_config(const std::string& path);

// Value-scale bound sup|g| + (diam^2/lam) * sup|f|, the sups taken over a
// quasi-random sample of the closed domain.  Tolerances are relative to it.
double estimate_bound(const ProblemSpec& p);

double resolved_max_time(const ProblemSpec& p, const RunConfig& c);
PathConfig path_config(const ProblemSpec& p, const RunConfig& c);

// Round-trippable echo of a loaded configuration with defaults spelled out.
std::string print_canonical(const LoadedConfig& c);
std::string default_config_text();

}  // namespace pucci
