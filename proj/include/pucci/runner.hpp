#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pucci/config.hpp"

namespace pucci {

struct RunOutcome {
    int exit_code = 0;  // 0 ok; 2 when a declared consistency check failed
    std::string note;
};

// Executes the configured solver and writes values.csv, report.txt and, for
// the lattice solvers, grid.csv into cfg.run.output_dir.  values.csv is byte
// deterministic for a fixed config (its runtime_ms column is pinned to 0;
// wall-clock timings go to report.txt).  Throws ConfigError on setup
// problems; numerical consistency failures come back as exit_code 2.
RunOutcome run(const LoadedConfig& cfg, std::ostream& log);

struct StudyRow {
    double knob = 0.0;
    double estimate = 0.0;
    double error = 0.0;
    double order = 0.0;  // NaN on the first row or when undefined
};

struct StudyResult {
    std::string knob;
    std::vector<StudyRow> rows;
    bool have_exact = false;
    double exact = 0.0;
};

// Re-runs the configured solver once per knob value (knob is dt, h or
// n_paths) and tabulates errors against the exact value when the problem has
// one, otherwise against the final (finest) run.
StudyResult convergence_study(const LoadedConfig& cfg, const std::string& knob,
                              const std::vector<double>& values, std::ostream& log);

// Closed-form value for a ball with constant f and constant g; NaN when the
// problem is outside that family.
double radial_reference(const ProblemSpec& p, const Point& x);

}  // namespace pucci
