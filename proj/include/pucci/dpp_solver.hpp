#pragma once

#include <cstdint>

#include "pucci/exprlang.hpp"
#include "pucci/geometry.hpp"
#include "pucci/simulate.hpp"
#include "pucci/symmat.hpp"
#include "pucci/value_grid.hpp"

namespace pucci {

struct SolveReport {
    long iterations = 0;
    double final_residual = 0.0;  // estimated sup-norm distance to the fixed point
    double dt = 0.0;
    bool converged = false;
};

struct DppOptions {
    double dt = 0.0;       // 0: h^2 / (dim * Lam), the largest step whose reach is h
    double tol = 0.0;      // 0: 1e-5 * scale, as estimated value error
    long max_iter = 100000;
    int threads = 1;
    double scale = 1.0;    // magnitude of the value function; tolerances are relative to it
};

// One synchronous sweep of the dynamic-programming update over all interior
// nodes.  Returns the max nodal change.  Slow path (rebuilds quadrature
// tables); meant for stepwise tests, not for driving a full solve.
double dpp_sweep_once(ValueGrid& grid, const ControlSet& controls, const Domain& D,
                      const ScalarField& f, const ScalarField& g, double dt);

// Iterates the update to a fixed point in place; initial interior values act
// as the warm start.  Throws if the sample reach sqrt(dim*Lam*dt) exceeds 2h.
SolveReport dpp_solve(ValueGrid& grid, const ControlSet& controls, const Domain& D,
                      const ScalarField& f, const ScalarField& g, const DppOptions& opt);

// Full pipeline: solve on the 4h and 2h lattices first and interpolate each
// result onto the next as the warm start.
ValueGrid dpp_solve_cascade(const Domain& D, const ScalarField& f, const ScalarField& g,
                            const ControlSet& controls, double h, const DppOptions& opt,
                            SolveReport* report = nullptr);

// Argmax control per interior node (ties resolved to the lowest index), also
// recorded into grid.policy.
FeedbackTable extract_policy(ValueGrid& grid, const ControlSet& controls, const Domain& D,
                             const ScalarField& f, const ScalarField& g, double dt);

struct CertifyResult {
    double grid_value = 0.0;
    double mc_mean = 0.0;
    double mc_se = 0.0;
    double gap = 0.0;  // mc_mean - grid_value
    double censor_rate = 0.0;
    std::uint64_t n = 0;
};

// Replays the extracted feedback policy through the path simulator and
// compares against the grid value at x.
CertifyResult mc_certify(const ValueGrid& grid, const FeedbackTable& table, const Domain& D,
                         const ScalarField& f, const ScalarField& g, const Point& x,
                         std::uint64_t n_paths, const PathConfig& cfg, int threads = 1);

}  // namespace pucci
