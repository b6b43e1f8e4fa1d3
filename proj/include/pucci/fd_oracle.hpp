#pragma once

#include <vector>

#include "pucci/exprlang.hpp"
#include "pucci/geometry.hpp"
#include "pucci/value_grid.hpp"

namespace pucci {

// An orthogonal pair of integer lattice directions: (px,py) is (ex,ey)
// rotated a quarter turn, so the pair spans a candidate eigenbasis.
struct StencilPair {
    int ex, ey;
    int px, py;
};

struct StencilSet {
    std::vector<StencilPair> pairs;
    int angles = 0;
    int radius = 0;
};

// Primitive integer directions with entries bounded by radius, fitted to the
// angles k*pi/K; pairs whose line sets coincide are merged.
StencilSet build_stencils(int K, int radius = 3);

struct FdOptions {
    double tol = 0.0;  // 0: 1e-5 * scale, as estimated value error of the inner solves
    long max_inner = 30000;
    int max_howard = 60;
    double scale = 1.0;
    int K = 8;
    int radius = 3;
};

struct FdReport {
    long howard_rounds = 0;
    long gs_sweeps = 0;
    double final_residual = 0.0;  // sup of |discrete operator + f|: the optimality gap of the
                                  // frozen policy.  Short boundary arms amplify value noise,
                                  // so this can sit well above tol with the value settled.
    bool converged = false;
};

// Residual of the discrete maximal operator at every interior node, in
// interior_nodes order.  Arms that would leave the domain are shortened to
// the boundary crossing and read g there.
std::vector<double> fd_residuals(const ValueGrid& grid, const StencilSet& st, const Domain& D,
                                 const ScalarField& f, const ScalarField& g, double lam,
                                 double Lam);

// Policy iteration over (pair, per-line coefficient) choices with
// frozen-policy Gauss-Seidel inner solves.  Two-dimensional domains only.
// Initial interior values act as the warm start; the chosen pair index per
// node lands in grid.policy.
FdReport fd_solve(ValueGrid& grid, const Domain& D, const ScalarField& f, const ScalarField& g,
                  double lam, double Lam, const FdOptions& opt);

// Solves on the 4h and 2h lattices first, interpolating each onto the next.
ValueGrid fd_solve_cascade(const Domain& D, const ScalarField& f, const ScalarField& g,
                           double lam, double Lam, double h, const FdOptions& opt,
                           FdReport* report = nullptr);

}  // namespace pucci
