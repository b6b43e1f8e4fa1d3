#pragma once

#include <cstdint>
#include <vector>

#include "pucci/exprlang.hpp"
#include "pucci/geometry.hpp"
#include "pucci/rng.hpp"
#include "pucci/symmat.hpp"
#include "pucci/value_grid.hpp"

namespace pucci {

enum class ExitRefinement { none, segment_projection };

struct PathConfig {
    double dt = 1e-3;
    double max_time = 0.0;  // censoring horizon; must be positive
    uint64_t seed = 0;
    ExitRefinement exit_refinement = ExitRefinement::segment_projection;
};

struct ExitRecord {
    double tau = 0.0;
    Point exit_point;
    double f_integral = 0.0;  // left Riemann sum, partial last step
    bool censored = false;
    uint64_t steps = 0;
};

// Control indexed per lattice node; a query point reads the node at the low
// corner of its containing cell (right-continuous in each coordinate).
// Nodes with no assigned control (outside the interior) fall back to
// controls[0]; a path only consults them in the step where it exits.
struct FeedbackTable {
    LatticeLayout layout;
    std::vector<int32_t> node_control;
    std::vector<Control> controls;
};

class Policy {
public:
    static Policy constant(Control c);
    static Policy feedback(FeedbackTable table);

    const Control& control_at(const Point& x) const;
    const Control& control_at(const double* x, int n) const;
    bool is_constant() const { return feedback_.controls.empty(); }

private:
    Policy() = default;
    Control constant_;
    FeedbackTable feedback_;
};

// sigma * sqrt(dt) * xi with xi standard normal; advances rng by exactly
// dim(sigma) normal draws.
Point gaussian_increment(const Control& sigma, double dt, Rng& rng);

// Walks x with exact Gaussian increments until the first lattice time whose
// state leaves D, refining the exit within the crossing step when asked.
// A start outside D exits immediately (tau = 0).  Paths that reach max_time
// are flagged censored, never silently truncated.
ExitRecord simulate_exit(const Point& start, const Policy& policy, const Domain& D,
                         const ScalarField* f, const PathConfig& cfg, Rng& rng);

// g(exit) + integral of f along the path.  Refuses censored records.
double payoff(const ExitRecord& rec, const ScalarField& g);

struct ValueEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    double censor_rate = 0.0;
    bool censor_warning = false;  // censor_rate above 1%
    uint64_t n = 0;
};

// Mean payoff over n_paths independent paths (seed stream i = path i).
// The reduction is a fixed pairwise tree, so results are bit-identical for
// any thread count.  Censored paths contribute their truncated payoff and
// raise the censor warning once their rate exceeds 1%.
ValueEstimate estimate_value(const Point& x, const Policy& policy, const Domain& D,
                             const ScalarField& f, const ScalarField& g, uint64_t n_paths,
                             const PathConfig& cfg, int threads = 1);

struct ExitTimeStats {
    double mean_tau = 0.0;
    double se_tau = 0.0;
    std::vector<std::pair<double, double>> tail;  // (T, fraction with tau >= T)
    double bound = 0.0;   // diam(D)^2 / lam, a conservative mean bound
    bool bound_ok = false;
    double censor_rate = 0.0;
};

ExitTimeStats exit_time_stats(const Point& x, const Policy& policy, const Domain& D,
                              const PathConfig& cfg, uint64_t n_paths, double lam,
                              int threads = 1);

// P(|tau_x - tau_y| > alpha) with both walks driven by the same increment
// stream; identical starts give exactly zero.
double continuity_probe(const Point& x, const Point& y, const Policy& policy, const Domain& D,
                        const PathConfig& cfg, uint64_t n_pairs, double alpha);

struct RestartComparison {
    double direct_mean = 0.0, direct_se = 0.0;
    double split_mean = 0.0, split_se = 0.0;
};

// Estimates the value directly and as (integral to rho) + restarted value
// from the state at rho (or at the exit, if earlier).  The split run reuses
// the direct increment stream up to rho, so rho >= max_time reproduces the
// direct estimate exactly.
RestartComparison restart_consistency(const Point& x, const Policy& policy, const Domain& D,
                                      const ScalarField& f, const ScalarField& g,
                                      double rho_time, const PathConfig& cfg,
                                      uint64_t n_paths, int threads = 1);

struct RefinementCheck {
    double mean_coarse = 0.0, mean_fine = 0.0;
    double se_coarse = 0.0, se_fine = 0.0;
    double joint_se = 0.0;
};

// Mean exit time at dt and dt/factor with coupled increments (the coarse
// step is the sum of its fine substeps), isolating the discretization gap.
RefinementCheck exit_time_refinement(const Point& x, const Policy& policy, const Domain& D,
                                     const PathConfig& coarse_cfg, int factor,
                                     uint64_t n_paths);

// Deterministic pairwise-tree sum; independent of any threading above it.
double pairwise_sum(const double* v, size_t n);

}  // namespace pucci
