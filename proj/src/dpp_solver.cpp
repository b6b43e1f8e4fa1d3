#include "pucci/dpp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

namespace pucci {

namespace {

// Everything about one control that the sweep kernel needs.  Sample offsets
// x +- sqrt(dim*dt)*sigma_i have node-independent fractional parts, so each
// sample collapses to a fixed stencil: corner weights plus flat-index deltas.
// Samples that land outside the domain are folded per node into a boundary
// constant (mask bit set, g-contribution accumulated in gsum).
struct ControlTable {
    std::vector<double> w;
    std::vector<std::int64_t> d;
    std::vector<int> sbeg;          // sample s covers w[sbeg[s]..sbeg[s+1])
    std::vector<std::uint32_t> mask;
    std::vector<double> gsum;
};

std::vector<std::int64_t> row_strides(const LatticeLayout& L) {
    const int n = L.dim();
    std::vector<std::int64_t> s(n, 1);
    for (int d = n - 2; d >= 0; --d) s[d] = s[d + 1] * L.counts[d + 1];
    return s;
}

// Reading a sample through multilinear weights scatters it onto cell corners,
// which adds frac*(1-frac)*h^2 of variance per axis on top of the offset
// outer products.  Left uncorrected that inflates the realized diffusion by
// an O(1) factor whenever offsets are not lattice-exact (dt and h shrink
// together, so the ratio never decays).  Shrink the matrix generating the
// offsets until offset covariance plus interpolation spread equals dt*A:
//     find C with  C + diag(V(C)) / dt = A,
// where V_d(C) is the per-axis interpolation variance of the 2n samples
// drawn from sqrt_factor(C).  Lattice-exact offsets have V = 0 and are left
// untouched.  Damped fixed point; eigenvalues floored to keep C admissible
// (a bound floor means exact matching is impossible on that control and the
// leftover bias only lowers its score under the max).
Matrix corrected_sigma(const SymMatrix& A, double h, double dt) {
    const int n = A.dim();
    const double step = std::sqrt(double(n) * dt);
    double scale = 0.0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(A.at(i, i)));

    SymMatrix cur = A;
    Matrix sig = sqrt_factor(cur).sigma;
    for (int round = 0; round < 48; ++round) {
        std::vector<double> v(std::size_t(n), 0.0);
        for (int i = 0; i < n; ++i)
            for (int sgn = -1; sgn <= 1; sgn += 2)
                for (int d = 0; d < n; ++d) {
                    double off = sgn * step * sig.at(d, i) / h;
                    double th = off - std::floor(off);
                    v[std::size_t(d)] += th * (1.0 - th) * h * h;
                }
        SymMatrix next = A;
        for (int d = 0; d < n; ++d)
            next.set(d, d, A.at(d, d) - v[std::size_t(d)] / (2.0 * n * dt));

        EigenDecomposition ed = eigen(next);
        double floor_at = 1e-10 * (1.0 + scale);
        bool clamped = false;
        for (double& e : ed.eigenvalues)
            if (e < floor_at) { e = floor_at; clamped = true; }
        if (clamped) {
            for (int a = 0; a < n; ++a)
                for (int b = 0; b <= a; ++b) {
                    double s = 0.0;
                    for (int k = 0; k < n; ++k)
                        s += ed.eigenvectors.at(a, k) * ed.eigenvalues[std::size_t(k)] *
                             ed.eigenvectors.at(b, k);
                    next.set(a, b, s);
                }
        }

        double moved = next.max_abs_diff(cur);
        // Halve the step after the opening rounds so kinks in V (offsets
        // crossing lattice lines) cannot sustain a two-cycle.
        if (round >= 4)
            for (int a = 0; a < n; ++a)
                for (int b = 0; b <= a; ++b)
                    next.set(a, b, 0.5 * (next.at(a, b) + cur.at(a, b)));
        cur = next;
        sig = sqrt_factor(cur).sigma;
        if (moved < 1e-12 * (1.0 + scale)) break;
    }
    return sig;
}

std::vector<ControlTable> build_tables(const ValueGrid& grid, const ControlSet& controls,
                                       const Domain& D, const ScalarField& g, double dt) {
    const LatticeLayout& L = grid.layout;
    const int n = L.dim();
    const int ns = 2 * n;
    const std::size_t P = grid.interior_nodes.size();
    const auto stride = row_strides(L);
    const double step = std::sqrt(double(n) * dt);

    std::vector<ControlTable> tables(controls.size());
    std::vector<Point> offsets(std::size_t(ns), Point(std::size_t(n), 0.0));

    for (std::size_t m = 0; m < controls.size(); ++m) {
        ControlTable& T = tables[m];
        const Matrix sig = corrected_sigma(controls[m].diffusion, L.h, dt);
        for (int i = 0; i < n; ++i)
            for (int d = 0; d < n; ++d) {
                offsets[std::size_t(2 * i)][d] = step * sig.at(d, i);
                offsets[std::size_t(2 * i + 1)][d] = -step * sig.at(d, i);
            }

        T.sbeg.assign(std::size_t(ns) + 1, 0);
        for (int s = 0; s < ns; ++s) {
            const Point& delta = offsets[std::size_t(s)];
            std::vector<std::int64_t> base(n);
            std::vector<double> frac(n);
            for (int d = 0; d < n; ++d) {
                double off = delta[d] / L.h;
                double fl = std::floor(off);
                base[d] = std::int64_t(fl);
                frac[d] = off - fl;
            }
            for (std::uint32_t corner = 0; corner < (1u << n); ++corner) {
                double weight = 1.0;
                std::int64_t dflat = 0;
                for (int d = 0; d < n; ++d) {
                    bool hi = (corner >> d) & 1u;
                    weight *= hi ? frac[d] : 1.0 - frac[d];
                    dflat += (base[d] + (hi ? 1 : 0)) * stride[d];
                }
                if (weight < 1e-14) continue;
                T.w.push_back(weight);
                T.d.push_back(dflat);
            }
            T.sbeg[std::size_t(s) + 1] = int(T.w.size());
        }

        T.mask.assign(P, 0);
        T.gsum.assign(P, 0.0);
        Point q(std::size_t(n), 0.0);
        for (std::size_t j = 0; j < P; ++j) {
            Point pos = L.position(grid.interior_nodes[j]);
            for (int s = 0; s < ns; ++s) {
                const Point& delta = offsets[std::size_t(s)];
                for (int d = 0; d < n; ++d) q[d] = pos[d] + delta[d];
                if (D.contains(q)) continue;
                T.mask[j] |= 1u << s;
                Point hit = D.project_to_boundary(pos, q);
                T.gsum[j] += g.eval(hit);
            }
        }
    }
    return tables;
}

struct SweepContext {
    const ValueGrid* grid;
    const std::vector<ControlTable>* tables;
    std::vector<double> f_vals;  // f at interior nodes, in interior_nodes order
    int ns;
    double dt;
};

SweepContext make_context(const ValueGrid& grid, const std::vector<ControlTable>& tables,
                          const ScalarField& f, double dt) {
    SweepContext cx;
    cx.grid = &grid;
    cx.tables = &tables;
    cx.ns = 2 * grid.layout.dim();
    cx.dt = dt;
    cx.f_vals.resize(grid.interior_nodes.size());
    for (std::size_t j = 0; j < grid.interior_nodes.size(); ++j)
        cx.f_vals[j] = f.eval(grid.layout.position(grid.interior_nodes[j]));
    return cx;
}

// Updates interior ordinals [lo, hi); returns max |change| over that range.
// argmax_out, when set, records the winning control (lowest index on ties).
double sweep_range(const SweepContext& cx, const double* in, double* out, std::size_t lo,
                   std::size_t hi, std::int32_t* argmax_out) {
    const ValueGrid& grid = *cx.grid;
    const auto& tables = *cx.tables;
    const double inv2n = 1.0 / double(cx.ns);
    double worst = 0.0;
    for (std::size_t j = lo; j < hi; ++j) {
        const std::int64_t F = std::int64_t(grid.interior_nodes[j]);
        const double base = cx.f_vals[j] * cx.dt;
        double best = -std::numeric_limits<double>::infinity();
        std::int32_t best_m = 0;
        for (std::size_t m = 0; m < tables.size(); ++m) {
            const ControlTable& T = tables[m];
            double acc = T.gsum[j];
            const std::uint32_t mask = T.mask[j];
            for (int s = 0; s < cx.ns; ++s) {
                if ((mask >> s) & 1u) continue;
                double sv = 0.0;
                for (int k = T.sbeg[std::size_t(s)]; k < T.sbeg[std::size_t(s) + 1]; ++k)
                    sv += T.w[std::size_t(k)] * in[F + T.d[std::size_t(k)]];
                acc += sv;
            }
            double cand = base + acc * inv2n;
            if (cand > best) {
                best = cand;
                best_m = std::int32_t(m);
            }
        }
        out[F] = best;
        double change = std::fabs(best - in[F]);
        if (change > worst) worst = change;
        if (argmax_out) argmax_out[F] = best_m;
    }
    return worst;
}

double sweep_all(const SweepContext& cx, const double* in, double* out, int threads,
                 std::int32_t* argmax_out) {
    const std::size_t P = cx.grid->interior_nodes.size();
    if (threads <= 1 || P < 512) return sweep_range(cx, in, out, 0, P, argmax_out);
    const std::size_t chunk = (P + std::size_t(threads) - 1) / std::size_t(threads);
    std::vector<double> worst(std::size_t(threads), 0.0);
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
        std::size_t lo = std::size_t(t) * chunk, hi = std::min(P, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, t, lo, hi] {
            worst[std::size_t(t)] = sweep_range(cx, in, out, lo, hi, argmax_out);
        });
    }
    for (auto& th : pool) th.join();
    return *std::max_element(worst.begin(), worst.end());
}

double resolve_dt(const ValueGrid& grid, const ControlSet& controls, double dt) {
    const int n = grid.layout.dim();
    if (dt <= 0.0) dt = grid.layout.h * grid.layout.h / (double(n) * controls.Lam);
    double reach = std::sqrt(double(n) * controls.Lam * dt);
    if (reach > 2.0 * grid.layout.h + 1e-12)
        throw std::invalid_argument("dpp: sample reach sqrt(dim*Lam*dt) exceeds 2h");
    return dt;
}

}  // namespace

double dpp_sweep_once(ValueGrid& grid, const ControlSet& controls, const Domain& D,
                      const ScalarField& f, const ScalarField& g, double dt) {
    dt = resolve_dt(grid, controls, dt);
    auto tables = build_tables(grid, controls, D, g, dt);
    SweepContext cx = make_context(grid, tables, f, dt);
    std::vector<double> next = grid.values;
    double change = sweep_all(cx, grid.values.data(), next.data(), 1, nullptr);
    grid.values = std::move(next);
    return change;
}

SolveReport dpp_solve(ValueGrid& grid, const ControlSet& controls, const Domain& D,
                      const ScalarField& f, const ScalarField& g, const DppOptions& opt) {
    if (controls.size() == 0) throw std::invalid_argument("dpp_solve: empty control set");
    if (controls.dim != grid.layout.dim())
        throw std::invalid_argument("dpp_solve: control/grid dimension mismatch");

    SolveReport rep;
    rep.dt = resolve_dt(grid, controls, opt.dt);
    const double tol = opt.tol > 0.0 ? opt.tol : 1e-5 * opt.scale;

    auto tables = build_tables(grid, controls, D, g, rep.dt);
    SweepContext cx = make_context(grid, tables, f, rep.dt);

    std::vector<double> a = grid.values;
    std::vector<double> b = a;  // band and exterior entries stay in sync forever
    double* cur = a.data();
    double* nxt = b.data();

    // The sweep is a sup-norm contraction, so per-sweep changes decay
    // geometrically and the remaining distance to the fixed point is about
    // delta * r / (1 - r).  Stopping on that estimate instead of the raw
    // change keeps tol meaning "value error", not "last increment".
    double prev = std::numeric_limits<double>::infinity();
    double rhist[3] = {2.0, 2.0, 2.0};
    while (rep.iterations < opt.max_iter) {
        double delta = sweep_all(cx, cur, nxt, opt.threads, nullptr);
        std::swap(cur, nxt);
        ++rep.iterations;
        if (!std::isfinite(delta))
            throw std::runtime_error("dpp_solve: non-finite update, aborting");
        rhist[rep.iterations % 3] = prev > 0.0 && prev < 1e300 ? delta / prev : 2.0;
        prev = delta;
        double r = std::max({rhist[0], rhist[1], rhist[2]});
        double est = delta == 0.0 ? 0.0
                     : (rep.iterations < 4 || r >= 1.0)
                         ? std::numeric_limits<double>::infinity()
                         : delta * r / (1.0 - r);
        rep.final_residual = est;
        if (est <= tol) {
            rep.converged = true;
            break;
        }
    }
    if (!rep.converged && !std::isfinite(rep.final_residual)) rep.final_residual = prev;
    grid.values.assign(cur, cur + grid.layout.size());
    return rep;
}

ValueGrid dpp_solve_cascade(const Domain& D, const ScalarField& f, const ScalarField& g,
                            const ControlSet& controls, double h, const DppOptions& opt,
                            SolveReport* report) {
    std::vector<double> ladder;
    const double cap = D.inradius() / 4.0 + 1e-12;
    if (4.0 * h <= cap) ladder.push_back(4.0 * h);
    if (2.0 * h <= cap) ladder.push_back(2.0 * h);
    ladder.push_back(h);

    ValueGrid grid;
    SolveReport total;
    bool have_prev = false;
    ValueGrid prev;
    for (double level : ladder) {
        grid = build_grid(D, g, level);
        if (have_prev) {
            for (std::uint32_t F : grid.interior_nodes)
                grid.values[F] = prev.value_at_soft(grid.layout.position(F));
        }
        DppOptions lo = opt;
        lo.dt = (level == h) ? opt.dt : 0.0;  // coarse levels always take the auto step
        SolveReport r = dpp_solve(grid, controls, D, f, g, lo);
        total.iterations += r.iterations;
        total.final_residual = r.final_residual;
        total.dt = r.dt;
        total.converged = r.converged;
        prev = grid;
        have_prev = true;
    }
    if (report) *report = total;
    return grid;
}

FeedbackTable extract_policy(ValueGrid& grid, const ControlSet& controls, const Domain& D,
                             const ScalarField& f, const ScalarField& g, double dt) {
    dt = resolve_dt(grid, controls, dt);
    auto tables = build_tables(grid, controls, D, g, dt);
    SweepContext cx = make_context(grid, tables, f, dt);

    std::vector<double> next = grid.values;
    std::fill(grid.policy.begin(), grid.policy.end(), -1);
    sweep_all(cx, grid.values.data(), next.data(), 1, grid.policy.data());
    // keep the fixed-point values; the sweep here only scores the argmax

    FeedbackTable table;
    table.layout = grid.layout;
    table.node_control = grid.policy;
    table.controls = controls.controls;
    return table;
}

CertifyResult mc_certify(const ValueGrid& grid, const FeedbackTable& table, const Domain& D,
                         const ScalarField& f, const ScalarField& g, const Point& x,
                         std::uint64_t n_paths, const PathConfig& cfg, int threads) {
    CertifyResult res;
    res.grid_value = grid.value_at(x);
    Policy policy = Policy::feedback(table);
    ValueEstimate est = estimate_value(x, policy, D, f, g, n_paths, cfg, threads);
    res.mc_mean = est.mean;
    res.mc_se = est.stderr_;
    res.gap = est.mean - res.grid_value;
    res.censor_rate = est.censor_rate;
    res.n = est.n;
    return res;
}

}  // namespace pucci
