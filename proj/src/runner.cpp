#include "pucci/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "pucci/dpp_solver.hpp"
#include "pucci/fd_oracle.hpp"

namespace pucci {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

std::string fmt17(double x) {
    char b[48];
    std::snprintf(b, sizeof b, "%.17g", x);
    return b;
}

long elapsed_ms(Clock::time_point t0) {
    return long(std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0)
                    .count());
}

struct ValueRow {
    Point x;
    double estimate = 0.0;
    double se = 0.0;
    std::string solver;
};

// The runtime_ms column is pinned to 0 so the file is byte-identical across
// reruns and thread counts; wall-clock timings live in report.txt.
void write_values_csv(const fs::path& path, int dim, const std::vector<ValueRow>& rows,
                      std::uint64_t seed) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("config: cannot write " + path.string());
    for (int i = 1; i <= dim; ++i) out << "x" << i << ",";
    out << "estimate,stderr,solver,runtime_ms,seed\n";
    for (const ValueRow& r : rows) {
        for (double c : r.x) out << fmt17(c) << ",";
        out << fmt17(r.estimate) << "," << fmt17(r.se) << "," << r.solver << ",0," << seed
            << "\n";
    }
}

void write_grid_csv(const fs::path& path, const ValueGrid& grid) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("config: cannot write " + path.string());
    const int n = grid.layout.dim();
    for (int i = 1; i <= n; ++i) out << "x" << i << ",";
    out << "kind,value,policy\n";
    for (std::size_t f = 0; f < grid.layout.size(); ++f) {
        Point x = grid.layout.position(f);
        for (double c : x) out << fmt17(c) << ",";
        out << node_kind_name(grid.kinds[f]) << "," << fmt17(grid.values[f]) << ","
            << grid.policy[f] << "\n";
    }
}

double max_interior_gap(const ValueGrid& a, const ValueGrid& b) {
    if (a.layout.counts != b.layout.counts || a.interior_count() != b.interior_count())
        throw std::logic_error("cross check: lattices disagree");
    double worst = 0.0;
    for (std::uint32_t f : a.interior_nodes)
        worst = std::max(worst, std::fabs(a.values[f] - b.values[f]));
    return worst;
}

std::string point_label(const Point& x) {
    std::string s = "(";
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i) s += ", ";
        char b[32];
        std::snprintf(b, sizeof b, "%g", x[i]);
        s += b;
    }
    return s + ")";
}

ValueGrid solve_dpp(const ProblemSpec& P, const RunConfig& R, const ControlSet& controls,
                    double ell, SolveReport& rep) {
    DppOptions opt;
    opt.dt = R.dt_dpp;
    opt.tol = R.tol;
    opt.max_iter = R.max_iter;
    opt.threads = R.threads;
    opt.scale = ell;
    if (R.cascade) return dpp_solve_cascade(P.domain, P.f, P.g, controls, R.h, opt, &rep);
    ValueGrid grid = build_grid(P.domain, P.g, R.h);
    rep = dpp_solve(grid, controls, P.domain, P.f, P.g, opt);
    return grid;
}

ValueGrid solve_fd(const ProblemSpec& P, const RunConfig& R, double ell, FdReport& rep) {
    if (P.dim != 2)
        throw ConfigError("config: the fd_oracle solver needs dim = 2 (dim = " +
                          std::to_string(P.dim) + ")");
    FdOptions opt;
    opt.tol = R.tol;
    opt.max_inner = R.max_iter;
    opt.scale = ell;
    opt.K = R.fd_K;
    if (R.cascade) return fd_solve_cascade(P.domain, P.f, P.g, P.lam, P.Lam, R.h, opt, &rep);
    ValueGrid grid = build_grid(P.domain, P.g, R.h);
    rep = fd_solve(grid, P.domain, P.f, P.g, P.lam, P.Lam, opt);
    return grid;
}

const Control& pick_mc_control(const ControlSet& iso, const std::string& which) {
    // enumerate_controls lists sqrt(lam)*I first, sqrt(Lam)*I second
    if (which == "Lam" && iso.size() > 1) return iso[1];
    return iso[0];
}

}  // namespace

double radial_reference(const ProblemSpec& p, const Point& x) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (p.domain.kind() != Domain::Kind::ball) return nan;
    double fc = 0.0, gc = 0.0;
    if (!p.f.is_constant(&fc) || !p.g.is_constant(&gc)) return nan;
    if (fc == 0.0) return gc;
    double r2 = 0.0;
    for (int i = 0; i < p.dim; ++i) {
        double d = x[std::size_t(i)] - p.domain.center()[std::size_t(i)];
        r2 += d * d;
    }
    double R = p.domain.radius();
    double denom = double(p.dim) * (fc > 0.0 ? p.lam : p.Lam);
    return gc + fc * (R * R - r2) / denom;
}

RunOutcome run(const LoadedConfig& cfg, std::ostream& log) {
    const ProblemSpec& P = cfg.problem;
    RunConfig R = cfg.run;
    if (R.eval_points.empty()) R.eval_points.push_back(P.domain.interior_point());

    const double ell = estimate_bound(P);
    const PathConfig pc = path_config(P, R);

    std::ostringstream rep;
    rep << "== configuration ==\n" << print_canonical(cfg);
    rep << "\n== resolved parameters ==\n";
    rep << "value scale bound: " << fmt17(ell) << "\n";
    rep << "max_time: " << fmt17(pc.max_time) << "\n";
    const double grid_tol = R.tol > 0.0 ? R.tol : 1e-5 * ell;
    rep << "tolerance: " << fmt17(grid_tol) << "\n";

    fs::create_directories(R.output_dir);

    RunOutcome outcome;
    std::vector<ValueRow> rows;
    std::vector<std::string> warnings;
    auto flag = [&](const std::string& why) {
        outcome.exit_code = 2;
        if (!outcome.note.empty()) outcome.note += "; ";
        outcome.note += why;
    };

    switch (R.solver) {
        case SolverKind::mc_fixed_control: {
            ControlSet iso = enumerate_controls(P.dim, P.lam, P.Lam, 1, 2);
            const Control& ctl = pick_mc_control(iso, R.mc_control);
            Policy policy = Policy::constant(ctl);
            rep << "\n== mc_fixed_control ==\n";
            rep << "control: sqrt(" << (R.mc_control == "Lam" ? "Lam" : "lam")
                << ") * I, dt = " << fmt17(R.dt) << ", n_paths = " << R.n_paths << "\n";
            for (const Point& x : R.eval_points) {
                Clock::time_point t0 = Clock::now();
                ValueEstimate est =
                    estimate_value(x, policy, P.domain, P.f, P.g, R.n_paths, pc, R.threads);
                rows.push_back({x, est.mean, est.stderr_, "mc_fixed_control"});
                rep << point_label(x) << ": " << fmt17(est.mean) << " +- "
                    << fmt17(est.stderr_) << "  (censored " << fmt17(est.censor_rate * 100)
                    << "%, " << elapsed_ms(t0) << " ms)\n";
                if (est.censor_warning) {
                    warnings.push_back("censoring rate " + fmt17(est.censor_rate * 100) +
                                       "% at " + point_label(x) +
                                       " exceeds 1%; estimate is truncated");
                }
                if (!std::isfinite(est.mean)) flag("non-finite estimate");
            }
            break;
        }

        case SolverKind::dpp_grid: {
            ControlSet controls = enumerate_controls(P.dim, P.lam, P.Lam, R.angles, R.levels);
            SolveReport sr;
            Clock::time_point t0 = Clock::now();
            ValueGrid grid = solve_dpp(P, R, controls, ell, sr);
            long ms = elapsed_ms(t0);
            extract_policy(grid, controls, P.domain, P.f, P.g, sr.dt);
            rep << "\n== dpp_grid ==\n";
            rep << "lattice: h = " << fmt17(R.h) << ", interior nodes = "
                << grid.interior_count() << "\n";
            rep << "controls: " << controls.size() << " (angles = " << R.angles
                << ", levels = " << R.levels << ")\n";
            rep << "iterations: " << sr.iterations << ", dt = " << fmt17(sr.dt)
                << ", residual = " << fmt17(sr.final_residual)
                << (sr.converged ? " (converged)" : " (NOT converged)") << "\n";
            rep << "solve time: " << ms << " ms\n";
            if (!sr.converged) flag("dpp iteration hit max_iter before the tolerance");
            for (const Point& x : R.eval_points) {
                double v = grid.value_at(x);
                rows.push_back({x, v, grid_tol, "dpp_grid"});
                rep << point_label(x) << ": " << fmt17(v) << "\n";
                if (!std::isfinite(v)) flag("non-finite lattice value");
            }
            write_grid_csv(fs::path(R.output_dir) / "grid.csv", grid);
            break;
        }

        case SolverKind::fd_oracle: {
            FdReport fr;
            Clock::time_point t0 = Clock::now();
            ValueGrid grid = solve_fd(P, R, ell, fr);
            long ms = elapsed_ms(t0);
            rep << "\n== fd_oracle ==\n";
            rep << "lattice: h = " << fmt17(R.h) << ", interior nodes = "
                << grid.interior_count() << "\n";
            rep << "stencil pairs: " << build_stencils(R.fd_K, 3).pairs.size()
                << " (K = " << R.fd_K << ")\n";
            rep << "howard rounds: " << fr.howard_rounds << ", gs sweeps: " << fr.gs_sweeps
                << ", residual = " << fmt17(fr.final_residual)
                << (fr.converged ? " (converged)" : " (NOT converged)") << "\n";
            rep << "solve time: " << ms << " ms\n";
            if (!fr.converged) flag("fd policy iteration did not settle");
            for (const Point& x : R.eval_points) {
                double v = grid.value_at(x);
                rows.push_back({x, v, grid_tol, "fd_oracle"});
                rep << point_label(x) << ": " << fmt17(v) << "\n";
                if (!std::isfinite(v)) flag("non-finite lattice value");
            }
            write_grid_csv(fs::path(R.output_dir) / "grid.csv", grid);
            break;
        }

        case SolverKind::cross_check: {
            ControlSet controls = enumerate_controls(P.dim, P.lam, P.Lam, R.angles, R.levels);
            SolveReport sr;
            Clock::time_point t0 = Clock::now();
            ValueGrid dpp = solve_dpp(P, R, controls, ell, sr);
            long dpp_ms = elapsed_ms(t0);
            FeedbackTable table = extract_policy(dpp, controls, P.domain, P.f, P.g, sr.dt);
            t0 = Clock::now();
            FdReport fr;
            ValueGrid fd = solve_fd(P, R, ell, fr);
            long fd_ms = elapsed_ms(t0);

            rep << "\n== cross check ==\n";
            rep << "lattice: h = " << fmt17(R.h) << ", interior nodes = "
                << dpp.interior_count() << "\n";
            rep << "dpp: " << sr.iterations << " iterations, residual "
                << fmt17(sr.final_residual) << (sr.converged ? "" : " (NOT converged)")
                << ", " << dpp_ms << " ms\n";
            rep << "fd:  " << fr.howard_rounds << " howard rounds, " << fr.gs_sweeps
                << " sweeps, residual " << fmt17(fr.final_residual)
                << (fr.converged ? "" : " (NOT converged)") << ", " << fd_ms << " ms\n";
            if (!sr.converged) flag("dpp iteration hit max_iter before the tolerance");
            if (!fr.converged) flag("fd policy iteration did not settle");

            double gap = max_interior_gap(dpp, fd);
            double allowance = 0.03 * ell;
            rep << "max interior gap: " << fmt17(gap) << " (allowance " << fmt17(allowance)
                << ")" << (gap <= allowance ? " OK" : " FAILED") << "\n";
            if (gap > allowance) flag("solver disagreement exceeded 0.03 * scale");

            for (const Point& x : R.eval_points) {
                double vd = dpp.value_at(x), vf = fd.value_at(x);
                rows.push_back({x, vd, grid_tol, "dpp_grid"});
                rows.push_back({x, vf, grid_tol, "fd_oracle"});
                rep << point_label(x) << ": dpp " << fmt17(vd) << ", fd " << fmt17(vf)
                    << "\n";
            }

            t0 = Clock::now();
            CertifyResult cert = mc_certify(dpp, table, P.domain, P.f, P.g, R.eval_points[0],
                                            R.n_paths, pc, R.threads);
            rep << "policy replay at " << point_label(R.eval_points[0]) << ": "
                << fmt17(cert.mc_mean) << " +- " << fmt17(cert.mc_se) << " (grid "
                << fmt17(cert.grid_value) << ", gap " << fmt17(cert.gap) << ", "
                << elapsed_ms(t0) << " ms)";
            double window = 3.0 * cert.mc_se + 0.03 * ell;
            rep << (std::fabs(cert.gap) <= window ? " OK\n" : " FAILED\n");
            if (std::fabs(cert.gap) > window)
                flag("policy replay disagrees with the lattice value");
            if (cert.censor_rate > 0.01)
                warnings.push_back("policy replay censoring rate " +
                                   fmt17(cert.censor_rate * 100) + "% exceeds 1%");
            rows.push_back({R.eval_points[0], cert.mc_mean, cert.mc_se, "mc_replay"});

            write_grid_csv(fs::path(R.output_dir) / "grid.csv", dpp);
            write_grid_csv(fs::path(R.output_dir) / "grid_fd.csv", fd);
            break;
        }
    }

    if (!warnings.empty()) {
        rep << "\n== warnings ==\n";
        for (const std::string& w : warnings) rep << w << "\n";
    }
    if (outcome.exit_code == 0) outcome.note = "ok";

    write_values_csv(fs::path(R.output_dir) / "values.csv", P.dim, rows, R.seed);
    {
        std::ofstream out(fs::path(R.output_dir) / "report.txt", std::ios::binary);
        if (!out) throw ConfigError("config: cannot write report.txt");
        out << rep.str();
    }
    log << rep.str();
    return outcome;
}

StudyResult convergence_study(const LoadedConfig& cfg, const std::string& knob,
                              const std::vector<double>& values, std::ostream& log) {
    if (knob != "dt" && knob != "h" && knob != "n_paths")
        throw ConfigError("config: study knob must be dt, h or n_paths (got \"" + knob +
                          "\")");
    if (values.empty()) throw ConfigError("config: study needs at least one knob value");

    const ProblemSpec& P = cfg.problem;
    Point x = cfg.run.eval_points.empty() ? P.domain.interior_point()
                                          : cfg.run.eval_points[0];
    const double ell = estimate_bound(P);

    StudyResult res;
    res.knob = knob;
    double exact = radial_reference(P, x);
    res.have_exact = std::isfinite(exact);
    res.exact = exact;

    std::vector<double> estimates;
    for (double v : values) {
        LoadedConfig c2 = cfg;
        if (knob == "dt") {
            if (!(v > 0.0)) throw ConfigError("config: study dt values must be positive");
            c2.run.dt = v;
        } else if (knob == "h") {
            if (!(v > 0.0)) throw ConfigError("config: study h values must be positive");
            c2.run.h = v;
        } else {
            if (v < 2.0) throw ConfigError("config: study n_paths values must be >= 2");
            c2.run.n_paths = std::uint64_t(v);
        }

        double est = 0.0;
        switch (c2.run.solver) {
            case SolverKind::mc_fixed_control: {
                ControlSet iso = enumerate_controls(P.dim, P.lam, P.Lam, 1, 2);
                Policy policy = Policy::constant(pick_mc_control(iso, c2.run.mc_control));
                est = estimate_value(x, policy, P.domain, P.f, P.g, c2.run.n_paths,
                                     path_config(P, c2.run), c2.run.threads)
                          .mean;
                break;
            }
            case SolverKind::fd_oracle: {
                FdReport fr;
                est = solve_fd(P, c2.run, ell, fr).value_at(x);
                break;
            }
            default: {
                ControlSet controls =
                    enumerate_controls(P.dim, P.lam, P.Lam, c2.run.angles, c2.run.levels);
                SolveReport sr;
                est = solve_dpp(P, c2.run, controls, ell, sr).value_at(x);
                break;
            }
        }
        estimates.push_back(est);
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < values.size(); ++i) {
        StudyRow row;
        row.knob = values[i];
        row.estimate = estimates[i];
        if (res.have_exact)
            row.error = std::fabs(estimates[i] - exact);
        else if (i + 1 < values.size())
            row.error = std::fabs(estimates[i] - estimates.back());
        else
            row.error = nan;
        row.order = nan;
        res.rows.push_back(row);
    }
    for (std::size_t i = 1; i < res.rows.size(); ++i) {
        double e0 = res.rows[i - 1].error, e1 = res.rows[i].error;
        double k0 = res.rows[i - 1].knob, k1 = res.rows[i].knob;
        if (e0 > 0.0 && e1 > 0.0 && k0 != k1 && std::isfinite(e0) && std::isfinite(e1))
            res.rows[i].order = std::log(e0 / e1) / std::log(k0 / k1);
    }

    log << "== convergence study: " << knob << " ==\n";
    if (res.have_exact)
        log << "reference: exact value " << fmt17(exact) << " at " << point_label(x) << "\n";
    else
        log << "reference: finest run at " << point_label(x) << "\n";
    for (const StudyRow& r : res.rows) {
        log << knob << " = " << fmt17(r.knob) << ": estimate " << fmt17(r.estimate);
        if (std::isfinite(r.error)) log << ", error " << fmt17(r.error);
        if (std::isfinite(r.order)) log << ", order " << fmt17(r.order);
        log << "\n";
    }
    return res;
}

}  // namespace pucci
