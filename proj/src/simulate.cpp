#include "pucci/simulate.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <thread>

namespace pucci {

namespace {

constexpr int kMaxDim = 16;

void check_cfg(const PathConfig& cfg) {
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("PathConfig: dt must be positive");
    if (!(cfg.max_time >= cfg.dt))
        throw std::invalid_argument("PathConfig: max_time must be at least dt");
}

// Runs fn(i) for i in [0, n); contiguous chunks per thread.  Correctness of
// callers never depends on the split since every path derives its own seed.
template <class Fn>
void parallel_paths(uint64_t n, int threads, const Fn& fn) {
    if (threads <= 1 || n < 2) {
        for (uint64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    uint64_t chunk = (n + threads - 1) / threads;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
        uint64_t lo = uint64_t(t) * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] {
            for (uint64_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

struct MeanSe {
    double mean, se;
};

// mean and stderr with a fixed reduction order (buffer is clobbered)
MeanSe reduce_mean_se(std::vector<double>& v) {
    const size_t n = v.size();
    double mean = pairwise_sum(v.data(), n) / double(n);
    if (n < 2) return {mean, 0.0};
    for (double& x : v) {
        double d = x - mean;
        x = d * d;
    }
    double var = pairwise_sum(v.data(), n) / double(n - 1);
    return {mean, std::sqrt(var / double(n))};
}

}  // namespace

double pairwise_sum(const double* v, size_t n) {
    if (n <= 16) {
        double s = 0.0;
        for (size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

Policy Policy::constant(Control c) {
    Policy p;
    p.constant_ = std::move(c);
    return p;
}

Policy Policy::feedback(FeedbackTable table) {
    if (table.controls.empty())
        throw std::invalid_argument("Policy::feedback: control list is empty");
    if (table.node_control.size() != table.layout.size())
        throw std::invalid_argument("Policy::feedback: table size mismatch");
    Policy p;
    p.feedback_ = std::move(table);
    return p;
}

const Control& Policy::control_at(const double* x, int n) const {
    if (feedback_.controls.empty()) return constant_;
    // the control is constant on each lattice cell; index by the cell's low
    // corner so the map is right-continuous along every axis
    const LatticeLayout& L = feedback_.layout;
    size_t f = 0;
    for (int i = 0; i < n; ++i) {
        int k = int(std::floor((x[i] - L.origin[i]) / L.h));
        // clamp to a cell base so out-of-cover queries read the edge cell
        k = std::max(0, std::min(k, L.counts[i] - 2));
        f = f * size_t(L.counts[i]) + size_t(k);
    }
    int32_t idx = feedback_.node_control[f];
    return feedback_.controls[idx < 0 ? 0 : size_t(idx)];
}

const Control& Policy::control_at(const Point& x) const {
    return control_at(x.data(), int(x.size()));
}

Point gaussian_increment(const Control& sigma, double dt, Rng& rng) {
    const int n = sigma.sigma.rows();
    double xi[kMaxDim];
    for (int i = 0; i < n; ++i) xi[i] = rng.normal();
    Point out(n, 0.0);
    double sq = std::sqrt(dt);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += sigma.sigma.at(i, j) * xi[j];
        out[i] = sq * acc;
    }
    return out;
}

ExitRecord simulate_exit(const Point& start, const Policy& policy, const Domain& D,
                         const ScalarField* f, const PathConfig& cfg, Rng& rng) {
    check_cfg(cfg);
    const int n = D.dim();
    if (n > kMaxDim) throw std::invalid_argument("simulate_exit: dim too large");

    ExitRecord rec;
    rec.exit_point = start;
    if (!D.contains(start)) return rec;  // tau = 0, nothing to integrate

    const uint64_t cap = uint64_t(std::floor(cfg.max_time / cfg.dt + 1e-9));
    const double sq = std::sqrt(cfg.dt);
    double fc = 0.0;
    bool f_const = true;
    if (f) f_const = f->is_constant(&fc);

    double x[kMaxDim], y[kMaxDim], xi[kMaxDim];
    for (int i = 0; i < n; ++i) x[i] = start[i];
    Point xbuf(size_t(n), 0.0), ybuf(size_t(n), 0.0);
    const Control* fixed = policy.is_constant() ? &policy.control_at(x, n) : nullptr;

    double f_int = 0.0;
    for (uint64_t k = 0; k < cap; ++k) {
        const Control& c = fixed ? *fixed : policy.control_at(x, n);
        double fx = f ? (f_const ? fc : f->eval(x, n)) : 0.0;
        for (int i = 0; i < n; ++i) xi[i] = rng.normal();
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += c.sigma.at(i, j) * xi[j];
            y[i] = x[i] + sq * acc;
        }
        for (int i = 0; i < n; ++i) ybuf[i] = y[i];
        if (!D.contains(ybuf)) {
            rec.steps = k + 1;
            if (cfg.exit_refinement == ExitRefinement::none) {
                rec.tau = double(k + 1) * cfg.dt;
                rec.exit_point = ybuf;
                rec.f_integral = f_int + fx * cfg.dt;
            } else {
                for (int i = 0; i < n; ++i) xbuf[i] = x[i];
                double t = D.crossing_parameter(xbuf, ybuf);
                for (int i = 0; i < n; ++i) rec.exit_point[i] = x[i] + t * (y[i] - x[i]);
                rec.tau = (double(k) + t) * cfg.dt;
                rec.f_integral = f_int + t * cfg.dt * fx;
            }
            return rec;
        }
        f_int += fx * cfg.dt;
        for (int i = 0; i < n; ++i) x[i] = y[i];
    }
    rec.tau = double(cap) * cfg.dt;
    for (int i = 0; i < n; ++i) rec.exit_point[i] = x[i];
    rec.f_integral = f_int;
    rec.censored = true;
    rec.steps = cap;
    return rec;
}

double payoff(const ExitRecord& rec, const ScalarField& g) {
    if (rec.censored)
        throw std::invalid_argument(
            "payoff: record is censored; widen max_time before scoring it");
    return g.eval(rec.exit_point) + rec.f_integral;
}

ValueEstimate estimate_value(const Point& x, const Policy& policy, const Domain& D,
                             const ScalarField& f, const ScalarField& g, uint64_t n_paths,
                             const PathConfig& cfg, int threads) {
    if (n_paths < 2) throw std::invalid_argument("estimate_value: need n_paths >= 2");
    std::vector<double> payoffs(n_paths);
    std::vector<uint8_t> censored(n_paths);

    parallel_paths(n_paths, threads, [&](uint64_t i) {
        Rng rng(Rng::derive(cfg.seed, i));
        ExitRecord rec = simulate_exit(x, policy, D, &f, cfg, rng);
        // censored paths keep their truncated payoff; the rate is reported
        payoffs[i] = g.eval(rec.exit_point) + rec.f_integral;
        censored[i] = rec.censored ? 1 : 0;
    });

    uint64_t n_censored = 0;
    for (uint8_t c : censored) n_censored += c;

    MeanSe ms = reduce_mean_se(payoffs);
    ValueEstimate est;
    est.mean = ms.mean;
    est.stderr_ = ms.se;
    est.censor_rate = double(n_censored) / double(n_paths);
    est.censor_warning = est.censor_rate > 0.01;
    est.n = n_paths;
    return est;
}

ExitTimeStats exit_time_stats(const Point& x, const Policy& policy, const Domain& D,
                              const PathConfig& cfg, uint64_t n_paths, double lam,
                              int threads) {
    if (n_paths < 1000) throw std::invalid_argument("exit_time_stats: need n_paths >= 1000");
    std::vector<double> taus(n_paths);
    std::vector<uint8_t> censored(n_paths);

    parallel_paths(n_paths, threads, [&](uint64_t i) {
        Rng rng(Rng::derive(cfg.seed, i));
        ExitRecord rec = simulate_exit(x, policy, D, nullptr, cfg, rng);
        taus[i] = rec.tau;
        censored[i] = rec.censored ? 1 : 0;
    });

    uint64_t n_censored = 0;
    for (uint8_t c : censored) n_censored += c;

    ExitTimeStats st;
    st.censor_rate = double(n_censored) / double(n_paths);
    std::vector<double> scratch = taus;
    MeanSe ms = reduce_mean_se(scratch);
    st.mean_tau = ms.mean;
    st.se_tau = ms.se;

    // survival on a geometric grid anchored at the estimated mean
    for (int j = 0; j < 8; ++j) {
        double T = st.mean_tau * 0.3125 * double(1 << j);
        uint64_t count = 0;
        for (double t : taus)
            if (t >= T) ++count;
        st.tail.push_back({T, double(count) / double(n_paths)});
    }

    double d = D.diameter();
    st.bound = d * d / lam;
    st.bound_ok = st.mean_tau <= st.bound;
    return st;
}

double continuity_probe(const Point& x, const Point& y, const Policy& policy, const Domain& D,
                        const PathConfig& cfg, uint64_t n_pairs, double alpha) {
    check_cfg(cfg);
    const int n = D.dim();
    if (n > kMaxDim) throw std::invalid_argument("continuity_probe: dim too large");
    const uint64_t cap = uint64_t(std::floor(cfg.max_time / cfg.dt + 1e-9));
    const double sq = std::sqrt(cfg.dt);

    uint64_t violations = 0;
    Point buf(size_t(n), 0.0), pbuf(size_t(n), 0.0);
    for (uint64_t i = 0; i < n_pairs; ++i) {
        Rng rng(Rng::derive(cfg.seed, i));
        double a[kMaxDim], b[kMaxDim], xi[kMaxDim];
        for (int k = 0; k < n; ++k) {
            a[k] = x[k];
            b[k] = y[k];
        }
        double tau_a = D.contains(x) ? -1.0 : 0.0;
        double tau_b = D.contains(y) ? -1.0 : 0.0;

        auto step_one = [&](double* s, double tau_now, uint64_t k) -> double {
            const Control& c = policy.control_at(s, n);
            double next[kMaxDim];
            for (int ii = 0; ii < n; ++ii) {
                double acc = 0.0;
                for (int jj = 0; jj < n; ++jj) acc += c.sigma.at(ii, jj) * xi[jj];
                next[ii] = s[ii] + sq * acc;
            }
            for (int ii = 0; ii < n; ++ii) buf[ii] = next[ii];
            if (!D.contains(buf)) {
                double t = 1.0;
                if (cfg.exit_refinement == ExitRefinement::segment_projection) {
                    for (int ii = 0; ii < n; ++ii) pbuf[ii] = s[ii];
                    t = D.crossing_parameter(pbuf, buf);
                }
                for (int ii = 0; ii < n; ++ii) s[ii] = next[ii];
                return (double(k) + t) * cfg.dt;
            }
            for (int ii = 0; ii < n; ++ii) s[ii] = next[ii];
            return tau_now;
        };

        for (uint64_t k = 0; k < cap && (tau_a < 0.0 || tau_b < 0.0); ++k) {
            for (int ii = 0; ii < n; ++ii) xi[ii] = rng.normal();
            if (tau_a < 0.0) tau_a = step_one(a, -1.0, k);
            if (tau_b < 0.0) tau_b = step_one(b, -1.0, k);
        }
        if (tau_a < 0.0) tau_a = double(cap) * cfg.dt;
        if (tau_b < 0.0) tau_b = double(cap) * cfg.dt;
        if (std::fabs(tau_a - tau_b) > alpha) ++violations;
    }
    return double(violations) / double(n_pairs);
}

RestartComparison restart_consistency(const Point& x, const Policy& policy, const Domain& D,
                                      const ScalarField& f, const ScalarField& g,
                                      double rho_time, const PathConfig& cfg,
                                      uint64_t n_paths, int threads) {
    if (rho_time < 0.0) throw std::invalid_argument("restart_consistency: rho_time < 0");
    std::vector<double> direct(n_paths), split(n_paths);

    PathConfig stage = cfg;
    stage.max_time = std::min(rho_time, cfg.max_time);
    const bool stage_runs = stage.max_time >= cfg.dt;
    const uint64_t phase2_master = Rng::derive(cfg.seed, 0x726573746172u);

    parallel_paths(n_paths, threads, [&](uint64_t i) {
        Rng rng1(Rng::derive(cfg.seed, i));
        ExitRecord full = simulate_exit(x, policy, D, &f, cfg, rng1);
        direct[i] = g.eval(full.exit_point) + full.f_integral;

        Rng rng1b(Rng::derive(cfg.seed, i));
        ExitRecord head;
        if (stage_runs) {
            head = simulate_exit(x, policy, D, &f, stage, rng1b);
        } else {
            head.exit_point = x;  // rho below one step: restart immediately
            head.censored = true;
        }
        if (head.censored) {
            // still alive at rho: restart from the stopped state
            Rng rng2(Rng::derive(phase2_master, i));
            ExitRecord tail = simulate_exit(head.exit_point, policy, D, &f, cfg, rng2);
            split[i] = head.f_integral + (g.eval(tail.exit_point) + tail.f_integral);
        } else {
            // exited before rho: the stopped value is just the boundary data
            split[i] = head.f_integral + g.eval(head.exit_point);
        }
    });

    MeanSe d = reduce_mean_se(direct);
    MeanSe s = reduce_mean_se(split);
    return {d.mean, d.se, s.mean, s.se};
}

RefinementCheck exit_time_refinement(const Point& x, const Policy& policy, const Domain& D,
                                     const PathConfig& coarse_cfg, int factor,
                                     uint64_t n_paths) {
    check_cfg(coarse_cfg);
    if (factor < 2) throw std::invalid_argument("exit_time_refinement: factor must be >= 2");
    const int n = D.dim();
    const double dt_c = coarse_cfg.dt;
    const double dt_f = dt_c / double(factor);
    const double sq_f = std::sqrt(dt_f);
    const uint64_t cap_c = uint64_t(std::floor(coarse_cfg.max_time / dt_c + 1e-9));
    const uint64_t cap_f = cap_c * uint64_t(factor);

    std::vector<double> tau_c(n_paths), tau_f(n_paths);
    Point buf(size_t(n), 0.0), pbuf(size_t(n), 0.0);

    for (uint64_t i = 0; i < n_paths; ++i) {
        Rng rng(Rng::derive(coarse_cfg.seed, i));
        double xf[kMaxDim], xc[kMaxDim], xi[kMaxDim], acc[kMaxDim];
        for (int k = 0; k < n; ++k) {
            xf[k] = x[k];
            xc[k] = x[k];
            acc[k] = 0.0;
        }
        bool inside0 = D.contains(x);
        double tf = inside0 ? -1.0 : 0.0, tc = inside0 ? -1.0 : 0.0;
        int sub = 0;
        uint64_t kc = 0;

        auto advance = [&](double* s, const double* z, double scale, double t_base,
                           double dt_step) -> double {
            const Control& c = policy.control_at(s, n);
            double next[kMaxDim];
            for (int ii = 0; ii < n; ++ii) {
                double a2 = 0.0;
                for (int jj = 0; jj < n; ++jj) a2 += c.sigma.at(ii, jj) * z[jj];
                next[ii] = s[ii] + scale * a2;
            }
            for (int ii = 0; ii < n; ++ii) buf[ii] = next[ii];
            double tau = -1.0;
            if (!D.contains(buf)) {
                double t = 1.0;
                if (coarse_cfg.exit_refinement == ExitRefinement::segment_projection) {
                    for (int ii = 0; ii < n; ++ii) pbuf[ii] = s[ii];
                    t = D.crossing_parameter(pbuf, buf);
                }
                tau = t_base + t * dt_step;
            }
            for (int ii = 0; ii < n; ++ii) s[ii] = next[ii];
            return tau;
        };

        for (uint64_t k = 0; k < cap_f && (tf < 0.0 || tc < 0.0); ++k) {
            for (int ii = 0; ii < n; ++ii) xi[ii] = rng.normal();
            if (tf < 0.0) tf = advance(xf, xi, sq_f, double(k) * dt_f, dt_f);
            for (int ii = 0; ii < n; ++ii) acc[ii] += xi[ii];
            if (++sub == factor) {
                if (tc < 0.0) tc = advance(xc, acc, sq_f, double(kc) * dt_c, dt_c);
                for (int ii = 0; ii < n; ++ii) acc[ii] = 0.0;
                sub = 0;
                ++kc;
            }
        }
        tau_f[i] = tf < 0.0 ? double(cap_f) * dt_f : tf;
        tau_c[i] = tc < 0.0 ? double(cap_c) * dt_c : tc;
    }

    MeanSe mc = reduce_mean_se(tau_c);
    MeanSe mf = reduce_mean_se(tau_f);
    RefinementCheck rc;
    rc.mean_coarse = mc.mean;
    rc.mean_fine = mf.mean;
    rc.se_coarse = mc.se;
    rc.se_fine = mf.se;
    rc.joint_se = std::sqrt(mc.se * mc.se + mf.se * mf.se);
    return rc;
}

}  // namespace pucci
