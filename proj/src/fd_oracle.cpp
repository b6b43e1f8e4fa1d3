#include "pucci/fd_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace pucci {

namespace {

// canonical representative of the lattice line through +-(a,b)
std::pair<int, int> line_rep(int a, int b) {
    if (b < 0 || (b == 0 && a < 0)) {
        a = -a;
        b = -b;
    }
    return {a, b};
}

struct Arm {
    std::int64_t nbr;  // flat index of the full-length node, or -1
    double s;          // arm length as a fraction of h*|e|
    double g;          // boundary value when nbr < 0
};

// Per (pair, interior node): the four arms +e,-e,+p,-p followed by the
// difference coefficients for each of the two lines:
//   d = ap*u(+) + am*u(-) - (ap+am)*u(0)
struct NodeStencil {
    Arm arm[4];
    double ap[2], am[2], a0[2];
};

struct FdTables {
    StencilSet st;
    std::vector<NodeStencil> ns;  // [pair * P + j]
    std::vector<double> f_vals;   // f at interior nodes
    std::size_t P = 0;
};

void fill_coeffs(NodeStencil& n, double L2) {
    for (int line = 0; line < 2; ++line) {
        double sp = n.arm[2 * line].s, sm = n.arm[2 * line + 1].s;
        n.ap[line] = 2.0 / (sp * (sp + sm) * L2);
        n.am[line] = 2.0 / (sm * (sp + sm) * L2);
        n.a0[line] = n.ap[line] + n.am[line];
    }
}

FdTables build_fd_tables(const ValueGrid& grid, const StencilSet& st, const Domain& D,
                         const ScalarField& f, const ScalarField& g) {
    if (grid.layout.dim() != 2)
        throw std::invalid_argument("fd oracle: two-dimensional lattices only");
    const LatticeLayout& L = grid.layout;
    const double h = L.h;
    const std::int64_t nx = L.counts[0], ny = L.counts[1];

    FdTables T;
    T.st = st;
    T.P = grid.interior_nodes.size();
    T.ns.resize(st.pairs.size() * T.P);
    T.f_vals.resize(T.P);

    Point x(2), tip(2);
    for (std::size_t j = 0; j < T.P; ++j) {
        const std::int64_t F = grid.interior_nodes[j];
        const std::int64_t jx = F / ny, jy = F % ny;
        x = L.position(std::size_t(F));
        T.f_vals[j] = f.eval(x);

        for (std::size_t p = 0; p < st.pairs.size(); ++p) {
            const StencilPair& sp = st.pairs[p];
            const int dirs[4][2] = {{sp.ex, sp.ey},
                                    {-sp.ex, -sp.ey},
                                    {sp.px, sp.py},
                                    {-sp.px, -sp.py}};
            NodeStencil& n = T.ns[p * T.P + j];
            for (int a = 0; a < 4; ++a) {
                const std::int64_t tx = jx + dirs[a][0], ty = jy + dirs[a][1];
                if (tx < 0 || tx >= nx || ty < 0 || ty >= ny)
                    throw std::logic_error("fd oracle: stencil reach exceeds lattice margin");
                const std::int64_t tf = tx * ny + ty;
                if (grid.kinds[std::size_t(tf)] == NodeKind::interior) {
                    n.arm[a] = {tf, 1.0, 0.0};
                } else {
                    // use the lattice coordinates the classifier saw, so the
                    // membership predicates agree to the last ulp
                    tip = L.position(std::size_t(tf));
                    double t = D.crossing_parameter(x, tip);
                    if (t <= 0.0) t = 1e-12;  // node hugging the boundary
                    Point hit{x[0] + t * (tip[0] - x[0]), x[1] + t * (tip[1] - x[1])};
                    n.arm[a] = {-1, t, g.eval(hit)};
                }
            }
            const double e2 = double(sp.ex) * sp.ex + double(sp.ey) * sp.ey;
            fill_coeffs(n, h * h * e2);
        }
    }
    return T;
}

inline double arm_value(const Arm& a, const double* u) {
    return a.nbr >= 0 ? u[a.nbr] : a.g;
}

inline double line_diff(const NodeStencil& n, int line, const double* u, double u0) {
    return n.ap[line] * arm_value(n.arm[2 * line], u) +
           n.am[line] * arm_value(n.arm[2 * line + 1], u) - n.a0[line] * u0;
}

// policy encoding: pair * 4 + (line0 takes Lam) * 2 + (line1 takes Lam)
//
// keep_code, when nonnegative, is the incumbent policy: it is replaced
// only by a strictly better candidate, with a small indifference band so
// near-ties (sign flips of a vanishing second difference under iteration
// noise) cannot make the policy chatter forever.
int improve_one(const FdTables& T, std::size_t j, const double* u, double u0, double lam,
                double Lam, double* value_out, int keep_code = -1) {
    double best = -std::numeric_limits<double>::infinity();
    int code = 0;
    for (std::size_t p = 0; p < T.st.pairs.size(); ++p) {
        const NodeStencil& n = T.ns[p * T.P + j];
        double v = 0.0;
        int bits = 0;
        for (int line = 0; line < 2; ++line) {
            double d = line_diff(n, line, u, u0);
            if (d >= 0.0) {
                v += Lam * d;
                bits |= 2 >> line;
            } else {
                v += lam * d;
            }
        }
        if (v > best) {
            best = v;
            code = int(p) * 4 + bits;
        }
    }
    if (value_out) *value_out = best;
    if (keep_code >= 0) {
        const NodeStencil& n = T.ns[std::size_t(keep_code / 4) * T.P + j];
        double v_keep = 0.0;
        for (int line = 0; line < 2; ++line) {
            double c = (keep_code & (2 >> line)) ? Lam : lam;
            v_keep += c * line_diff(n, line, u, u0);
        }
        if (best <= v_keep + 1e-9 * (1.0 + std::fabs(v_keep))) return keep_code;
    }
    return code;
}

}  // namespace

StencilSet build_stencils(int K, int radius) {
    if (K < 1) throw std::invalid_argument("build_stencils: K must be positive");
    if (radius < 1) throw std::invalid_argument("build_stencils: radius must be positive");

    // primitive candidates in the upper half plane
    std::vector<std::pair<int, int>> cands;
    for (int a = -radius; a <= radius; ++a)
        for (int b = 0; b <= radius; ++b) {
            if (a == 0 && b == 0) continue;
            if (b == 0 && a < 0) continue;
            if (std::gcd(std::abs(a), std::abs(b)) != 1) continue;
            cands.push_back({a, b});
        }

    StencilSet st;
    st.angles = K;
    st.radius = radius;
    std::vector<std::pair<std::pair<int, int>, std::pair<int, int>>> seen;
    for (int k = 0; k < K; ++k) {
        const double th = double(k) * M_PI / double(K);
        const double cx = std::cos(th), cy = std::sin(th);
        double best = -2.0;
        std::pair<int, int> e{1, 0};
        for (auto [a, b] : cands) {
            double dot = (a * cx + b * cy) / std::sqrt(double(a) * a + double(b) * b);
            if (dot > best + 1e-12) {
                best = dot;
                e = {a, b};
            }
        }
        auto l1 = line_rep(e.first, e.second);
        auto l2 = line_rep(-e.second, e.first);
        auto key = l1 < l2 ? std::make_pair(l1, l2) : std::make_pair(l2, l1);
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
        seen.push_back(key);
        st.pairs.push_back({e.first, e.second, -e.second, e.first});
    }
    return st;
}

std::vector<double> fd_residuals(const ValueGrid& grid, const StencilSet& st, const Domain& D,
                                 const ScalarField& f, const ScalarField& g, double lam,
                                 double Lam) {
    FdTables T = build_fd_tables(grid, st, D, f, g);
    const double* u = grid.values.data();
    std::vector<double> res(T.P);
    for (std::size_t j = 0; j < T.P; ++j) {
        double best;
        improve_one(T, j, u, u[grid.interior_nodes[j]], lam, Lam, &best);
        res[j] = 0.5 * best + T.f_vals[j];
    }
    return res;
}

FdReport fd_solve(ValueGrid& grid, const Domain& D, const ScalarField& f, const ScalarField& g,
                  double lam, double Lam, const FdOptions& opt) {
    if (!(lam > 0.0) || !(Lam >= lam))
        throw std::invalid_argument("fd_solve: need 0 < lam <= Lam");
    StencilSet st = build_stencils(opt.K, opt.radius);
    FdTables T = build_fd_tables(grid, st, D, f, g);
    const double tol = opt.tol > 0.0 ? opt.tol : 1e-5 * opt.scale;

    double* u = grid.values.data();
    std::vector<int> pol(T.P);
    for (std::size_t j = 0; j < T.P; ++j)
        pol[j] = improve_one(T, j, u, u[grid.interior_nodes[j]], lam, Lam, nullptr);

    FdReport rep;
    bool inner_ok = false;
    std::vector<double> round_start(T.P);
    for (int round = 0; round < opt.max_howard; ++round) {
        ++rep.howard_rounds;
        for (std::size_t j = 0; j < T.P; ++j) round_start[j] = u[grid.interior_nodes[j]];

        // Frozen-policy Gauss-Seidel; geometric-tail stopping as in the
        // dynamic-programming sweep, so tol bounds the value error.
        inner_ok = false;
        double prev = std::numeric_limits<double>::infinity();
        double rhist[3] = {2.0, 2.0, 2.0};
        for (long sweep = 0; sweep < opt.max_inner; ++sweep) {
            double worst = 0.0;
            for (std::size_t j = 0; j < T.P; ++j) {
                const std::size_t F = grid.interior_nodes[j];
                const int code = pol[j];
                const NodeStencil& n = T.ns[std::size_t(code / 4) * T.P + j];
                const double c0 = (code & 2) ? Lam : lam;
                const double c1 = (code & 1) ? Lam : lam;
                double num = c0 * (n.ap[0] * arm_value(n.arm[0], u) +
                                   n.am[0] * arm_value(n.arm[1], u)) +
                             c1 * (n.ap[1] * arm_value(n.arm[2], u) +
                                   n.am[1] * arm_value(n.arm[3], u)) +
                             2.0 * T.f_vals[j];
                double next = num / (c0 * n.a0[0] + c1 * n.a0[1]);
                double ch = std::fabs(next - u[F]);
                if (ch > worst) worst = ch;
                u[F] = next;
            }
            ++rep.gs_sweeps;
            if (!std::isfinite(worst))
                throw std::runtime_error("fd_solve: non-finite update, aborting");
            rhist[sweep % 3] = prev > 0.0 && prev < 1e300 ? worst / prev : 2.0;
            prev = worst;
            double r = std::max({rhist[0], rhist[1], rhist[2]});
            if (worst == 0.0 || (sweep >= 3 && r < 1.0 && worst * r / (1.0 - r) <= tol)) {
                inner_ok = true;
                break;
            }
        }

        double moved = 0.0;
        for (std::size_t j = 0; j < T.P; ++j)
            moved = std::max(moved, std::fabs(u[grid.interior_nodes[j]] - round_start[j]));

        long changed = 0;
        for (std::size_t j = 0; j < T.P; ++j) {
            int next = improve_one(T, j, u, u[grid.interior_nodes[j]], lam, Lam, nullptr, pol[j]);
            if (next != pol[j]) {
                pol[j] = next;
                ++changed;
            }
        }
        // If re-solving after the last policy update moved the value by no
        // more than tol, surviving flips are ties that cannot move it either.
        if (inner_ok && (changed == 0 || (round > 0 && moved <= tol))) {
            rep.converged = true;
            break;
        }
    }

    for (std::size_t j = 0; j < T.P; ++j)
        grid.policy[grid.interior_nodes[j]] = pol[j] / 4;

    double worst_res = 0.0;
    for (std::size_t j = 0; j < T.P; ++j) {
        double best;
        improve_one(T, j, u, u[grid.interior_nodes[j]], lam, Lam, &best);
        worst_res = std::max(worst_res, std::fabs(0.5 * best + T.f_vals[j]));
    }
    rep.final_residual = worst_res;
    return rep;
}

ValueGrid fd_solve_cascade(const Domain& D, const ScalarField& f, const ScalarField& g,
                           double lam, double Lam, double h, const FdOptions& opt,
                           FdReport* report) {
    std::vector<double> ladder;
    const double cap = D.inradius() / 4.0 + 1e-12;
    if (4.0 * h <= cap) ladder.push_back(4.0 * h);
    if (2.0 * h <= cap) ladder.push_back(2.0 * h);
    ladder.push_back(h);

    ValueGrid grid;
    FdReport total;
    bool have_prev = false;
    ValueGrid prev;
    for (double level : ladder) {
        grid = build_grid(D, g, level);
        if (have_prev) {
            for (std::uint32_t F : grid.interior_nodes)
                grid.values[F] = prev.value_at_soft(grid.layout.position(F));
        }
        FdReport r = fd_solve(grid, D, f, g, lam, Lam, opt);
        total.howard_rounds += r.howard_rounds;
        total.gs_sweeps += r.gs_sweeps;
        total.final_residual = r.final_residual;
        total.converged = r.converged;
        prev = grid;
        have_prev = true;
    }
    if (report) *report = total;
    return grid;
}

}  // namespace pucci
