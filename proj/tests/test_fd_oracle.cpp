#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

#include "pucci/dpp_solver.hpp"
#include "pucci/fd_oracle.hpp"

using namespace pucci;

namespace {

const Domain unit_disc = Domain::ball({0.0, 0.0}, 1.0);

int gcd_abs(int a, int b) {
    a = a < 0 ? -a : a;
    b = b < 0 ? -b : b;
    while (b) {
        int t = a % b;
        a = b;
        b = t;
    }
    return a;
}

}  // namespace

TEST_CASE("stencil directions are primitive, orthogonal, and deduplicated") {
    StencilSet st = build_stencils(8, 3);
    CHECK(st.pairs.size() >= 4);
    std::set<std::pair<int, int>> line_keys;
    bool has_axes = false, has_diag = false;
    for (const StencilPair& p : st.pairs) {
        // orthogonal quarter-turn partner
        CHECK(p.ex * p.px + p.ey * p.py == 0);
        CHECK(p.px == -p.ey);
        CHECK(p.py == p.ex);
        // primitive integer vector within the radius
        CHECK(gcd_abs(p.ex, p.ey) == 1);
        CHECK(std::max(std::abs(p.ex), std::abs(p.ey)) <= 3);
        // a line and its negation are the same line: canonicalize and dedup
        int cx = p.ex, cy = p.ey;
        if (cx < 0 || (cx == 0 && cy < 0)) {
            cx = -cx;
            cy = -cy;
        }
        CHECK(line_keys.insert({cx, cy}).second);
        if (std::abs(p.ex) + std::abs(p.ey) == 1) has_axes = true;
        if (std::abs(p.ex) == 1 && std::abs(p.ey) == 1) has_diag = true;
    }
    CHECK(has_axes);
    CHECK(has_diag);

    // more angles never lose directions
    CHECK(build_stencils(16, 3).pairs.size() >= st.pairs.size());
    CHECK_THROWS((void)build_stencils(0, 3));
}

TEST_CASE("residuals vanish on affine data away from the boundary") {
    // Near the boundary the shortened-arm weights scale like 1/(theta h)^2
    // and amplify the 1e-9 crossing tolerance, so exactness is only a fair
    // demand where every arm is a full lattice segment.
    StencilSet st = build_stencils(8, 3);
    ScalarField g = ScalarField::parse("1+x1/2-x2", 2);
    ValueGrid G = build_grid(unit_disc, g, 0.05);
    for (size_t fl = 0; fl < G.layout.size(); ++fl) {
        Point x = G.layout.position(fl);
        G.values[fl] = 1.0 + 0.5 * x[0] - x[1];
    }
    std::vector<double> res =
        fd_residuals(G, st, unit_disc, ScalarField::constant(0.0, 2), g, 1.0, 2.0);
    REQUIRE(res.size() == G.interior_count());
    size_t i = 0, checked = 0;
    for (uint32_t fl : G.interior_nodes) {
        Point x = G.layout.position(fl);
        if (x[0] * x[0] + x[1] * x[1] < 0.5 * 0.5) {
            CHECK(std::fabs(res[i]) < 1e-8);
            ++checked;
        }
        ++i;
    }
    CHECK(checked > 100);
}

TEST_CASE("residuals reproduce the maximal operator on aligned quadratics") {
    // u = x^T diag(s1,s2) x / 2 has exact second differences along the axes,
    // so away from the boundary the residual is max over pairs of the
    // weighted trace; diag matrices are maximized by the axis pair.
    StencilSet st = build_stencils(8, 3);
    ScalarField zero = ScalarField::constant(0.0, 2);
    const double lam = 1.0, Lam = 2.0;
    for (auto [s1, s2] : {std::pair{2.0, -1.0}, {1.0, 1.0}, {-0.5, -2.0}}) {
        ValueGrid G = build_grid(unit_disc, zero, 0.05);
        for (size_t fl = 0; fl < G.layout.size(); ++fl) {
            Point x = G.layout.position(fl);
            G.values[fl] = 0.5 * (s1 * x[0] * x[0] + s2 * x[1] * x[1]);
        }
        double f0 = 0.3;
        std::vector<double> res = fd_residuals(G, st, unit_disc, ScalarField::constant(f0, 2),
                                               zero, lam, Lam);
        double expect = 0.5 * pucci_plus(SymMatrix::diag({s1, s2}), lam, Lam) + f0;
        size_t i = 0;
        for (uint32_t fl : G.interior_nodes) {
            Point x = G.layout.position(fl);
            // long diagonal arms need room: stay well inside
            if (x[0] * x[0] + x[1] * x[1] < 0.5 * 0.5)
                CHECK(res[i] == doctest::Approx(expect).epsilon(1e-6));
            ++i;
        }
    }
}

TEST_CASE("shortened boundary arms keep quadratic exactness") {
    // The radial solution is quadratic, so Shortley-Weller interpolation is
    // exact and the solve lands on the closed form everywhere, including
    // next to the boundary.
    FdOptions opt;
    opt.scale = 4.0;
    ValueGrid G = fd_solve_cascade(unit_disc, ScalarField::constant(1.0, 2),
                                   ScalarField::constant(0.0, 2), 1.0, 2.0, 0.05, opt);
    double worst = 0.0;
    for (uint32_t fl : G.interior_nodes) {
        Point x = G.layout.position(fl);
        double exact = 0.5 * (1.0 - x[0] * x[0] - x[1] * x[1]);
        worst = std::max(worst, std::fabs(G.values[fl] - exact));
    }
    CHECK(worst < 5e-4);
}

TEST_CASE("the concave case lands on the fast-diffusion closed form") {
    FdOptions opt;
    opt.scale = 4.0;
    FdReport rep;
    ValueGrid G = fd_solve_cascade(unit_disc, ScalarField::constant(-1.0, 2),
                                   ScalarField::constant(0.0, 2), 1.0, 2.0, 0.05, opt, &rep);
    CHECK(rep.converged);
    double worst = 0.0;
    for (uint32_t fl : G.interior_nodes) {
        Point x = G.layout.position(fl);
        double exact = -0.25 * (1.0 - x[0] * x[0] - x[1] * x[1]);
        worst = std::max(worst, std::fabs(G.values[fl] - exact));
    }
    CHECK(worst < 5e-4);
}

TEST_CASE("raising f raises the solution nodewise from a warm start") {
    ScalarField f = ScalarField::parse("x1", 2);
    ScalarField g = ScalarField::constant(0.0, 2);
    FdOptions opt;
    opt.scale = 4.0;
    ValueGrid base = fd_solve_cascade(unit_disc, f, g, 1.0, 2.0, 0.1, opt);
    ValueGrid raised = base;  // warm start at the base fixed point
    (void)fd_solve(raised, unit_disc, f.shifted(0.1), g, 1.0, 2.0, opt);
    for (uint32_t fl : base.interior_nodes)
        CHECK(raised.values[fl] >= base.values[fl] - 1e-9);
}

TEST_CASE("grid and oracle agree on a non-radial anisotropic problem") {
    Domain box = Domain::box({-1.0, -0.6}, {0.8, 1.0});
    ScalarField f = ScalarField::parse("sin(x1)*cos(x2)", 2);
    ScalarField g = ScalarField::parse("x1/4", 2);
    const double lam = 1.0, Lam = 2.0, h = 0.05;

    FdOptions fopt;
    fopt.scale = 4.0;
    ValueGrid Gf = fd_solve_cascade(box, f, g, lam, Lam, h, fopt);

    DppOptions dopt;
    dopt.scale = 4.0;
    ControlSet cs = enumerate_controls(2, lam, Lam, 12, 3);
    ValueGrid Gd = dpp_solve_cascade(box, f, g, cs, h, dopt);

    REQUIRE(Gf.layout.counts == Gd.layout.counts);
    double worst = 0.0;
    for (uint32_t fl : Gf.interior_nodes)
        worst = std::max(worst, std::fabs(Gf.values[fl] - Gd.values[fl]));
    // independent discretizations of the same operator at matching h
    CHECK(worst < 0.05);
}

TEST_CASE("solver rejects unsupported dimensions and bad options") {
    Domain seg3 = Domain::box({0.0, 0.0, 0.0}, {1.0, 1.0, 1.0});
    ValueGrid G = build_grid(seg3, ScalarField::constant(0.0, 3), 0.1);
    FdOptions opt;
    CHECK_THROWS((void)fd_solve(G, seg3, ScalarField::constant(1.0, 3),
                                ScalarField::constant(0.0, 3), 1.0, 2.0, opt));
    ValueGrid G2 = build_grid(unit_disc, ScalarField::constant(0.0, 2), 0.1);
    CHECK_THROWS((void)fd_solve(G2, unit_disc, ScalarField::constant(1.0, 2),
                                ScalarField::constant(0.0, 2), 2.0, 1.0, opt));
}
