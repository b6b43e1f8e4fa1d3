#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pucci/dpp_solver.hpp"
#include "pucci/rng.hpp"

using namespace pucci;

namespace {

const Domain unit_disc = Domain::ball({0.0, 0.0}, 1.0);

ValueGrid fresh_grid(const Domain& D, const ScalarField& g, double h) {
    return build_grid(D, g, h);
}

// Gauss-Seidel solve of the 5-point scheme for (1/2) lap u + f = 0 with the
// grid's own band data as the boundary condition.  Written against the
// lattice directly so it shares nothing with the solver being tested.
void five_point_reference(ValueGrid& G, const ScalarField& f, double tol) {
    const LatticeLayout& L = G.layout;
    const double h2 = L.h * L.h;
    for (int sweep = 0; sweep < 200000; ++sweep) {
        double worst = 0.0;
        for (uint32_t fl : G.interior_nodes) {
            auto m = L.multi(fl);
            double nb = 0.0;
            for (int i = 0; i < 2; ++i)
                for (int s = -1; s <= 1; s += 2) {
                    auto q = m;
                    q[size_t(i)] += s;
                    nb += G.values[L.flat(q)];
                }
            double fx = f.eval(L.position(fl));
            double next = 0.25 * nb + 0.5 * h2 * fx;
            worst = std::max(worst, std::fabs(next - G.values[fl]));
            G.values[fl] = next;
        }
        if (worst < tol) return;
    }
    throw std::runtime_error("five_point_reference did not converge");
}

}  // namespace

TEST_CASE("one sweep preserves nodewise ordering of the inputs") {
    ControlSet cs = enumerate_controls(2, 1.0, 2.0, 4, 2);
    ScalarField f = ScalarField::parse("sin(x1)", 2);
    ScalarField g = ScalarField::parse("x1/2", 2);
    ValueGrid lo = fresh_grid(unit_disc, g, 0.1);
    ValueGrid hi = lo;
    Rng rng(404);
    for (uint32_t fl : lo.interior_nodes) {
        lo.values[fl] = 2.0 * rng.uniform() - 1.0;
        hi.values[fl] = lo.values[fl] + 0.5 * rng.uniform();
    }
    double dt = 0.1 * 0.1 / (2.0 * 2.0);
    (void)dpp_sweep_once(lo, cs, unit_disc, f, g, dt);
    (void)dpp_sweep_once(hi, cs, unit_disc, f, g, dt);
    for (uint32_t fl : lo.interior_nodes) CHECK(lo.values[fl] <= hi.values[fl] + 1e-12);
}

TEST_CASE("adding a constant to f raises the update everywhere") {
    ControlSet cs = enumerate_controls(2, 1.0, 2.0, 4, 2);
    ScalarField g = ScalarField::constant(0.0, 2);
    ScalarField f = ScalarField::parse("x2", 2);
    ValueGrid a = fresh_grid(unit_disc, g, 0.1);
    Rng rng(11);
    for (uint32_t fl : a.interior_nodes) a.values[fl] = rng.uniform();
    ValueGrid b = a;
    double dt = 0.1 * 0.1 / 4.0;
    (void)dpp_sweep_once(a, cs, unit_disc, f, g, dt);
    (void)dpp_sweep_once(b, cs, unit_disc, f.shifted(0.1), g, dt);
    for (uint32_t fl : a.interior_nodes) {
        CHECK(b.values[fl] >= a.values[fl] + 0.1 * dt - 1e-12);
        CHECK(b.values[fl] <= a.values[fl] + 0.1 * dt + 1e-12);
    }
}

TEST_CASE("isotropic coefficients reduce to the classical five-point scheme") {
    // lam == Lam == 1 with the auto step keeps every sample on the lattice,
    // so the fixed point must match an independently written 5-point solve.
    ControlSet cs = enumerate_controls(2, 1.0, 1.0, 8, 2);
    REQUIRE(cs.size() == 1);
    ScalarField f = ScalarField::parse("1+x1", 2);
    ScalarField g = ScalarField::constant(0.0, 2);

    ValueGrid ours = fresh_grid(unit_disc, g, 0.1);
    DppOptions opt;
    opt.tol = 1e-10;
    opt.max_iter = 200000;
    SolveReport rep = dpp_solve(ours, cs, unit_disc, f, g, opt);
    CHECK(rep.converged);

    ValueGrid ref = fresh_grid(unit_disc, g, 0.1);
    five_point_reference(ref, f, 1e-12);

    double gap = 0.0;
    for (uint32_t fl : ours.interior_nodes)
        gap = std::max(gap, std::fabs(ours.values[fl] - ref.values[fl]));
    CHECK(gap < 1e-6);
}

TEST_CASE("a single step is consistent with the generator on quadratics") {
    // Seed the grid with q(x) = x^T S x / 2 + b.x and step once at the
    // center: the update must produce q + dt*(max_A tr(A S)/2 + f) up to
    // O(dt^2 + h^2 dt).
    Rng rng(555);
    ControlSet cs = enumerate_controls(2, 1.0, 2.0, 64, 5);
    const double h = 0.05;
    const double dt = h * h / (2.0 * 2.0);
    ScalarField g = ScalarField::constant(0.0, 2);
    for (int rep = 0; rep < 10; ++rep) {
        SymMatrix S(2);
        S.set(0, 0, 4.0 * rng.uniform() - 2.0);
        S.set(1, 1, 4.0 * rng.uniform() - 2.0);
        S.set(1, 0, 2.0 * rng.uniform() - 1.0);
        double b0 = rng.uniform() - 0.5, b1 = rng.uniform() - 0.5;
        double f0 = rng.uniform() - 0.5;

        ValueGrid G = fresh_grid(unit_disc, g, h);
        const LatticeLayout& L = G.layout;
        for (size_t fl = 0; fl < L.size(); ++fl) {
            Point x = L.position(fl);
            G.values[fl] = 0.5 * (S.at(0, 0) * x[0] * x[0] + 2.0 * S.at(0, 1) * x[0] * x[1] +
                                  S.at(1, 1) * x[1] * x[1]) +
                           b0 * x[0] + b1 * x[1];
        }
        size_t center = L.nearest({0.0, 0.0});
        double before = G.values[center];
        (void)dpp_sweep_once(G, cs, unit_disc, ScalarField::constant(f0, 2), g, dt);
        double expected = before + dt * (0.5 * pucci_plus(S, 1.0, 2.0) + f0);
        double tol = 10.0 * (dt * dt + h * h * dt) * (1.0 + S.frob_norm());
        CHECK(std::fabs(G.values[center] - expected) < tol);
    }
}

TEST_CASE("the solved disc problem matches the closed form at the center") {
    ControlSet cs = enumerate_controls(2, 1.0, 2.0, 8, 2);
    ScalarField f = ScalarField::constant(1.0, 2);
    ScalarField g = ScalarField::constant(0.0, 2);
    DppOptions opt;
    opt.scale = 4.0;
    SolveReport rep;
    ValueGrid G = dpp_solve_cascade(unit_disc, f, g, cs, 0.1, opt, &rep);
    CHECK(rep.converged);
    CHECK(rep.dt == doctest::Approx(0.1 * 0.1 / 4.0));
    // u(0) = 1/(2 lam) (R^2 - 0), lam = 1: coarse lattice, loose band
    CHECK(std::fabs(G.value_at({0.0, 0.0}) - 0.5) < 0.04);

    // sign flip on f switches the binding coefficient to Lam
    ValueGrid Gneg = dpp_solve_cascade(unit_disc, ScalarField::constant(-1.0, 2), g, cs, 0.1, opt);
    CHECK(std::fabs(Gneg.value_at({0.0, 0.0}) + 0.25) < 0.03);
}

TEST_CASE("solving refuses steps whose reach exceeds the band") {
    ControlSet cs = enumerate_controls(2, 1.0, 2.0, 4, 2);
    ScalarField f = ScalarField::constant(1.0, 2);
    ScalarField g = ScalarField::constant(0.0, 2);
    ValueGrid G = fresh_grid(unit_disc, g, 0.1);
    DppOptions opt;
    opt.dt = 10.0 * 0.1 * 0.1;  // reach sqrt(2*2*dt) = 0.63 >> 2h
    CHECK_THROWS_AS((void)dpp_solve(G, cs, unit_disc, f, g, opt), std::invalid_argument);
}

TEST_CASE("extracted policies pick the maximizer, lowest index on ties") {
    ScalarField g = ScalarField::constant(0.0, 2);

    // lam == Lam: every control row collapses to one entry, all ties
    ControlSet one = enumerate_controls(2, 1.0, 1.0, 8, 3);
    ValueGrid G1 = fresh_grid(unit_disc, g, 0.1);
    DppOptions opt;
    (void)dpp_solve(G1, one, unit_disc, ScalarField::constant(1.0, 2), g, opt);
    FeedbackTable T1 = extract_policy(G1, one, unit_disc, ScalarField::constant(1.0, 2), g,
                                      0.1 * 0.1 / 2.0);
    for (uint32_t fl : G1.interior_nodes) CHECK(G1.policy[fl] == 0);
    CHECK(T1.controls.size() == one.size());

    // f < 0 concave case: the fast diffusion wins everywhere
    ControlSet cs = enumerate_controls(2, 1.0, 2.0, 8, 2);
    DppOptions opt2;
    opt2.scale = 4.0;
    ValueGrid G2 = dpp_solve_cascade(unit_disc, ScalarField::constant(-1.0, 2), g, cs, 0.05, opt2);
    FeedbackTable T2 = extract_policy(G2, cs, unit_disc, ScalarField::constant(-1.0, 2), g,
                                      0.05 * 0.05 / 4.0);
    size_t fast = 0;
    for (uint32_t fl : G2.interior_nodes) {
        REQUIRE(G2.policy[fl] >= 0);
        if (G2.policy[fl] == 1) ++fast;  // index 1 is sqrt(Lam) * I
    }
    CHECK(double(fast) / double(G2.interior_count()) > 0.9);
    // the table mirrors grid.policy
    for (uint32_t fl : G2.interior_nodes) CHECK(T2.node_control[fl] == G2.policy[fl]);
}

TEST_CASE("replaying the extracted policy reproduces the grid value") {
    ControlSet cs = enumerate_controls(2, 1.0, 2.0, 8, 2);
    ScalarField f = ScalarField::constant(-1.0, 2);
    ScalarField g = ScalarField::parse("x1/4", 2);
    DppOptions opt;
    opt.scale = 4.0;
    ValueGrid G = dpp_solve_cascade(unit_disc, f, g, cs, 0.05, opt);
    FeedbackTable T = extract_policy(G, cs, unit_disc, f, g, 0.05 * 0.05 / 4.0);
    PathConfig cfg;
    cfg.dt = 1e-3;
    cfg.max_time = 100.0;
    cfg.seed = 4321;
    CertifyResult cert = mc_certify(G, T, unit_disc, f, g, {0.0, 0.0}, 4000, cfg, 1);
    CHECK(cert.n == 4000);
    CHECK(cert.grid_value == doctest::Approx(G.value_at({0.0, 0.0})));
    CHECK(cert.gap == doctest::Approx(cert.mc_mean - cert.grid_value));
    // the replay is a lower bound up to monitor bias and grid error
    CHECK(std::fabs(cert.gap) < 3.0 * cert.mc_se + 0.05);
}

TEST_CASE("warm starts do not change the fixed point") {
    ControlSet cs = enumerate_controls(2, 1.0, 2.0, 8, 2);
    ScalarField f = ScalarField::parse("x1", 2);
    ScalarField g = ScalarField::constant(0.0, 2);
    DppOptions opt;
    opt.tol = 1e-9;
    opt.scale = 4.0;

    ValueGrid cold = fresh_grid(unit_disc, g, 0.1);
    (void)dpp_solve(cold, cs, unit_disc, f, g, opt);

    ValueGrid warm = fresh_grid(unit_disc, g, 0.1);
    for (uint32_t fl : warm.interior_nodes) warm.values[fl] = 5.0;  // absurd start
    (void)dpp_solve(warm, cs, unit_disc, f, g, opt);

    double gap = 0.0;
    for (uint32_t fl : cold.interior_nodes)
        gap = std::max(gap, std::fabs(cold.values[fl] - warm.values[fl]));
    CHECK(gap < 1e-6);
}
