#include "pucci/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace pucci {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(const std::string& msg) { throw ConfigError("config: " + msg); }

// raw key/value pairs of one section, remembering which keys appeared
struct Section {
    std::map<std::string, std::string> kv;

    bool has(const std::string& k) const { return kv.count(k) != 0; }
    const std::string& raw(const std::string& k) const { return kv.at(k); }
};

double to_double(const Section& s, const std::string& key, double dflt) {
    if (!s.has(key)) return dflt;
    const std::string& v = s.raw(key);
    char* end = nullptr;
    double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        fail(key + " must be a number (got \"" + v + "\")");
    return x;
}

long long to_int(const Section& s, const std::string& key, long long dflt) {
    if (!s.has(key)) return dflt;
    const std::string& v = s.raw(key);
    char* end = nullptr;
    long long x = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        fail(key + " must be an integer (got \"" + v + "\")");
    return x;
}

std::uint64_t to_u64(const Section& s, const std::string& key, std::uint64_t dflt) {
    if (!s.has(key)) return dflt;
    const std::string& v = s.raw(key);
    char* end = nullptr;
    unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0' || v[0] == '-')
        fail(key + " must be a nonnegative integer (got \"" + v + "\")");
    return x;
}

bool to_bool(const Section& s, const std::string& key, bool dflt) {
    if (!s.has(key)) return dflt;
    std::string v = s.raw(key);
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return char(std::tolower(c)); });
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    fail(key + " must be on/off (got \"" + s.raw(key) + "\")");
}

Point to_point(const std::string& key, const std::string& v, int dim) {
    Point p;
    std::istringstream in(v);
    double x;
    while (in >> x) p.push_back(x);
    if (!in.eof()) fail(key + " must be a list of numbers (got \"" + v + "\")");
    if (int(p.size()) != dim)
        fail(key + " has " + std::to_string(p.size()) + " entries but dim = " +
             std::to_string(dim));
    return p;
}

ScalarField to_field(const Section& s, const std::string& key, const std::string& dflt,
                     int dim) {
    const std::string& src = s.has(key) ? s.raw(key) : dflt;
    try {
        return ScalarField::parse(src, dim);
    } catch (const ParseError& e) {
        fail(key + ": " + e.what());
    }
}

// shortest decimal that round-trips through strtod
std::string num_str(double x) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) return buf;
    }
    return buf;
}

std::string point_str(const Point& p) {
    std::string out;
    for (size_t i = 0; i < p.size(); ++i) {
        if (i) out += ' ';
        out += num_str(p[i]);
    }
    return out;
}

const char* refinement_name(ExitRefinement r) {
    return r == ExitRefinement::none ? "none" : "segment_projection";
}

double halton(std::uint64_t i, int base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= base;
        r += f * double(i % std::uint64_t(base));
        i /= std::uint64_t(base);
    }
    return r;
}

constexpr int kPrimes[16] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

Domain build_domain(const Section& p, int dim) {
    std::string kind = p.has("domain") ? p.raw("domain") : "ball";
    auto reject = [&](const char* key) {
        if (p.has(key)) fail(std::string(key) + " does not apply to a " + kind + " domain");
    };
    if (kind == "ball") {
        reject("lo"), reject("hi"), reject("inner_radius"), reject("outer_radius");
        Point c = p.has("center") ? to_point("center", p.raw("center"), dim)
                                  : Point(size_t(dim), 0.0);
        double r = to_double(p, "radius", 1.0);
        if (!(r > 0.0)) fail("radius must be positive (got " + num_str(r) + ")");
        return Domain::ball(c, r);
    }
    if (kind == "box") {
        reject("center"), reject("radius"), reject("inner_radius"), reject("outer_radius");
        Point lo = p.has("lo") ? to_point("lo", p.raw("lo"), dim) : Point(size_t(dim), 0.0);
        Point hi = p.has("hi") ? to_point("hi", p.raw("hi"), dim) : Point(size_t(dim), 1.0);
        for (int i = 0; i < dim; ++i)
            if (!(lo[i] < hi[i]))
                fail("box needs lo < hi on every axis (axis " + std::to_string(i + 1) +
                     ": lo = " + num_str(lo[i]) + ", hi = " + num_str(hi[i]) + ")");
        return Domain::box(lo, hi);
    }
    if (kind == "annulus") {
        reject("lo"), reject("hi"), reject("radius");
        Point c = p.has("center") ? to_point("center", p.raw("center"), dim)
                                  : Point(size_t(dim), 0.0);
        double r0 = to_double(p, "inner_radius", 0.5);
        double r1 = to_double(p, "outer_radius", 1.0);
        if (!(r0 > 0.0) || !(r1 > r0))
            fail("annulus needs 0 < inner_radius < outer_radius (inner_radius = " +
                 num_str(r0) + ", outer_radius = " + num_str(r1) + ")");
        return Domain::annulus(c, r0, r1);
    }
    fail("domain must be ball, box or annulus (got \"" + kind + "\")");
}

const std::vector<std::string>& problem_keys() {
    static const std::vector<std::string> keys = {
        "dim", "lam", "Lam", "domain", "center", "radius",
        "inner_radius", "outer_radius", "lo", "hi", "f", "g"};
    return keys;
}

const std::vector<std::string>& solver_keys() {
    static const std::vector<std::string> keys = {
        "solver", "h", "dt", "dt_dpp", "angles", "levels", "n_paths", "seed", "tol",
        "max_iter", "max_time", "exit_refinement", "mc_control", "cascade", "fd_K",
        "eval_points", "output", "threads"};
    return keys;
}

}  // namespace

const char* solver_kind_name(SolverKind k) {
    switch (k) {
        case SolverKind::mc_fixed_control: return "mc_fixed_control";
        case SolverKind::dpp_grid: return "dpp_grid";
        case SolverKind::fd_oracle: return "fd_oracle";
        case SolverKind::cross_check: return "cross_check";
    }
    return "?";
}

LoadedConfig parse_config_text(const std::string& text) {
    Section problem, solver;
    Section* cur = nullptr;

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                fail("line " + std::to_string(lineno) + ": unterminated section header");
            std::string name = trim(line.substr(1, line.size() - 2));
            if (name == "problem")
                cur = &problem;
            else if (name == "solver")
                cur = &solver;
            else
                fail("line " + std::to_string(lineno) + ": unknown section [" + name + "]");
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail("line " + std::to_string(lineno) + ": expected key = value");
        if (!cur)
            fail("line " + std::to_string(lineno) + ": key outside any section");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        const auto& known = (cur == &problem) ? problem_keys() : solver_keys();
        if (std::find(known.begin(), known.end(), key) == known.end())
            fail("line " + std::to_string(lineno) + ": unknown key \"" + key + "\" in [" +
                 (cur == &problem ? "problem" : "solver") + "]");
        if (!cur->kv.emplace(key, val).second)
            fail("line " + std::to_string(lineno) + ": duplicate key \"" + key + "\"");
    }

    LoadedConfig cfg;

    long long dim = to_int(problem, "dim", 2);
    if (dim < 1 || dim > 16)
        fail("dim must be between 1 and 16 (got " + std::to_string(dim) + ")");
    cfg.problem.dim = int(dim);
    cfg.problem.lam = to_double(problem, "lam", 1.0);
    cfg.problem.Lam = to_double(problem, "Lam", 2.0);
    if (!(cfg.problem.lam > 0.0))
        fail("lam must be positive (got " + num_str(cfg.problem.lam) + ")");
    if (!(cfg.problem.Lam >= cfg.problem.lam))
        fail("lam must not exceed Lam (lam = " + num_str(cfg.problem.lam) +
             ", Lam = " + num_str(cfg.problem.Lam) + ")");
    cfg.problem.domain = build_domain(problem, cfg.problem.dim);
    cfg.problem.f = to_field(problem, "f", "1", cfg.problem.dim);
    cfg.problem.g = to_field(problem, "g", "0", cfg.problem.dim);

    RunConfig& rc = cfg.run;
    if (solver.has("solver")) {
        const std::string& k = solver.raw("solver");
        if (k == "mc_fixed_control")
            rc.solver = SolverKind::mc_fixed_control;
        else if (k == "dpp_grid")
            rc.solver = SolverKind::dpp_grid;
        else if (k == "fd_oracle")
            rc.solver = SolverKind::fd_oracle;
        else if (k == "cross_check")
            rc.solver = SolverKind::cross_check;
        else
            fail("solver must be mc_fixed_control, dpp_grid, fd_oracle or cross_check "
                 "(got \"" + k + "\")");
    }
    rc.h = to_double(solver, "h", rc.h);
    if (!(rc.h > 0.0)) fail("h must be positive (got " + num_str(rc.h) + ")");
    rc.dt = to_double(solver, "dt", rc.dt);
    if (!(rc.dt > 0.0)) fail("dt must be positive (got " + num_str(rc.dt) + ")");
    rc.dt_dpp = to_double(solver, "dt_dpp", rc.dt_dpp);
    if (rc.dt_dpp < 0.0) fail("dt_dpp must be nonnegative (got " + num_str(rc.dt_dpp) + ")");
    long long angles = to_int(solver, "angles", rc.angles);
    if (angles < 1) fail("angles must be at least 1 (got " + std::to_string(angles) + ")");
    rc.angles = int(angles);
    long long levels = to_int(solver, "levels", rc.levels);
    if (levels < 2) fail("levels must be at least 2 (got " + std::to_string(levels) + ")");
    rc.levels = int(levels);
    rc.n_paths = to_u64(solver, "n_paths", rc.n_paths);
    if (rc.n_paths < 2) fail("n_paths must be at least 2");
    rc.seed = to_u64(solver, "seed", rc.seed);
    rc.tol = to_double(solver, "tol", rc.tol);
    if (rc.tol < 0.0) fail("tol must be nonnegative (got " + num_str(rc.tol) + ")");
    long long mi = to_int(solver, "max_iter", rc.max_iter);
    if (mi < 1) fail("max_iter must be positive (got " + std::to_string(mi) + ")");
    rc.max_iter = long(mi);
    rc.max_time = to_double(solver, "max_time", rc.max_time);
    if (rc.max_time < 0.0) fail("max_time must be nonnegative (got " + num_str(rc.max_time) + ")");
    if (solver.has("exit_refinement")) {
        const std::string& r = solver.raw("exit_refinement");
        if (r == "none")
            rc.exit_refinement = ExitRefinement::none;
        else if (r == "segment_projection")
            rc.exit_refinement = ExitRefinement::segment_projection;
        else
            fail("exit_refinement must be none or segment_projection (got \"" + r + "\")");
    }
    if (solver.has("mc_control")) {
        rc.mc_control = solver.raw("mc_control");
        if (rc.mc_control != "lam" && rc.mc_control != "Lam")
            fail("mc_control must be lam or Lam (got \"" + rc.mc_control + "\")");
    }
    rc.cascade = to_bool(solver, "cascade", rc.cascade);
    long long fdk = to_int(solver, "fd_K", rc.fd_K);
    if (fdk < 1) fail("fd_K must be positive (got " + std::to_string(fdk) + ")");
    rc.fd_K = int(fdk);
    if (solver.has("eval_points")) {
        std::istringstream pts(solver.raw("eval_points"));
        std::string chunk;
        while (std::getline(pts, chunk, ';')) {
            chunk = trim(chunk);
            if (chunk.empty()) continue;
            Point p = to_point("eval_points", chunk, cfg.problem.dim);
            if (!cfg.problem.domain.contains(p))
                fail("eval_points entry " + std::to_string(rc.eval_points.size() + 1) +
                     " (" + point_str(p) + ") is not inside the domain");
            rc.eval_points.push_back(p);
        }
    }
    if (solver.has("output")) {
        rc.output_dir = solver.raw("output");
        if (rc.output_dir.empty()) fail("output must not be empty");
    }
    long long th = to_int(solver, "threads", rc.threads);
    if (th < 1 || th > 256) fail("threads must be in [1, 256] (got " + std::to_string(th) + ")");
    rc.threads = int(th);
    return cfg;
}

LoadedConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open \"" + path + "\"");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

double estimate_bound(const ProblemSpec& p) {
    auto [lo, hi] = p.domain.bounding_box();
    const int n = p.dim;
    double sup_f = 0.0, sup_g = 0.0;
    Point x(size_t(n), 0.0);
    auto absorb = [&](const Point& q) {
        sup_f = std::max(sup_f, std::fabs(p.f.eval(q)));
        sup_g = std::max(sup_g, std::fabs(p.g.eval(q)));
    };
    absorb(p.domain.interior_point());
    for (std::uint64_t i = 1; i <= 20000; ++i) {
        for (int d = 0; d < n; ++d)
            x[size_t(d)] = lo[size_t(d)] + (hi[size_t(d)] - lo[size_t(d)]) * halton(i, kPrimes[d]);
        if (p.domain.boundary_distance(x) >= -1e-9) absorb(x);
    }
    double diam = p.domain.diameter();
    return std::max(1e-8, sup_g + diam * diam / p.lam * sup_f);
}

double resolved_max_time(const ProblemSpec& p, const RunConfig& c) {
    if (c.max_time > 0.0) return c.max_time;
    double d = p.domain.diameter();
    return 50.0 * d * d / p.lam;
}

PathConfig path_config(const ProblemSpec& p, const RunConfig& c) {
    PathConfig pc;
    pc.dt = c.dt;
    pc.max_time = resolved_max_time(p, c);
    pc.seed = c.seed;
    pc.exit_refinement = c.exit_refinement;
    return pc;
}

std::string print_canonical(const LoadedConfig& c) {
    std::ostringstream out;
    const ProblemSpec& p = c.problem;
    out << "[problem]\n";
    out << "dim = " << p.dim << "\n";
    out << "lam = " << num_str(p.lam) << "\n";
    out << "Lam = " << num_str(p.Lam) << "\n";
    switch (p.domain.kind()) {
        case Domain::Kind::ball:
            out << "domain = ball\n";
            out << "center = " << point_str(p.domain.center()) << "\n";
            out << "radius = " << num_str(p.domain.radius()) << "\n";
            break;
        case Domain::Kind::box:
            out << "domain = box\n";
            out << "lo = " << point_str(p.domain.lo()) << "\n";
            out << "hi = " << point_str(p.domain.hi()) << "\n";
            break;
        case Domain::Kind::annulus:
            out << "domain = annulus\n";
            out << "center = " << point_str(p.domain.center()) << "\n";
            out << "inner_radius = " << num_str(p.domain.inner_radius()) << "\n";
            out << "outer_radius = " << num_str(p.domain.outer_radius()) << "\n";
            break;
    }
    out << "f = " << p.f.canonical() << "\n";
    out << "g = " << p.g.canonical() << "\n";
    out << "\n[solver]\n";
    const RunConfig& r = c.run;
    out << "solver = " << solver_kind_name(r.solver) << "\n";
    out << "h = " << num_str(r.h) << "\n";
    out << "dt = " << num_str(r.dt) << "\n";
    out << "dt_dpp = " << num_str(r.dt_dpp) << "\n";
    out << "angles = " << r.angles << "\n";
    out << "levels = " << r.levels << "\n";
    out << "n_paths = " << r.n_paths << "\n";
    out << "seed = " << r.seed << "\n";
    out << "tol = " << num_str(r.tol) << "\n";
    out << "max_iter = " << r.max_iter << "\n";
    out << "max_time = " << num_str(r.max_time) << "\n";
    out << "exit_refinement = " << refinement_name(r.exit_refinement) << "\n";
    out << "mc_control = " << r.mc_control << "\n";
    out << "cascade = " << (r.cascade ? "on" : "off") << "\n";
    out << "fd_K = " << r.fd_K << "\n";
    if (!r.eval_points.empty()) {
        out << "eval_points = ";
        for (size_t i = 0; i < r.eval_points.size(); ++i) {
            if (i) out << " ; ";
            out << point_str(r.eval_points[i]);
        }
        out << "\n";
    }
    out << "output = " << r.output_dir << "\n";
    out << "threads = " << r.threads << "\n";
    return out.str();
}

std::string default_config_text() { return print_canonical(LoadedConfig{}); }

}  // namespace pucci
