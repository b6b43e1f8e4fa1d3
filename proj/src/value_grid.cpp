#include "pucci/value_grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pucci {

size_t LatticeLayout::size() const {
    size_t s = 1;
    for (int c : counts) s *= size_t(c);
    return s;
}

size_t LatticeLayout::flat(const std::vector<int>& m) const {
    size_t f = 0;
    for (int i = 0; i < dim(); ++i) f = f * size_t(counts[i]) + size_t(m[i]);
    return f;
}

std::vector<int> LatticeLayout::multi(size_t f) const {
    std::vector<int> m(dim());
    for (int i = dim() - 1; i >= 0; --i) {
        m[i] = int(f % size_t(counts[i]));
        f /= size_t(counts[i]);
    }
    return m;
}

Point LatticeLayout::position(size_t f) const {
    std::vector<int> m = multi(f);
    Point p(dim());
    for (int i = 0; i < dim(); ++i) p[i] = origin[i] + h * m[i];
    return p;
}

void LatticeLayout::locate(const Point& x, std::vector<int>& base, Point& frac) const {
    base.resize(dim());
    frac.resize(dim());
    for (int i = 0; i < dim(); ++i) {
        double u = (x[i] - origin[i]) / h;
        int b = int(std::floor(u));
        b = std::max(0, std::min(b, counts[i] - 2));
        base[i] = b;
        // clamp so queries beyond the cover read the edge instead of
        // extrapolating with unbounded weights
        frac[i] = std::max(0.0, std::min(u - b, 1.0));
    }
}

size_t LatticeLayout::nearest(const Point& x) const {
    std::vector<int> m(dim());
    for (int i = 0; i < dim(); ++i) {
        int k = int(std::lround((x[i] - origin[i]) / h));
        m[i] = std::max(0, std::min(k, counts[i] - 1));
    }
    return flat(m);
}

bool LatticeLayout::in_bounds(const std::vector<int>& m) const {
    for (int i = 0; i < dim(); ++i)
        if (m[i] < 0 || m[i] >= counts[i]) return false;
    return true;
}

const char* node_kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::interior: return "interior";
        case NodeKind::boundary_band: return "boundary_band";
        case NodeKind::exterior: return "exterior";
    }
    return "?";
}

namespace {

double interpolate(const ValueGrid& g, const Point& x, bool strict) {
    const LatticeLayout& L = g.layout;
    const int n = L.dim();
    std::vector<int> base;
    Point frac;
    L.locate(x, base, frac);
    double acc = 0.0;
    std::vector<int> corner(n);
    for (int mask = 0; mask < (1 << n); ++mask) {
        double w = 1.0;
        for (int i = 0; i < n; ++i) {
            bool hi = mask & (1 << i);
            corner[i] = base[i] + (hi ? 1 : 0);
            w *= hi ? frac[i] : 1.0 - frac[i];
        }
        if (w == 0.0) continue;
        size_t f = L.flat(corner);
        if (g.kinds[f] == NodeKind::exterior) {
            if (strict)
                throw std::runtime_error(
                    "ValueGrid::value_at: interpolation touched an exterior node "
                    "(point outside the solver cover)");
            continue;
        }
        acc += w * g.values[f];
    }
    return acc;
}

}  // namespace

double ValueGrid::value_at(const Point& x) const { return interpolate(*this, x, true); }

double ValueGrid::value_at_soft(const Point& x) const { return interpolate(*this, x, false); }

ValueGrid build_grid(const Domain& D, const ScalarField& g, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("build_grid: h must be positive");
    if (h > D.inradius() / 4.0 + 1e-12)
        throw std::invalid_argument("build_grid: h must be at most inradius/4 (h=" +
                                    std::to_string(h) + ", inradius=" +
                                    std::to_string(D.inradius()) + ")");
    const int n = D.dim();
    const double band_width = h * std::sqrt(double(n)) + 1e-9;
    const int margin = int(std::ceil(std::sqrt(double(n)))) + 1;

    auto [lo, hi] = D.bounding_box();
    ValueGrid grid;
    grid.layout.h = h;
    grid.layout.origin.resize(n);
    grid.layout.counts.resize(n);
    for (int i = 0; i < n; ++i) {
        grid.layout.origin[i] = lo[i] - margin * h;
        int inner = int(std::ceil((hi[i] - lo[i]) / h - 1e-9));
        grid.layout.counts[i] = inner + 1 + 2 * margin;
    }

    const size_t total = grid.layout.size();
    grid.values.assign(total, 0.0);
    grid.kinds.assign(total, NodeKind::exterior);
    grid.policy.assign(total, -1);

    for (size_t f = 0; f < total; ++f) {
        Point p = grid.layout.position(f);
        if (D.contains(p)) {
            grid.kinds[f] = NodeKind::interior;
            grid.policy[f] = 0;
            grid.interior_nodes.push_back(uint32_t(f));
        } else if (-D.boundary_distance(p) <= band_width) {
            grid.kinds[f] = NodeKind::boundary_band;
        }
    }
    if (grid.interior_nodes.empty())
        throw std::invalid_argument("build_grid: no interior nodes (h too coarse?)");

    // offsets by increasing distance, for the nearest-interior search
    std::vector<std::vector<int>> rings;
    {
        const int R = margin + 3;
        std::vector<std::pair<double, std::vector<int>>> offs;
        std::vector<int> off(n, -R);
        for (;;) {
            double d2 = 0.0;
            for (int v : off) d2 += double(v) * v;
            if (d2 > 0.0 && d2 <= double(R) * R) offs.push_back({d2, off});
            int axis = n - 1;
            while (axis >= 0 && ++off[axis] > R) off[axis--] = -R;
            if (axis < 0) break;
        }
        std::stable_sort(offs.begin(), offs.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        for (auto& o : offs) rings.push_back(std::move(o.second));
    }

    std::vector<int> m(n), nb(n);
    for (size_t f = 0; f < total; ++f) {
        if (grid.kinds[f] != NodeKind::boundary_band) continue;
        Point p = grid.layout.position(f);
        if (std::fabs(D.boundary_distance(p)) <= 1e-12) {
            grid.values[f] = g.eval(p);
            continue;
        }
        m = grid.layout.multi(f);
        bool done = false;
        for (const std::vector<int>& off : rings) {
            for (int i = 0; i < n; ++i) nb[i] = m[i] + off[i];
            if (!grid.layout.in_bounds(nb)) continue;
            size_t nf = grid.layout.flat(nb);
            if (grid.kinds[nf] != NodeKind::interior) continue;
            Point q = grid.layout.position(nf);
            grid.values[f] = g.eval(D.project_to_boundary(q, p));
            done = true;
            break;
        }
        if (!done) {
            // distant band corner with no lattice neighbor inside: fall back
            // to the nearest interior node overall
            double best = 1e300;
            size_t pick = grid.interior_nodes[0];
            for (uint32_t cand : grid.interior_nodes) {
                Point q = grid.layout.position(cand);
                double d2 = 0.0;
                for (int i = 0; i < n; ++i) d2 += (q[i] - p[i]) * (q[i] - p[i]);
                if (d2 < best) {
                    best = d2;
                    pick = cand;
                }
            }
            Point q = grid.layout.position(pick);
            grid.values[f] = g.eval(D.project_to_boundary(q, p));
        }
    }
    return grid;
}

}  // namespace pucci
