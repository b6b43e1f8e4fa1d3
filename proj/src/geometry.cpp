#include "pucci/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pucci {

namespace {

double dist2(const Point& x, const Point& c) {
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        double d = x[i] - c[i];
        s += d * d;
    }
    return s;
}

Point lerp(const Point& a, const Point& b, double t) {
    Point p(a.size());
    for (size_t i = 0; i < a.size(); ++i) p[i] = a[i] + t * (b[i] - a[i]);
    return p;
}

// Larger root of |a + t d - c|^2 = r^2; valid when a is inside the sphere.
double sphere_exit_t(const Point& a, const Point& d, const Point& c, double r) {
    double dd = 0.0, ad = 0.0, ac = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double ai = a[i] - c[i];
        dd += d[i] * d[i];
        ad += ai * d[i];
        ac += ai * ai;
    }
    double disc = ad * ad - dd * (ac - r * r);
    if (dd == 0.0 || disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (-ad + std::sqrt(disc)) / dd;
}

// Smaller positive root of |a + t d - c|^2 = r^2 when the segment dips into
// the sphere from outside it; NaN when it never does.
double sphere_entry_t(const Point& a, const Point& d, const Point& c, double r) {
    double dd = 0.0, ad = 0.0, ac = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double ai = a[i] - c[i];
        dd += d[i] * d[i];
        ad += ai * d[i];
        ac += ai * ai;
    }
    double disc = ad * ad - dd * (ac - r * r);
    if (dd == 0.0 || disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
    double t = (-ad - std::sqrt(disc)) / dd;
    return t >= 0.0 ? t : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

Domain Domain::ball(Point center, double radius) {
    if (center.empty()) throw std::invalid_argument("ball: empty center");
    if (!(radius > 0.0)) throw std::invalid_argument("ball: radius must be positive");
    Domain d;
    d.kind_ = Kind::ball;
    d.dim_ = int(center.size());
    d.a_ = std::move(center);
    d.r1_ = radius;
    return d;
}

Domain Domain::box(Point lo, Point hi) {
    if (lo.empty() || lo.size() != hi.size()) throw std::invalid_argument("box: bad corners");
    for (size_t i = 0; i < lo.size(); ++i)
        if (!(lo[i] < hi[i])) throw std::invalid_argument("box: lo must be < hi per axis");
    Domain d;
    d.kind_ = Kind::box;
    d.dim_ = int(lo.size());
    d.a_ = std::move(lo);
    d.b_ = std::move(hi);
    return d;
}

Domain Domain::annulus(Point center, double r_inner, double r_outer) {
    if (center.empty()) throw std::invalid_argument("annulus: empty center");
    if (!(r_inner > 0.0) || !(r_inner < r_outer))
        throw std::invalid_argument("annulus: need 0 < r_inner < r_outer");
    Domain d;
    d.kind_ = Kind::annulus;
    d.dim_ = int(center.size());
    d.a_ = std::move(center);
    d.r0_ = r_inner;
    d.r1_ = r_outer;
    return d;
}

bool Domain::contains(const Point& x) const {
    switch (kind_) {
        case Kind::ball:
            return dist2(x, a_) < r1_ * r1_;
        case Kind::box:
            for (int i = 0; i < dim_; ++i)
                if (!(a_[i] < x[i] && x[i] < b_[i])) return false;
            return true;
        case Kind::annulus: {
            double s2 = dist2(x, a_);
            return r0_ * r0_ < s2 && s2 < r1_ * r1_;
        }
    }
    return false;
}

double Domain::boundary_distance(const Point& x) const {
    switch (kind_) {
        case Kind::ball:
            return r1_ - std::sqrt(dist2(x, a_));
        case Kind::box: {
            bool inside = true;
            double in_d = std::numeric_limits<double>::infinity();
            double out2 = 0.0;
            for (int i = 0; i < dim_; ++i) {
                double lo_gap = x[i] - a_[i], hi_gap = b_[i] - x[i];
                in_d = std::min(in_d, std::min(lo_gap, hi_gap));
                double ex = std::max(std::max(a_[i] - x[i], x[i] - b_[i]), 0.0);
                out2 += ex * ex;
                if (!(lo_gap > 0.0 && hi_gap > 0.0)) inside = false;
            }
            return inside ? in_d : -std::sqrt(out2);
        }
        case Kind::annulus: {
            double s = std::sqrt(dist2(x, a_));
            return std::min(s - r0_, r1_ - s);
        }
    }
    return 0.0;
}

std::pair<Point, Point> Domain::bounding_box() const {
    Point lo(dim_), hi(dim_);
    if (kind_ == Kind::box) return {a_, b_};
    for (int i = 0; i < dim_; ++i) {
        lo[i] = a_[i] - r1_;
        hi[i] = a_[i] + r1_;
    }
    return {lo, hi};
}

double Domain::crossing_parameter(const Point& x_in, const Point& x_out) const {
    if (!contains(x_in) || contains(x_out))
        throw std::invalid_argument(
            "project_to_boundary: need an interior start and exterior end");

    Point d(dim_);
    for (int i = 0; i < dim_; ++i) d[i] = x_out[i] - x_in[i];

    double t = std::numeric_limits<double>::quiet_NaN();
    switch (kind_) {
        case Kind::ball:
            t = sphere_exit_t(x_in, d, a_, r1_);
            break;
        case Kind::box: {
            t = std::numeric_limits<double>::infinity();
            for (int i = 0; i < dim_; ++i) {
                if (d[i] > 0.0)
                    t = std::min(t, (b_[i] - x_in[i]) / d[i]);
                else if (d[i] < 0.0)
                    t = std::min(t, (a_[i] - x_in[i]) / d[i]);
            }
            break;
        }
        case Kind::annulus: {
            double to = sphere_exit_t(x_in, d, a_, r1_);
            double ti = sphere_entry_t(x_in, d, a_, r0_);
            t = to;
            if (ti == ti && ti < t) t = ti;
            break;
        }
    }
    if (t == t) t = std::min(std::max(t, 0.0), 1.0);

    // closed forms are exact up to roundoff; fall back to bisection on the
    // membership predicate if the result drifted off the boundary
    if (!(t == t) || std::fabs(boundary_distance(lerp(x_in, x_out, t))) > 1e-9) {
        double a = 0.0, b = 1.0;
        while (b - a > 1e-12) {
            double m = 0.5 * (a + b);
            if (contains(lerp(x_in, x_out, m)))
                a = m;
            else
                b = m;
        }
        t = b;
    }
    return t;
}

Point Domain::project_to_boundary(const Point& x_in, const Point& x_out) const {
    return lerp(x_in, x_out, crossing_parameter(x_in, x_out));
}

double Domain::inradius() const {
    switch (kind_) {
        case Kind::ball:
            return r1_;
        case Kind::box: {
            double m = std::numeric_limits<double>::infinity();
            for (int i = 0; i < dim_; ++i) m = std::min(m, 0.5 * (b_[i] - a_[i]));
            return m;
        }
        case Kind::annulus:
            return 0.5 * (r1_ - r0_);
    }
    return 0.0;
}

double Domain::diameter() const {
    switch (kind_) {
        case Kind::ball:
        case Kind::annulus:
            return 2.0 * r1_;
        case Kind::box: {
            double s = 0.0;
            for (int i = 0; i < dim_; ++i) {
                double e = b_[i] - a_[i];
                s += e * e;
            }
            return std::sqrt(s);
        }
    }
    return 0.0;
}

Point Domain::interior_point() const {
    switch (kind_) {
        case Kind::ball:
            return a_;
        case Kind::box: {
            Point p(dim_);
            for (int i = 0; i < dim_; ++i) p[i] = 0.5 * (a_[i] + b_[i]);
            return p;
        }
        case Kind::annulus: {
            Point p = a_;
            p[0] += 0.5 * (r0_ + r1_);
            return p;
        }
    }
    return a_;
}

}  // namespace pucci
