#pragma once

#include <utility>
#include <vector>

namespace pucci {

using Point = std::vector<double>;

// Open bounded domain: ball, axis-aligned box, or annulus (all satisfy the
// exterior cone condition, so exit times are well behaved up to the
// boundary).  Membership is strict: boundary points are outside.
class Domain {
public:
    enum class Kind { ball, box, annulus };

    static Domain ball(Point center, double radius);
    static Domain box(Point lo, Point hi);
    static Domain annulus(Point center, double r_inner, double r_outer);

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }

    bool contains(const Point& x) const;

    // Signed Euclidean distance to the boundary: positive inside, negative
    // outside, zero on it.  Closed form per kind.
    double boundary_distance(const Point& x) const;

    std::pair<Point, Point> bounding_box() const;

    // First crossing of the segment [inside, outside] with the boundary.
    // Requires contains(inside) and !contains(outside).  The result lies on
    // the boundary to within 1e-9.
    Point project_to_boundary(const Point& inside, const Point& outside) const;
    // Same crossing, as the segment parameter t in [0,1].
    double crossing_parameter(const Point& inside, const Point& outside) const;

    double inradius() const;
    double diameter() const;

    // A representative interior point (ball/box center, annulus mid-ring).
    Point interior_point() const;

    const Point& center() const { return a_; }
    double radius() const { return r1_; }
    double inner_radius() const { return r0_; }
    double outer_radius() const { return r1_; }
    const Point& lo() const { return a_; }
    const Point& hi() const { return b_; }

private:
    Domain() = default;
    Kind kind_ = Kind::ball;
    int dim_ = 0;
    Point a_, b_;           // center / (lo,hi)
    double r0_ = 0.0, r1_ = 0.0;  // inner/outer radius (ball uses r1_)
};

}  // namespace pucci
