#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pucci/exprlang.hpp"
#include "pucci/geometry.hpp"

namespace pucci {

// Regular lattice with spacing h covering a bounding region.  Node k along
// axis i sits at origin[i] + k*h.
struct LatticeLayout {
    Point origin;
    double h = 0.0;
    std::vector<int> counts;

    int dim() const { return int(counts.size()); }
    size_t size() const;
    size_t flat(const std::vector<int>& multi) const;
    std::vector<int> multi(size_t flat) const;
    Point position(size_t flat) const;
    // cell base index (clamped to valid cells) and fractional offset in [0,1]
    void locate(const Point& x, std::vector<int>& base, Point& frac) const;
    size_t nearest(const Point& x) const;
    bool in_bounds(const std::vector<int>& multi) const;
};

enum class NodeKind : uint8_t { interior, boundary_band, exterior };

const char* node_kind_name(NodeKind k);

// Lattice values for the grid solvers.  Interior nodes carry the unknowns;
// boundary-band nodes (outside the domain, within h*sqrt(N) of its closure)
// carry boundary data g and stay fixed; exterior nodes are never read.
struct ValueGrid {
    LatticeLayout layout;
    std::vector<double> values;
    std::vector<NodeKind> kinds;
    std::vector<int32_t> policy;            // maximizer index, -1 off the interior
    std::vector<uint32_t> interior_nodes;   // flat indices in sweep order

    size_t interior_count() const { return interior_nodes.size(); }

    // Multilinear interpolation; throws if an exterior node would be read
    // with nonzero weight.
    double value_at(const Point& x) const;

    // Interpolation for warm starts: exterior corners contribute zero.
    double value_at_soft(const Point& x) const;
};

// Builds the lattice cover of the domain's bounding box (origin aligned so
// nodes land on the box corners), classifies nodes, and pins band values to
// g at the boundary projection from the nearest interior node.
// Requires h <= inradius/4 and at least one interior node.
ValueGrid build_grid(const Domain& D, const ScalarField& g, double h);

}  // namespace pucci
