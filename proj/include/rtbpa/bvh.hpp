// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rtbpa/vec3.hpp"

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace rtbpa {

inline constexpr double kSelfIntersectionEpsilon = 1e-7; // m
inline constexpr double kGrazingTolerance = 1e-9;

struct Ray {
    Vec3 origin;
    Vec3 direction; // unit
    double t_min = kSelfIntersectionEpsilon;
    double t_max = std::numeric_limits<double>::infinity();
};

struct Aabb {
    Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
    Vec3 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity()};

    void extend(const Vec3 &p);
    void extend(const Aabb &b);
    bool contains(const Aabb &b) const;
    Vec3 centroid() const { return (lo + hi) * 0.5; }

    // Slab test against [t_min, t_max]; inv_dir is 1/direction per axis.
    bool hit(const Vec3 &origin, const Vec3 &inv_dir, double t_min, double t_max) const;
};

// Finite planar primitive owned by a facet. Triangles use p0..p2 as
// vertices; rectangles use p0 as center, p1/p2 as unit in-plane axes with
// half_u/half_v half extents.
struct Primitive {
    enum class Shape : std::uint8_t { Triangle, Rectangle };

    Shape shape = Shape::Triangle;
    std::uint32_t facet = 0;
    Vec3 p0, p1, p2;
    Vec3 normal;
    double half_u = 0.0;
    double half_v = 0.0;

    Aabb bounds() const;
};

// Ray/primitive test. On hit within (ray.t_min, t_max) writes t and returns
// true. The triangle path is the watertight test of Woop, Benthin and Wald.
bool intersect_primitive(const Primitive &prim, const Ray &ray, double t_max, double &t);

// Binary bounding volume hierarchy over a primitive list, split at the
// centroid median of the widest axis.
class Bvh {
public:
    struct Node {
        Aabb box;
        std::uint32_t first = 0; // child index (inner) or first item (leaf)
        std::uint32_t count = 0; // 0 for inner nodes
    };

    Bvh() = default;
    explicit Bvh(std::span<const Primitive> prims);

    const std::vector<Node> &nodes() const { return nodes_; }
    // Primitive indices in leaf order; every primitive appears exactly once.
    const std::vector<std::uint32_t> &items() const { return items_; }
    bool empty() const { return nodes_.empty(); }

    // Visits candidate primitives front-to-back-ish. `visit(index, t_max)`
    // may shrink t_max and returns true to stop the traversal.
    template <class Visit>
    void traverse(const Ray &ray, double &t_max, Visit &&visit) const
    {
        if (nodes_.empty())
            return;
        const Vec3 inv{1.0 / ray.direction.x, 1.0 / ray.direction.y, 1.0 / ray.direction.z};
        std::uint32_t stack[64];
        int top = 0;
        stack[top++] = 0;
        while (top > 0) {
            const Node &node = nodes_[stack[--top]];
            if (!node.box.hit(ray.origin, inv, ray.t_min, t_max))
                continue;
            if (node.count > 0) {
                for (std::uint32_t i = 0; i < node.count; ++i) {
                    if (visit(items_[node.first + i], t_max))
                        return;
                }
            } else {
                stack[top++] = node.first;
                stack[top++] = node.first + 1;
            }
        }
    }

private:
    void build(std::uint32_t node_index, const std::vector<Aabb> &boxes, std::uint32_t begin, std::uint32_t end);

    std::vector<Node> nodes_;
    std::vector<std::uint32_t> items_;
};

} // namespace rtbpa
