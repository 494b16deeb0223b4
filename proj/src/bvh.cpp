// SPDX-License-Identifier: Apache-2.0
#include "rtbpa/bvh.hpp"

#include <algorithm>
#include <cmath>

namespace rtbpa {

namespace {

constexpr std::uint32_t kLeafSize = 4;

int max_dim(const Vec3 &v)
{
    const double ax = std::abs(v.x), ay = std::abs(v.y), az = std::abs(v.z);
    if (ax > ay)
        return ax > az ? 0 : 2;
    return ay > az ? 1 : 2;
}

bool intersect_triangle(const Primitive &prim, const Ray &ray, double t_max, double &t_out)
{
    const Vec3 &dir = ray.direction;
    int kz = max_dim(dir);
    int kx = (kz + 1) % 3;
    int ky = (kx + 1) % 3;
    if (dir[kz] < 0.0)
        std::swap(kx, ky);

    const double sx = dir[kx] / dir[kz];
    const double sy = dir[ky] / dir[kz];
    const double sz = 1.0 / dir[kz];

    const Vec3 a = prim.p0 - ray.origin;
    const Vec3 b = prim.p1 - ray.origin;
    const Vec3 c = prim.p2 - ray.origin;

    const double ax = a[kx] - sx * a[kz];
    const double ay = a[ky] - sy * a[kz];
    const double bx = b[kx] - sx * b[kz];
    const double by = b[ky] - sy * b[kz];
    const double cx = c[kx] - sx * c[kz];
    const double cy = c[ky] - sy * c[kz];

    const double u = cx * by - cy * bx;
    const double v = ax * cy - ay * cx;
    const double w = bx * ay - by * ax;

    if ((u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0))
        return false;
    const double det = u + v + w;
    if (det == 0.0)
        return false;

    const double t_scaled = u * sz * a[kz] + v * sz * b[kz] + w * sz * c[kz];
    const double t = t_scaled / det;
    if (!(t > ray.t_min && t < t_max))
        return false;
    t_out = t;
    return true;
}

bool intersect_rectangle(const Primitive &prim, const Ray &ray, double t_max, double &t_out)
{
    const double denom = dot(ray.direction, prim.normal);
    if (std::abs(denom) < 1e-15)
        return false;
    const double t = dot(prim.p0 - ray.origin, prim.normal) / denom;
    if (!(t > ray.t_min && t < t_max))
        return false;
    const Vec3 local = ray.origin + ray.direction * t - prim.p0;
    if (std::abs(dot(local, prim.p1)) > prim.half_u || std::abs(dot(local, prim.p2)) > prim.half_v)
        return false;
    t_out = t;
    return true;
}

} // namespace

void Aabb::extend(const Vec3 &p)
{
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
}

void Aabb::extend(const Aabb &b)
{
    extend(b.lo);
    extend(b.hi);
}

bool Aabb::contains(const Aabb &b) const
{
    return lo.x <= b.lo.x && lo.y <= b.lo.y && lo.z <= b.lo.z && hi.x >= b.hi.x && hi.y >= b.hi.y &&
           hi.z >= b.hi.z;
}

bool Aabb::hit(const Vec3 &origin, const Vec3 &inv_dir, double t_min, double t_max) const
{
    for (int axis = 0; axis < 3; ++axis) {
        double t0 = (lo[axis] - origin[axis]) * inv_dir[axis];
        double t1 = (hi[axis] - origin[axis]) * inv_dir[axis];
        // 0 * inf gives NaN for rays parallel to a slab face; treat as inside.
        if (std::isnan(t0))
            t0 = -std::numeric_limits<double>::infinity();
        if (std::isnan(t1))
            t1 = std::numeric_limits<double>::infinity();
        if (t0 > t1)
            std::swap(t0, t1);
        // Slightly inflate to stay conservative under rounding.
        t_min = std::max(t_min, t0 - 1e-12 * std::abs(t0));
        t_max = std::min(t_max, t1 + 1e-12 * std::abs(t1));
        if (t_min > t_max)
            return false;
    }
    return true;
}

Aabb Primitive::bounds() const
{
    Aabb box;
    if (shape == Shape::Triangle) {
        box.extend(p0);
        box.extend(p1);
        box.extend(p2);
    } else {
        const Vec3 u = p1 * half_u;
        const Vec3 v = p2 * half_v;
        box.extend(p0 + u + v);
        box.extend(p0 + u - v);
        box.extend(p0 - u + v);
        box.extend(p0 - u - v);
    }
    return box;
}

bool intersect_primitive(const Primitive &prim, const Ray &ray, double t_max, double &t)
{
    return prim.shape == Primitive::Shape::Triangle ? intersect_triangle(prim, ray, t_max, t)
                                                    : intersect_rectangle(prim, ray, t_max, t);
}

Bvh::Bvh(std::span<const Primitive> prims)
{
    if (prims.empty())
        return;
    std::vector<Aabb> boxes;
    boxes.reserve(prims.size());
    for (const auto &p : prims)
        boxes.push_back(p.bounds());
    items_.resize(prims.size());
    for (std::uint32_t i = 0; i < items_.size(); ++i)
        items_[i] = i;
    nodes_.reserve(2 * prims.size());
    nodes_.emplace_back();
    build(0, boxes, 0, static_cast<std::uint32_t>(prims.size()));
}

void Bvh::build(std::uint32_t node_index, const std::vector<Aabb> &boxes, std::uint32_t begin, std::uint32_t end)
{
    Aabb box;
    Aabb centroids;
    for (std::uint32_t i = begin; i < end; ++i) {
        box.extend(boxes[items_[i]]);
        centroids.extend(boxes[items_[i]].centroid());
    }
    nodes_[node_index].box = box;

    const std::uint32_t n = end - begin;
    const Vec3 extent = centroids.hi - centroids.lo;
    int axis = 0;
    if (extent.y > extent[axis])
        axis = 1;
    if (extent.z > extent[axis])
        axis = 2;
    if (n <= kLeafSize || extent[axis] <= 0.0) {
        nodes_[node_index].first = begin;
        nodes_[node_index].count = n;
        return;
    }

    const std::uint32_t mid = begin + n / 2;
    std::nth_element(items_.begin() + begin, items_.begin() + mid, items_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         const double ca = boxes[a].centroid()[axis];
                         const double cb = boxes[b].centroid()[axis];
                         return ca < cb || (ca == cb && a < b);
                     });

    const auto left = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    nodes_.emplace_back();
    nodes_[node_index].first = left;
    nodes_[node_index].count = 0;
    build(left, boxes, begin, mid);
    build(left + 1, boxes, mid, end);
}

} // namespace rtbpa
