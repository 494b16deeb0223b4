// SPDX-License-Identifier: Apache-2.0
#include "rtbpa/geometry.hpp"

#include "rtbpa/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rtbpa {

namespace {

constexpr double kMinArea = 1e-12;  // m^2
constexpr double kPlanarTol = 1e-9; // m

Vec3 unit_or_throw(const Vec3 &v, const char *what)
{
    const double n = norm(v);
    if (!(n > 0.0) || !std::isfinite(n))
        throw std::invalid_argument(std::string(what) + " must be a nonzero finite vector");
    // Already-unit input is kept as is so that reloading a saved scene
    // reproduces the same bits.
    if (std::abs(n - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon())
        return v;
    return v / n;
}

Vec3 triangle_normal(const Triangle &t, int id)
{
    const Vec3 c = cross(t.b - t.a, t.c - t.a);
    if (0.5 * norm(c) <= kMinArea)
        throw std::invalid_argument("degenerate triangle in facet " + std::to_string(id));
    return normalized(c);
}

bool triangle_contains(const Triangle &t, const Vec3 &n, const Vec3 &p)
{
    return dot(cross(t.b - t.a, p - t.a), n) >= 0.0 && dot(cross(t.c - t.b, p - t.b), n) >= 0.0 &&
           dot(cross(t.a - t.c, p - t.c), n) >= 0.0;
}

bool ignored(std::span<const int> ignore, int id)
{
    return std::find(ignore.begin(), ignore.end(), id) != ignore.end();
}

double plane_hit(const Facet &f, const Ray &ray)
{
    const double denom = dot(ray.direction, f.normal);
    if (std::abs(denom) < 1e-15)
        return std::numeric_limits<double>::infinity();
    return dot(f.point - ray.origin, f.normal) / denom;
}

} // namespace

Facet Facet::triangle(int id, const Vec3 &a, const Vec3 &b, const Vec3 &c)
{
    Facet f;
    f.id = id;
    f.kind = FacetKind::Triangle;
    f.triangles = {{a, b, c}};
    f.normal = triangle_normal(f.triangles[0], id);
    f.point = a;
    return f;
}

Facet Facet::rectangle(int id, const Vec3 &center, const Vec3 &normal, const Vec3 &u_axis, double width,
                       double height)
{
    if (!(width > 0.0) || !(height > 0.0) || width * height <= kMinArea)
        throw std::invalid_argument("rectangle facet " + std::to_string(id) + " has no area");
    Facet f;
    f.id = id;
    f.kind = FacetKind::Rectangle;
    f.point = center;
    f.normal = unit_or_throw(normal, "rectangle normal");
    // Gram-Schmidt so that u is exactly in-plane.
    f.u_axis = unit_or_throw(u_axis - f.normal * dot(u_axis, f.normal), "rectangle u_axis");
    f.width = width;
    f.height = height;
    return f;
}

Facet Facet::infinite_plane(int id, const Vec3 &point, const Vec3 &normal)
{
    Facet f;
    f.id = id;
    f.kind = FacetKind::InfinitePlane;
    f.point = point;
    f.normal = unit_or_throw(normal, "plane normal");
    return f;
}

Facet Facet::mesh(int id, std::vector<Triangle> triangles)
{
    if (triangles.empty())
        throw std::invalid_argument("mesh facet " + std::to_string(id) + " has no triangles");
    Facet f;
    f.id = id;
    f.kind = FacetKind::Mesh;
    f.normal = triangle_normal(triangles[0], id);
    f.point = triangles[0].a;
    for (const auto &t : triangles) {
        const Vec3 n = triangle_normal(t, id);
        const bool parallel = norm(cross(n, f.normal)) <= kPlanarTol;
        const bool on_plane = std::abs(dot(t.a - f.point, f.normal)) <= kPlanarTol &&
                              std::abs(dot(t.b - f.point, f.normal)) <= kPlanarTol &&
                              std::abs(dot(t.c - f.point, f.normal)) <= kPlanarTol;
        if (!parallel || !on_plane)
            f.planar = false;
    }
    f.triangles = std::move(triangles);
    return f;
}

bool Facet::contains(const Vec3 &p) const
{
    switch (kind) {
    case FacetKind::InfinitePlane:
        return true;
    case FacetKind::Rectangle: {
        const Vec3 local = p - point;
        return std::abs(dot(local, u_axis)) <= 0.5 * width && std::abs(dot(local, v_axis())) <= 0.5 * height;
    }
    case FacetKind::Triangle:
    case FacetKind::Mesh:
        for (const auto &t : triangles) {
            if (triangle_contains(t, normalized(cross(t.b - t.a, t.c - t.a)), p))
                return true;
        }
        return false;
    }
    return false;
}

Scene::Scene(std::vector<Facet> facets, std::vector<int> occluder_ids)
    : facets_(std::move(facets)), occluder_ids_(std::move(occluder_ids))
{
    for (std::size_t i = 0; i < facets_.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (facets_[i].id == facets_[j].id)
                throw std::invalid_argument("duplicate facet id " + std::to_string(facets_[i].id));
        }
    }
    for (int id : occluder_ids_) {
        if (index_of(id) == facets_.size())
            throw std::invalid_argument("occluder id " + std::to_string(id) + " is not a facet");
    }

    for (std::size_t i = 0; i < facets_.size(); ++i) {
        const Facet &f = facets_[i];
        const auto owner = static_cast<std::uint32_t>(i);
        switch (f.kind) {
        case FacetKind::InfinitePlane:
            infinite_.push_back(i);
            break;
        case FacetKind::Rectangle: {
            Primitive p;
            p.shape = Primitive::Shape::Rectangle;
            p.facet = owner;
            p.p0 = f.point;
            p.p1 = f.u_axis;
            p.p2 = f.v_axis();
            p.normal = f.normal;
            p.half_u = 0.5 * f.width;
            p.half_v = 0.5 * f.height;
            prims_.push_back(p);
            break;
        }
        case FacetKind::Triangle:
        case FacetKind::Mesh:
            for (const auto &t : f.triangles) {
                Primitive p;
                p.shape = Primitive::Shape::Triangle;
                p.facet = owner;
                p.p0 = t.a;
                p.p1 = t.b;
                p.p2 = t.c;
                p.normal = normalized(cross(t.b - t.a, t.c - t.a));
                prims_.push_back(p);
            }
            break;
        }
    }
    bvh_ = Bvh(prims_);
}

std::size_t Scene::index_of(int id) const
{
    for (std::size_t i = 0; i < facets_.size(); ++i) {
        if (facets_[i].id == id)
            return i;
    }
    return facets_.size();
}

const Facet &Scene::facet(int id) const
{
    const std::size_t i = index_of(id);
    if (i == facets_.size())
        throw UnknownReference("no facet with id " + std::to_string(id));
    return facets_[i];
}

Vec3 reflect_direction(const Vec3 &d, const Vec3 &n)
{
    const double dn = dot(d, n);
    if (std::abs(dn) <= kGrazingTolerance)
        throw GrazingIncidence("grazing incidence: |d.n| = " + std::to_string(std::abs(dn)));
    return d - n * (2.0 * dn);
}

Vec3 mirror_point(const Vec3 &p, const Facet &plane)
{
    return p - plane.normal * (2.0 * plane.signed_distance(p));
}

std::optional<Hit> intersect(const Ray &ray, const Scene &scene, const Bvh &bvh)
{
    const auto prims = scene.primitives();
    double t_best = ray.t_max;
    constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
    std::uint32_t best_prim = kNone;
    bvh.traverse(ray, t_best, [&](std::uint32_t i, double &t_max) {
        double t;
        if (intersect_primitive(prims[i], ray, t_max, t)) {
            t_max = t;
            best_prim = i;
        }
        return false;
    });

    std::optional<std::size_t> best_plane;
    for (std::size_t idx : scene.infinite_planes()) {
        const double t = plane_hit(scene.facets()[idx], ray);
        if (t > ray.t_min && t < t_best) {
            t_best = t;
            best_plane = idx;
            best_prim = kNone;
        }
    }

    if (best_prim == kNone && !best_plane)
        return std::nullopt;
    Hit hit;
    hit.t = t_best;
    hit.point = ray.origin + ray.direction * t_best;
    if (best_plane) {
        hit.facet_index = *best_plane;
        hit.normal = scene.facets()[*best_plane].normal;
    } else {
        hit.facet_index = prims[best_prim].facet;
        hit.normal = prims[best_prim].normal;
    }
    hit.surface_id = scene.facets()[hit.facet_index].id;
    return hit;
}

std::optional<Hit> intersect(const Ray &ray, const Scene &scene) { return intersect(ray, scene, scene.bvh()); }

std::optional<Hit> intersect_brute_force(const Ray &ray, const Scene &scene)
{
    std::optional<Hit> best;
    double t_best = ray.t_max;
    const auto prims = scene.primitives();
    for (std::size_t i = 0; i < prims.size(); ++i) {
        double t;
        if (intersect_primitive(prims[i], ray, t_best, t)) {
            t_best = t;
            best = Hit{t, {}, prims[i].normal, 0, prims[i].facet};
        }
    }
    for (std::size_t idx : scene.infinite_planes()) {
        const double t = plane_hit(scene.facets()[idx], ray);
        if (t > ray.t_min && t < t_best) {
            t_best = t;
            best = Hit{t, {}, scene.facets()[idx].normal, 0, idx};
        }
    }
    if (best) {
        best->point = ray.origin + ray.direction * best->t;
        best->surface_id = scene.facets()[best->facet_index].id;
    }
    return best;
}

bool occluded(const Vec3 &a, const Vec3 &b, const Scene &scene, std::span<const int> ignore)
{
    const double len = distance(a, b);
    if (len <= 2.0 * kSelfIntersectionEpsilon)
        return false;
    Ray ray{a, (b - a) / len, kSelfIntersectionEpsilon, len - kSelfIntersectionEpsilon};

    for (std::size_t idx : scene.infinite_planes()) {
        const Facet &f = scene.facets()[idx];
        if (ignored(ignore, f.id))
            continue;
        const double t = plane_hit(f, ray);
        if (t > ray.t_min && t < ray.t_max)
            return true;
    }

    const auto prims = scene.primitives();
    const auto facets = scene.facets();
    bool blocked = false;
    double t_max = ray.t_max;
    scene.bvh().traverse(ray, t_max, [&](std::uint32_t i, double &tm) {
        if (ignored(ignore, facets[prims[i].facet].id))
            return false;
        double t;
        if (intersect_primitive(prims[i], ray, tm, t)) {
            blocked = true;
            return true;
        }
        return false;
    });
    return blocked;
}

} // namespace rtbpa
