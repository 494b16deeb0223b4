// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rtbpa/bvh.hpp"
#include "rtbpa/vec3.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace rtbpa {

enum class FacetKind { Triangle, Rectangle, InfinitePlane, Mesh };

enum class Material { Pec };

struct Triangle {
    Vec3 a, b, c;
};

// A reflecting surface with a scene-unique id. Rectangles, triangles and
// infinite planes always have a supporting plane; a mesh has one only when
// all its triangles are coplanar.
struct Facet {
    int id = 0;
    FacetKind kind = FacetKind::Triangle;
    Material material = Material::Pec;
    bool planar = true;
    Vec3 point;  // on the supporting plane (rectangle: center)
    Vec3 normal; // unit
    Vec3 u_axis; // rectangle only, unit and orthogonal to normal
    double width = 0.0;
    double height = 0.0;
    std::vector<Triangle> triangles; // triangle (one) or mesh

    static Facet triangle(int id, const Vec3 &a, const Vec3 &b, const Vec3 &c);
    static Facet rectangle(int id, const Vec3 &center, const Vec3 &normal, const Vec3 &u_axis, double width,
                           double height);
    static Facet infinite_plane(int id, const Vec3 &point, const Vec3 &normal);
    static Facet mesh(int id, std::vector<Triangle> triangles);

    bool infinite() const { return kind == FacetKind::InfinitePlane; }
    Vec3 v_axis() const { return cross(normal, u_axis); }

    // For a point on the supporting plane: does it fall inside the finite
    // extent (edges inclusive)?
    bool contains(const Vec3 &p) const;

    // Signed distance from the supporting plane.
    double signed_distance(const Vec3 &p) const { return dot(p - point, normal); }
};

struct Hit {
    double t = 0.0;
    Vec3 point;
    Vec3 normal;
    int surface_id = 0;
    std::size_t facet_index = 0;
};

// Immutable set of PEC facets. Finite facets are decomposed into primitives
// indexed by a Bvh; infinite planes are tested linearly.
class Scene {
public:
    Scene() = default;
    explicit Scene(std::vector<Facet> facets, std::vector<int> occluder_ids = {});

    std::span<const Facet> facets() const { return facets_; }
    std::span<const std::size_t> infinite_planes() const { return infinite_; }
    std::span<const int> occluder_ids() const { return occluder_ids_; }
    std::span<const Primitive> primitives() const { return prims_; }
    const Bvh &bvh() const { return bvh_; }
    bool empty() const { return facets_.empty(); }

    // Index of the facet with `id`, or facets().size() when absent.
    std::size_t index_of(int id) const;
    const Facet &facet(int id) const;

private:
    std::vector<Facet> facets_;
    std::vector<std::size_t> infinite_;
    std::vector<int> occluder_ids_;
    std::vector<Primitive> prims_;
    Bvh bvh_;
};

// d - 2(d.n)n. Throws GrazingIncidence when |d.n| <= kGrazingTolerance.
Vec3 reflect_direction(const Vec3 &d, const Vec3 &n);

Vec3 mirror_point(const Vec3 &p, const Facet &plane);

// Nearest hit in (ray.t_min, ray.t_max), infinite planes included.
std::optional<Hit> intersect(const Ray &ray, const Scene &scene, const Bvh &bvh);
std::optional<Hit> intersect(const Ray &ray, const Scene &scene);

// Same result without the hierarchy; used as a reference.
std::optional<Hit> intersect_brute_force(const Ray &ray, const Scene &scene);

// True iff a facet whose id is not in `ignore` crosses the open segment
// (a, b), trimmed by kSelfIntersectionEpsilon at both ends.
bool occluded(const Vec3 &a, const Vec3 &b, const Scene &scene, std::span<const int> ignore = {});

} // namespace rtbpa
