// SPDX-License-Identifier: Apache-2.0
#include "rtbpa/errors.hpp"
#include "rtbpa/geometry.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <set>

using namespace rtbpa;
using Catch::Approx;

namespace {

void require_vec(const Vec3 &a, const Vec3 &b, double tol = 1e-12)
{
    REQUIRE(std::abs(a.x - b.x) <= tol);
    REQUIRE(std::abs(a.y - b.y) <= tol);
    REQUIRE(std::abs(a.z - b.z) <= tol);
}

Facet ground() { return Facet::infinite_plane(1, {0, 0, 0}, {0, 0, 1}); }

Vec3 random_unit(std::mt19937_64 &rng)
{
    std::normal_distribution<double> g;
    return normalized(Vec3{g(rng), g(rng), g(rng)});
}

} // namespace

TEST_CASE("reflect_direction")
{
    require_vec(reflect_direction({0, 0, -1}, {0, 0, 1}), {0, 0, 1});
    const double s = 1.0 / std::sqrt(2.0);
    require_vec(reflect_direction({s, 0, -s}, {0, 0, 1}), {s, 0, s});
    REQUIRE_THROWS_AS(reflect_direction({1, 0, 0}, {0, 0, 1}), GrazingIncidence);

    std::mt19937_64 rng(1);
    for (int i = 0; i < 1000; ++i) {
        const Vec3 d = random_unit(rng), n = random_unit(rng);
        if (std::abs(dot(d, n)) < 1e-6)
            continue;
        const Vec3 r = reflect_direction(d, n);
        REQUIRE(std::abs(norm(r) - 1.0) < 1e-12);
        REQUIRE(std::abs(dot(r, n) + dot(d, n)) < 1e-12);
    }
}

TEST_CASE("mirror_point")
{
    require_vec(mirror_point({0, 0, 0.7}, ground()), {0, 0, -0.7});
    require_vec(mirror_point({0.3, -2, 0}, ground()), {0.3, -2, 0});
    const Facet wall = Facet::infinite_plane(2, {2, 0, 0}, {1, 0, 0});
    require_vec(mirror_point({1, 1, 1}, wall), {3, 1, 1});

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-3, 3);
    const Facet tilted = Facet::infinite_plane(3, {0.2, 0.1, -0.4}, {1, 2, 3});
    for (int i = 0; i < 100; ++i) {
        const Vec3 p{u(rng), u(rng), u(rng)};
        require_vec(mirror_point(mirror_point(p, tilted), tilted), p);
    }
}

TEST_CASE("facet validation")
{
    REQUIRE_THROWS_AS(Facet::triangle(1, {0, 0, 0}, {1, 0, 0}, {2, 0, 0}), std::invalid_argument);
    REQUIRE_THROWS_AS(Facet::rectangle(1, {0, 0, 0}, {0, 0, 1}, {1, 0, 0}, 0.0, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(Facet::infinite_plane(1, {0, 0, 0}, {0, 0, 0}), std::invalid_argument);

    const Facet r = Facet::rectangle(4, {0, 0, 0}, {0, 0, 2}, {1, 0, 0.5}, 2.0, 1.0);
    REQUIRE(norm(r.normal) == Approx(1.0).epsilon(1e-15));
    REQUIRE(std::abs(dot(r.u_axis, r.normal)) < 1e-15);
    REQUIRE(r.contains({1.0, 0.5, 0}));
    REQUIRE_FALSE(r.contains({1.01, 0, 0}));

    REQUIRE_THROWS_AS(Scene({ground(), Facet::infinite_plane(1, {0, 0, 1}, {0, 0, 1})}), std::invalid_argument);
    REQUIRE_THROWS_AS(Scene({ground()}, {7}), std::invalid_argument);
    REQUIRE_THROWS_AS(Scene({ground()}).facet(9), UnknownReference);
}

TEST_CASE("mesh planarity")
{
    const Facet flat = Facet::mesh(5, {{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{1, 0, 0}, {1, 1, 0}, {0, 1, 0}}});
    REQUIRE(flat.planar);
    const Facet bent = Facet::mesh(6, {{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{1, 0, 0}, {1, 1, 0.2}, {0, 1, 0}}});
    REQUIRE_FALSE(bent.planar);
}

TEST_CASE("intersect basics")
{
    const Scene scene({ground()});
    const auto hit = intersect(Ray{{0, 0, 1}, {0, 0, -1}}, scene);
    REQUIRE(hit);
    REQUIRE(hit->t == Approx(1.0).epsilon(1e-15));
    require_vec(hit->point, {0, 0, 0});
    REQUIRE(hit->surface_id == 1);

    REQUIRE_FALSE(intersect(Ray{{0, 0, 1}, {1, 0, 0}}, scene));
    REQUIRE_FALSE(intersect(Ray{{0, 0, 1}, {0, 0, 1}}, scene));
}

TEST_CASE("shared triangle edge is watertight")
{
    // Unit square split along its diagonal.
    const Scene scene({Facet::triangle(1, {0, 0, 0}, {1, 0, 0}, {1, 1, 0}),
                       Facet::triangle(2, {0, 0, 0}, {1, 1, 0}, {0, 1, 0})});
    int hits = 0;
    for (int i = 1; i < 1000; ++i) {
        const double s = i / 1000.0;
        const auto h = intersect(Ray{{s, s, 1}, {0, 0, -1}}, scene);
        if (h && std::abs(h->t - 1.0) < 1e-12)
            ++hits;
        // At most one primitive may claim the nearest hit, but never zero.
        int claims = 0;
        for (const auto &p : scene.primitives()) {
            double t;
            claims += intersect_primitive(p, Ray{{s, s, 1}, {0, 0, -1}}, 10.0, t) ? 1 : 0;
        }
        REQUIRE(claims >= 1);
    }
    REQUIRE(hits == 999);
}

TEST_CASE("bvh matches brute force on random scenes")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int scene_no = 0; scene_no < 10; ++scene_no) {
        std::vector<Facet> facets;
        const int n = 20 + static_cast<int>(rng() % 181);
        for (int i = 0; i < n; ++i) {
            const Vec3 c{u(rng), u(rng), u(rng)};
            if (i % 3 == 0)
                facets.push_back(Facet::rectangle(i + 1, c, random_unit(rng), random_unit(rng), 0.1 + 0.3 * std::abs(u(rng)),
                                                  0.1 + 0.3 * std::abs(u(rng))));
            else
                facets.push_back(Facet::triangle(i + 1, c, c + Vec3{0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng)},
                                                 c + Vec3{0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng)}));
        }
        if (scene_no % 2)
            facets.push_back(Facet::infinite_plane(1000, {0, 0, -1.2}, {0, 0, 1}));
        const Scene scene(facets);

        // Structural invariants.
        const auto &nodes = scene.bvh().nodes();
        std::multiset<std::uint32_t> items(scene.bvh().items().begin(), scene.bvh().items().end());
        REQUIRE(items.size() == scene.primitives().size());
        for (std::uint32_t i = 0; i < scene.primitives().size(); ++i)
            REQUIRE(items.count(i) == 1);
        for (const auto &node : nodes) {
            if (node.count == 0) {
                for (std::uint32_t c : {node.first, node.first + 1}) {
                    REQUIRE(node.box.contains(nodes[c].box));
                }
            }
        }

        for (int r = 0; r < 500; ++r) {
            const Ray ray{{2 * u(rng), 2 * u(rng), 2 * u(rng)}, random_unit(rng)};
            const auto a = intersect(ray, scene);
            const auto b = intersect_brute_force(ray, scene);
            REQUIRE(a.has_value() == b.has_value());
            if (a) {
                REQUIRE(a->t == b->t);
                REQUIRE(a->surface_id == b->surface_id);
            }
        }
    }
}

TEST_CASE("occlusion")
{
    // Plate between a source at y = 0 and a receiver at y = -1.
    const Facet plate = Facet::rectangle(2, {0, -0.5, 0.7}, {0, 1, 0}, {1, 0, 0}, 1.4, 0.5);
    const Scene scene({ground(), plate}, {2});
    const Vec3 src{0.1, 0, 0.7}, rx{0.2, -1, 0.8};
    REQUIRE(occluded(src, rx, scene));
    REQUIRE(occluded(rx, src, scene));
    const int ignore[] = {2};
    REQUIRE_FALSE(occluded(src, rx, scene, ignore));

    const Scene open({ground()});
    REQUIRE_FALSE(occluded(src, rx, open));

    // Segment ending on the plate: the end trim keeps it clear.
    REQUIRE_FALSE(occluded(src, {0.1, -0.5, 0.7}, scene));
    // Segment passing just outside the plate edge.
    REQUIRE_FALSE(occluded({0.71, 0, 0.7}, {0.71, -1, 0.7}, scene));

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 500; ++i) {
        const Vec3 a{u(rng), u(rng), 0.7 + 0.5 * u(rng)}, b{u(rng), u(rng), 0.7 + 0.5 * u(rng)};
        REQUIRE(occluded(a, b, scene) == occluded(b, a, scene));
    }
}
