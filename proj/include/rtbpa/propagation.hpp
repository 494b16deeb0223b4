// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rtbpa/geometry.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace rtbpa {

inline constexpr double kCrossPolThreshold = 1e-3;
inline constexpr int kMaxImageOrder = 5;

// One geometrical-optics leg from an image-domain point (endpoint_a) to an
// antenna (endpoint_b). vertices, interaction_sequence and normals are
// parallel arrays, one entry per bounce.
struct PropagationPath {
    Vec3 endpoint_a;
    Vec3 endpoint_b;
    std::vector<Vec3> vertices;
    std::vector<int> interaction_sequence;
    std::vector<Vec3> normals;
    double total_length = 0.0;
    int pol_sign = 1;
    std::uint64_t hash = 0;

    std::size_t order() const { return vertices.size(); }
    // Unit direction of the segment leaving endpoint_a.
    Vec3 first_direction() const;
};

struct PolarizationResult {
    Vec3 e_final;      // unit, after all PEC bounces
    int pol_sign = 1;  // sign of e_final . copol
    double projection; // e_final . copol
};

// Applies E <- 2(E.n)n - E at every bounce and projects onto `copol`.
// Throws CrossPolarized when |projection| < threshold and
// std::invalid_argument when e0 is not a unit vector transverse to the
// first segment.
PolarizationResult transport_polarization(const Vec3 &e0, const PropagationPath &path, const Vec3 &copol,
                                          double threshold = kCrossPolThreshold);

// Polarization sign of a leg whose launch polarization is `launch` (a
// dipole axis, projected transverse to the first segment). nullopt marks a
// cross-polarized leg.
std::optional<int> leg_polarization_sign(const PropagationPath &path, const Vec3 &launch, const Vec3 &copol,
                                         double threshold = kCrossPolThreshold);

// Order-sensitive 64-bit hash of a surface-id sequence; the empty
// sequence (LOS) hashes to 0 and nothing else does.
std::uint64_t path_hash(std::span<const int> interaction_sequence);

// Hash of the full Tx -> point -> Rx wavefront: tx sequence, a separator,
// then the rx sequence reversed.
std::uint64_t combined_hash(std::span<const int> tx_sequence, std::span<const int> rx_sequence);

// Exact specular path for one interaction sequence, or nullopt when the
// chain is geometrically invalid or occluded. All listed facets must be
// planar (NonPlanarReflector otherwise).
std::optional<PropagationPath> trace_sequence(const Vec3 &point, const Vec3 &antenna, const Scene &scene,
                                              std::span<const int> interaction_sequence);

// Every valid path with at most max_order bounces, LOS first, then by
// enumeration order (no immediate surface repeats).
std::vector<PropagationPath> find_paths_images(const Vec3 &point, const Vec3 &antenna, const Scene &scene,
                                               int max_order);

struct SbrConfig {
    std::size_t ray_count = 100000;
    int max_bounces = 2;
    double capture_radius = 0.05; // m
    std::uint64_t rng_seed = 0;
    bool refine = true;

    void validate() const;
};

// Shoots cfg.ray_count rays from `point`, captures those that pass within
// capture_radius of the antenna, deduplicates by path hash and, when
// cfg.refine is set, snaps each to its exact image-method geometry.
// The per-call RNG seed is cfg.rng_seed + launch_index. Output sorted by
// total_length.
std::vector<PropagationPath> find_paths_sbr(const Vec3 &point, const Vec3 &antenna, const Scene &scene,
                                            const SbrConfig &cfg, std::uint64_t launch_index = 0);

// Same ray set, captured against several antennas at once; result[i]
// equals find_paths_sbr(point, antennas[i], ...).
std::vector<std::vector<PropagationPath>> find_paths_sbr_multi(const Vec3 &point, std::span<const Vec3> antennas,
                                                               const Scene &scene, const SbrConfig &cfg,
                                                               std::uint64_t launch_index = 0);

// Unit launch directions used by find_paths_sbr: a Fibonacci sphere
// lattice under a uniformly random rotation derived from the seed.
std::vector<Vec3> sbr_directions(std::size_t count, std::uint64_t seed);

struct WavefrontPair {
    PropagationPath tx_leg;
    PropagationPath rx_leg;
    std::uint64_t combined_hash = 0;
    int delta = 0; // 1 when the co-pol parity is odd (pi shift)
    double phase_length = 0.0;
};

// Cartesian product of tx and rx legs with cross-polarized legs removed.
// pol_sign of each leg is computed with `copol` as launch and reference.
std::vector<WavefrontPair> pair_wavefronts(std::span<const PropagationPath> tx_paths,
                                           std::span<const PropagationPath> rx_paths, const Vec3 &copol);

// Compact leg record used by the synthesis and imaging kernels.
struct Leg {
    double length = 0.0;
    int sign = 1;
    std::uint64_t hash = 0;
};

// Image-method solver for one antenna: the mirrored antenna images of all
// candidate sequences are precomputed, so tracing a point costs only the
// plane intersections and occlusion tests.
class ImageTracer {
public:
    ImageTracer(const Scene &scene, const Vec3 &antenna, int max_order);

    std::size_t sequence_count() const { return offsets_.size() - 1; }
    std::span<const int> sequence(std::size_t i) const;
    const Vec3 &antenna() const { return antenna_; }

    std::optional<PropagationPath> trace(const Vec3 &point, std::size_t i) const;
    std::vector<PropagationPath> trace_all(const Vec3 &point) const;

    // Appends co-polarized legs from `point` (launch polarization `launch`)
    // to `out`; cross-polarized legs are skipped.
    void legs(const Vec3 &point, const Vec3 &launch, const Vec3 &copol, std::vector<Leg> &out) const;

private:
    // Writes bounce points into `bounce`; returns false for invalid chains.
    bool solve(const Vec3 &point, std::size_t i, Vec3 *bounce) const;

    const Scene *scene_;
    Vec3 antenna_;
    std::vector<std::size_t> offsets_;   // into ids_/facet_idx_/hashes per sequence
    std::vector<int> ids_;
    std::vector<std::size_t> facet_idx_;
    std::vector<Vec3> images_;           // per sequence: J_n ... J_1 (first aim first)
    std::vector<std::uint64_t> hashes_;
};

enum class PathEngineKind { Images, Sbr };

struct PathEngineConfig {
    PathEngineKind kind = PathEngineKind::Images;
    int max_order = 1; // also the SBR bounce limit
    SbrConfig sbr;
};

// Engine-dispatched path finder between arbitrary points and a fixed
// antenna set. Safe for concurrent use; per-call state is local.
class PathFinder {
public:
    PathFinder(const Scene &scene, std::span<const Vec3> antennas, const PathEngineConfig &cfg);

    std::size_t antenna_count() const { return antennas_.size(); }
    const PathEngineConfig &config() const { return cfg_; }

    // Full paths from `point` to every antenna. launch_index seeds SBR.
    std::vector<std::vector<PropagationPath>> paths(const Vec3 &point, std::uint64_t launch_index) const;

    // Co-polarized legs from `point` to every antenna; out is resized to
    // antenna_count() and each entry cleared first.
    void legs(const Vec3 &point, const Vec3 &launch, const Vec3 &copol, std::uint64_t launch_index,
              std::vector<std::vector<Leg>> &out) const;

private:
    const Scene *scene_;
    std::vector<Vec3> antennas_;
    PathEngineConfig cfg_;
    std::vector<ImageTracer> tracers_;
};

} // namespace rtbpa
