// SPDX-License-Identifier: Apache-2.0
#include "rtbpa/propagation.hpp"

#include "rtbpa/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace rtbpa {

namespace {

constexpr std::uint64_t kHashBasis = 0xcbf29ce484222325ULL;

std::uint64_t splitmix(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Ids are encoded as uint32 + 1 so that the value 0 can act as separator.
std::uint64_t fold(std::uint64_t h, std::uint64_t code) { return splitmix(h ^ splitmix(code)); }

std::uint64_t encode(int id) { return static_cast<std::uint64_t>(static_cast<std::uint32_t>(id)) + 1; }

std::uint64_t finish(std::uint64_t h) { return h == 0 ? 1 : h; }

// Shared leg check for image-method chains: segments must be unobstructed by
// everything except the surfaces at their ends.
bool chain_clear(const Vec3 &point, const Vec3 &antenna, const Vec3 *bounce, const int *ids, std::size_t n,
                 const Scene &scene)
{
    Vec3 from = point;
    for (std::size_t s = 0; s <= n; ++s) {
        const Vec3 to = s < n ? bounce[s] : antenna;
        int ignore[2];
        std::size_t count = 0;
        if (s > 0)
            ignore[count++] = ids[s - 1];
        if (s < n)
            ignore[count++] = ids[s];
        if (distance(from, to) <= kSelfIntersectionEpsilon)
            return false;
        if (occluded(from, to, scene, std::span<const int>(ignore, count)))
            return false;
        from = to;
    }
    return true;
}

// Unfolds a chain towards precomputed images. aims[s] is the image of the
// antenna that the segment leaving bounce s-1 points at.
bool unfold(const Vec3 &point, const Facet *const *facets, const Vec3 *aims, std::size_t n, Vec3 *bounce)
{
    Vec3 cur = point;
    for (std::size_t s = 0; s < n; ++s) {
        const Facet &f = *facets[s];
        const double dc = f.signed_distance(cur);
        const double dt = f.signed_distance(aims[s]);
        if (!(dc * dt < 0.0))
            return false;
        const Vec3 q = cur + (aims[s] - cur) * (dc / (dc - dt));
        if (!f.contains(q))
            return false;
        const Vec3 dir = normalized(aims[s] - cur);
        if (std::abs(dot(dir, f.normal)) <= kGrazingTolerance)
            return false;
        bounce[s] = q;
        cur = q;
    }
    return true;
}

double chain_length(const Vec3 &point, const Vec3 &antenna, const Vec3 *bounce, std::size_t n)
{
    double len = 0.0;
    Vec3 from = point;
    for (std::size_t s = 0; s < n; ++s) {
        len += distance(from, bounce[s]);
        from = bounce[s];
    }
    return len + distance(from, antenna);
}

std::optional<int> sign_from_normals(const Vec3 &d0, const Vec3 *normals, std::size_t n, const Vec3 &launch,
                                     const Vec3 &copol, double threshold)
{
    Vec3 e = launch - d0 * dot(launch, d0);
    const double en = norm(e);
    if (en < threshold)
        return std::nullopt;
    e = e / en;
    for (std::size_t s = 0; s < n; ++s)
        e = normals[s] * (2.0 * dot(e, normals[s])) - e;
    const double p = dot(e, copol);
    if (std::abs(p) < threshold)
        return std::nullopt;
    return p > 0.0 ? 1 : -1;
}

PropagationPath make_path(const Vec3 &point, const Vec3 &antenna, const Vec3 *bounce, const int *ids,
                          const Facet *const *facets, std::size_t n, std::uint64_t hash)
{
    PropagationPath path;
    path.endpoint_a = point;
    path.endpoint_b = antenna;
    path.vertices.assign(bounce, bounce + n);
    path.interaction_sequence.assign(ids, ids + n);
    path.normals.reserve(n);
    for (std::size_t s = 0; s < n; ++s)
        path.normals.push_back(facets[s]->normal);
    path.total_length = chain_length(point, antenna, bounce, n);
    path.hash = hash;
    return path;
}

void require_planar(const Scene &scene)
{
    for (const auto &f : scene.facets()) {
        if (!f.planar)
            throw NonPlanarReflector("facet " + std::to_string(f.id) + " has no supporting plane");
    }
}

} // namespace

Vec3 PropagationPath::first_direction() const
{
    return normalized((vertices.empty() ? endpoint_b : vertices.front()) - endpoint_a);
}

PolarizationResult transport_polarization(const Vec3 &e0, const PropagationPath &path, const Vec3 &copol,
                                          double threshold)
{
    if (std::abs(norm(e0) - 1.0) > 1e-9)
        throw std::invalid_argument("transport_polarization: e0 must be unit-norm");
    if (std::abs(dot(e0, path.first_direction())) > 1e-9)
        throw std::invalid_argument("transport_polarization: e0 must be transverse to the first segment");

    Vec3 e = e0;
    for (const Vec3 &n : path.normals)
        e = n * (2.0 * dot(e, n)) - e;
    const double p = dot(e, copol);
    if (std::abs(p) < threshold)
        throw CrossPolarized("co-polarized projection " + std::to_string(p) + " below threshold");
    return {e, p > 0.0 ? 1 : -1, p};
}

std::optional<int> leg_polarization_sign(const PropagationPath &path, const Vec3 &launch, const Vec3 &copol,
                                         double threshold)
{
    return sign_from_normals(path.first_direction(), path.normals.data(), path.normals.size(), launch, copol,
                             threshold);
}

std::uint64_t path_hash(std::span<const int> interaction_sequence)
{
    if (interaction_sequence.empty())
        return 0;
    std::uint64_t h = kHashBasis;
    for (int id : interaction_sequence)
        h = fold(h, encode(id));
    return finish(h);
}

std::uint64_t combined_hash(std::span<const int> tx_sequence, std::span<const int> rx_sequence)
{
    std::uint64_t h = kHashBasis;
    for (int id : tx_sequence)
        h = fold(h, encode(id));
    h = fold(h, 0);
    for (auto it = rx_sequence.rbegin(); it != rx_sequence.rend(); ++it)
        h = fold(h, encode(*it));
    return finish(h);
}

std::optional<PropagationPath> trace_sequence(const Vec3 &point, const Vec3 &antenna, const Scene &scene,
                                              std::span<const int> interaction_sequence)
{
    const std::size_t n = interaction_sequence.size();
    std::vector<const Facet *> facets(n);
    for (std::size_t s = 0; s < n; ++s) {
        facets[s] = &scene.facet(interaction_sequence[s]);
        if (!facets[s]->planar)
            throw NonPlanarReflector("facet " + std::to_string(facets[s]->id) + " has no supporting plane");
        if (s > 0 && interaction_sequence[s] == interaction_sequence[s - 1])
            return std::nullopt;
    }
    // aims[s] = antenna mirrored across facets n-1, ..., s.
    std::vector<Vec3> aims(n);
    Vec3 image = antenna;
    for (std::size_t s = n; s-- > 0;) {
        image = mirror_point(image, *facets[s]);
        aims[s] = image;
    }
    std::vector<Vec3> bounce(n);
    if (!unfold(point, facets.data(), aims.data(), n, bounce.data()))
        return std::nullopt;
    if (!chain_clear(point, antenna, bounce.data(), interaction_sequence.data(), n, scene))
        return std::nullopt;
    return make_path(point, antenna, bounce.data(), interaction_sequence.data(), facets.data(), n,
                     path_hash(interaction_sequence));
}

ImageTracer::ImageTracer(const Scene &scene, const Vec3 &antenna, int max_order)
    : scene_(&scene), antenna_(antenna)
{
    if (max_order < 0 || max_order > kMaxImageOrder)
        throw std::invalid_argument("image method supports 0 <= max_order <= " + std::to_string(kMaxImageOrder));
    require_planar(scene);

    const auto facets = scene.facets();
    offsets_ = {0, 0}; // sequence 0 is LOS: empty range
    hashes_.push_back(0);

    std::vector<std::size_t> stack;
    // Depth-first enumeration without immediate repeats.
    auto emit = [&](const std::vector<std::size_t> &seq) {
        Vec3 image = antenna;
        std::vector<Vec3> aims(seq.size());
        std::vector<int> ids(seq.size());
        for (std::size_t s = seq.size(); s-- > 0;) {
            image = mirror_point(image, facets[seq[s]]);
            aims[s] = image;
        }
        for (std::size_t s = 0; s < seq.size(); ++s) {
            ids[s] = facets[seq[s]].id;
            ids_.push_back(ids[s]);
            facet_idx_.push_back(seq[s]);
            images_.push_back(aims[s]);
        }
        offsets_.push_back(ids_.size());
        hashes_.push_back(path_hash(ids));
    };
    auto recurse = [&](auto &&self, int depth) -> void {
        if (depth == max_order)
            return;
        for (std::size_t f = 0; f < facets.size(); ++f) {
            if (!stack.empty() && stack.back() == f)
                continue;
            stack.push_back(f);
            emit(stack);
            self(self, depth + 1);
            stack.pop_back();
        }
    };
    recurse(recurse, 0);
}

std::span<const int> ImageTracer::sequence(std::size_t i) const
{
    return std::span<const int>(ids_).subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
}

bool ImageTracer::solve(const Vec3 &point, std::size_t i, Vec3 *bounce) const
{
    const std::size_t off = offsets_[i];
    const std::size_t n = offsets_[i + 1] - off;
    const Facet *facets[kMaxImageOrder];
    for (std::size_t s = 0; s < n; ++s)
        facets[s] = &scene_->facets()[facet_idx_[off + s]];
    if (!unfold(point, facets, images_.data() + off, n, bounce))
        return false;
    return chain_clear(point, antenna_, bounce, ids_.data() + off, n, *scene_);
}

std::optional<PropagationPath> ImageTracer::trace(const Vec3 &point, std::size_t i) const
{
    Vec3 bounce[kMaxImageOrder];
    if (!solve(point, i, bounce))
        return std::nullopt;
    const std::size_t off = offsets_[i];
    const std::size_t n = offsets_[i + 1] - off;
    const Facet *facets[kMaxImageOrder];
    for (std::size_t s = 0; s < n; ++s)
        facets[s] = &scene_->facets()[facet_idx_[off + s]];
    return make_path(point, antenna_, bounce, ids_.data() + off, facets, n, hashes_[i]);
}

std::vector<PropagationPath> ImageTracer::trace_all(const Vec3 &point) const
{
    std::vector<PropagationPath> out;
    for (std::size_t i = 0; i < sequence_count(); ++i) {
        if (auto p = trace(point, i))
            out.push_back(std::move(*p));
    }
    return out;
}

void ImageTracer::legs(const Vec3 &point, const Vec3 &launch, const Vec3 &copol, std::vector<Leg> &out) const
{
    Vec3 bounce[kMaxImageOrder];
    Vec3 normals[kMaxImageOrder];
    for (std::size_t i = 0; i < sequence_count(); ++i) {
        if (!solve(point, i, bounce))
            continue;
        const std::size_t off = offsets_[i];
        const std::size_t n = offsets_[i + 1] - off;
        for (std::size_t s = 0; s < n; ++s)
            normals[s] = scene_->facets()[facet_idx_[off + s]].normal;
        const Vec3 d0 = normalized((n > 0 ? bounce[0] : antenna_) - point);
        const auto sign = sign_from_normals(d0, normals, n, launch, copol, kCrossPolThreshold);
        if (!sign)
            continue;
        out.push_back({chain_length(point, antenna_, bounce, n), *sign, hashes_[i]});
    }
}

std::vector<PropagationPath> find_paths_images(const Vec3 &point, const Vec3 &antenna, const Scene &scene,
                                               int max_order)
{
    return ImageTracer(scene, antenna, max_order).trace_all(point);
}

void SbrConfig::validate() const
{
    if (ray_count < 1)
        throw std::invalid_argument("SbrConfig: ray_count must be >= 1");
    if (max_bounces < 0)
        throw std::invalid_argument("SbrConfig: max_bounces must be >= 0");
    if (!(capture_radius > 0.0))
        throw std::invalid_argument("SbrConfig: capture_radius must be > 0");
}

std::vector<Vec3> sbr_directions(std::size_t count, std::uint64_t seed)
{
    std::mt19937_64 rng(splitmix(seed));
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    // Uniform random rotation (Shoemake's quaternion construction).
    const double u1 = uni(rng), u2 = uni(rng), u3 = uni(rng);
    const double two_pi = 2.0 * std::numbers::pi;
    const double qx = std::sqrt(1.0 - u1) * std::sin(two_pi * u2);
    const double qy = std::sqrt(1.0 - u1) * std::cos(two_pi * u2);
    const double qz = std::sqrt(u1) * std::sin(two_pi * u3);
    const double qw = std::sqrt(u1) * std::cos(two_pi * u3);
    const double r00 = 1 - 2 * (qy * qy + qz * qz), r01 = 2 * (qx * qy - qz * qw), r02 = 2 * (qx * qz + qy * qw);
    const double r10 = 2 * (qx * qy + qz * qw), r11 = 1 - 2 * (qx * qx + qz * qz), r12 = 2 * (qy * qz - qx * qw);
    const double r20 = 2 * (qx * qz - qy * qw), r21 = 2 * (qy * qz + qx * qw), r22 = 1 - 2 * (qx * qx + qy * qy);

    const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
    std::vector<Vec3> dirs(count);
    const double n = static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / n;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden_angle * static_cast<double>(i);
        const Vec3 v{r * std::cos(phi), r * std::sin(phi), z};
        dirs[i] = normalized(Vec3{r00 * v.x + r01 * v.y + r02 * v.z, r10 * v.x + r11 * v.y + r12 * v.z,
                                  r20 * v.x + r21 * v.y + r22 * v.z});
    }
    return dirs;
}

std::vector<std::vector<PropagationPath>> find_paths_sbr_multi(const Vec3 &point, std::span<const Vec3> antennas,
                                                               const Scene &scene, const SbrConfig &cfg,
                                                               std::uint64_t launch_index)
{
    cfg.validate();
    const auto dirs = sbr_directions(cfg.ray_count, cfg.rng_seed + launch_index);
    const double r2 = cfg.capture_radius * cfg.capture_radius;

    // First capture per (antenna, hash) wins; rays are processed in order.
    std::vector<std::map<std::uint64_t, PropagationPath>> found(antennas.size());

    std::vector<Vec3> vertices;
    std::vector<int> ids;
    std::vector<Vec3> normals;
    for (const Vec3 &d0 : dirs) {
        vertices.clear();
        ids.clear();
        normals.clear();
        Ray ray{point, d0};
        std::uint64_t hash = 0;
        for (int bounce = 0;; ++bounce) {
            const auto hit = intersect(ray, scene);
            const double t_end = hit ? hit->t : std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < antennas.size(); ++a) {
                const Vec3 rel = antennas[a] - ray.origin;
                const double t_close = std::clamp(dot(rel, ray.direction), 0.0, t_end);
                const Vec3 miss = rel - ray.direction * t_close;
                if (dot(miss, miss) > r2 || found[a].count(hash))
                    continue;
                PropagationPath path;
                path.endpoint_a = point;
                path.endpoint_b = antennas[a];
                path.vertices = vertices;
                path.interaction_sequence = ids;
                path.normals = normals;
                path.total_length = chain_length(point, antennas[a], vertices.data(), vertices.size());
                path.hash = hash;
                found[a].emplace(hash, std::move(path));
            }
            if (!hit || bounce == cfg.max_bounces)
                break;
            Vec3 reflected;
            try {
                reflected = reflect_direction(ray.direction, hit->normal);
            } catch (const GrazingIncidence &) {
                break;
            }
            vertices.push_back(hit->point);
            ids.push_back(hit->surface_id);
            normals.push_back(hit->normal);
            hash = path_hash(ids);
            ray = Ray{hit->point, normalized(reflected)};
        }
    }

    std::vector<std::vector<PropagationPath>> out(antennas.size());
    for (std::size_t a = 0; a < antennas.size(); ++a) {
        for (auto &[hash, path] : found[a]) {
            if (cfg.refine) {
                bool planar = true;
                for (int id : path.interaction_sequence)
                    planar = planar && scene.facet(id).planar;
                if (planar) {
                    auto exact = trace_sequence(point, antennas[a], scene, path.interaction_sequence);
                    if (!exact)
                        continue;
                    out[a].push_back(std::move(*exact));
                    continue;
                }
            }
            out[a].push_back(std::move(path));
        }
        std::stable_sort(out[a].begin(), out[a].end(), [](const PropagationPath &x, const PropagationPath &y) {
            return x.total_length < y.total_length;
        });
    }
    return out;
}

std::vector<PropagationPath> find_paths_sbr(const Vec3 &point, const Vec3 &antenna, const Scene &scene,
                                            const SbrConfig &cfg, std::uint64_t launch_index)
{
    return std::move(find_paths_sbr_multi(point, std::span<const Vec3>(&antenna, 1), scene, cfg, launch_index)[0]);
}

std::vector<WavefrontPair> pair_wavefronts(std::span<const PropagationPath> tx_paths,
                                           std::span<const PropagationPath> rx_paths, const Vec3 &copol)
{
    auto classify = [&](std::span<const PropagationPath> paths) {
        std::vector<PropagationPath> kept;
        for (const auto &p : paths) {
            if (auto sign = leg_polarization_sign(p, copol, copol)) {
                kept.push_back(p);
                kept.back().pol_sign = *sign;
            }
        }
        return kept;
    };
    const auto tx = classify(tx_paths);
    const auto rx = classify(rx_paths);

    std::vector<WavefrontPair> pairs;
    pairs.reserve(tx.size() * rx.size());
    for (const auto &a : tx) {
        for (const auto &b : rx) {
            WavefrontPair w;
            w.tx_leg = a;
            w.rx_leg = b;
            w.combined_hash = combined_hash(a.interaction_sequence, b.interaction_sequence);
            w.delta = a.pol_sign * b.pol_sign == 1 ? 0 : 1;
            w.phase_length = a.total_length + b.total_length;
            pairs.push_back(std::move(w));
        }
    }
    return pairs;
}

PathFinder::PathFinder(const Scene &scene, std::span<const Vec3> antennas, const PathEngineConfig &cfg)
    : scene_(&scene), antennas_(antennas.begin(), antennas.end()), cfg_(cfg)
{
    if (cfg_.max_order < 0)
        throw std::invalid_argument("max_order must be >= 0");
    if (cfg_.kind == PathEngineKind::Images) {
        tracers_.reserve(antennas_.size());
        for (const auto &a : antennas_)
            tracers_.emplace_back(scene, a, cfg_.max_order);
    } else {
        cfg_.sbr.max_bounces = cfg_.max_order;
        cfg_.sbr.validate();
    }
}

std::vector<std::vector<PropagationPath>> PathFinder::paths(const Vec3 &point, std::uint64_t launch_index) const
{
    if (cfg_.kind == PathEngineKind::Sbr)
        return find_paths_sbr_multi(point, antennas_, *scene_, cfg_.sbr, launch_index);
    std::vector<std::vector<PropagationPath>> out;
    out.reserve(tracers_.size());
    for (const auto &t : tracers_)
        out.push_back(t.trace_all(point));
    return out;
}

void PathFinder::legs(const Vec3 &point, const Vec3 &launch, const Vec3 &copol, std::uint64_t launch_index,
                      std::vector<std::vector<Leg>> &out) const
{
    out.resize(antennas_.size());
    for (auto &v : out)
        v.clear();
    if (cfg_.kind == PathEngineKind::Images) {
        for (std::size_t a = 0; a < tracers_.size(); ++a)
            tracers_[a].legs(point, launch, copol, out[a]);
        return;
    }
    const auto all = find_paths_sbr_multi(point, antennas_, *scene_, cfg_.sbr, launch_index);
    for (std::size_t a = 0; a < all.size(); ++a) {
        for (const auto &p : all[a]) {
            if (auto sign = leg_polarization_sign(p, launch, copol))
                out[a].push_back({p.total_length, *sign, p.hash});
        }
    }
}

} // namespace rtbpa
