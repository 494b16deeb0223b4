// SPDX-License-Identifier: Apache-2.0
#include "rtbpa/imaging.hpp"

#include "rtbpa/errors.hpp"
#include "rtbpa/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rtbpa {

namespace {

// sum_k T[k] e^{+j k L} over a uniform wavenumber sweep, using a phasor
// recurrence instead of one sincos per frequency.
cdouble matched_sum(const cdouble *samples, std::size_t n_k, double k0, double dk, double length)
{
    double pr = std::cos(k0 * length), pi = std::sin(k0 * length);
    const double sr = std::cos(dk * length), si = std::sin(dk * length);
    double ar = 0.0, ai = 0.0;
    for (std::size_t k = 0; k < n_k; ++k) {
        const double tr = samples[k].real();
        const double ti = samples[k].imag();
        ar += tr * pr - ti * pi;
        ai += tr * pi + ti * pr;
        const double nr = pr * sr - pi * si;
        pi = pr * si + pi * sr;
        pr = nr;
    }
    return {ar, ai};
}

void check_data(const MeasurementSet &data)
{
    if (data.samples.empty() || data.n_rx() == 0 || data.n_tx() == 0)
        throw EmptyInput("reconstruction: empty measurement set");
    data.validate();
}

// Shared accumulation for fresh and cached legs so both give identical bits.
template <class TxLegs, class RxLegs>
cdouble accumulate_point(const MeasurementSet &data, bool half_wave, TxLegs &&tx_legs, RxLegs &&rx_legs)
{
    const std::size_t n_k = data.n_k();
    const double k0 = data.sweep.k_start();
    const double dk = data.sweep.k_step();
    cdouble acc{};
    if (data.mode == MeasurementMode::Radiation) {
        for (std::size_t r = 0; r < data.n_rx(); ++r) {
            const cdouble *samples = &data.at(0, r, 0);
            for (const Leg &b : rx_legs(r)) {
                const double sign = half_wave ? static_cast<double>(b.sign) : 1.0;
                acc += sign * matched_sum(samples, n_k, k0, dk, b.length);
            }
        }
        return acc;
    }
    for (std::size_t t = 0; t < data.n_tx(); ++t) {
        const auto txl = tx_legs(t);
        for (std::size_t r = 0; r < data.n_rx(); ++r) {
            const cdouble *samples = &data.at(t, r, 0);
            for (const Leg &a : txl) {
                for (const Leg &b : rx_legs(r)) {
                    const double sign = half_wave ? static_cast<double>(a.sign * b.sign) : 1.0;
                    acc += sign * matched_sum(samples, n_k, k0, dk, a.length + b.length);
                }
            }
        }
    }
    return acc;
}

} // namespace

ImageGrid ImageGrid::planar(const Vec3 &center, const Vec3 &ax, const Vec3 &ay, double spacing, std::size_t nx,
                            std::size_t ny)
{
    ImageGrid g;
    g.axes = {normalized(ax), normalized(ay), normalized(cross(ax, ay))};
    g.spacing = {spacing, spacing, spacing};
    g.dims = {nx, ny, 1};
    g.origin = center - g.axes[0] * (0.5 * spacing * static_cast<double>(nx - 1)) -
               g.axes[1] * (0.5 * spacing * static_cast<double>(ny - 1));
    g.clear_values();
    return g;
}

VoxelIndex ImageGrid::unravel(std::size_t linear) const
{
    return {linear % dims[0], (linear / dims[0]) % dims[1], linear / (dims[0] * dims[1])};
}

Vec3 ImageGrid::voxel_center(std::size_t i, std::size_t j, std::size_t l) const
{
    return origin + axes[0] * (static_cast<double>(i) * spacing[0]) + axes[1] * (static_cast<double>(j) * spacing[1]) +
           axes[2] * (static_cast<double>(l) * spacing[2]);
}

Vec3 ImageGrid::voxel_center(std::size_t linear) const
{
    const auto v = unravel(linear);
    return voxel_center(v[0], v[1], v[2]);
}

std::vector<Vec3> ImageGrid::voxel_centers() const
{
    std::vector<Vec3> out(size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = voxel_center(i);
    return out;
}

void ImageGrid::validate() const
{
    for (int a = 0; a < 3; ++a) {
        if (!(spacing[a] > 0.0))
            throw std::invalid_argument("grid spacing must be > 0");
        if (dims[a] == 0)
            throw std::invalid_argument("grid dims must be >= 1");
        if (std::abs(norm(axes[a]) - 1.0) > 1e-9)
            throw std::invalid_argument("grid axes must be unit vectors");
    }
    if (std::abs(dot(axes[0], axes[1])) > 1e-9 || std::abs(dot(axes[0], axes[2])) > 1e-9 ||
        std::abs(dot(axes[1], axes[2])) > 1e-9)
        throw std::invalid_argument("grid axes must be orthogonal");
    if (!values.empty() && values.size() != size())
        throw ShapeMismatch("grid values do not match dims");
}

bool ImageGrid::same_geometry(const ImageGrid &o) const
{
    return origin == o.origin && axes == o.axes && spacing == o.spacing && dims == o.dims;
}

ReconstructionConfig ReconstructionConfig::for_data(const MeasurementSet &data, int max_order)
{
    ReconstructionConfig cfg;
    cfg.engine.max_order = max_order;
    cfg.mode = data.mode;
    cfg.copol = data.copol;
    return cfg;
}

void ReconstructionConfig::validate() const
{
    if (engine.max_order < 0)
        throw std::invalid_argument("max_order must be >= 0");
    if (std::abs(norm(copol) - 1.0) > 1e-9)
        throw std::invalid_argument("copol must be a unit vector");
    if (engine.kind == PathEngineKind::Sbr)
        engine.sbr.validate();
}

std::vector<cdouble> naive_backproject(const MeasurementSet &data, std::span<const Vec3> points, unsigned workers)
{
    check_data(data);
    std::vector<cdouble> out(points.size());
    const std::size_t n_k = data.n_k();
    const double k0 = data.sweep.k_start();
    const double dk = data.sweep.k_step();
    const bool scattering = data.mode == MeasurementMode::Scattering;
    parallel_for(points.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            cdouble acc{};
            for (std::size_t t = 0; t < data.n_tx(); ++t) {
                const double tx_len = scattering ? distance(points[p], data.tx_positions[t]) : 0.0;
                for (std::size_t r = 0; r < data.n_rx(); ++r) {
                    const double rx_len = distance(points[p], data.rx_positions[r]);
                    const double length = scattering ? tx_len + rx_len : rx_len;
                    acc += matched_sum(&data.at(t, r, 0), n_k, k0, dk, length);
                }
            }
            out[p] = acc;
        }
    });
    return out;
}

ImageGrid naive_bpa(const MeasurementSet &data, ImageGrid grid, unsigned workers)
{
    grid.validate();
    grid.values = naive_backproject(data, grid.voxel_centers(), workers);
    return grid;
}

std::vector<cdouble> rt_backproject(const MeasurementSet &data, std::span<const Vec3> points, const Scene &scene,
                                    const ReconstructionConfig &cfg)
{
    check_data(data);
    cfg.validate();
    if (cfg.mode != data.mode)
        throw ShapeMismatch("reconstruction mode does not match the measurement mode");
    const bool scattering = data.mode == MeasurementMode::Scattering;
    const PathFinder rx_finder(scene, data.rx_positions, cfg.engine);
    const PathFinder tx_finder(scene, scattering ? std::span<const Vec3>(data.tx_positions) : std::span<const Vec3>{},
                               cfg.engine);

    std::vector<cdouble> out(points.size());
    parallel_for(points.size(), cfg.workers, [&](std::size_t begin, std::size_t end) {
        std::vector<std::vector<Leg>> tx_legs, rx_legs;
        for (std::size_t p = begin; p < end; ++p) {
            rx_finder.legs(points[p], cfg.copol, cfg.copol, p, rx_legs);
            if (scattering)
                tx_finder.legs(points[p], cfg.copol, cfg.copol, p, tx_legs);
            out[p] = accumulate_point(
                data, cfg.apply_half_wave, [&](std::size_t t) { return std::span<const Leg>(tx_legs[t]); },
                [&](std::size_t r) { return std::span<const Leg>(rx_legs[r]); });
        }
    });
    return out;
}

ImageGrid rt_bpa(const MeasurementSet &data, ImageGrid grid, const Scene &scene, const ReconstructionConfig &cfg)
{
    grid.validate();
    grid.values = rt_backproject(data, grid.voxel_centers(), scene, cfg);
    return grid;
}

PathTable::PathTable(std::span<const Vec3> points, const MeasurementSet &shape, const Scene &scene,
                     const ReconstructionConfig &cfg)
    : points_(points.size()), n_tx_(shape.mode == MeasurementMode::Scattering ? shape.n_tx() : 0),
      n_rx_(shape.n_rx())
{
    cfg.validate();
    const PathFinder rx_finder(scene, shape.rx_positions, cfg.engine);
    const PathFinder tx_finder(scene, n_tx_ > 0 ? std::span<const Vec3>(shape.tx_positions) : std::span<const Vec3>{},
                               cfg.engine);

    std::vector<std::vector<std::vector<Leg>>> per_point(points.size());
    parallel_for(points.size(), cfg.workers, [&](std::size_t begin, std::size_t end) {
        std::vector<std::vector<Leg>> tx_legs, rx_legs;
        for (std::size_t p = begin; p < end; ++p) {
            rx_finder.legs(points[p], cfg.copol, cfg.copol, p, rx_legs);
            tx_finder.legs(points[p], cfg.copol, cfg.copol, p, tx_legs);
            auto &slots = per_point[p];
            slots.reserve(n_tx_ + n_rx_);
            for (auto &l : tx_legs)
                slots.push_back(l);
            for (auto &l : rx_legs)
                slots.push_back(l);
        }
    });

    offsets_.reserve(points.size() * (n_tx_ + n_rx_) + 1);
    offsets_.push_back(0);
    for (auto &slots : per_point) {
        for (auto &l : slots) {
            legs_.insert(legs_.end(), l.begin(), l.end());
            offsets_.push_back(legs_.size());
        }
        slots.clear();
        slots.shrink_to_fit();
    }
}

std::span<const Leg> PathTable::tx_legs(std::size_t point, std::size_t tx) const
{
    const std::size_t slot = point * (n_tx_ + n_rx_) + tx;
    return std::span<const Leg>(legs_).subspan(offsets_[slot], offsets_[slot + 1] - offsets_[slot]);
}

std::span<const Leg> PathTable::rx_legs(std::size_t point, std::size_t rx) const
{
    const std::size_t slot = point * (n_tx_ + n_rx_) + n_tx_ + rx;
    return std::span<const Leg>(legs_).subspan(offsets_[slot], offsets_[slot + 1] - offsets_[slot]);
}

std::vector<cdouble> rt_backproject(const MeasurementSet &data, const PathTable &table,
                                    const ReconstructionConfig &cfg)
{
    check_data(data);
    if (table.n_rx() != data.n_rx() ||
        (data.mode == MeasurementMode::Scattering && table.n_tx() != data.n_tx()))
        throw ShapeMismatch("path table does not match the measurement apertures");
    std::vector<cdouble> out(table.point_count());
    parallel_for(out.size(), cfg.workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            out[p] = accumulate_point(
                data, cfg.apply_half_wave, [&](std::size_t t) { return table.tx_legs(p, t); },
                [&](std::size_t r) { return table.rx_legs(p, r); });
        }
    });
    return out;
}

ImageGrid rt_bpa(const MeasurementSet &data, ImageGrid grid, const PathTable &table, const ReconstructionConfig &cfg)
{
    grid.validate();
    if (table.point_count() != grid.size())
        throw ShapeMismatch("path table does not match the grid");
    grid.values = rt_backproject(data, table, cfg);
    return grid;
}

double adjoint_pair_check(std::span<const PointScatterer> targets, const AntennaArray &arrays, const Scene &scene,
                          const FrequencySweep &sweep, const ReconstructionConfig &cfg,
                          std::span<const cdouble> random_T, std::span<const cdouble> random_s,
                          const AdjointCheckOptions &opts)
{
    if (random_s.size() != targets.size())
        throw ShapeMismatch("random_s must have one entry per target");

    std::vector<PointScatterer> weighted(targets.begin(), targets.end());
    for (std::size_t i = 0; i < weighted.size(); ++i)
        weighted[i].reflectivity = random_s[i];

    ForwardOptions fwd;
    fwd.engine = cfg.engine;
    fwd.apply_half_wave = opts.forward_half_wave;
    fwd.workers = cfg.workers;
    const MeasurementSet forward = synthesize_scattering_data(weighted, arrays, scene, sweep, fwd);
    if (random_T.size() != forward.samples.size())
        throw ShapeMismatch("random_T does not match the measurement tensor");

    MeasurementSet probe = forward;
    probe.samples.assign(random_T.begin(), random_T.end());

    std::vector<Vec3> points;
    for (const auto &t : targets)
        points.push_back(t.position);
    const auto adjoint =
        opts.naive_adjoint ? naive_backproject(probe, points, cfg.workers) : rt_backproject(probe, points, scene, cfg);

    cdouble lhs{}, rhs{};
    double fs_norm2 = 0.0, t_norm2 = 0.0;
    for (std::size_t i = 0; i < random_T.size(); ++i) {
        lhs += forward.samples[i] * std::conj(random_T[i]);
        fs_norm2 += std::norm(forward.samples[i]);
        t_norm2 += std::norm(random_T[i]);
    }
    for (std::size_t v = 0; v < random_s.size(); ++v)
        rhs += random_s[v] * std::conj(adjoint[v]);
    const double scale = std::sqrt(fs_norm2) * std::sqrt(t_norm2);
    if (!(scale > 0.0))
        throw Singular("adjoint_pair_check: zero forward response or probe");
    return std::abs(lhs - rhs) / scale;
}

std::size_t argmax_magnitude(const ImageGrid &image)
{
    if (image.values.empty())
        throw EmptyImage("image has no values");
    std::size_t best = 0;
    double best_mag = -1.0;
    for (std::size_t i = 0; i < image.values.size(); ++i) {
        const double m = std::abs(image.values[i]);
        if (m > best_mag) {
            best_mag = m;
            best = i;
        }
    }
    return best;
}

std::vector<double> normalized_db(const ImageGrid &image)
{
    std::vector<double> db(image.values.size(), kImageFloorDb);
    if (image.values.empty())
        return db;
    const double peak = std::abs(image.values[argmax_magnitude(image)]);
    if (!(peak > 0.0))
        return db;
    for (std::size_t i = 0; i < db.size(); ++i) {
        const double m = std::abs(image.values[i]) / peak;
        db[i] = m > 0.0 ? std::max(kImageFloorDb, 20.0 * std::log10(m)) : kImageFloorDb;
    }
    return db;
}

PsfMetrics psf_metrics(const ImageGrid &image, const Vec3 &axis, const VoxelIndex &peak)
{
    int a = -1;
    for (int c = 0; c < 3; ++c) {
        if (std::abs(std::abs(dot(normalized(axis), image.axes[c])) - 1.0) < 1e-9)
            a = c;
    }
    if (a < 0)
        throw std::invalid_argument("psf_metrics: axis is not parallel to a grid axis");
    for (int c = 0; c < 3; ++c) {
        if (peak[c] >= image.dims[c])
            throw std::invalid_argument("psf_metrics: peak outside the grid");
    }

    const std::size_t n = image.dims[a];
    std::vector<double> line(n);
    VoxelIndex v = peak;
    for (std::size_t i = 0; i < n; ++i) {
        v[a] = i;
        line[i] = std::abs(image.values[image.index(v[0], v[1], v[2])]);
    }
    const std::size_t c = peak[a];
    const double top = line[c];
    if (!(top > 0.0) || (c > 0 && line[c - 1] > top) || (c + 1 < n && line[c + 1] > top))
        throw std::invalid_argument("psf_metrics: peak is not a local maximum");

    const double half = 0.5 * top;
    // Fractional positions where |s| crosses half maximum.
    double left = -1.0, right = -1.0;
    for (std::size_t i = c; i-- > 0;) {
        if (line[i] < half) {
            left = static_cast<double>(i) + (half - line[i]) / (line[i + 1] - line[i]);
            break;
        }
    }
    for (std::size_t i = c + 1; i < n; ++i) {
        if (line[i] < half) {
            right = static_cast<double>(i) - (half - line[i]) / (line[i - 1] - line[i]);
            break;
        }
    }
    if (left < 0.0 || right < 0.0)
        throw UnresolvedLobe("main lobe does not fall to half maximum inside the grid");

    // Main lobe runs out to the first local minimum on each side.
    std::size_t lo = c, hi = c;
    while (lo > 0 && line[lo - 1] < line[lo])
        --lo;
    while (hi + 1 < n && line[hi + 1] < line[hi])
        ++hi;
    double sidelobe = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i < lo || i > hi)
            sidelobe = std::max(sidelobe, line[i]);
    }

    PsfMetrics m;
    m.fwhm = (right - left) * image.spacing[a];
    const double floor = std::pow(10.0, kImageFloorDb / 20.0) * top;
    m.pslr_db = sidelobe > floor ? 20.0 * std::log10(top / sidelobe) : std::numeric_limits<double>::infinity();
    return m;
}

std::vector<Peak> peak_locations(const ImageGrid &image, std::size_t n, double min_separation)
{
    if (n < 1)
        throw std::invalid_argument("peak_locations: n must be >= 1");
    std::vector<double> mag(image.values.size());
    for (std::size_t i = 0; i < mag.size(); ++i)
        mag[i] = std::abs(image.values[i]);

    const auto &d = image.dims;
    std::vector<std::size_t> candidates;
    for (std::size_t idx = 0; idx < mag.size(); ++idx) {
        if (!(mag[idx] > 0.0))
            continue;
        const auto v = image.unravel(idx);
        bool is_max = true;
        for (int dl = -1; dl <= 1 && is_max; ++dl) {
            for (int dj = -1; dj <= 1 && is_max; ++dj) {
                for (int di = -1; di <= 1 && is_max; ++di) {
                    if (di == 0 && dj == 0 && dl == 0)
                        continue;
                    const long i = static_cast<long>(v[0]) + di;
                    const long j = static_cast<long>(v[1]) + dj;
                    const long l = static_cast<long>(v[2]) + dl;
                    if (i < 0 || j < 0 || l < 0 || i >= static_cast<long>(d[0]) || j >= static_cast<long>(d[1]) ||
                        l >= static_cast<long>(d[2]))
                        continue;
                    if (mag[image.index(i, j, l)] > mag[idx])
                        is_max = false;
                }
            }
        }
        if (is_max)
            candidates.push_back(idx);
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](std::size_t a, std::size_t b) { return mag[a] > mag[b]; });

    std::vector<Peak> peaks;
    for (std::size_t idx : candidates) {
        if (peaks.size() == n)
            break;
        const Vec3 pos = image.voxel_center(idx);
        const bool far = std::all_of(peaks.begin(), peaks.end(),
                                     [&](const Peak &p) { return distance(p.position, pos) >= min_separation; });
        if (far)
            peaks.push_back({image.unravel(idx), pos, mag[idx]});
    }
    return peaks;
}

double image_entropy(const ImageGrid &image)
{
    double total = 0.0;
    for (const auto &v : image.values)
        total += std::norm(v);
    if (!(total > 0.0))
        throw EmptyImage("image_entropy of an all-zero image");
    double h = 0.0;
    for (const auto &v : image.values) {
        const double p = std::norm(v) / total;
        if (p > 0.0)
            h -= p * std::log(p);
    }
    return h;
}

} // namespace rtbpa
