// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rtbpa/fields.hpp"
#include "rtbpa/geometry.hpp"
#include "rtbpa/propagation.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace rtbpa {

using VoxelIndex = std::array<std::size_t, 3>;

// Regular voxel grid. Voxel (i, j, l) is centered at
// origin + i*spacing[0]*axes[0] + j*spacing[1]*axes[1] + l*spacing[2]*axes[2];
// values are stored with i fastest.
struct ImageGrid {
    Vec3 origin;
    std::array<Vec3, 3> axes{Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
    std::array<double, 3> spacing{0.01, 0.01, 0.01};
    std::array<std::size_t, 3> dims{1, 1, 1};
    std::vector<cdouble> values;

    // nx x ny cut centered on `center`, spanned by the unit axes ax, ay.
    static ImageGrid planar(const Vec3 &center, const Vec3 &ax, const Vec3 &ay, double spacing, std::size_t nx,
                            std::size_t ny);

    std::size_t size() const { return dims[0] * dims[1] * dims[2]; }
    std::size_t index(std::size_t i, std::size_t j, std::size_t l) const { return (l * dims[1] + j) * dims[0] + i; }
    VoxelIndex unravel(std::size_t linear) const;
    Vec3 voxel_center(std::size_t i, std::size_t j, std::size_t l) const;
    Vec3 voxel_center(std::size_t linear) const;
    std::vector<Vec3> voxel_centers() const;

    void validate() const;
    // Same placement and shape (values ignored).
    bool same_geometry(const ImageGrid &other) const;
    // Resets values to zero with the current dims.
    void clear_values() { values.assign(size(), cdouble{}); }
};

struct ReconstructionConfig {
    PathEngineConfig engine;
    bool apply_half_wave = true;
    MeasurementMode mode = MeasurementMode::Radiation;
    Vec3 copol{1.0, 0.0, 0.0};
    unsigned workers = 0;

    int max_order() const { return engine.max_order; }
    static ReconstructionConfig for_data(const MeasurementSet &data, int max_order = 1);
    void validate() const;
};

// Free-space matched filter. Radiation mode drops the tx leg.
ImageGrid naive_bpa(const MeasurementSet &data, ImageGrid grid, unsigned workers = 0);

// Multipath-aware adjoint: every wavefront between voxel and antennas
// contributes T * e^{+jkL} with a pi shift for odd co-pol parity.
ImageGrid rt_bpa(const MeasurementSet &data, ImageGrid grid, const Scene &scene, const ReconstructionConfig &cfg);

// The two operators evaluated at arbitrary points instead of grid voxels.
std::vector<cdouble> naive_backproject(const MeasurementSet &data, std::span<const Vec3> points,
                                       unsigned workers = 0);
std::vector<cdouble> rt_backproject(const MeasurementSet &data, std::span<const Vec3> points, const Scene &scene,
                                    const ReconstructionConfig &cfg);

// Legs for every (point, tx) and (point, rx) pair, computed once.
class PathTable {
public:
    PathTable(std::span<const Vec3> points, const MeasurementSet &shape, const Scene &scene,
              const ReconstructionConfig &cfg);

    std::size_t point_count() const { return points_; }
    std::span<const Leg> tx_legs(std::size_t point, std::size_t tx) const;
    std::span<const Leg> rx_legs(std::size_t point, std::size_t rx) const;
    std::size_t n_tx() const { return n_tx_; }
    std::size_t n_rx() const { return n_rx_; }

private:
    std::size_t points_ = 0;
    std::size_t n_tx_ = 0;
    std::size_t n_rx_ = 0;
    // CSR layout: slot = point * (n_tx + n_rx) + antenna (tx first).
    std::vector<std::size_t> offsets_;
    std::vector<Leg> legs_;
};

std::vector<cdouble> rt_backproject(const MeasurementSet &data, const PathTable &table,
                                    const ReconstructionConfig &cfg);
ImageGrid rt_bpa(const MeasurementSet &data, ImageGrid grid, const PathTable &table, const ReconstructionConfig &cfg);

struct AdjointCheckOptions {
    // Half-wave setting of the forward operator; the adjoint uses cfg's.
    bool forward_half_wave = true;
    // Use naive_bpa as the adjoint (free-space check).
    bool naive_adjoint = false;
};

// |<F s, T> - <s, F^H T>| / (|F s| |T|) with F the scattering synthesizer
// restricted to the target positions and F^H the back-projection.
double adjoint_pair_check(std::span<const PointScatterer> targets, const AntennaArray &arrays, const Scene &scene,
                          const FrequencySweep &sweep, const ReconstructionConfig &cfg,
                          std::span<const cdouble> random_T, std::span<const cdouble> random_s,
                          const AdjointCheckOptions &opts = {});

struct PsfMetrics {
    double fwhm = 0.0;    // m
    double pslr_db = 0.0; // +inf when no sidelobe rises above the -40 dB floor
};

inline constexpr double kImageFloorDb = -40.0;

// 1-D cut of |s| through `peak` along the grid axis parallel to `axis`.
// Throws UnresolvedLobe when the main lobe does not fall to half maximum
// inside the grid.
PsfMetrics psf_metrics(const ImageGrid &image, const Vec3 &axis, const VoxelIndex &peak);

struct Peak {
    VoxelIndex voxel{};
    Vec3 position;
    double magnitude = 0.0;
};

// Greedy non-maximum suppression over local maxima of |s|: at most n peaks,
// pairwise at least min_separation apart, by descending magnitude.
std::vector<Peak> peak_locations(const ImageGrid &image, std::size_t n, double min_separation);

// Shannon entropy of |s|^2 normalized to unit sum. Throws EmptyImage for an
// all-zero image.
double image_entropy(const ImageGrid &image);

// Linear index of the largest |s|.
std::size_t argmax_magnitude(const ImageGrid &image);

// 20 log10(|s| / max|s|), floored at kImageFloorDb.
std::vector<double> normalized_db(const ImageGrid &image);

} // namespace rtbpa
