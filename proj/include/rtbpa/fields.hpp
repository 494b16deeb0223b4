// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rtbpa/geometry.hpp"
#include "rtbpa/propagation.hpp"

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rtbpa {

using cdouble = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0; // m/s

struct CVec3 {
    cdouble x, y, z;

    CVec3 &operator+=(const CVec3 &o)
    {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
};

inline cdouble dot(const CVec3 &a, const Vec3 &b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline CVec3 operator*(const Vec3 &v, cdouble s) { return {v.x * s, v.y * s, v.z * s}; }
inline CVec3 operator+(CVec3 a, const CVec3 &b) { return a += b; }

// Hertzian dipole; orientation is the unit current direction.
struct DipoleSource {
    Vec3 position;
    Vec3 orientation{0.0, 0.0, 1.0};
    cdouble amplitude{1.0, 0.0};
};

// Co-pol scalar reduction of the scattering dyadic at a point.
struct PointScatterer {
    Vec3 position;
    cdouble reflectivity{1.0, 0.0};
};

// Uniform sweep f_start, f_start + step, ... <= f_stop.
struct FrequencySweep {
    double f_start = 0.0; // Hz
    double f_stop = 0.0;  // Hz
    double step = 1.0;    // Hz

    void validate() const;
    std::size_t count() const;
    double frequency(std::size_t i) const { return f_start + static_cast<double>(i) * step; }
    double wavenumber(std::size_t i) const;
    double k_start() const { return wavenumber(0); }
    double k_step() const;
    std::vector<double> wavenumbers() const;
};

enum class MeasurementMode { Radiation, Scattering };

// Tx and Rx apertures with a shared co-polarization unit vector.
struct AntennaArray {
    std::vector<Vec3> tx;
    std::vector<Vec3> rx;
    Vec3 copol{1.0, 0.0, 0.0};
};

// Samples T[tx][rx][k], row-major. In radiation mode the tx axis is a
// single dummy entry at the origin.
struct MeasurementSet {
    MeasurementMode mode = MeasurementMode::Radiation;
    std::vector<Vec3> tx_positions;
    std::vector<Vec3> rx_positions;
    Vec3 copol{1.0, 0.0, 0.0};
    FrequencySweep sweep;
    std::vector<cdouble> samples;

    MeasurementSet() = default;
    MeasurementSet(MeasurementMode mode, const AntennaArray &arrays, const FrequencySweep &sweep);

    std::size_t n_tx() const { return tx_positions.size(); }
    std::size_t n_rx() const { return rx_positions.size(); }
    std::size_t n_k() const { return sweep.count(); }
    std::size_t offset(std::size_t t, std::size_t r) const { return (t * n_rx() + r) * n_k(); }
    cdouble &at(std::size_t t, std::size_t r, std::size_t k) { return samples[offset(t, r) + k]; }
    const cdouble &at(std::size_t t, std::size_t r, std::size_t k) const { return samples[offset(t, r) + k]; }

    // Throws ShapeMismatch / std::invalid_argument on broken invariants.
    void validate() const;
};

enum class FieldMode { PhaseOnly, FarField, Full };

// Electric field of a dipole at `obs`. Normalized so that the far-field
// magnitude at R = 1 m broadside equals |amplitude|. Full adds the 1/R^2
// and 1/R^3 terms; PhaseOnly keeps the far-field polarization pattern and
// phase but drops the 1/R decay. Throws Singular at the source point.
CVec3 dipole_field(const Vec3 &obs, const DipoleSource &src, double k, FieldMode mode);

// Image of a dipole in an infinite PEC plane: mirrored position, tangential
// moment negated, normal moment kept.
DipoleSource image_dipole(const DipoleSource &src, const Facet &ground_plane);

struct ForwardOptions {
    PathEngineConfig engine;
    FieldMode amplitude = FieldMode::PhaseOnly;
    bool apply_half_wave = true;
    unsigned workers = 0;
};

// T[rx, k] = sum over sources and paths of the co-pol contribution. In
// PhaseOnly mode each path contributes amplitude * pol_sign * e^{-jkL};
// the other modes transport the dipole field along the path.
MeasurementSet synthesize_radiation_data(std::span<const DipoleSource> sources, const AntennaArray &arrays,
                                         const Scene &scene, const FrequencySweep &sweep,
                                         const ForwardOptions &opts = {});

// Born point-target data: T[tx, rx, k] = sum_targets rho * sum over
// wavefront pairs of (+-1) * e^{-jk(L_tx + L_rx)}.
MeasurementSet synthesize_scattering_data(std::span<const PointScatterer> targets, const AntennaArray &arrays,
                                          const Scene &scene, const FrequencySweep &sweep,
                                          const ForwardOptions &opts = {});

// Adds circular complex Gaussian noise with per-sample standard deviation
// sigma (sigma/sqrt(2) per quadrature).
void add_complex_noise(MeasurementSet &data, double sigma, std::uint64_t seed);

} // namespace rtbpa
