// SPDX-License-Identifier: Apache-2.0
#include "rtbpa/fields.hpp"

#include "rtbpa/errors.hpp"
#include "rtbpa/parallel.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace rtbpa {

namespace {

// e^{-jkL} for every sweep point.
void propagator(const FrequencySweep &sweep, double length, std::vector<cdouble> &out)
{
    out.resize(sweep.count());
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = std::polar(1.0, -sweep.wavenumber(k) * length);
}

CVec3 reflect_field(const CVec3 &e, const Vec3 &n)
{
    const cdouble en = dot(e, n);
    return {2.0 * en * n.x - e.x, 2.0 * en * n.y - e.y, 2.0 * en * n.z - e.z};
}

} // namespace

void FrequencySweep::validate() const
{
    if (!(f_start > 0.0) || !(f_stop >= f_start))
        throw std::invalid_argument("frequency sweep needs 0 < f_start <= f_stop");
    if (!(step > 0.0))
        throw std::invalid_argument("frequency sweep step must be > 0");
}

std::size_t FrequencySweep::count() const
{
    // The small slack absorbs rounding in (f_stop - f_start) / step.
    return static_cast<std::size_t>(std::floor((f_stop - f_start) / step + 1e-9)) + 1;
}

double FrequencySweep::wavenumber(std::size_t i) const
{
    return 2.0 * std::numbers::pi * frequency(i) / kSpeedOfLight;
}

double FrequencySweep::k_step() const { return 2.0 * std::numbers::pi * step / kSpeedOfLight; }

std::vector<double> FrequencySweep::wavenumbers() const
{
    std::vector<double> k(count());
    for (std::size_t i = 0; i < k.size(); ++i)
        k[i] = wavenumber(i);
    return k;
}

MeasurementSet::MeasurementSet(MeasurementMode mode_, const AntennaArray &arrays, const FrequencySweep &sweep_)
    : mode(mode_), rx_positions(arrays.rx), copol(normalized(arrays.copol)), sweep(sweep_)
{
    sweep.validate();
    if (mode == MeasurementMode::Radiation)
        tx_positions = {Vec3{}};
    else
        tx_positions = arrays.tx;
    samples.assign(n_tx() * n_rx() * n_k(), cdouble{});
}

void MeasurementSet::validate() const
{
    sweep.validate();
    if (std::abs(norm(copol) - 1.0) > 1e-9)
        throw std::invalid_argument("measurement copol must be a unit vector");
    if (mode == MeasurementMode::Radiation && n_tx() != 1)
        throw ShapeMismatch("radiation data must have exactly one (dummy) tx entry");
    if (samples.size() != n_tx() * n_rx() * n_k())
        throw ShapeMismatch("sample tensor size " + std::to_string(samples.size()) + " does not match " +
                            std::to_string(n_tx()) + "x" + std::to_string(n_rx()) + "x" + std::to_string(n_k()));
    for (const auto &s : samples) {
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
            throw std::invalid_argument("measurement contains non-finite samples");
    }
}

CVec3 dipole_field(const Vec3 &obs, const DipoleSource &src, double k, FieldMode mode)
{
    if (!(k > 0.0))
        throw std::invalid_argument("dipole_field: k must be > 0");
    const Vec3 rel = obs - src.position;
    const double r = norm(rel);
    if (r < 1e-12)
        throw Singular("dipole_field evaluated at the source position");
    const Vec3 rhat = rel / r;
    const Vec3 &p = src.orientation;
    const double pr = dot(p, rhat);
    const Vec3 transverse = p - rhat * pr;
    const cdouble phase = std::polar(1.0, -k * r);

    switch (mode) {
    case FieldMode::PhaseOnly:
        return transverse * (src.amplitude * phase);
    case FieldMode::FarField:
        return transverse * (src.amplitude * phase / r);
    case FieldMode::Full: {
        const double kr = k * r;
        const cdouble near(1.0 / (kr * kr), 1.0 / kr);
        const Vec3 quasi_static = rhat * (3.0 * pr) - p;
        const cdouble scale = src.amplitude * phase / r;
        return transverse * scale + quasi_static * (scale * near);
    }
    }
    return {};
}

DipoleSource image_dipole(const DipoleSource &src, const Facet &ground_plane)
{
    if (!ground_plane.infinite())
        throw std::invalid_argument("image_dipole requires an infinite plane");
    DipoleSource img = src;
    img.position = mirror_point(src.position, ground_plane);
    const Vec3 &n = ground_plane.normal;
    img.orientation = n * (2.0 * dot(src.orientation, n)) - src.orientation;
    return img;
}

MeasurementSet synthesize_radiation_data(std::span<const DipoleSource> sources, const AntennaArray &arrays,
                                         const Scene &scene, const FrequencySweep &sweep,
                                         const ForwardOptions &opts)
{
    if (sources.empty())
        throw EmptyInput("synthesize_radiation_data: no sources");
    MeasurementSet data(MeasurementMode::Radiation, arrays, sweep);
    const PathFinder finder(scene, data.rx_positions, opts.engine);
    const Vec3 copol = data.copol;
    const std::size_t n_rx = data.n_rx();
    const std::size_t n_k = data.n_k();

    if (opts.amplitude == FieldMode::PhaseOnly) {
        // legs[s][r]
        std::vector<std::vector<std::vector<Leg>>> legs(sources.size());
        for (std::size_t s = 0; s < sources.size(); ++s)
            finder.legs(sources[s].position, sources[s].orientation, copol, s, legs[s]);

        parallel_for(n_rx, opts.workers, [&](std::size_t begin, std::size_t end) {
            std::vector<cdouble> prop;
            for (std::size_t r = begin; r < end; ++r) {
                cdouble *out = &data.at(0, r, 0);
                for (std::size_t s = 0; s < sources.size(); ++s) {
                    for (const Leg &leg : legs[s][r]) {
                        const double sign = opts.apply_half_wave ? static_cast<double>(leg.sign) : 1.0;
                        propagator(sweep, leg.length, prop);
                        for (std::size_t k = 0; k < n_k; ++k)
                            out[k] += sources[s].amplitude * sign * prop[k];
                    }
                }
            }
        });
        return data;
    }

    std::vector<std::vector<std::vector<PropagationPath>>> paths(sources.size());
    for (std::size_t s = 0; s < sources.size(); ++s)
        paths[s] = finder.paths(sources[s].position, s);

    const auto ks = sweep.wavenumbers();
    parallel_for(n_rx, opts.workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            cdouble *out = &data.at(0, r, 0);
            for (std::size_t s = 0; s < sources.size(); ++s) {
                for (const PropagationPath &path : paths[s][r]) {
                    // Field at the unfolded (virtual) antenna position, then
                    // carried through the PEC bounces.
                    const Vec3 virtual_obs = sources[s].position + path.first_direction() * path.total_length;
                    for (std::size_t k = 0; k < n_k; ++k) {
                        CVec3 e = dipole_field(virtual_obs, sources[s], ks[k], opts.amplitude);
                        for (const Vec3 &n : path.normals)
                            e = reflect_field(e, n);
                        out[k] += dot(e, copol);
                    }
                }
            }
        }
    });
    return data;
}

MeasurementSet synthesize_scattering_data(std::span<const PointScatterer> targets, const AntennaArray &arrays,
                                          const Scene &scene, const FrequencySweep &sweep,
                                          const ForwardOptions &opts)
{
    if (targets.empty())
        throw EmptyInput("synthesize_scattering_data: no targets");
    if (opts.amplitude != FieldMode::PhaseOnly)
        throw std::invalid_argument("scattering synthesis supports the phase-only convention only");
    if (arrays.tx.empty() || arrays.rx.empty())
        throw EmptyInput("synthesize_scattering_data: empty aperture");

    MeasurementSet data(MeasurementMode::Scattering, arrays, sweep);
    const PathFinder tx_finder(scene, data.tx_positions, opts.engine);
    const PathFinder rx_finder(scene, data.rx_positions, opts.engine);
    const Vec3 copol = data.copol;

    std::vector<std::vector<std::vector<Leg>>> tx_legs(targets.size()), rx_legs(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        tx_finder.legs(targets[i].position, copol, copol, i, tx_legs[i]);
        rx_finder.legs(targets[i].position, copol, copol, i, rx_legs[i]);
    }

    const std::size_t n_rx = data.n_rx();
    const std::size_t n_k = data.n_k();
    parallel_for(data.n_tx() * n_rx, opts.workers, [&](std::size_t begin, std::size_t end) {
        std::vector<cdouble> prop;
        for (std::size_t tr = begin; tr < end; ++tr) {
            const std::size_t t = tr / n_rx;
            const std::size_t r = tr % n_rx;
            cdouble *out = &data.at(t, r, 0);
            for (std::size_t i = 0; i < targets.size(); ++i) {
                for (const Leg &a : tx_legs[i][t]) {
                    for (const Leg &b : rx_legs[i][r]) {
                        const double sign = opts.apply_half_wave ? static_cast<double>(a.sign * b.sign) : 1.0;
                        propagator(sweep, a.length + b.length, prop);
                        for (std::size_t k = 0; k < n_k; ++k)
                            out[k] += targets[i].reflectivity * sign * prop[k];
                    }
                }
            }
        }
    });
    return data;
}

void add_complex_noise(MeasurementSet &data, double sigma, std::uint64_t seed)
{
    if (sigma < 0.0)
        throw std::invalid_argument("noise sigma must be >= 0");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma / std::sqrt(2.0));
    for (auto &s : data.samples) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        s += cdouble(re, im);
    }
}

} // namespace rtbpa
