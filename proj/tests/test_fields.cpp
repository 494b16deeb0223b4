// SPDX-License-Identifier: Apache-2.0
#include "rtbpa/errors.hpp"
#include "rtbpa/fields.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace rtbpa;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEta = 376.730313668;

const FrequencySweep kSweep{18e9, 20e9, 100e6};

Facet ground() { return Facet::infinite_plane(1, {0, 0, 0}, {0, 0, 1}); }

bool close(cdouble a, cdouble b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

// Textbook z-directed infinitesimal dipole (current I, length l), spherical components.
struct Spherical {
    cdouble e_r, e_theta;
};

Spherical textbook_dipole(double I_l, double k, double r, double theta)
{
    const cdouble j(0, 1);
    const cdouble ph = std::exp(-j * k * r);
    const double kr = k * r;
    Spherical s;
    s.e_r = kEta * I_l * std::cos(theta) / (2 * kPi * r * r) * (1.0 + 1.0 / (j * kr)) * ph;
    s.e_theta = j * kEta * k * I_l * std::sin(theta) / (4 * kPi * r) * (1.0 + 1.0 / (j * kr) - 1.0 / (kr * kr)) * ph;
    return s;
}

AntennaArray single_rx(const Vec3 &rx, const Vec3 &copol)
{
    AntennaArray a;
    a.rx = {rx};
    a.copol = copol;
    return a;
}

} // namespace

TEST_CASE("frequency sweep")
{
    REQUIRE(kSweep.count() == 21);
    REQUIRE(kSweep.frequency(20) == Catch::Approx(20e9));
    REQUIRE(kSweep.wavenumber(0) == Catch::Approx(2 * kPi * 18e9 / kSpeedOfLight).epsilon(1e-15));
    REQUIRE(FrequencySweep{18e9, 18e9, 1e6}.count() == 1);
    REQUIRE_THROWS_AS((FrequencySweep{0, 1e9, 1e6}.validate()), std::invalid_argument);
    REQUIRE_THROWS_AS((FrequencySweep{2e9, 1e9, 1e6}.validate()), std::invalid_argument);
    REQUIRE_THROWS_AS((FrequencySweep{1e9, 2e9, 0}.validate()), std::invalid_argument);
}

TEST_CASE("full dipole field matches the textbook expressions")
{
    const double k = kSweep.wavenumber(5);
    const DipoleSource src{{0.1, -0.2, 0.3}, {0, 0, 1}, {1.0, 0}};
    // Normalization constant between the two conventions.
    const double I_l = 1.0;
    const cdouble C = cdouble(0, 1) * kEta * k * I_l / (4 * kPi);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ur(0.005, 2.0), ut(0.05, kPi - 0.05), up(0, 2 * kPi);
    for (int i = 0; i < 200; ++i) {
        const double r = ur(rng), th = ut(rng), ph = up(rng);
        const Vec3 rhat{std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
        const Vec3 that{std::cos(th) * std::cos(ph), std::cos(th) * std::sin(ph), -std::sin(th)};
        const CVec3 e = dipole_field(src.position + rhat * r, src, k, FieldMode::Full);
        const Spherical ref = textbook_dipole(I_l, k, r, th);
        REQUIRE(close(dot(e, rhat), -ref.e_r / C, 1e-10));
        REQUIRE(close(dot(e, that), -ref.e_theta / C, 1e-10));
    }
}

TEST_CASE("far-field pattern and phase-only convention")
{
    const double k = kSweep.wavenumber(0);
    const DipoleSource src{{0, 0, 0}, {1, 0, 0}, {2.0, 0}};
    // Null along the dipole axis.
    const CVec3 on_axis = dipole_field({1.5, 0, 0}, src, k, FieldMode::FarField);
    REQUIRE(std::abs(on_axis.x) + std::abs(on_axis.y) + std::abs(on_axis.z) < 1e-15);

    // Broadside at 1 m has magnitude |amplitude|.
    const CVec3 broad = dipole_field({0, 1, 0}, src, k, FieldMode::FarField);
    REQUIRE(std::abs(broad.x) == Catch::Approx(2.0).epsilon(1e-14));

    const double R = 3.7;
    const CVec3 p = dipole_field({0, R, 0}, src, k, FieldMode::PhaseOnly);
    REQUIRE(std::abs(p.x) == Catch::Approx(2.0).epsilon(1e-14));
    REQUIRE(close(p.x, 2.0 * std::polar(1.0, -k * R), 1e-12));

    // Far and full converge as kR grows.
    const Vec3 far{40.0, 25.0, -12.0};
    const CVec3 a = dipole_field(far, src, k, FieldMode::FarField);
    const CVec3 b = dipole_field(far, src, k, FieldMode::Full);
    REQUIRE(std::abs(a.x - b.x) < 1e-3 * std::abs(b.x));

    REQUIRE_THROWS_AS(dipole_field({0, 0, 0}, src, k, FieldMode::Full), Singular);
    REQUIRE_THROWS_AS(dipole_field({1, 0, 0}, src, 0.0, FieldMode::Full), std::invalid_argument);
}

TEST_CASE("image_dipole")
{
    const DipoleSource h{{0.2, 0.1, 0.7}, {1, 0, 0}, {1, 0}};
    const DipoleSource hi = image_dipole(h, ground());
    REQUIRE(hi.position.z == Catch::Approx(-0.7));
    REQUIRE(hi.orientation.x == -1.0);

    const DipoleSource v{{0.2, 0.1, 0.7}, {0, 0, 1}, {1, 0}};
    REQUIRE(image_dipole(v, ground()).orientation.z == 1.0);

    // Tangential field cancels on the plane.
    const DipoleSource tilted{{0.3, -0.2, 0.4}, normalized(Vec3{1, 2, 3}), {0.7, 0.2}};
    const DipoleSource ti = image_dipole(tilted, ground());
    const double k = kSweep.wavenumber(3);
    for (const Vec3 &q : {Vec3{0, 0, 0}, Vec3{1.2, -0.4, 0}, Vec3{-0.5, 2.0, 0}}) {
        const CVec3 e = dipole_field(q, tilted, k, FieldMode::Full) + dipole_field(q, ti, k, FieldMode::Full);
        REQUIRE(std::abs(e.x) < 1e-9);
        REQUIRE(std::abs(e.y) < 1e-9);
    }

    REQUIRE_THROWS_AS(image_dipole(h, Facet::rectangle(2, {0, 0, 0}, {0, 0, 1}, {1, 0, 0}, 1, 1)),
                      std::invalid_argument);
}

TEST_CASE("radiation synthesis")
{
    const DipoleSource src{{0, 0, 0.7}, {1, 0, 0}, {1, 0}};
    const Vec3 rx{0, -1, 0.7};

    SECTION("free space")
    {
        const auto data = synthesize_radiation_data(std::span(&src, 1), single_rx(rx, {1, 0, 0}), Scene(), kSweep);
        REQUIRE(data.n_tx() == 1);
        REQUIRE(data.samples.size() == 21);
        for (std::size_t k = 0; k < 21; ++k)
            REQUIRE(close(data.at(0, 0, k), std::polar(1.0, -kSweep.wavenumber(k) * 1.0), 1e-12));
    }

    SECTION("blocked LOS leaves the negated ground bounce")
    {
        const Scene scene({ground(), Facet::rectangle(2, {0, -0.5, 0.7}, {0, 1, 0}, {1, 0, 0}, 1.4, 0.5)}, {2});
        ForwardOptions opts;
        opts.engine.max_order = 1;
        const auto data = synthesize_radiation_data(std::span(&src, 1), single_rx(rx, {1, 0, 0}), scene, kSweep, opts);
        const double L = std::sqrt(1.0 + 1.4 * 1.4);
        for (std::size_t k = 0; k < 21; ++k)
            REQUIRE(close(data.at(0, 0, k), -std::polar(1.0, -kSweep.wavenumber(k) * L), 1e-12));

        opts.apply_half_wave = false;
        const auto off = synthesize_radiation_data(std::span(&src, 1), single_rx(rx, {1, 0, 0}), scene, kSweep, opts);
        for (std::size_t k = 0; k < 21; ++k)
            REQUIRE(off.at(0, 0, k) == -data.at(0, 0, k));
    }

    SECTION("superposition")
    {
        const DipoleSource s2{{0.3, 0.2, 0.5}, {1, 0, 0}, {0.4, -0.3}};
        const DipoleSource both[] = {src, s2};
        const Scene scene({ground()});
        const auto arr = single_rx(rx, {1, 0, 0});
        const auto a = synthesize_radiation_data(std::span(&src, 1), arr, scene, kSweep);
        const auto b = synthesize_radiation_data(std::span(&s2, 1), arr, scene, kSweep);
        const auto ab = synthesize_radiation_data(both, arr, scene, kSweep);
        for (std::size_t k = 0; k < 21; ++k)
            REQUIRE(close(ab.samples[k], a.samples[k] + b.samples[k], 1e-12));
    }

    SECTION("far-field mode agrees with image theory")
    {
        const DipoleSource tilted{{0.1, 0.05, 0.6}, normalized(Vec3{1, 0.3, 0.5}), {1, 0}};
        const Vec3 copol = normalized(Vec3{1, 0.2, 0});
        const Vec3 obs{-0.4, -1.1, 0.9};
        ForwardOptions opts;
        opts.amplitude = FieldMode::FarField;
        const auto data =
            synthesize_radiation_data(std::span(&tilted, 1), single_rx(obs, copol), Scene({ground()}), kSweep, opts);
        const DipoleSource img = image_dipole(tilted, ground());
        for (std::size_t k = 0; k < 21; ++k) {
            const double kk = kSweep.wavenumber(k);
            const cdouble ref = dot(dipole_field(obs, tilted, kk, FieldMode::FarField), copol) +
                                dot(dipole_field(obs, img, kk, FieldMode::FarField), copol);
            REQUIRE(close(data.at(0, 0, k), ref, 1e-12));
        }
    }

    REQUIRE_THROWS_AS(synthesize_radiation_data({}, single_rx(rx, {1, 0, 0}), Scene(), kSweep), EmptyInput);
}

TEST_CASE("scattering synthesis")
{
    const PointScatterer tgt{{0.1, 0.2, 0.3}, {0.5, 0.25}};
    const Vec3 ant{0.4, -1.0, 0.5};

    SECTION("monostatic free space")
    {
        AntennaArray arr;
        arr.tx = arr.rx = {ant};
        const auto data = synthesize_scattering_data(std::span(&tgt, 1), arr, Scene(), kSweep);
        const double R = distance(ant, tgt.position);
        for (std::size_t k = 0; k < 21; ++k)
            REQUIRE(close(data.at(0, 0, k), tgt.reflectivity * std::polar(1.0, -2 * kSweep.wavenumber(k) * R), 1e-12));

        const PointScatterer dark{tgt.position, {0, 0}};
        const auto zero = synthesize_scattering_data(std::span(&dark, 1), arr, Scene(), kSweep);
        for (const auto &s : zero.samples)
            REQUIRE(s == cdouble{});
    }

    AntennaArray arr;
    arr.tx = {{0.4, -1.0, 0.5}, {-0.3, -1.2, 0.8}};
    arr.rx = {{0.0, -1.0, 0.6}, {0.2, -0.9, 0.4}, {-0.5, -1.1, 0.7}};
    const Scene scene({ground()});

    SECTION("reciprocity")
    {
        AntennaArray swapped = arr;
        std::swap(swapped.tx, swapped.rx);
        const auto a = synthesize_scattering_data(std::span(&tgt, 1), arr, scene, kSweep);
        const auto b = synthesize_scattering_data(std::span(&tgt, 1), swapped, scene, kSweep);
        for (std::size_t t = 0; t < 2; ++t)
            for (std::size_t r = 0; r < 3; ++r)
                for (std::size_t k = 0; k < 21; ++k)
                    REQUIRE(close(a.at(t, r, k), b.at(r, t, k), 1e-12));
    }

    SECTION("linearity")
    {
        const PointScatterer t2{{-0.2, 0.1, 0.5}, {-0.3, 0.9}};
        const PointScatterer both[] = {tgt, t2};
        const auto a = synthesize_scattering_data(std::span(&tgt, 1), arr, scene, kSweep);
        const auto b = synthesize_scattering_data(std::span(&t2, 1), arr, scene, kSweep);
        const auto ab = synthesize_scattering_data(both, arr, scene, kSweep);
        for (std::size_t i = 0; i < ab.samples.size(); ++i)
            REQUIRE(close(ab.samples[i], a.samples[i] + b.samples[i], 1e-12));
    }

    SECTION("worker count does not change the result")
    {
        ForwardOptions one, many;
        one.workers = 1;
        many.workers = 4;
        const auto a = synthesize_scattering_data(std::span(&tgt, 1), arr, scene, kSweep, one);
        const auto b = synthesize_scattering_data(std::span(&tgt, 1), arr, scene, kSweep, many);
        REQUIRE(a.samples == b.samples);
    }

    ForwardOptions full;
    full.amplitude = FieldMode::Full;
    REQUIRE_THROWS_AS(synthesize_scattering_data(std::span(&tgt, 1), arr, scene, kSweep, full), std::invalid_argument);
    REQUIRE_THROWS_AS(synthesize_scattering_data({}, arr, scene, kSweep), EmptyInput);
}

TEST_CASE("measurement validation and noise")
{
    AntennaArray arr;
    arr.rx = {{0, 0, 0}, {1, 0, 0}};
    MeasurementSet m(MeasurementMode::Radiation, arr, kSweep);
    REQUIRE(m.samples.size() == 42);
    REQUIRE_NOTHROW(m.validate());
    m.samples.pop_back();
    REQUIRE_THROWS_AS(m.validate(), ShapeMismatch);
    m.samples.push_back({std::nan(""), 0});
    REQUIRE_THROWS_AS(m.validate(), std::invalid_argument);

    MeasurementSet a(MeasurementMode::Radiation, arr, kSweep), b = a, c = a;
    add_complex_noise(a, 0.1, 42);
    add_complex_noise(b, 0.1, 42);
    add_complex_noise(c, 0.1, 43);
    REQUIRE(a.samples == b.samples);
    REQUIRE(a.samples != c.samples);
    REQUIRE_THROWS_AS(add_complex_noise(a, -1.0, 1), std::invalid_argument);

    // Per-sample standard deviation is sigma.
    arr.rx.assign(2000, Vec3{});
    MeasurementSet big(MeasurementMode::Radiation, arr, kSweep);
    add_complex_noise(big, 0.5, 7);
    double power = 0;
    for (const auto &s : big.samples)
        power += std::norm(s);
    REQUIRE(std::sqrt(power / big.samples.size()) == Catch::Approx(0.5).epsilon(0.02));
}
