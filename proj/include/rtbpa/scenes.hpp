// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rtbpa/fields.hpp"
#include "rtbpa/geometry.hpp"
#include "rtbpa/imaging.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace rtbpa {

inline constexpr int kScenarioSchemaVersion = 1;

// A complete imaging experiment. Exactly one of sources (radiation) and
// targets (scattering) is populated. grid carries placement only.
struct Scenario {
    std::string name;
    Scene scene;
    std::vector<DipoleSource> sources;
    std::vector<PointScatterer> targets;
    AntennaArray arrays;
    FrequencySweep sweep;
    ImageGrid grid;

    MeasurementMode mode() const
    {
        return sources.empty() ? MeasurementMode::Scattering : MeasurementMode::Radiation;
    }
    // Throws std::invalid_argument when the invariants above are broken.
    void validate() const;
};

// rx positions of a regular nu x nv grid centered on `center`, spanning
// width along u and height along v (edges included).
std::vector<Vec3> planar_aperture(const Vec3 &center, const Vec3 &u, const Vec3 &v, double width, double height,
                                  std::size_t nu, std::size_t nv);

// The 37 logo points, row-major from the top-left stroke.
std::vector<Vec3> tum_logo_points(double height = 0.7);

Scenario scenario_tum_logo(std::size_t n_rx_x = 40, std::size_t n_rx_y = 34);
// Same environment with one dipole.
Scenario scenario_hidden_dipole(std::size_t n_rx_x = 40, std::size_t n_rx_y = 34);
// Hidden dipole with an extra PEC side wall, so that ground and wall
// bounces carry opposite co-pol signs.
Scenario scenario_hidden_dipole_wall(std::size_t n_rx_x = 40, std::size_t n_rx_y = 34);
Scenario scenario_three_spheres(std::size_t n_rx_x = 40, std::size_t n_rx_y = 34);
Scenario scenario_parallel_plates(double plate_gap = 0.6, double plate_size = 1.0, std::size_t n_rx = 21);

std::vector<std::string> builtin_scenario_names();
// Throws UnknownReference for names not in builtin_scenario_names().
Scenario builtin_scenario(const std::string &name);

// Canonical JSON text (two-space indent, shortest round-trip floats).
std::string scenario_to_json(const Scenario &scenario);
// Strict: unknown fields are rejected and missing fields named. Throws
// ParseError.
Scenario scenario_from_json(const std::string &text);

void save_scenario(const Scenario &scenario, const std::filesystem::path &path);
Scenario load_scenario(const std::filesystem::path &path);

// A built-in name or a path to a scenario file.
Scenario resolve_scenario(const std::string &reference);

} // namespace rtbpa
