// SPDX-License-Identifier: Apache-2.0
#include "rtbpa/scenes.hpp"

#include "rtbpa/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace rtbpa {

using nlohmann::json;

namespace {

// Shared by all built-ins: 18-20 GHz in 100 MHz steps.
constexpr FrequencySweep kSweep{18e9, 20e9, 100e6};

constexpr double kSourceHeight = 0.7;
constexpr int kGroundId = 1;
constexpr int kPlateId = 2;
constexpr int kWallId = 3;

// Vertical rx plane at y = rx_y, spanning 1.2 m (x) by 1.0 m (z) from
// z = 0.2 m. The occluder plate sits between it and the sources, low
// enough for every ground bounce to pass beneath it.
struct HiddenLayout {
    double center_x;
    double rx_y;
    double plate_y;
};

void hidden_environment(Scenario &s, const HiddenLayout &layout, std::size_t nx, std::size_t nz)
{
    if (nx * nz < 100)
        throw std::invalid_argument("rx aperture needs at least 100 elements");
    std::vector<Facet> facets;
    facets.push_back(Facet::infinite_plane(kGroundId, {0, 0, 0}, {0, 0, 1}));
    facets.push_back(
        Facet::rectangle(kPlateId, {layout.center_x, layout.plate_y, kSourceHeight}, {0, 1, 0}, {1, 0, 0}, 1.4, 0.5));
    s.scene = Scene(std::move(facets), {kPlateId});
    s.arrays.rx = planar_aperture({layout.center_x, layout.rx_y, 0.7}, {1, 0, 0}, {0, 0, 1}, 1.2, 1.0, nx, nz);
    s.arrays.copol = {1, 0, 0};
    s.sweep = kSweep;
}

std::string join_path(const std::string &base, const std::string &key)
{
    return base.empty() ? key : base + "." + key;
}

// Strict object reader: every key must be consumed before finish().
class Reader {
public:
    Reader(const json &j, std::string path, const std::string &text) : j_(j), path_(std::move(path)), text_(text)
    {
        if (!j_.is_object())
            fail(path_, "expected an object");
    }

    const json &required(const std::string &key)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end())
            fail(join_path(path_, key), "missing required field '" + key + "'");
        return *it;
    }

    const json *optional(const std::string &key)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key()))
                fail(join_path(path_, it.key()), "unknown field '" + it.key() + "'");
        }
    }

    const std::string &path() const { return path_; }
    std::string at(const std::string &key) const { return join_path(path_, key); }

    [[noreturn]] void fail(const std::string &field, const std::string &message) const
    {
        throw ParseError(field + ": " + message, field, line_of(field));
    }

private:
    // Best effort: the line of the last key in `field` when that key occurs
    // once in the document.
    int line_of(const std::string &field) const
    {
        std::string key = field.substr(field.find_last_of('.') == std::string::npos ? 0 : field.find_last_of('.') + 1);
        key = key.substr(0, key.find('['));
        const std::string quoted = "\"" + key + "\"";
        const auto first = text_.find(quoted);
        if (first == std::string::npos || text_.find(quoted, first + 1) != std::string::npos)
            return 0;
        return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + static_cast<long>(first), '\n'));
    }

    const json &j_;
    std::string path_;
    const std::string &text_;
    std::set<std::string> seen_;
};

class Parser {
public:
    explicit Parser(const std::string &text) : text_(text) {}

    [[noreturn]] void fail(const std::string &field, const std::string &message) const
    {
        Reader(json::object(), field, text_).fail(field, message);
    }

    Reader object(const json &j, const std::string &path) const { return Reader(j, path, text_); }

    double number(const json &j, const std::string &path) const
    {
        if (!j.is_number())
            fail(path, "expected a number");
        const double v = j.get<double>();
        if (!std::isfinite(v))
            fail(path, "expected a finite number");
        return v;
    }

    int integer(const json &j, const std::string &path) const
    {
        if (!j.is_number_integer())
            fail(path, "expected an integer");
        return j.get<int>();
    }

    std::size_t count(const json &j, const std::string &path) const
    {
        if (!j.is_number_unsigned() || j.get<std::uint64_t>() == 0)
            fail(path, "expected a positive integer");
        return j.get<std::size_t>();
    }

    std::string string(const json &j, const std::string &path) const
    {
        if (!j.is_string())
            fail(path, "expected a string");
        return j.get<std::string>();
    }

    const json &array(const json &j, const std::string &path, std::size_t size = 0) const
    {
        if (!j.is_array())
            fail(path, "expected an array");
        if (size && j.size() != size)
            fail(path, "expected " + std::to_string(size) + " elements");
        return j;
    }

    Vec3 vec3(const json &j, const std::string &path) const
    {
        array(j, path, 3);
        return {number(j[0], path + "[0]"), number(j[1], path + "[1]"), number(j[2], path + "[2]")};
    }

    cdouble complex(const json &j, const std::string &path) const
    {
        array(j, path, 2);
        return {number(j[0], path + "[0]"), number(j[1], path + "[1]")};
    }

    std::vector<Vec3> vec3_list(const json &j, const std::string &path) const
    {
        array(j, path);
        std::vector<Vec3> out;
        out.reserve(j.size());
        for (std::size_t i = 0; i < j.size(); ++i)
            out.push_back(vec3(j[i], path + "[" + std::to_string(i) + "]"));
        return out;
    }

    Facet facet(const json &j, const std::string &path) const
    {
        Reader r = object(j, path);
        const int id = integer(r.required("id"), r.at("id"));
        const std::string kind = string(r.required("kind"), r.at("kind"));
        if (const json *m = r.optional("material"); m && string(*m, r.at("material")) != "pec")
            fail(r.at("material"), "only \"pec\" is supported");
        try {
            if (kind == "infinite_plane") {
                const Vec3 p = vec3(r.required("point"), r.at("point"));
                const Vec3 n = vec3(r.required("normal"), r.at("normal"));
                r.finish();
                return Facet::infinite_plane(id, p, n);
            }
            if (kind == "rectangle") {
                const Vec3 c = vec3(r.required("center"), r.at("center"));
                const Vec3 n = vec3(r.required("normal"), r.at("normal"));
                const Vec3 u = vec3(r.required("u_axis"), r.at("u_axis"));
                const double w = number(r.required("width"), r.at("width"));
                const double h = number(r.required("height"), r.at("height"));
                r.finish();
                return Facet::rectangle(id, c, n, u, w, h);
            }
            if (kind == "triangle") {
                const auto v = vec3_list(array(r.required("vertices"), r.at("vertices"), 3), r.at("vertices"));
                r.finish();
                return Facet::triangle(id, v[0], v[1], v[2]);
            }
            if (kind == "mesh") {
                const json &tris = array(r.required("triangles"), r.at("triangles"));
                std::vector<Triangle> out;
                for (std::size_t i = 0; i < tris.size(); ++i) {
                    const std::string tp = r.at("triangles") + "[" + std::to_string(i) + "]";
                    const auto v = vec3_list(array(tris[i], tp, 3), tp);
                    out.push_back({v[0], v[1], v[2]});
                }
                r.finish();
                return Facet::mesh(id, std::move(out));
            }
        } catch (const std::invalid_argument &e) {
            fail(path, e.what());
        }
        fail(r.at("kind"), "unknown facet kind '" + kind + "'");
    }

private:
    const std::string &text_;
};

json to_json(const Vec3 &v) { return json::array({v.x, v.y, v.z}); }
json to_json(const cdouble &c) { return json::array({c.real(), c.imag()}); }

json to_json(const std::vector<Vec3> &list)
{
    json out = json::array();
    for (const auto &v : list)
        out.push_back(to_json(v));
    return out;
}

json facet_to_json(const Facet &f)
{
    json j;
    j["id"] = f.id;
    j["material"] = "pec";
    switch (f.kind) {
    case FacetKind::InfinitePlane:
        j["kind"] = "infinite_plane";
        j["point"] = to_json(f.point);
        j["normal"] = to_json(f.normal);
        break;
    case FacetKind::Rectangle:
        j["kind"] = "rectangle";
        j["center"] = to_json(f.point);
        j["normal"] = to_json(f.normal);
        j["u_axis"] = to_json(f.u_axis);
        j["width"] = f.width;
        j["height"] = f.height;
        break;
    case FacetKind::Triangle:
        j["kind"] = "triangle";
        j["vertices"] = to_json(std::vector<Vec3>{f.triangles[0].a, f.triangles[0].b, f.triangles[0].c});
        break;
    case FacetKind::Mesh: {
        j["kind"] = "mesh";
        json tris = json::array();
        for (const auto &t : f.triangles)
            tris.push_back(to_json(std::vector<Vec3>{t.a, t.b, t.c}));
        j["triangles"] = tris;
        break;
    }
    }
    return j;
}

std::string read_file(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

void Scenario::validate() const
{
    if (sources.empty() == targets.empty())
        throw std::invalid_argument("scenario needs exactly one of sources and targets");
    if (arrays.rx.empty())
        throw std::invalid_argument("scenario has no rx positions");
    if (mode() == MeasurementMode::Scattering && arrays.tx.empty())
        throw std::invalid_argument("scattering scenario has no tx positions");
    if (std::abs(norm(arrays.copol) - 1.0) > 1e-9)
        throw std::invalid_argument("copol must be a unit vector");
    for (const auto &s : sources) {
        if (std::abs(norm(s.orientation) - 1.0) > 1e-9)
            throw std::invalid_argument("dipole orientation must be a unit vector");
    }
    sweep.validate();
    grid.validate();
}

std::vector<Vec3> planar_aperture(const Vec3 &center, const Vec3 &u, const Vec3 &v, double width, double height,
                                  std::size_t nu, std::size_t nv)
{
    if (nu < 1 || nv < 1)
        throw std::invalid_argument("aperture needs at least one element per axis");
    const Vec3 uu = normalized(u), vv = normalized(v);
    const double du = nu > 1 ? width / static_cast<double>(nu - 1) : 0.0;
    const double dv = nv > 1 ? height / static_cast<double>(nv - 1) : 0.0;
    const Vec3 corner = center - uu * (nu > 1 ? 0.5 * width : 0.0) - vv * (nv > 1 ? 0.5 * height : 0.0);
    std::vector<Vec3> out;
    out.reserve(nu * nv);
    for (std::size_t j = 0; j < nv; ++j) {
        for (std::size_t i = 0; i < nu; ++i)
            out.push_back(corner + uu * (static_cast<double>(i) * du) + vv * (static_cast<double>(j) * dv));
    }
    return out;
}

std::vector<Vec3> tum_logo_points(double height)
{
    // (row, col) on a 0.05 m raster, row 0 at the back (+y).
    std::vector<std::pair<int, int>> cells;
    for (int c = 0; c <= 4; ++c)
        cells.emplace_back(0, c);
    for (int r = 1; r <= 5; ++r)
        cells.emplace_back(r, 2);
    for (int r = 0; r <= 4; ++r) {
        cells.emplace_back(r, 6);
        cells.emplace_back(r, 9);
    }
    cells.emplace_back(5, 7);
    cells.emplace_back(5, 8);
    for (int r = 0; r <= 5; ++r) {
        cells.emplace_back(r, 11);
        cells.emplace_back(r, 15);
    }
    cells.emplace_back(1, 12);
    cells.emplace_back(2, 13);
    cells.emplace_back(1, 14);
    std::sort(cells.begin(), cells.end());

    std::vector<Vec3> out;
    for (const auto &[r, c] : cells)
        out.push_back({-0.375 + 0.05 * c, 0.125 - 0.05 * r, height});
    return out;
}

Scenario scenario_tum_logo(std::size_t n_rx_x, std::size_t n_rx_y)
{
    Scenario s;
    s.name = "tum_logo";
    hidden_environment(s, {0.0, -1.125, -0.452}, n_rx_x, n_rx_y);
    for (const Vec3 &p : tum_logo_points(kSourceHeight))
        s.sources.push_back({p, {1, 0, 0}, {1.0, 0.0}});
    s.grid = ImageGrid::planar({0, 0, kSourceHeight}, {1, 0, 0}, {0, 1, 0}, 0.01, 128, 128);
    s.grid.values.clear();
    return s;
}

Scenario scenario_hidden_dipole(std::size_t n_rx_x, std::size_t n_rx_y)
{
    Scenario s = scenario_tum_logo(n_rx_x, n_rx_y);
    s.name = "hidden_dipole";
    s.sources = {{{0.1, 0.0, kSourceHeight}, {1, 0, 0}, {1.0, 0.0}}};
    return s;
}

Scenario scenario_hidden_dipole_wall(std::size_t n_rx_x, std::size_t n_rx_y)
{
    Scenario s = scenario_hidden_dipole(n_rx_x, n_rx_y);
    s.name = "hidden_dipole_wall";
    std::vector<Facet> facets(s.scene.facets().begin(), s.scene.facets().end());
    facets.push_back(Facet::rectangle(kWallId, {0.9, -0.5, 0.75}, {-1, 0, 0}, {0, 1, 0}, 1.8, 1.5));
    s.scene = Scene(std::move(facets), {kPlateId});
    return s;
}

Scenario scenario_three_spheres(std::size_t n_rx_x, std::size_t n_rx_y)
{
    Scenario s;
    s.name = "three_spheres";
    hidden_environment(s, {0.2, 1.0, 0.2}, n_rx_x, n_rx_y);
    for (double x : {0.0, 0.2, 0.4})
        s.targets.push_back({{x, -0.25, kSourceHeight}, {1.0, 0.0}});
    s.arrays.tx = {{0.2, 0.4, kSourceHeight}};
    s.grid = ImageGrid::planar({0.2, -0.25, kSourceHeight}, {1, 0, 0}, {0, 1, 0}, 0.01, 128, 128);
    s.grid.values.clear();
    return s;
}

Scenario scenario_parallel_plates(double plate_gap, double plate_size, std::size_t n_rx)
{
    if (!(plate_gap > 0.0) || !(plate_size > 0.0))
        throw std::invalid_argument("plate gap and size must be > 0");
    Scenario s;
    s.name = "parallel_plates";
    const double half = 0.5 * plate_gap;
    const double center_z = 0.5 * plate_size;
    // Plates run from 0.1 m behind the dipole towards the rx plane.
    const double center_y = 0.1 - 0.5 * plate_size;
    std::vector<Facet> facets;
    facets.push_back(Facet::rectangle(1, {-half, center_y, center_z}, {1, 0, 0}, {0, 1, 0}, plate_size, plate_size));
    facets.push_back(Facet::rectangle(2, {half, center_y, center_z}, {-1, 0, 0}, {0, 1, 0}, plate_size, plate_size));
    s.scene = Scene(std::move(facets));
    s.sources = {{{0.0, 0.0, center_z}, {0, 0, 1}, {1.0, 0.0}}};
    s.arrays.rx = planar_aperture({0.0, center_y - 0.5 * plate_size - 0.1, center_z}, {1, 0, 0}, {0, 0, 1}, 0.5,
                                  0.5, n_rx, n_rx);
    s.arrays.copol = {0, 0, 1};
    s.sweep = kSweep;
    s.grid = ImageGrid::planar({0.0, 0.0, center_z}, {1, 0, 0}, {0, 1, 0}, 0.0025, 128, 128);
    s.grid.values.clear();
    return s;
}

std::vector<std::string> builtin_scenario_names()
{
    return {"tum_logo", "three_spheres", "parallel_plates", "hidden_dipole", "hidden_dipole_wall"};
}

Scenario builtin_scenario(const std::string &name)
{
    if (name == "tum_logo")
        return scenario_tum_logo();
    if (name == "three_spheres")
        return scenario_three_spheres();
    if (name == "parallel_plates")
        return scenario_parallel_plates();
    if (name == "hidden_dipole")
        return scenario_hidden_dipole();
    if (name == "hidden_dipole_wall")
        return scenario_hidden_dipole_wall();
    throw UnknownReference("unknown scenario '" + name + "'");
}

std::string scenario_to_json(const Scenario &s)
{
    json j;
    j["schema_version"] = kScenarioSchemaVersion;
    j["name"] = s.name;

    json facets = json::array();
    for (const auto &f : s.scene.facets())
        facets.push_back(facet_to_json(f));
    j["scene"]["facets"] = facets;
    j["scene"]["occluder_ids"] = std::vector<int>(s.scene.occluder_ids().begin(), s.scene.occluder_ids().end());

    if (!s.sources.empty()) {
        json src = json::array();
        for (const auto &d : s.sources)
            src.push_back({{"position", to_json(d.position)},
                           {"orientation", to_json(d.orientation)},
                           {"amplitude", to_json(d.amplitude)}});
        j["sources"] = src;
    } else {
        json tgt = json::array();
        for (const auto &t : s.targets)
            tgt.push_back({{"position", to_json(t.position)}, {"reflectivity", to_json(t.reflectivity)}});
        j["targets"] = tgt;
    }

    j["arrays"]["tx"] = to_json(s.arrays.tx);
    j["arrays"]["rx"] = to_json(s.arrays.rx);
    j["arrays"]["copol"] = to_json(s.arrays.copol);
    j["sweep"] = {{"f_start", s.sweep.f_start}, {"f_stop", s.sweep.f_stop}, {"step", s.sweep.step}};
    j["grid"] = {{"origin", to_json(s.grid.origin)},
                 {"axes", to_json(std::vector<Vec3>(s.grid.axes.begin(), s.grid.axes.end()))},
                 {"spacing", s.grid.spacing},
                 {"dims", s.grid.dims}};
    return j.dump(2) + "\n";
}

Scenario scenario_from_json(const std::string &text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error &e) {
        const auto end = text.begin() + static_cast<long>(std::min<std::size_t>(e.byte, text.size()));
        const int line = 1 + static_cast<int>(std::count(text.begin(), end, '\n'));
        throw ParseError("syntax error at line " + std::to_string(line) + ": " + e.what(), "", line);
    }

    const Parser p(text);
    Reader root = p.object(doc, "");
    const int version = p.integer(root.required("schema_version"), "schema_version");
    if (version != kScenarioSchemaVersion)
        p.fail("schema_version", "unsupported schema_version " + std::to_string(version));

    Scenario s;
    s.name = p.string(root.required("name"), "name");

    {
        Reader scene = p.object(root.required("scene"), "scene");
        const json &fj = p.array(scene.required("facets"), "scene.facets");
        std::vector<Facet> facets;
        for (std::size_t i = 0; i < fj.size(); ++i)
            facets.push_back(p.facet(fj[i], "scene.facets[" + std::to_string(i) + "]"));
        std::vector<int> occluders;
        if (const json *oj = scene.optional("occluder_ids")) {
            p.array(*oj, "scene.occluder_ids");
            for (std::size_t i = 0; i < oj->size(); ++i)
                occluders.push_back(p.integer((*oj)[i], "scene.occluder_ids[" + std::to_string(i) + "]"));
        }
        scene.finish();
        try {
            s.scene = Scene(std::move(facets), std::move(occluders));
        } catch (const std::exception &e) {
            p.fail("scene", e.what());
        }
    }

    const json *sources = root.optional("sources");
    const json *targets = root.optional("targets");
    if (!!sources == !!targets)
        p.fail(sources ? "targets" : "sources", "exactly one of 'sources' and 'targets' is required");
    if (sources) {
        p.array(*sources, "sources");
        for (std::size_t i = 0; i < sources->size(); ++i) {
            const std::string at = "sources[" + std::to_string(i) + "]";
            Reader r = p.object((*sources)[i], at);
            DipoleSource d;
            d.position = p.vec3(r.required("position"), r.at("position"));
            d.orientation = p.vec3(r.required("orientation"), r.at("orientation"));
            if (const json *a = r.optional("amplitude"))
                d.amplitude = p.complex(*a, r.at("amplitude"));
            r.finish();
            s.sources.push_back(d);
        }
    } else {
        p.array(*targets, "targets");
        for (std::size_t i = 0; i < targets->size(); ++i) {
            const std::string at = "targets[" + std::to_string(i) + "]";
            Reader r = p.object((*targets)[i], at);
            PointScatterer t;
            t.position = p.vec3(r.required("position"), r.at("position"));
            if (const json *a = r.optional("reflectivity"))
                t.reflectivity = p.complex(*a, r.at("reflectivity"));
            r.finish();
            s.targets.push_back(t);
        }
    }

    {
        Reader a = p.object(root.required("arrays"), "arrays");
        s.arrays.tx = p.vec3_list(a.required("tx"), "arrays.tx");
        s.arrays.rx = p.vec3_list(a.required("rx"), "arrays.rx");
        s.arrays.copol = p.vec3(a.required("copol"), "arrays.copol");
        a.finish();
    }
    {
        Reader w = p.object(root.required("sweep"), "sweep");
        s.sweep.f_start = p.number(w.required("f_start"), "sweep.f_start");
        s.sweep.f_stop = p.number(w.required("f_stop"), "sweep.f_stop");
        s.sweep.step = p.number(w.required("step"), "sweep.step");
        w.finish();
    }
    {
        Reader g = p.object(root.required("grid"), "grid");
        s.grid.origin = p.vec3(g.required("origin"), "grid.origin");
        const auto axes = p.vec3_list(p.array(g.required("axes"), "grid.axes", 3), "grid.axes");
        std::copy(axes.begin(), axes.end(), s.grid.axes.begin());
        const json &sp = p.array(g.required("spacing"), "grid.spacing", 3);
        const json &dm = p.array(g.required("dims"), "grid.dims", 3);
        for (int c = 0; c < 3; ++c) {
            s.grid.spacing[c] = p.number(sp[c], "grid.spacing[" + std::to_string(c) + "]");
            s.grid.dims[c] = p.count(dm[c], "grid.dims[" + std::to_string(c) + "]");
        }
        g.finish();
    }
    root.finish();

    try {
        s.validate();
    } catch (const std::invalid_argument &e) {
        p.fail("", e.what());
    }
    return s;
}

void save_scenario(const Scenario &scenario, const std::filesystem::path &path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << scenario_to_json(scenario);
    if (!out)
        throw IoError("write failed for " + path.string());
}

Scenario load_scenario(const std::filesystem::path &path) { return scenario_from_json(read_file(path)); }

Scenario resolve_scenario(const std::string &reference)
{
    const auto names = builtin_scenario_names();
    if (std::find(names.begin(), names.end(), reference) != names.end())
        return builtin_scenario(reference);
    if (std::filesystem::exists(reference))
        return load_scenario(reference);
    throw UnknownReference("'" + reference + "' is neither a built-in scenario nor a file");
}

} // namespace rtbpa
