// SPDX-License-Identifier: Apache-2.0
#include "rtbpa/cli.hpp"

#include "rtbpa/container.hpp"
#include "rtbpa/errors.hpp"
#include "rtbpa/fields.hpp"
#include "rtbpa/imaging.hpp"
#include "rtbpa/scenes.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <optional>

namespace rtbpa {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct EngineFlags {
    std::string engine = "images";
    int max_order = 2;
    std::size_t rays = SbrConfig{}.ray_count;
    double capture_radius = SbrConfig{}.capture_radius;
    bool no_half_wave = false;
    std::uint64_t seed = 0;
    unsigned workers = 0;

    void add_to(CLI::App &cmd)
    {
        cmd.add_option("--engine", engine, "path engine")->check(CLI::IsMember({"images", "sbr"}));
        cmd.add_option("--max-order", max_order, "maximum reflection order")->check(CLI::Range(0, kMaxImageOrder));
        cmd.add_option("--rays", rays, "SBR rays per launch point")->check(CLI::PositiveNumber);
        cmd.add_option("--capture-radius", capture_radius, "SBR capture radius [m]")->check(CLI::PositiveNumber);
        cmd.add_flag("--no-half-wave", no_half_wave, "drop the pi shift of odd co-pol parity");
        cmd.add_option("--seed", seed, "RNG seed (SBR launches and noise)");
        cmd.add_option("--workers", workers, "worker threads (0: RTBPA_WORKERS or all cores)");
    }

    PathEngineConfig config() const
    {
        PathEngineConfig cfg;
        cfg.kind = engine == "sbr" ? PathEngineKind::Sbr : PathEngineKind::Images;
        cfg.max_order = max_order;
        cfg.sbr.ray_count = rays;
        cfg.sbr.capture_radius = capture_radius;
        cfg.sbr.rng_seed = seed;
        cfg.sbr.max_bounces = max_order;
        return cfg;
    }

    json describe() const
    {
        return {{"engine", engine},       {"max_order", max_order}, {"rays", rays},
                {"capture_radius", capture_radius}, {"half_wave", !no_half_wave}, {"seed", seed}};
    }
};

const char *mode_name(MeasurementMode m) { return m == MeasurementMode::Radiation ? "radiation" : "scattering"; }

json vec_json(const Vec3 &v) { return json::array({v.x, v.y, v.z}); }

// Keeps the field of view of the template and resamples it to nx x ny.
ImageGrid resample_grid(const ImageGrid &tmpl, std::size_t nx, std::size_t ny)
{
    if (nx < 2 || ny < 2)
        throw std::invalid_argument("--grid needs at least 2 x 2 voxels");
    ImageGrid g = tmpl;
    g.spacing[0] = tmpl.spacing[0] * static_cast<double>(tmpl.dims[0] - 1) / static_cast<double>(nx - 1);
    g.spacing[1] = tmpl.spacing[1] * static_cast<double>(tmpl.dims[1] - 1) / static_cast<double>(ny - 1);
    g.dims = {nx, ny, 1};
    g.clear_values();
    return g;
}

std::string fmt(const char *f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// Rows are y (first row = j 0), columns x; planar cuts only.
std::string db_csv(const ImageGrid &image)
{
    const auto db = normalized_db(image);
    std::string out;
    for (std::size_t j = 0; j < image.dims[1]; ++j) {
        for (std::size_t i = 0; i < image.dims[0]; ++i) {
            if (i)
                out += ',';
            out += fmt("%.4f", db[image.index(i, j, 0)]);
        }
        out += '\n';
    }
    return out;
}

// 8-bit binary PGM, linear ramp: -40 dB black, 0 dB white. Top row is the
// largest y.
std::string db_pgm(const ImageGrid &image)
{
    const auto db = normalized_db(image);
    std::string out = "P5\n" + std::to_string(image.dims[0]) + " " + std::to_string(image.dims[1]) + "\n255\n";
    for (std::size_t jj = image.dims[1]; jj-- > 0;) {
        for (std::size_t i = 0; i < image.dims[0]; ++i) {
            const double t = (db[image.index(i, jj, 0)] - kImageFloorDb) / -kImageFloorDb;
            out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * std::clamp(t, 0.0, 1.0)))));
        }
    }
    return out;
}

json axis_metrics(const ImageGrid &image, const VoxelIndex &peak, int axis)
{
    json m;
    try {
        const auto psf = psf_metrics(image, image.axes[axis], peak);
        m["fwhm"] = psf.fwhm;
        m["pslr_db"] = std::isfinite(psf.pslr_db) ? json(psf.pslr_db) : json(nullptr);
    } catch (const UnresolvedLobe &) {
        m["fwhm"] = nullptr;
        m["pslr_db"] = nullptr;
    }
    return m;
}

fs::path data_file(const std::string &arg)
{
    fs::path p(arg);
    return fs::is_directory(p) ? p / "data.bin" : p;
}

int cmd_forward(const std::string &scenario_ref, const EngineFlags &flags, double noise, const std::string &out_dir,
                std::ostream &out)
{
    const Scenario sc = resolve_scenario(scenario_ref);
    ForwardOptions opts;
    opts.engine = flags.config();
    opts.apply_half_wave = !flags.no_half_wave;
    opts.workers = flags.workers;
    MeasurementSet data = sc.mode() == MeasurementMode::Radiation
                              ? synthesize_radiation_data(sc.sources, sc.arrays, sc.scene, sc.sweep, opts)
                              : synthesize_scattering_data(sc.targets, sc.arrays, sc.scene, sc.sweep, opts);
    if (noise > 0.0)
        add_complex_noise(data, noise, flags.seed);

    fs::create_directories(out_dir);
    write_measurement(data, fs::path(out_dir) / "data.bin");
    json meta = {{"format", "RTBPA1"},
                 {"kind", "measurement"},
                 {"scenario", sc.name},
                 {"mode", mode_name(data.mode)},
                 {"dims", {data.n_tx(), data.n_rx(), data.n_k()}},
                 {"sample_type", "complex64"},
                 {"sweep", {{"f_start", data.sweep.f_start}, {"f_stop", data.sweep.f_stop}, {"step", data.sweep.step}}},
                 {"copol", vec_json(data.copol)},
                 {"forward", flags.describe()},
                 {"noise_sigma", noise}};
    write_text_file(fs::path(out_dir) / "data.json", meta.dump(2) + "\n");
    save_scenario(sc, fs::path(out_dir) / "scenario.json");
    out << "wrote " << (fs::path(out_dir) / "data.bin").string() << " (" << data.n_tx() << "x" << data.n_rx() << "x"
        << data.n_k() << ")\n";
    return kExitOk;
}

int cmd_reconstruct(const std::string &scenario_ref, const std::string &data_arg, const std::string &algorithm,
                    const EngineFlags &flags, const std::vector<std::size_t> &grid_dims, std::optional<std::size_t> peaks,
                    double peak_separation, const std::string &out_dir, std::ostream &out)
{
    const Scenario sc = resolve_scenario(scenario_ref);
    const MeasurementSet data = read_measurement(data_file(data_arg));
    if (data.mode != sc.mode())
        throw ShapeMismatch("data mode does not match the scenario");
    if (data.n_rx() != sc.arrays.rx.size() ||
        (data.mode == MeasurementMode::Scattering && data.n_tx() != sc.arrays.tx.size()))
        throw ShapeMismatch("data apertures do not match the scenario");
    ImageGrid grid = grid_dims.empty() ? sc.grid : resample_grid(sc.grid, grid_dims[0], grid_dims[1]);
    grid.clear_values();

    const auto t0 = std::chrono::steady_clock::now();
    ImageGrid image;
    if (algorithm == "naive") {
        image = naive_bpa(data, grid, flags.workers);
    } else {
        ReconstructionConfig cfg = ReconstructionConfig::for_data(data, flags.max_order);
        cfg.engine = flags.config();
        cfg.apply_half_wave = !flags.no_half_wave;
        cfg.workers = flags.workers;
        image = rt_bpa(data, grid, sc.scene, cfg);
    }
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    seconds = std::max(seconds, std::numeric_limits<double>::min());

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    write_image(image, dir / "image.bin");
    write_text_file(dir / "image_db.csv", db_csv(image));
    write_text_file(dir / "image.pgm", db_pgm(image));

    json m;
    m["scenario"] = sc.name;
    m["algorithm"] = algorithm;
    m["reconstruction"] = flags.describe();
    m["grid"] = {{"dims", image.dims}, {"spacing", image.spacing}, {"origin", vec_json(image.origin)}};
    const std::size_t n_peaks = peaks.value_or(std::max<std::size_t>(1, sc.sources.size() + sc.targets.size()));
    const double top = std::abs(image.values[argmax_magnitude(image)]);
    json pj = json::array();
    bool any_energy = top > 0.0;
    if (any_energy) {
        for (const auto &p : peak_locations(image, n_peaks, peak_separation))
            pj.push_back({{"position", vec_json(p.position)},
                          {"voxel", p.voxel},
                          {"magnitude_db", 20.0 * std::log10(p.magnitude / top)}});
        const VoxelIndex main = image.unravel(argmax_magnitude(image));
        m["x"] = axis_metrics(image, main, 0);
        m["y"] = axis_metrics(image, main, 1);
        m["entropy"] = image_entropy(image);
    } else {
        m["x"] = {{"fwhm", nullptr}, {"pslr_db", nullptr}};
        m["y"] = {{"fwhm", nullptr}, {"pslr_db", nullptr}};
        m["entropy"] = nullptr;
    }
    m["peaks"] = pj;
    m["wall_clock_seconds"] = seconds;
    write_text_file(dir / "metrics.json", m.dump(2) + "\n");
    out << "wrote " << (dir / "image.bin").string() << " in " << fmt("%.3f", seconds) << " s\n";
    return kExitOk;
}

json delta(const json &a, const json &b)
{
    if (a.is_number() && b.is_number())
        return b.get<double>() - a.get<double>();
    return nullptr;
}

int cmd_compare(const std::string &a_dir, const std::string &b_dir, const std::string &out_dir, std::ostream &out)
{
    const ImageGrid a = read_image(fs::path(a_dir) / "image.bin");
    const ImageGrid b = read_image(fs::path(b_dir) / "image.bin");
    if (!a.same_geometry(b))
        throw ShapeMismatch("runs were reconstructed on different grids");
    const json ma = json::parse(read_text_file(fs::path(a_dir) / "metrics.json"));
    const json mb = json::parse(read_text_file(fs::path(b_dir) / "metrics.json"));

    json r;
    r["a"] = a_dir;
    r["b"] = b_dir;
    r["entropy_delta"] = delta(ma["entropy"], mb["entropy"]);
    for (const char *ax : {"x", "y"}) {
        r[std::string("fwhm_") + ax + "_delta"] = delta(ma[ax]["fwhm"], mb[ax]["fwhm"]);
        r[std::string("pslr_") + ax + "_delta_db"] = delta(ma[ax]["pslr_db"], mb[ax]["pslr_db"]);
    }
    // Peak i of A against the nearest peak of B.
    json disp = json::array();
    for (const auto &pa : ma["peaks"]) {
        const Vec3 va{pa["position"][0], pa["position"][1], pa["position"][2]};
        double best = std::numeric_limits<double>::infinity();
        for (const auto &pb : mb["peaks"]) {
            const Vec3 vb{pb["position"][0], pb["position"][1], pb["position"][2]};
            best = std::min(best, distance(va, vb));
        }
        disp.push_back(std::isfinite(best) ? json(best) : json(nullptr));
    }
    r["peak_displacement"] = disp;
    const auto da = normalized_db(a), db = normalized_db(b);
    double max_db = 0.0;
    for (std::size_t i = 0; i < da.size(); ++i)
        max_db = std::max(max_db, std::abs(da[i] - db[i]));
    r["max_abs_db_delta"] = max_db;

    const std::string text = r.dump(2) + "\n";
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_text_file(fs::path(out_dir) / "compare.json", text);
    }
    out << text;
    return kExitOk;
}

int cmd_scenes(const std::string &action, const std::string &name, std::ostream &out)
{
    if (action == "list") {
        for (const auto &n : builtin_scenario_names())
            out << n << "\n";
        return kExitOk;
    }
    if (name.empty())
        throw ParseError("scenes show needs a scenario name", "name");
    out << scenario_to_json(builtin_scenario(name));
    return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err)
{
    CLI::App app{"Multipath-aware microwave imaging"};
    app.require_subcommand(1);

    EngineFlags fwd_flags, rec_flags;
    std::string fwd_scenario, fwd_out = "out/forward";
    double noise = 0.0;
    auto *forward = app.add_subcommand("forward", "synthesize measurement data for a scenario");
    forward->add_option("--scenario", fwd_scenario, "built-in name or scenario file")->required();
    forward->add_option("--noise", noise, "complex Gaussian noise sigma per sample")->check(CLI::NonNegativeNumber);
    forward->add_option("--out", fwd_out, "output directory");
    fwd_flags.add_to(*forward);

    std::string rec_scenario, rec_data, algorithm = "rtbpa", rec_out = "out/reconstruct";
    std::vector<std::size_t> grid_dims;
    std::optional<std::size_t> peaks;
    double peak_sep = 0.1;
    auto *reconstruct = app.add_subcommand("reconstruct", "image measurement data");
    reconstruct->add_option("--scenario", rec_scenario, "built-in name or scenario file")->required();
    reconstruct->add_option("--data", rec_data, "measurement file or forward output directory")->required();
    reconstruct->add_option("--algorithm", algorithm, "naive or rtbpa")->check(CLI::IsMember({"naive", "rtbpa"}));
    reconstruct->add_option("--grid", grid_dims, "image voxels NX NY")->expected(2);
    reconstruct->add_option("--peaks", peaks, "number of peaks to report");
    reconstruct->add_option("--peak-separation", peak_sep, "minimum peak separation [m]")
        ->check(CLI::NonNegativeNumber);
    reconstruct->add_option("--out", rec_out, "output directory");
    rec_flags.add_to(*reconstruct);

    std::string cmp_a, cmp_b, cmp_out;
    auto *compare = app.add_subcommand("compare", "metric deltas between two reconstruct runs");
    compare->add_option("run_a", cmp_a, "first reconstruct output directory")->required();
    compare->add_option("run_b", cmp_b, "second reconstruct output directory")->required();
    compare->add_option("--out", cmp_out, "also write compare.json here");

    std::string scenes_action, scenes_name;
    auto *scenes = app.add_subcommand("scenes", "list or show built-in scenarios");
    scenes->add_option("action", scenes_action, "list or show")->required()->check(CLI::IsMember({"list", "show"}));
    scenes->add_option("name", scenes_name, "scenario name for show");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << "\n";
        return kExitParse;
    }

    try {
        if (*forward)
            return cmd_forward(fwd_scenario, fwd_flags, noise, fwd_out, out);
        if (*reconstruct)
            return cmd_reconstruct(rec_scenario, rec_data, algorithm, rec_flags, grid_dims, peaks, peak_sep, rec_out,
                                   out);
        if (*compare)
            return cmd_compare(cmp_a, cmp_b, cmp_out, out);
        return cmd_scenes(scenes_action, scenes_name, out);
    } catch (const ParseError &e) {
        err << "error: " << e.what();
        if (e.line() > 0)
            err << " (line " << e.line() << ")";
        err << "\n";
        return kExitParse;
    } catch (const IoError &e) {
        err << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const ShapeMismatch &e) {
        err << "error: " << e.what() << "\n";
        return kExitShape;
    } catch (const UnknownReference &e) {
        err << "error: " << e.what() << "\n";
        return kExitUnknown;
    } catch (const json::exception &e) {
        err << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const std::invalid_argument &e) {
        err << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const fs::filesystem_error &e) {
        err << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
}

} // namespace rtbpa
