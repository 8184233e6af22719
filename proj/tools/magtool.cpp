// Configuration-driven runner: each subcommand executes one experiment family
// and writes JSON reports plus CSV plot data under the output directory.

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "mag/analytic.hpp"
#include "mag/config.hpp"
#include "mag/constfield.hpp"
#include "mag/covering.hpp"
#include "mag/errors.hpp"
#include "mag/field.hpp"
#include "mag/geometry.hpp"
#include "mag/local_gauge.hpp"
#include "mag/opineq.hpp"
#include "mag/report.hpp"
#include "mag/scales.hpp"
#include "mag/spectral.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;
using namespace mag;

namespace {

struct RunContext {
    Config cfg;
    fs::path out_dir;
    json manifest;
    json timings;
    std::chrono::steady_clock::time_point t0;

    void start(const std::string& step) { t0 = std::chrono::steady_clock::now(); (void)step; }
    void finish(const std::string& step) {
        double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        timings[step] = dt;
    }
    void artifact(const std::string& kind, const fs::path& p) {
        manifest["artifacts"][kind] = p.string();
    }
};

FieldPtr field_from_config(const Config& cfg) {
    std::string name = cfg.get_str("field.name");
    std::map<std::string, double> params;
    for (const auto& [k, v] : cfg.entries()) {
        if (k.rfind("field.", 0) == 0 && k != "field.name") {
            try {
                params[k.substr(6)] = std::stod(v);
            } catch (const std::exception&) {
                throw config_error("field parameter is not numeric: " + k);
            }
        }
    }
    return builtin_field(name, params);
}

std::function<double(const Vec3&)> potential_from_config(const Config& cfg) {
    std::string name = cfg.get_str("potential.name", "none");
    if (name == "none") return [](const Vec3&) { return 0.0; };
    if (name == "well") {
        double depth = cfg.get_num("potential.depth", 1.0);
        double radius = cfg.get_num("potential.radius", 1.0);
        Vec3 c{cfg.get_num("potential.cx", 0.0), cfg.get_num("potential.cy", 0.0),
               cfg.get_num("potential.cz", 0.0)};
        return [=](const Vec3& x) {
            double t = 1.0 - norm2(x - c) / (radius * radius);
            return t > 0.0 ? -depth * t * t * t : 0.0;
        };
    }
    throw config_error("unknown potential: " + name);
}

Box box_from_config(const Config& cfg, const std::string& prefix, double dflt_side) {
    double side = cfg.get_num(prefix + ".side", dflt_side);
    Vec3 c{cfg.get_num(prefix + ".cx", 0.0), cfg.get_num(prefix + ".cy", 0.0),
           cfg.get_num(prefix + ".cz", 0.0)};
    Vec3 h{side / 2, side / 2, side / 2};
    return {c - h, c + h};
}

int run_scales(RunContext& rc);
int run_cover(RunContext& rc);
int run_geometry(RunContext& rc);
int run_bounds(RunContext& rc);
int run_constfield(RunContext& rc);
int run_spectrum(RunContext& rc);
int run_verify_lt(RunContext& rc);
int run_zero_modes(RunContext& rc);
int run_opineq(RunContext& rc);

int dispatch(const std::string& task, RunContext& rc) {
    if (task == "scales") return run_scales(rc);
    if (task == "cover") return run_cover(rc);
    if (task == "geometry") return run_geometry(rc);
    if (task == "bounds") return run_bounds(rc);
    if (task == "const-field") return run_constfield(rc);
    if (task == "spectrum") return run_spectrum(rc);
    if (task == "verify-lt") return run_verify_lt(rc);
    if (task == "zero-modes") return run_zero_modes(rc);
    if (task == "opineq") return run_opineq(rc);
    throw config_error("unknown task: " + task);
}

// ---------------------------------------------------------------------------

int run_scales(RunContext& rc) {
    FieldPtr field = field_from_config(rc.cfg);
    double eps = rc.cfg.get_num("epsilon", 1.0 / 1024.0);
    ScaleProfile prof(field, eps);
    Box box = box_from_config(rc.cfg, "grid", 1.0);
    int n = int(rc.cfg.get_num("grid.n", 5));
    CsvWriter csv((rc.out_dir / "scales.csv").string());
    csv.header({"x", "y", "z", "Lm", "Lv", "Lc", "ell", "P"});
    Vec3 s = box.side();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                Vec3 p = box.lo + Vec3{s.x * (i + 0.5) / n, s.y * (j + 0.5) / n, s.z * (k + 0.5) / n};
                double lm = prof.magnetic_scale(p), lv = prof.variation_scale(p);
                double lc = std::max(lm, lv);
                double l = std::isinf(lc) ? kScaleInfinity : eps * 0.5 * lc;
                csv.row({p.x, p.y, p.z, lm, lv, lc, l, prof.pressure_scale(p)});
            }
    rc.artifact("scales_csv", rc.out_dir / "scales.csv");
    return 0;
}

int run_cover(RunContext& rc) {
    FieldPtr field = field_from_config(rc.cfg);
    double eps = rc.cfg.get_num("epsilon", 1.0 / 1024.0);
    ScaleProfile prof(field, eps);
    Box region = box_from_config(rc.cfg, "region", 1.0);
    // cached trilinear ell over the region (callers own the caching)
    Vec3 c = region.center();
    double l0 = prof.ell(c);
    auto ell = [l0](const Vec3&) { return l0; };
    if (rc.cfg.get_str("cover.ell_mode", "frozen") == "sampled") {
        // direct evaluation (slow; small regions only)
        BallCover cover = build_cover([&](const Vec3& p) { return prof.ell(p); }, region, eps);
        (void)cover;
    }
    BallCover cover = build_cover(ell, region, eps);
    classify_cover(cover, [&](const Vec3& p) { return norm((*field)(p)); }, eps);
    color_classes(cover);
    std::vector<Vec3> probes;
    int np = int(rc.cfg.get_num("cover.probes", 17));
    Vec3 s = region.side();
    for (int i = 0; i < np; ++i)
        for (int j = 0; j < np; ++j)
            for (int k = 0; k < np; ++k)
                probes.push_back(region.lo + Vec3{s.x * (i + 0.5) / np, s.y * (j + 0.5) / np,
                                                  s.z * (k + 0.5) / np});
    auto uncovered = uncovered_probes(cover, probes);
    measure_overlap(cover, probes);

    json j;
    j["n_balls"] = cover.size();
    j["n_colors"] = cover.n_colors;
    j["measured_overlap"] = cover.measured_overlap;
    j["uncovered_probes"] = uncovered.size();
    j["cores_disjoint"] = cores_disjoint(cover);
    json centers = json::array();
    for (size_t i = 0; i < cover.size(); ++i)
        centers.push_back({{"x", cover.centers[i].x},
                           {"y", cover.centers[i].y},
                           {"z", cover.centers[i].z},
                           {"ell", cover.radii[i]},
                           {"strong", bool(cover.strong_flags[i])},
                           {"color", cover.color[i]}});
    if (rc.cfg.get_num("cover.emit_centers", 0) > 0) j["balls"] = centers;
    std::ofstream((rc.out_dir / "cover.json")) << j.dump(2) << "\n";
    rc.artifact("cover_json", rc.out_dir / "cover.json");
    return 0;
}

int run_geometry(RunContext& rc) {
    FieldPtr field = field_from_config(rc.cfg);
    double eps = rc.cfg.get_num("epsilon", 1.0 / 1024.0);
    ScaleProfile prof(field, eps);
    Vec3 z0{rc.cfg.get_num("geometry.cx", 0.0), rc.cfg.get_num("geometry.cy", 0.0),
            rc.cfg.get_num("geometry.cz", 0.0)};
    double ell = prof.ell(z0);
    BallCover cover;
    cover.region = {z0 - Vec3{ell, ell, ell}, z0 + Vec3{ell, ell, ell}};
    cover.seeded_region = cover.region;
    cover.centers = {z0};
    cover.radii = {ell};
    cover.strong_flags = {1};
    LocalField lf = strong_local_field(field, cover, 0, eps);
    FieldLineFrame frame(lf, lf.center(), lf.support_radius() + lf.ell(), lf.exterior_value());
    CsvWriter csv((rc.out_dir / "frame_profile.csv").string());
    csv.header({"tau", "omega", "f", "kappa"});
    double span = 3.0 * lf.support_radius();
    for (int i = -32; i <= 32; ++i) {
        double tau = span * i / 32.0;
        Vec3 p = frame.line().at(tau);
        double om = frame.omega(p);
        double xi3 = frame.xi_of_x(p).z;
        csv.row({tau, om, frame.f_of_xi3(xi3), frame.kappa(tau)});
    }
    rc.artifact("frame_profile", rc.out_dir / "frame_profile.csv");
    json j;
    j["localization_residual_exact"] = magnetic_localization_residual(4.0, 0.125, false);
    j["localization_residual_stencil_h"] = magnetic_localization_residual(4.0, 0.125, true, 0.05);
    std::ofstream((rc.out_dir / "geometry.json")) << j.dump(2) << "\n";
    rc.artifact("geometry_json", rc.out_dir / "geometry.json");
    return 0;
}

int run_bounds(RunContext& rc) {
    FieldPtr field = field_from_config(rc.cfg);
    auto V = potential_from_config(rc.cfg);
    Box support = box_from_config(rc.cfg, "support", 2.0);
    double eps = rc.cfg.get_num("epsilon", 1.0 / 1024.0);
    ScaleProfile prof(field, eps);
    BoundBreakdown bb = lt_rhs(*field, V, prof, support);
    json j;
    j["term1"] = bb.term1;
    j["term2"] = bb.term2;
    j["term3"] = bb.term3;
    j["total"] = bb.total();
    SemiclassicalResult sc = semiclassical_energy(*field, V, rc.cfg.get_num("hbar", 1.0), support);
    j["semiclassical_energy"] = sc.energy;
    std::ofstream((rc.out_dir / "bounds.json")) << j.dump(2) << "\n";
    rc.artifact("bounds_json", rc.out_dir / "bounds.json");
    return 0;
}

int run_constfield(RunContext& rc) {
    double b = rc.cfg.get_num("constfield.b", 1.0);
    double P = rc.cfg.get_num("constfield.P", 1.0);
    DiagTraceReport rep = diag_trace_checks(b, P);
    ConstResolvent R(b, P);
    DecayFit fit = resolvent_decay_fit(R, -1);
    json j;
    j["trace_sq_diag"] = rep.trace_sq_diag;
    j["ratio_vs_bound"] = rep.ratio_vs_bound;
    j["gaussian_decay_ratio"] = rep.gaussian_decay_ratio;
    j["decay_rate"] = fit.rate;
    j["decay_amplitude"] = fit.amplitude;
    std::ofstream((rc.out_dir / "const_field.json")) << j.dump(2) << "\n";
    rc.artifact("const_field_json", rc.out_dir / "const_field.json");
    CsvWriter csv((rc.out_dir / "resolvent_profile.csv").string());
    csv.header({"norm", "kernel_up", "kernel_down"});
    for (int i = 1; i <= 24; ++i) {
        double nn = 0.25 * i;
        double dperp_sq = 0.5 * nn * nn / b, dz = std::sqrt(0.5) * nn / std::sqrt(P);
        csv.row({nn, R.kernel_magnitude(dperp_sq, dz, +1), R.kernel_magnitude(dperp_sq, dz, -1)});
    }
    rc.artifact("resolvent_profile", rc.out_dir / "resolvent_profile.csv");
    return 0;
}

int run_spectrum(RunContext& rc) {
    FieldPtr field = field_from_config(rc.cfg);
    auto V = potential_from_config(rc.cfg);
    Box box = box_from_config(rc.cfg, "box", 4.0);
    double h = rc.cfg.get_num("grid.h", 0.25);
    GaugePtr gauge = builtin_gauge(field);
    if (!gauge) gauge = poincare_gauge(field, box.center());
    DiscretePauli op = assemble(*field, V, box, h, *gauge, rc.cfg.get_num("hbar", 1.0));
    SumNegativeOptions opts;
    opts.lobpcg.seed = unsigned(rc.cfg.get_num("seed", 2718));
    SpectralReport rep = sum_negative_eigenvalues(op, opts);
    json j;
    j["dim"] = op.dim();
    j["n_negative"] = rep.negative_eigenvalues.size();
    j["trace_sum"] = rep.trace_sum;
    j["certified_count"] = rep.certified_count;
    j["used_dense"] = rep.used_dense;
    j["negative_eigenvalues"] = rep.negative_eigenvalues;
    std::ofstream((rc.out_dir / "spectrum.json")) << j.dump(2) << "\n";
    rc.artifact("spectrum_json", rc.out_dir / "spectrum.json");
    return 0;
}

int run_verify_lt(RunContext& rc) {
    auto V = potential_from_config(rc.cfg);
    Box box = box_from_config(rc.cfg, "box", 4.0);
    Box support = box_from_config(rc.cfg, "support", 2.0);
    double h = rc.cfg.get_num("grid.h", 0.2);
    std::vector<double> bs = rc.cfg.has("sweep.b") ? rc.cfg.get_list("sweep.b")
                                                   : std::vector<double>{1, 2, 4, 8};
    CsvWriter csv((rc.out_dir / "lt_sweep.csv").string());
    csv.header({"b", "trace_sum", "term1", "term2", "term3", "ratio"});
    for (double b : bs) {
        FieldPtr f = builtin_field("constant", {{"bz", b}});
        LinearConstantGauge gauge({0, 0, b});
        LtSweepEntry e = verify_lt_at(*f, gauge, V, box, h, nullptr, support);
        csv.row({b, e.trace_sum, e.rhs.term1, e.rhs.term2, e.rhs.term3, e.ratio});
    }
    rc.artifact("lt_sweep", rc.out_dir / "lt_sweep.csv");
    return 0;
}

int run_zero_modes(RunContext& rc) {
    FieldPtr field = field_from_config(rc.cfg);
    Box box = box_from_config(rc.cfg, "box", 12.0);
    double h = rc.cfg.get_num("grid.h", 0.375);
    GaugePtr gauge = builtin_gauge(field);
    if (!gauge) gauge = poincare_gauge(field, box.center());
    DiscretePauli op = assemble(*field, [](const Vec3&) { return 0.0; }, box, h, *gauge);
    LobpcgOptions lo;
    lo.seed = unsigned(rc.cfg.get_num("seed", 2718));
    double bref = norm((*field)(box.center()));
    ZeroModeResult zr = zero_modes(op, int(rc.cfg.get_num("zero_modes.k", 2)), 1e-2, bref, lo);
    json j;
    j["values"] = zr.values;
    j["accepted"] = zr.accepted;
    j["tol_abs"] = zr.tol_abs;
    const GridSpec& g = op.grid();
    j["density_at_center"] = zr.density_at(g, g.n[0] / 2, g.n[1] / 2, g.n[2] / 2);
    std::ofstream((rc.out_dir / "zero_modes.json")) << j.dump(2) << "\n";
    rc.artifact("zero_modes_json", rc.out_dir / "zero_modes.json");
    return 0;
}

int run_opineq(RunContext& rc) {
    int n = int(rc.cfg.get_num("opineq.instances", 1000));
    unsigned seed = unsigned(rc.cfg.get_num("seed", 12345));
    double worst_pullup = 1e300;
    unsigned worst_seed = 0;
    for (int i = 0; i < n; ++i) {
        double g = pullup_gap(random_block_instance(seed + i));
        if (g < worst_pullup) {
            worst_pullup = g;
            worst_seed = seed + i;
        }
    }
    PullinReport pr = pullin_counterexample();
    json j;
    j["instances"] = n;
    j["worst_pullup_gap"] = worst_pullup;
    j["worst_seed"] = worst_seed;
    j["pullup_pass"] = worst_pullup >= -1e-10;
    j["pullin_min_eig"] = pr.min_eig_phi_sq;
    j["pullin_normalized"] = pr.normalized_min;
    j["pullin_confirmed"] = pr.min_eig_phi_sq < 0.0;
    std::ofstream((rc.out_dir / "opineq.json")) << j.dump(2) << "\n";
    rc.artifact("opineq_json", rc.out_dir / "opineq.json");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"magnetic Pauli operator toolkit"};
    std::string config_path, task, out_override;
    int threads = 0;
    app.add_option("-c,--config", config_path, "configuration file");
    app.add_option("task", task,
                   "scales | cover | geometry | bounds | const-field | spectrum | verify-lt | "
                   "zero-modes | opineq")
        ->required();
    app.add_option("-o,--out", out_override, "output directory (overrides config)");
    app.add_option("--threads", threads, "cap worker threads");
    CLI11_PARSE(app, argc, argv);

    try {
        RunContext rc;
        rc.cfg = config_path.empty() ? Config{} : Config::parse_file(config_path);
        const char* env_root = std::getenv("MAG_OUT_ROOT");
        std::string out = !out_override.empty()   ? out_override
                          : rc.cfg.has("out_dir") ? rc.cfg.get_str("out_dir")
                          : env_root              ? std::string(env_root) + "/" + task
                                                  : "out/" + task;
        rc.out_dir = out;
        fs::create_directories(rc.out_dir);
        rc.manifest["config_hash"] = rc.cfg.hash();
        rc.manifest["code_version"] = "magtool 0.1.0";
        rc.manifest["task"] = task;

        rc.start(task);
        int status = dispatch(task, rc);
        rc.finish(task);

        std::ofstream(rc.out_dir / "manifest.json") << rc.manifest.dump(2) << "\n";
        std::ofstream(rc.out_dir / "timings.json") << rc.timings.dump(2) << "\n";
        return status;
    } catch (const config_error& e) {
        std::cerr << "{\"error\":\"config\",\"detail\":\"" << e.what() << "\"}\n";
        return 2;
    } catch (const budget_error& e) {
        std::cerr << "{\"error\":\"budget\",\"detail\":\"" << e.what() << "\"}\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "{\"error\":\"numerical\",\"detail\":\"" << e.what() << "\"}\n";
        return 4;
    }
}
