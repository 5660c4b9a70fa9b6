// Command-line surface for trajectory ingestion, tracking, synthetic data
// generation, gradient estimation, and finite-time metric export.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "flowmap/error.hpp"
#include "flowmap/io.hpp"
#include "flowmap/metrics.hpp"
#include "flowmap/reference.hpp"
#include "flowmap/regression.hpp"
#include "flowmap/synthetic.hpp"
#include "flowmap/tracker.hpp"

namespace {

using namespace flowmap;

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    long long ms() const {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - start)
            .count();
    }
};

void emit_config(const std::string& output_path, const ConfigEntries& entries) {
    write_config_file(output_path + ".config", entries);
}

void print_diagnostics(const FieldDiagnostics& d, const Timer& timer) {
    std::cerr << "diagnostics: candidates=" << d.candidates << " emitted=" << d.emitted
              << " skipped_persistence=" << d.skipped_persistence
              << " skipped_neighbors=" << d.skipped_neighbors
              << " skipped_rank=" << d.skipped_rank << " elapsed_ms=" << timer.ms()
              << "\n";
}

void print_timing(const Timer& timer, const std::string& what) {
    std::cerr << "diagnostics: " << what << " elapsed_ms=" << timer.ms() << "\n";
}

struct KernelFlags {
    KernelConfig cfg = lab_preset();
    std::string preset = "lab";
    CLI::Option* opt_k = nullptr;
    CLI::Option* opt_s = nullptr;
    CLI::Option* opt_gamma = nullptr;

    void attach(CLI::App* sub) {
        sub->add_option("--preset", preset, "parameter preset: lab (k=15, s=0.03) or field (k=25, s=0.6)")
            ->check(CLI::IsMember({"lab", "field"}));
        opt_k = sub->add_option("--k", cfg.k, "neighbor count");
        opt_s = sub->add_option("--s", cfg.s, "kernel bandwidth (world units)");
        opt_gamma = sub->add_option("--gamma", cfg.gamma, "regularization constant");
    }

    KernelConfig resolve() {
        KernelConfig base = preset == "field" ? field_preset() : lab_preset();
        if (!*opt_k) cfg.k = base.k;
        if (!*opt_s) cfg.s = base.s;
        if (!*opt_gamma) cfg.gamma = base.gamma;
        cfg.validate();
        return cfg;
    }

    void describe(ConfigEntries& entries) const {
        entries.push_back({"preset", preset});
        entries.push_back({"kernel.k", std::to_string(cfg.k)});
        entries.push_back({"kernel.s", fmt(cfg.s)});
        entries.push_back({"kernel.gamma", fmt(cfg.gamma)});
    }
};

struct IntervalFlags {
    int start = 0;
    int end = -1;
    double seconds = 0.0;

    void attach(CLI::App* sub) {
        sub->add_option("--start", start, "first frame of the interval");
        sub->add_option("--end", end, "last frame of the interval (default: last)");
        sub->add_option("--seconds", seconds,
                        "interval length in seconds from --start (overrides --end)");
    }

    std::pair<int, int> resolve(const TrajectorySet& set) const {
        if (set.frame_count() < 2) throw Error("input has fewer than two frames");
        int e = end < 0 ? set.frame_count() - 1 : end;
        if (seconds > 0.0) {
            const double target = set.time_at(start) + seconds;
            e = -1;
            for (int f = start + 1; f < set.frame_count(); ++f) {
                if (set.time_at(f) >= target - 1e-9) {
                    e = f;
                    break;
                }
            }
            if (e < 0) {
                throw Error("trajectories end before the requested " + fmt(seconds) +
                            " s interval");
            }
        }
        if (start < 0 || e >= set.frame_count() || start >= e) {
            throw Error("invalid frame interval [" + std::to_string(start) + ", " +
                        std::to_string(e) + "]");
        }
        return {start, e};
    }
};

Domain parse_domain(const std::vector<double>& d) {
    if (d.size() != 4) throw Error("--domain expects x0 x1 y0 y1");
    if (!(d[0] < d[1]) || !(d[2] < d[3])) throw Error("--domain must satisfy x0<x1, y0<y1");
    return {d[0], d[1], d[2], d[3]};
}

int run(int argc, char** argv) {
    CLI::App app{"sparse trajectory flow diagnostics"};
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key = value configuration file");
    bool serial = false;
    app.add_flag("--serial", serial, "disable the OpenMP field kernels");

    // ---- synth ----------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "generate trajectories of a catalog flow");
    std::string synth_flow = "double-gyre";
    std::vector<double> synth_params;
    std::vector<double> synth_domain{0.0, 2.0, 0.0, 1.0};
    std::size_t synth_seeds = 1000;
    std::uint64_t synth_seed = 1;
    double synth_t0 = 0.0, synth_t1 = 10.0, synth_dt = 0.05;
    std::string synth_out;
    synth->add_option("--flow", synth_flow, "rotation | saddle | shear | double-gyre");
    synth->add_option("--param", synth_params, "flow parameters (flow-specific order)");
    synth->add_option("--domain", synth_domain, "seeding window x0 x1 y0 y1")->expected(4);
    synth->add_option("--seeds", synth_seeds, "tracer count");
    synth->add_option("--seed", synth_seed, "RNG seed");
    synth->add_option("--t0", synth_t0, "start time (s)");
    synth->add_option("--t1", synth_t1, "end time (s)");
    synth->add_option("--dt", synth_dt, "sampling step (s)");
    synth->add_option("-o,--output", synth_out, "trajectory file")->required();

    // ---- oracle-ftle ----------------------------------------------------
    auto* oracle = app.add_subcommand("oracle-ftle", "dense finite-difference FTLE field");
    std::string oracle_flow = "double-gyre";
    std::vector<double> oracle_params;
    std::vector<double> oracle_domain{0.0, 2.0, 0.0, 1.0};
    int oracle_nx = 512, oracle_ny = 256;
    double oracle_t0 = 0.0, oracle_t1 = 15.0, oracle_idt = 0.01;
    std::string oracle_out;
    oracle->add_option("--flow", oracle_flow, "rotation | saddle | shear | double-gyre");
    oracle->add_option("--param", oracle_params, "flow parameters");
    oracle->add_option("--domain", oracle_domain, "grid window x0 x1 y0 y1")->expected(4);
    oracle->add_option("--nx", oracle_nx, "grid nodes in x");
    oracle->add_option("--ny", oracle_ny, "grid nodes in y");
    oracle->add_option("--t0", oracle_t0, "start time (s)");
    oracle->add_option("--t1", oracle_t1, "end time (s)");
    oracle->add_option("--integrator-dt", oracle_idt, "integration step (s)");
    oracle->add_option("-o,--output", oracle_out, "grid file (x,y,value)")->required();

    // ---- track ----------------------------------------------------------
    auto* track = app.add_subcommand("track", "associate detections into trajectories");
    std::string track_in, track_out;
    GatingConfig gating;
    track->add_option("-i,--input", track_in, "detections file")->required();
    track->add_option("-o,--output", track_out, "trajectory file")->required();
    track->add_option("--max-speed", gating.max_speed, "speed gate (units/s)")->required();
    track->add_option("--max-accel", gating.max_accel, "acceleration gate (units/s^2)")
        ->required();
    track->add_option("--match-radius", gating.max_match_radius,
                      "prediction-to-detection gate (units)")
        ->required();

    // ---- smooth ---------------------------------------------------------
    auto* smooth = app.add_subcommand("smooth", "median+Gaussian trajectory smoothing");
    std::string smooth_in, smooth_out;
    SmoothingConfig smoothing;
    int min_length = 1;
    smooth->add_option("-i,--input", smooth_in, "trajectory file")->required();
    smooth->add_option("-o,--output", smooth_out, "trajectory file")->required();
    smooth->add_option("--median", smoothing.median_kernel, "median kernel (odd samples)");
    smooth->add_option("--gaussian", smoothing.gaussian_kernel, "gaussian kernel (samples)");
    auto* opt_sigma =
        smooth->add_option("--sigma", smoothing.gaussian_sigma, "gaussian sigma (samples), default kernel/4");
    smooth->add_option("--min-length", min_length, "drop shorter tracks first");

    // ---- gradients ------------------------------------------------------
    auto* gradients =
        app.add_subcommand("gradients", "instantaneous vorticity, deviation, strain");
    std::string grad_in, grad_out, grad_tensors;
    int grad_frame = 0;
    KernelFlags grad_kernel;
    gradients->add_option("-i,--input", grad_in, "trajectory file")->required();
    gradients->add_option("-o,--output", grad_out, "metric samples file")->required();
    gradients->add_option("--frame", grad_frame, "frame to evaluate (uses frame+1)");
    gradients->add_option("--tensors-out", grad_tensors, "optional gradient tensor file");
    grad_kernel.attach(gradients);

    // ---- ftle / lavd ----------------------------------------------------
    auto* ftle_cmd = app.add_subcommand("ftle", "finite-time Lyapunov exponent per tracer");
    std::string ftle_in, ftle_out;
    KernelFlags ftle_kernel;
    IntervalFlags ftle_interval;
    ftle_cmd->add_option("-i,--input", ftle_in, "trajectory file")->required();
    ftle_cmd->add_option("-o,--output", ftle_out, "metric samples file")->required();
    ftle_kernel.attach(ftle_cmd);
    ftle_interval.attach(ftle_cmd);

    auto* lavd_cmd =
        app.add_subcommand("lavd", "Lagrangian-averaged vorticity deviation per tracer");
    std::string lavd_in, lavd_out;
    KernelFlags lavd_kernel;
    IntervalFlags lavd_interval;
    lavd_cmd->add_option("-i,--input", lavd_in, "trajectory file")->required();
    lavd_cmd->add_option("-o,--output", lavd_out, "metric samples file")->required();
    lavd_kernel.attach(lavd_cmd);
    lavd_interval.attach(lavd_cmd);

    // ---- transform ------------------------------------------------------
    auto* transform =
        app.add_subcommand("transform", "apply a homography or rigid observer motion");
    std::string tf_in, tf_out;
    std::vector<double> tf_h;
    double tf_rate = 0.0, tf_angle0 = 0.0;
    std::vector<double> tf_drift{0.0, 0.0};
    bool tf_detections = false;
    transform->add_option("-i,--input", tf_in, "trajectory (or detections) file")->required();
    transform->add_option("-o,--output", tf_out, "output file")->required();
    transform->add_option("--homography", tf_h, "row-major 3x3 entries")->expected(9);
    transform->add_option("--rotate-rate", tf_rate, "observer spin (rad/s)");
    transform->add_option("--rotate-offset", tf_angle0, "observer angle at t=0 (rad)");
    transform->add_option("--drift", tf_drift, "observer drift velocity vx vy")->expected(2);
    transform->add_flag("--detections", tf_detections, "treat input as a detections file");

    // ---- plot -----------------------------------------------------------
    auto* plot = app.add_subcommand("plot", "scalar-colored scatter of metric samples");
    std::string plot_in, plot_out, plot_metric;
    PlotStyle style;
    plot->add_option("-i,--input", plot_in, "metric samples file")->required();
    plot->add_option("-o,--output", plot_out, "SVG file")->required();
    plot->add_option("--metric", plot_metric, "select one metric kind from the file");
    plot->add_option("--colormap", style.colormap, "sequential | diverging");
    plot->add_option("--width", style.width, "canvas width (px)");
    plot->add_option("--marker", style.marker_radius, "marker radius (px)");

    CLI11_PARSE(app, argc, argv);
    const Execution mode = serial ? Execution::Serial : Execution::Parallel;

    if (*synth) {
        Timer timer;
        const auto flow = catalog_flow(synth_flow, synth_params);
        const auto domain = parse_domain(synth_domain);
        const auto seeds = random_seeds(synth_seeds, domain, synth_seed);
        const auto set = advect(flow, seeds, synth_t0, synth_t1, synth_dt, mode);
        write_trajectories(set, synth_out);
        ConfigEntries entries{{"command", "synth"},
                              {"flow", synth_flow},
                              {"seeds", std::to_string(synth_seeds)},
                              {"seed", std::to_string(synth_seed)},
                              {"t0", fmt(synth_t0)},
                              {"t1", fmt(synth_t1)},
                              {"dt", fmt(synth_dt)},
                              {"domain", fmt(domain.x0) + " " + fmt(domain.x1) + " " +
                                             fmt(domain.y0) + " " + fmt(domain.y1)}};
        for (std::size_t i = 0; i < synth_params.size(); ++i) {
            entries.push_back({"param." + std::to_string(i), fmt(synth_params[i])});
        }
        emit_config(synth_out, entries);
        std::cerr << "diagnostics: tracers=" << set.track_count()
                  << " frames=" << set.frame_count() << " elapsed_ms=" << timer.ms() << "\n";
        return 0;
    }

    if (*oracle) {
        Timer timer;
        const auto flow = catalog_flow(oracle_flow, oracle_params);
        const auto domain = parse_domain(oracle_domain);
        const auto grid = dense_ftle_oracle(flow, GridSpec{oracle_nx, oracle_ny, domain},
                                            oracle_t0, oracle_t1, oracle_idt, mode);
        write_oracle_grid(grid, oracle_out);
        emit_config(oracle_out, {{"command", "oracle-ftle"},
                                 {"flow", oracle_flow},
                                 {"nx", std::to_string(oracle_nx)},
                                 {"ny", std::to_string(oracle_ny)},
                                 {"t0", fmt(oracle_t0)},
                                 {"t1", fmt(oracle_t1)},
                                 {"integrator_dt", fmt(oracle_idt)}});
        print_timing(timer, "nodes=" + std::to_string(oracle_nx * oracle_ny));
        return 0;
    }

    if (*track) {
        Timer timer;
        gating.validate();
        const auto detections = read_detections(track_in);
        const auto set = link_detections(detections, gating);
        write_trajectories(set, track_out);
        emit_config(track_out, {{"command", "track"},
                                {"input", track_in},
                                {"max_speed", fmt(gating.max_speed)},
                                {"max_accel", fmt(gating.max_accel)},
                                {"match_radius", fmt(gating.max_match_radius)}});
        std::cerr << "diagnostics: frames=" << detections.size()
                  << " tracks=" << set.track_count() << " elapsed_ms=" << timer.ms() << "\n";
        return 0;
    }

    if (*smooth) {
        Timer timer;
        if (!*opt_sigma) smoothing.gaussian_sigma = smoothing.gaussian_kernel / 4.0;
        smoothing.validate();
        auto set = read_trajectories(smooth_in);
        const std::size_t before = set.track_count();
        if (min_length > 1) set = filter_min_length(set, min_length);
        set = smooth_set(set, smoothing, mode);
        write_trajectories(set, smooth_out);
        emit_config(smooth_out, {{"command", "smooth"},
                                 {"input", smooth_in},
                                 {"median", std::to_string(smoothing.median_kernel)},
                                 {"gaussian", std::to_string(smoothing.gaussian_kernel)},
                                 {"sigma", fmt(smoothing.gaussian_sigma)},
                                 {"min_length", std::to_string(min_length)}});
        std::cerr << "diagnostics: tracks_in=" << before << " tracks_out=" << set.track_count()
                  << " elapsed_ms=" << timer.ms() << "\n";
        return 0;
    }

    if (*gradients) {
        Timer timer;
        const KernelConfig cfg = grad_kernel.resolve();
        const auto set = read_trajectories(grad_in);
        FieldDiagnostics diag;
        const auto grads = gradient_field(set, grad_frame, cfg, &diag, mode);
        if (grads.empty()) throw Error("no eligible tracers at frame " + std::to_string(grad_frame));

        std::vector<double> omegas;
        omegas.reserve(grads.size());
        for (const auto& g : grads) omegas.push_back(vorticity_2d(g.m));
        const double omega_bar = mean_vorticity(omegas);

        std::vector<MetricSample> samples;
        samples.reserve(3 * grads.size());
        for (std::size_t i = 0; i < grads.size(); ++i) {
            const auto& g = grads[i];
            const Vec2 pos = set.position(g.center, grad_frame);
            samples.push_back({g.center, pos, omegas[i], MetricKind::Vorticity, grad_frame,
                               grad_frame + 1});
            samples.push_back({g.center, pos, vorticity_deviation(omegas[i], omega_bar),
                               MetricKind::VorticityDeviation, grad_frame, grad_frame + 1});
            samples.push_back({g.center, pos,
                               principal_strain_rate(spin_stretch_decompose(g.m).stretch),
                               MetricKind::PrincipalStrain, grad_frame, grad_frame + 1});
        }
        write_metric_samples(samples, grad_out);
        if (!grad_tensors.empty()) {
            std::ofstream out(grad_tensors, std::ios::trunc);
            if (!out) throw Error("cannot open '" + grad_tensors + "' for writing");
            out << "tracer_id,x,y,g00,g01,g10,g11\n";
            for (const auto& g : grads) {
                const Vec2 pos = set.position(g.center, grad_frame);
                out << g.center << ',' << fmt(pos.x) << ',' << fmt(pos.y) << ','
                    << fmt(g.m.a00) << ',' << fmt(g.m.a01) << ',' << fmt(g.m.a10) << ','
                    << fmt(g.m.a11) << '\n';
            }
        }
        ConfigEntries entries{{"command", "gradients"},
                              {"input", grad_in},
                              {"frame", std::to_string(grad_frame)}};
        grad_kernel.describe(entries);
        emit_config(grad_out, entries);
        print_diagnostics(diag, timer);
        return 0;
    }

    auto run_finite_time = [&](CLI::App* sub, const std::string& name, MetricKind kind,
                               const std::string& in, const std::string& out,
                               KernelFlags& kernel, const IntervalFlags& interval) -> bool {
        if (!*sub) return false;
        Timer timer;
        const KernelConfig cfg = kernel.resolve();
        const auto set = read_trajectories(in);
        const auto [f0, f1] = interval.resolve(set);
        const auto result = field_pipeline(set, cfg, f0, f1, kind, mode);
        write_metric_samples(result.samples, out);
        ConfigEntries entries{{"command", name},
                              {"input", in},
                              {"start", std::to_string(f0)},
                              {"end", std::to_string(f1)}};
        kernel.describe(entries);
        emit_config(out, entries);
        print_diagnostics(result.diagnostics, timer);
        return true;
    };
    if (run_finite_time(ftle_cmd, "ftle", MetricKind::Ftle, ftle_in, ftle_out, ftle_kernel,
                        ftle_interval)) {
        return 0;
    }
    if (run_finite_time(lavd_cmd, "lavd", MetricKind::Lavd, lavd_in, lavd_out, lavd_kernel,
                        lavd_interval)) {
        return 0;
    }

    if (*transform) {
        Timer timer;
        const bool use_homography = !tf_h.empty();
        Homography hom;
        if (use_homography) {
            for (std::size_t i = 0; i < 9; ++i) hom.h[i] = tf_h[i];
            hom.validate();
        }
        auto angle = [&](double t) { return tf_angle0 + tf_rate * t; };
        auto drift = [&](double t) { return Vec2{tf_drift[0] * t, tf_drift[1] * t}; };
        if (tf_detections) {
            if (!use_homography) {
                throw Error("detections support only --homography transforms");
            }
            auto frames = read_detections(tf_in);
            write_detections(apply_homography(std::move(frames), hom), tf_out);
        } else {
            auto set = read_trajectories(tf_in);
            if (use_homography) {
                set = apply_homography(set, hom);
            } else {
                set = apply_euclidean_motion(set, angle, drift);
            }
            write_trajectories(set, tf_out);
        }
        ConfigEntries entries{{"command", "transform"}, {"input", tf_in}};
        if (use_homography) {
            std::string hs;
            for (std::size_t i = 0; i < 9; ++i) hs += (i ? " " : "") + fmt(tf_h[i]);
            entries.push_back({"homography", hs});
        } else {
            entries.push_back({"rotate_rate", fmt(tf_rate)});
            entries.push_back({"rotate_offset", fmt(tf_angle0)});
            entries.push_back({"drift", fmt(tf_drift[0]) + " " + fmt(tf_drift[1])});
        }
        emit_config(tf_out, entries);
        print_timing(timer, "transform");
        return 0;
    }

    if (*plot) {
        Timer timer;
        auto samples = read_metric_samples(plot_in);
        if (!plot_metric.empty()) {
            const MetricKind kind = parse_metric_kind(plot_metric);
            std::erase_if(samples, [&](const MetricSample& s) { return s.kind != kind; });
        } else {
            for (const auto& s : samples) {
                if (s.kind != samples.front().kind) {
                    throw Error("file mixes metric kinds; select one with --metric");
                }
            }
        }
        render_scatter(samples, style, plot_out);
        emit_config(plot_out, {{"command", "plot"},
                               {"input", plot_in},
                               {"metric", plot_metric.empty() ? "all" : plot_metric},
                               {"colormap", style.colormap},
                               {"width", std::to_string(style.width)}});
        std::cerr << "diagnostics: samples=" << samples.size() << " elapsed_ms=" << timer.ms()
                  << "\n";
        return 0;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const flowmap::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
