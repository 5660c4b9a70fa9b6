#include "flowmap/synthetic.hpp"

#include <cmath>
#include <random>

#include "flowmap/error.hpp"

namespace flowmap {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

AnalyticFlow rigid_rotation_flow(double omega) {
    AnalyticFlow flow;
    flow.name = "rotation";
    flow.velocity = [omega](const Vec2& p, double) { return Vec2{-omega * p.y, omega * p.x}; };
    flow.gradient = [omega](const Vec2&, double) { return Mat2{0.0, -omega, omega, 0.0}; };
    return flow;
}

AnalyticFlow saddle_flow(double lambda) {
    AnalyticFlow flow;
    flow.name = "saddle";
    flow.velocity = [lambda](const Vec2& p, double) {
        return Vec2{lambda * p.x, -lambda * p.y};
    };
    flow.gradient = [lambda](const Vec2&, double) { return Mat2{lambda, 0.0, 0.0, -lambda}; };
    return flow;
}

AnalyticFlow shear_flow(double rate) {
    AnalyticFlow flow;
    flow.name = "shear";
    flow.velocity = [rate](const Vec2& p, double) { return Vec2{rate * p.y, 0.0}; };
    flow.gradient = [rate](const Vec2&, double) { return Mat2{0.0, rate, 0.0, 0.0}; };
    return flow;
}

AnalyticFlow double_gyre_flow(double amplitude, double eps, double omega) {
    AnalyticFlow flow;
    flow.name = "double-gyre";
    flow.velocity = [=](const Vec2& p, double t) {
        const double a = eps * std::sin(omega * t);
        const double b = 1.0 - 2.0 * a;
        const double f = a * p.x * p.x + b * p.x;
        const double fx = 2.0 * a * p.x + b;
        return Vec2{-kPi * amplitude * std::sin(kPi * f) * std::cos(kPi * p.y),
                    kPi * amplitude * std::cos(kPi * f) * std::sin(kPi * p.y) * fx};
    };
    flow.gradient = [=](const Vec2& p, double t) {
        const double a = eps * std::sin(omega * t);
        const double b = 1.0 - 2.0 * a;
        const double f = a * p.x * p.x + b * p.x;
        const double fx = 2.0 * a * p.x + b;
        const double fxx = 2.0 * a;
        const double sf = std::sin(kPi * f);
        const double cf = std::cos(kPi * f);
        const double sy = std::sin(kPi * p.y);
        const double cy = std::cos(kPi * p.y);
        const double pa = kPi * amplitude;
        Mat2 g;
        g.a00 = -pa * kPi * cf * fx * cy;
        g.a01 = pa * kPi * sf * sy;
        g.a10 = pa * sy * (cf * fxx - kPi * sf * fx * fx);
        g.a11 = pa * kPi * cf * cy * fx;
        return g;
    };
    return flow;
}

AnalyticFlow catalog_flow(const std::string& name, const std::vector<double>& params) {
    auto param = [&](std::size_t i, double fallback) {
        return i < params.size() ? params[i] : fallback;
    };
    if (name == "rotation") return rigid_rotation_flow(param(0, 1.0));
    if (name == "saddle") return saddle_flow(param(0, 1.0));
    if (name == "shear") return shear_flow(param(0, 1.0));
    if (name == "double-gyre") {
        return double_gyre_flow(param(0, 0.1), param(1, 0.25), param(2, kPi / 5.0));
    }
    throw Error("unknown flow '" + name +
                "' (catalog: rotation, saddle, shear, double-gyre)");
}

std::vector<Vec2> random_seeds(std::size_t count, const Domain& domain,
                               std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(domain.x0, domain.x1);
    std::uniform_real_distribution<double> uy(domain.y0, domain.y1);
    std::vector<Vec2> seeds;
    seeds.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double x = ux(rng);
        const double y = uy(rng);
        seeds.push_back({x, y});
    }
    return seeds;
}

namespace {

Vec2 rk4_step(const AnalyticFlow& flow, const Vec2& p, double t, double h) {
    const Vec2 k1 = flow.velocity(p, t);
    const Vec2 k2 = flow.velocity(p + 0.5 * h * k1, t + 0.5 * h);
    const Vec2 k3 = flow.velocity(p + 0.5 * h * k2, t + 0.5 * h);
    const Vec2 k4 = flow.velocity(p + h * k3, t + h);
    return p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Integrate from t0 to t0 + n*h, writing each sampled position through sink.
template <class Sink>
void integrate_path(const AnalyticFlow& flow, Vec2 p, double t0, double h,
                    int steps, std::size_t seed_index, Sink&& sink) {
    sink(0, p);
    double t = t0;
    for (int i = 1; i <= steps; ++i) {
        p = rk4_step(flow, p, t, h);
        t = t0 + static_cast<double>(i) * h;
        if (!p.finite()) {
            throw Error("non-finite state for seed " + std::to_string(seed_index) +
                        " at t = " + std::to_string(t));
        }
        sink(i, p);
    }
}

} // namespace

TrajectorySet advect(const AnalyticFlow& flow, const std::vector<Vec2>& seeds,
                     double t0, double t_end, double dt, Execution mode) {
    if (!(dt > 0.0)) throw Error("advect needs dt > 0");
    if (!(t_end > t0)) throw Error("advect needs t_end > t0");
    const int steps = std::max(1, static_cast<int>(std::llround((t_end - t0) / dt)));
    const double h = (t_end - t0) / static_cast<double>(steps);

    std::vector<double> timestamps(static_cast<std::size_t>(steps) + 1);
    for (int i = 0; i <= steps; ++i) {
        timestamps[static_cast<std::size_t>(i)] = t0 + static_cast<double>(i) * h;
    }

    std::vector<std::vector<Vec2>> paths(seeds.size());
    std::vector<std::string> failures(seeds.size());
    parallel_for(seeds.size(), mode, [&](std::size_t s) {
        auto& path = paths[s];
        path.resize(static_cast<std::size_t>(steps) + 1);
        try {
            integrate_path(flow, seeds[s], t0, h, steps, s,
                           [&](int i, const Vec2& p) { path[static_cast<std::size_t>(i)] = p; });
        } catch (const Error& e) {
            failures[s] = e.what();
        }
    });
    for (const std::string& f : failures) {
        if (!f.empty()) throw Error(f);
    }

    std::vector<TrajectoryRecord> records;
    records.reserve(seeds.size() * (static_cast<std::size_t>(steps) + 1));
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        for (int i = 0; i <= steps; ++i) {
            records.push_back({static_cast<TracerId>(s), i,
                               paths[s][static_cast<std::size_t>(i)]});
        }
    }
    return TrajectorySet::build(records, std::move(timestamps));
}

FtleOracleGrid::FtleOracleGrid(GridSpec spec, std::vector<double> values)
    : spec_(spec), values_(std::move(values)) {
    if (spec_.nx < 2 || spec_.ny < 2) throw Error("oracle grid needs at least 2x2 nodes");
    if (values_.size() != static_cast<std::size_t>(spec_.nx) * spec_.ny) {
        throw Error("oracle grid value count mismatch");
    }
}

double FtleOracleGrid::value_at(int ix, int iy) const {
    if (ix < 0 || ix >= spec_.nx || iy < 0 || iy >= spec_.ny) {
        throw Error("oracle grid node out of range");
    }
    return values_[static_cast<std::size_t>(iy) * spec_.nx + ix];
}

double FtleOracleGrid::sample(const Vec2& p) const {
    const Domain& d = spec_.domain;
    const double hx = (d.x1 - d.x0) / (spec_.nx - 1);
    const double hy = (d.y1 - d.y0) / (spec_.ny - 1);
    const double gx = (p.x - d.x0) / hx;
    const double gy = (p.y - d.y0) / hy;
    if (gx < 0.0 || gy < 0.0 || gx > spec_.nx - 1 || gy > spec_.ny - 1) {
        throw Error("query point outside oracle grid");
    }
    const int ix = std::min(static_cast<int>(gx), spec_.nx - 2);
    const int iy = std::min(static_cast<int>(gy), spec_.ny - 2);
    const double fx = gx - ix;
    const double fy = gy - iy;
    const double v00 = value_at(ix, iy);
    const double v10 = value_at(ix + 1, iy);
    const double v01 = value_at(ix, iy + 1);
    const double v11 = value_at(ix + 1, iy + 1);
    return (1 - fx) * (1 - fy) * v00 + fx * (1 - fy) * v10 + (1 - fx) * fy * v01 +
           fx * fy * v11;
}

double FtleOracleGrid::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

FtleOracleGrid dense_ftle_oracle(const AnalyticFlow& flow, const GridSpec& spec,
                                 double t0, double t_end, double integrator_dt,
                                 Execution mode) {
    if (spec.nx < 2 || spec.ny < 2) throw Error("oracle grid needs at least 2x2 nodes");
    if (!(t_end > t0)) throw Error("oracle needs t_end > t0");
    const double hx = (spec.domain.x1 - spec.domain.x0) / (spec.nx - 1);
    const double hy = (spec.domain.y1 - spec.domain.y0) / (spec.ny - 1);
    const int steps =
        std::max(1, static_cast<int>(std::llround((t_end - t0) / integrator_dt)));
    const double h = (t_end - t0) / static_cast<double>(steps);

    const std::size_t n = static_cast<std::size_t>(spec.nx) * spec.ny;
    std::vector<Vec2> final_pos(n);
    std::vector<std::string> failures(static_cast<std::size_t>(spec.ny));
    parallel_for(static_cast<std::size_t>(spec.ny), mode, [&](std::size_t iy) {
        try {
            for (int ix = 0; ix < spec.nx; ++ix) {
                Vec2 p{spec.domain.x0 + ix * hx,
                       spec.domain.y0 + static_cast<double>(iy) * hy};
                double t = t0;
                for (int i = 0; i < steps; ++i) {
                    p = rk4_step(flow, p, t, h);
                    t = t0 + static_cast<double>(i + 1) * h;
                }
                if (!p.finite()) {
                    throw Error("non-finite state at grid node (" + std::to_string(ix) +
                                ", " + std::to_string(iy) + ")");
                }
                final_pos[iy * static_cast<std::size_t>(spec.nx) + ix] = p;
            }
        } catch (const Error& e) {
            failures[iy] = e.what();
        }
    });
    for (const std::string& f : failures) {
        if (!f.empty()) throw Error(f);
    }

    auto node = [&](int ix, int iy) -> const Vec2& {
        return final_pos[static_cast<std::size_t>(iy) * spec.nx + ix];
    };
    std::vector<double> sigma(n);
    const double span = t_end - t0;
    for (int iy = 0; iy < spec.ny; ++iy) {
        for (int ix = 0; ix < spec.nx; ++ix) {
            // Central differences inside, one-sided on the boundary.
            const int xm = std::max(ix - 1, 0);
            const int xp = std::min(ix + 1, spec.nx - 1);
            const int ym = std::max(iy - 1, 0);
            const int yp = std::min(iy + 1, spec.ny - 1);
            const double dx = (xp - xm) * hx;
            const double dy = (yp - ym) * hy;
            Mat2 jac;
            jac.a00 = (node(xp, iy).x - node(xm, iy).x) / dx;
            jac.a10 = (node(xp, iy).y - node(xm, iy).y) / dx;
            jac.a01 = (node(ix, yp).x - node(ix, ym).x) / dy;
            jac.a11 = (node(ix, yp).y - node(ix, ym).y) / dy;
            const double s_max = singular_values(jac)[0];
            sigma[static_cast<std::size_t>(iy) * spec.nx + ix] =
                std::log(std::max(s_max, 1e-300)) / span;
        }
    }
    return FtleOracleGrid(spec, std::move(sigma));
}

TrajectorySet apply_euclidean_motion(const TrajectorySet& set,
                                     const std::function<double(double)>& angle,
                                     const std::function<Vec2(double)>& translation) {
    std::vector<TrajectorySet::Track> tracks = set.tracks();
    const int frames = set.frame_count();
    std::vector<Mat2> rot(static_cast<std::size_t>(frames));
    std::vector<Vec2> shift(static_cast<std::size_t>(frames));
    for (int f = 0; f < frames; ++f) {
        const double t = set.time_at(f);
        const double a = angle(t);
        const Vec2 p = translation(t);
        if (!std::isfinite(a) || !p.finite()) {
            throw Error("non-finite rigid motion at t = " + std::to_string(t));
        }
        rot[static_cast<std::size_t>(f)] = Mat2::rotation(a);
        shift[static_cast<std::size_t>(f)] = p;
    }
    for (auto& track : tracks) {
        for (int f = track.first_frame; f <= track.last_frame(); ++f) {
            Vec2& pos = track.positions[static_cast<std::size_t>(f - track.first_frame)];
            pos = rot[static_cast<std::size_t>(f)] * pos + shift[static_cast<std::size_t>(f)];
        }
    }
    return set.with_tracks(std::move(tracks));
}

} // namespace flowmap
