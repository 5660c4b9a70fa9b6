#include "flowmap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "flowmap/error.hpp"

namespace flowmap {

SpinStretch spin_stretch_decompose(const Mat2& grad) {
    if (!grad.finite()) throw Error("non-finite velocity gradient");
    SpinStretch out;
    out.spin = (grad - grad.transpose()) * 0.5;
    out.stretch = (grad + grad.transpose()) * 0.5;
    return out;
}

double vorticity_2d(const Mat2& grad) { return grad.a10 - grad.a01; }

double mean_vorticity(std::span<const double> samples) {
    if (samples.empty()) throw Error("mean vorticity of an empty sample set");
    const double sum = std::accumulate(samples.begin(), samples.end(), 0.0);
    return sum / static_cast<double>(samples.size());
}

double vorticity_deviation(double omega, double omega_mean) {
    if (!std::isfinite(omega) || !std::isfinite(omega_mean)) {
        throw Error("non-finite vorticity input");
    }
    return std::abs(omega - omega_mean);
}

double principal_strain_rate(const Mat2& stretch) {
    if (std::abs(stretch.a01 - stretch.a10) > 1e-9) {
        throw Error("stretch tensor is asymmetric beyond tolerance");
    }
    const Mat2 sym{stretch.a00, 0.5 * (stretch.a01 + stretch.a10),
                   0.5 * (stretch.a01 + stretch.a10), stretch.a11};
    return symmetric_eig_max(sym);
}

double ftle(const FlowMapJacobian& jac, double dt_total) {
    if (!(dt_total > 0.0)) throw Error("FTLE needs a positive time span");
    const double s_max = singular_values(jac.m)[0];
    if (!(s_max > 0.0)) {
        throw Error("FTLE undefined for a zero jacobian (tracer " +
                    std::to_string(jac.center) + ")");
    }
    return std::log(s_max) / dt_total;
}

LavdResult lavd(std::span<const std::pair<double, double>> samples) {
    if (samples.size() < 2) throw Error("LAVD needs at least two samples");
    double acc = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].second < 0.0 || !std::isfinite(samples[i].second)) {
            throw Error("vorticity deviation samples must be non-negative");
        }
        if (i > 0) {
            const double dt = samples[i].first - samples[i - 1].first;
            if (!(dt > 0.0)) throw Error("LAVD sample times must be strictly increasing");
            acc += 0.5 * (samples[i - 1].second + samples[i].second) * dt;
        }
    }
    return {acc, 0.5 * acc};
}

const char* metric_kind_name(MetricKind kind) {
    switch (kind) {
    case MetricKind::Vorticity: return "vorticity";
    case MetricKind::VorticityDeviation: return "vorticity_deviation";
    case MetricKind::PrincipalStrain: return "principal_strain";
    case MetricKind::Ftle: return "ftle";
    case MetricKind::Lavd: return "lavd";
    }
    throw Error("unknown metric kind");
}

MetricKind parse_metric_kind(const std::string& name) {
    if (name == "vorticity") return MetricKind::Vorticity;
    if (name == "vorticity_deviation") return MetricKind::VorticityDeviation;
    if (name == "principal_strain") return MetricKind::PrincipalStrain;
    if (name == "ftle") return MetricKind::Ftle;
    if (name == "lavd") return MetricKind::Lavd;
    throw Error("unknown metric kind '" + name + "'");
}

bool metric_is_instantaneous(MetricKind kind) {
    return kind == MetricKind::Vorticity || kind == MetricKind::VorticityDeviation ||
           kind == MetricKind::PrincipalStrain;
}

namespace {

std::string no_eligible_message(const FieldDiagnostics& d) {
    return "no eligible tracers (candidates " + std::to_string(d.candidates) +
           ", skipped: persistence " + std::to_string(d.skipped_persistence) +
           ", neighbors " + std::to_string(d.skipped_neighbors) + ", rank " +
           std::to_string(d.skipped_rank) + ")";
}

FieldResult instantaneous_pipeline(const TrajectorySet& set, const KernelConfig& cfg,
                                   int frame, MetricKind kind, Execution mode) {
    FieldResult result;
    const auto grads = gradient_field(set, frame, cfg, &result.diagnostics, mode);
    if (grads.empty()) throw Error(no_eligible_message(result.diagnostics));

    std::vector<double> omegas;
    if (kind == MetricKind::VorticityDeviation) {
        omegas.reserve(grads.size());
        for (const auto& g : grads) omegas.push_back(vorticity_2d(g.m));
    }
    const double omega_bar =
        kind == MetricKind::VorticityDeviation ? mean_vorticity(omegas) : 0.0;

    result.samples.reserve(grads.size());
    for (std::size_t i = 0; i < grads.size(); ++i) {
        const VelocityGradient& g = grads[i];
        double value = 0.0;
        switch (kind) {
        case MetricKind::Vorticity:
            value = vorticity_2d(g.m);
            break;
        case MetricKind::VorticityDeviation:
            value = vorticity_deviation(omegas[i], omega_bar);
            break;
        case MetricKind::PrincipalStrain:
            value = principal_strain_rate(spin_stretch_decompose(g.m).stretch);
            break;
        default:
            throw Error("not an instantaneous metric");
        }
        result.samples.push_back({g.center, set.position(g.center, frame), value, kind,
                                  frame, frame + 1});
    }
    return result;
}

FieldResult ftle_pipeline(const TrajectorySet& set, const KernelConfig& cfg,
                          int frame_start, int frame_end, Execution mode) {
    FieldResult result;
    const auto jacs =
        composed_jacobian_field(set, frame_start, frame_end, cfg, &result.diagnostics, mode);
    if (jacs.empty()) throw Error(no_eligible_message(result.diagnostics));
    const double span = set.time_at(frame_end) - set.time_at(frame_start);
    result.samples.reserve(jacs.size());
    for (const FlowMapJacobian& jac : jacs) {
        result.samples.push_back({jac.center, set.position(jac.center, frame_start),
                                  ftle(jac, span), MetricKind::Ftle, frame_start,
                                  frame_end});
    }
    return result;
}

// Vorticity deviation integrated along each persisting trajectory. The
// deviation at each step start comes from that step's gradients; the final
// sample at the interval end reuses the last step's deviation, so the
// quadrature covers the full interval.
FieldResult lavd_pipeline(const TrajectorySet& set, const KernelConfig& cfg,
                          int frame_start, int frame_end, Execution mode) {
    if (frame_start >= frame_end) {
        throw Error("LAVD needs a forward interval");
    }
    FieldResult result;
    const std::vector<TracerId> center_ids = set.persisting_ids(frame_start, frame_end);
    const std::size_t present = set.frame_view(frame_start).entries.size();

    std::vector<double> acc(center_ids.size(), 0.0);
    std::vector<double> prev(center_ids.size(), 0.0);
    std::vector<std::uint8_t> alive(center_ids.size(), 1);

    FieldDiagnostics step_diag;
    for (int frame = frame_start; frame < frame_end; ++frame) {
        // Gradients for every tracer alive on this step, not only the
        // full-interval persisters: the spatial mean uses them all.
        const auto grads = gradient_field(set, frame, cfg, &step_diag, mode);
        if (grads.empty()) {
            std::fill(alive.begin(), alive.end(), 0);
            break;
        }
        std::vector<double> omegas;
        omegas.reserve(grads.size());
        for (const auto& g : grads) omegas.push_back(vorticity_2d(g.m));
        const double omega_bar = mean_vorticity(omegas);

        // grads and center_ids are both id-sorted; advance in lockstep.
        std::size_t gi = 0;
        const double t0 = set.time_at(frame);
        const double t1 = set.time_at(frame + 1);
        for (std::size_t ci = 0; ci < center_ids.size(); ++ci) {
            if (!alive[ci]) continue;
            while (gi < grads.size() && grads[gi].center < center_ids[ci]) ++gi;
            if (gi >= grads.size() || grads[gi].center != center_ids[ci]) {
                alive[ci] = 0; // persisted but lacked neighbors on this step
                continue;
            }
            const double dev = vorticity_deviation(omegas[gi], omega_bar);
            if (frame > frame_start) {
                acc[ci] += 0.5 * (prev[ci] + dev) * (t0 - set.time_at(frame - 1));
            }
            prev[ci] = dev;
            if (frame == frame_end - 1) {
                acc[ci] += dev * (t1 - t0); // closing segment, held constant
            }
        }
    }

    result.diagnostics.candidates = present;
    result.diagnostics.skipped_persistence = present - center_ids.size();
    result.samples.reserve(center_ids.size());
    for (std::size_t ci = 0; ci < center_ids.size(); ++ci) {
        if (!alive[ci]) {
            ++result.diagnostics.skipped_neighbors;
            continue;
        }
        ++result.diagnostics.emitted;
        result.samples.push_back({center_ids[ci],
                                  set.position(center_ids[ci], frame_start), acc[ci],
                                  MetricKind::Lavd, frame_start, frame_end});
    }
    if (result.samples.empty()) throw Error(no_eligible_message(result.diagnostics));
    return result;
}

} // namespace

FieldResult field_pipeline(const TrajectorySet& set, const KernelConfig& cfg,
                           int frame_start, int frame_end, MetricKind kind,
                           Execution mode) {
    if (metric_is_instantaneous(kind)) {
        if (frame_end != frame_start + 1) {
            throw Error(std::string(metric_kind_name(kind)) +
                        " is instantaneous and needs frame_end == frame_start + 1");
        }
        return instantaneous_pipeline(set, cfg, frame_start, kind, mode);
    }
    if (kind == MetricKind::Ftle) {
        return ftle_pipeline(set, cfg, frame_start, frame_end, mode);
    }
    return lavd_pipeline(set, cfg, frame_start, frame_end, mode);
}

} // namespace flowmap
