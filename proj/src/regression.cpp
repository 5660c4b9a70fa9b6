#include "flowmap/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "flowmap/error.hpp"

namespace flowmap {

namespace {

// Relative determinant floor below which the normal matrix counts as
// rank-deficient. The normal matrix is SPD, so det/trace^2 ~ inverse
// condition number.
constexpr double kRankTol = 1e-13;

struct StepWorkspace {
    std::vector<Vec2> dx0, dx1;
    std::vector<double> w;
};

enum class CenterStatus : std::uint8_t { Emitted = 0, FewNeighbors, RankDeficient };

} // namespace

void KernelConfig::validate(int dimension) const {
    if (k < dimension + 1) {
        throw Error("kernel config: k must be at least d+1 = " +
                    std::to_string(dimension + 1));
    }
    if (!(s > 0.0)) throw Error("kernel config: bandwidth s must be positive");
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
        throw Error("kernel config: gamma must be finite and non-negative");
    }
}

KernelConfig lab_preset() { return KernelConfig{15, 0.03, 1e-10}; }
KernelConfig field_preset() { return KernelConfig{25, 0.6, 1e-10}; }

std::vector<double> gaussian_kernel_weights(std::span<const Vec2> displacements,
                                            double s) {
    if (!(s > 0.0)) throw Error("kernel bandwidth s must be positive");
    const double inv_two_s2 = 1.0 / (2.0 * s * s);
    std::vector<double> weights;
    weights.reserve(displacements.size());
    for (const Vec2& dx : displacements) {
        weights.push_back(std::exp(-dx.norm2() * inv_two_s2));
    }
    return weights;
}

Mat2 fit_linear_map(std::span<const Vec2> dx0, std::span<const Vec2> dx1,
                    std::span<const double> weights, double gamma) {
    const std::size_t n = dx0.size();
    if (n == 0) throw Error("linear map fit needs at least one sample");
    if (dx1.size() != n || weights.size() != n) {
        throw Error("linear map fit: mismatched input lengths");
    }
    Mat2 normal = Mat2::zero();   // X0 K X0^T + gamma n I
    Mat2 moment = Mat2::zero();   // X1 K X0^T
    for (std::size_t j = 0; j < n; ++j) {
        const double w = weights[j];
        normal = normal + w * Mat2::outer(dx0[j], dx0[j]);
        moment = moment + w * Mat2::outer(dx1[j], dx0[j]);
    }
    const double ridge = gamma * static_cast<double>(n);
    normal.a00 += ridge;
    normal.a11 += ridge;

    const double det = normal.det();
    const double tr = normal.trace();
    if (!(det > kRankTol * tr * tr)) {
        throw Error("rank-deficient neighbor geometry (normal matrix nearly singular)");
    }
    return moment * adjugate(normal) * (1.0 / det);
}

FlowMapJacobian regress_jacobian(const TrajectorySet& set, TracerId center,
                                 std::span<const TracerId> neighbors, int frame_start,
                                 int frame_end, const KernelConfig& cfg) {
    cfg.validate(set.dimension());
    if (frame_start > frame_end) {
        throw Error("jacobian interval must run forward in time");
    }
    const int n = static_cast<int>(neighbors.size());
    FlowMapJacobian jac;
    jac.center = center;
    jac.frame_start = frame_start;
    jac.frame_end = frame_end;
    jac.n_used = n;
    jac.shortfall = n < cfg.k;
    if (frame_start == frame_end) {
        jac.m = Mat2::identity();
        return jac;
    }
    if (n < set.dimension() + 1 && cfg.gamma == 0.0) {
        throw Error("rank-deficient regression for tracer " + std::to_string(center) +
                    ": " + std::to_string(n) + " neighbors with gamma = 0");
    }

    const Vec2 c0 = set.position(center, frame_start);
    const Vec2 c1 = set.position(center, frame_end);
    std::vector<Vec2> dx0, dx1;
    dx0.reserve(neighbors.size());
    dx1.reserve(neighbors.size());
    for (TracerId id : neighbors) {
        dx0.push_back(set.position(id, frame_start) - c0);
        dx1.push_back(set.position(id, frame_end) - c1);
    }
    const std::vector<double> weights = gaussian_kernel_weights(dx0, cfg.s);
    try {
        jac.m = fit_linear_map(dx0, dx1, weights, cfg.gamma);
    } catch (const Error&) {
        throw Error("rank-deficient regression for tracer " + std::to_string(center) +
                    " over frames [" + std::to_string(frame_start) + ", " +
                    std::to_string(frame_end) + "]");
    }
    return jac;
}

VelocityGradient velocity_gradient(const FlowMapJacobian& jac, double dt) {
    if (!(dt > 0.0)) throw Error("velocity gradient needs dt > 0");
    if (jac.frame_end != jac.frame_start + 1) {
        throw Error("velocity gradient needs a single-step jacobian, got frames [" +
                    std::to_string(jac.frame_start) + ", " +
                    std::to_string(jac.frame_end) + "]");
    }
    VelocityGradient grad;
    grad.center = jac.center;
    grad.frame = jac.frame_start;
    grad.m = (jac.m - Mat2::identity()) * (1.0 / dt);
    return grad;
}

FlowMapJacobian compose_jacobians(std::span<const FlowMapJacobian> chain) {
    if (chain.empty()) throw Error("cannot compose an empty jacobian chain");
    FlowMapJacobian out = chain.front();
    for (std::size_t i = 1; i < chain.size(); ++i) {
        const FlowMapJacobian& step = chain[i];
        if (step.center != out.center) {
            throw Error("jacobian chain mixes tracers " + std::to_string(out.center) +
                        " and " + std::to_string(step.center));
        }
        if (step.frame_start != out.frame_end) {
            throw Error("jacobian chain gap: step ends at frame " +
                        std::to_string(out.frame_end) + ", next starts at frame " +
                        std::to_string(step.frame_start));
        }
        out.m = step.m * out.m; // later interval applies on the left
        out.frame_end = step.frame_end;
        out.shortfall = out.shortfall || step.shortfall;
        out.n_used = std::min(out.n_used, step.n_used);
    }
    return out;
}

namespace {

struct CenterRef {
    TracerId id;
    std::uint32_t slot;
};

std::vector<CenterRef> resolve_centers(const TrajectorySet& set,
                                       const std::vector<TracerId>& ids) {
    std::vector<CenterRef> centers;
    centers.reserve(ids.size());
    for (TracerId id : ids) {
        centers.push_back({id, static_cast<std::uint32_t>(set.slot_of(id))});
    }
    return centers;
}

// One regression step for one center against an already-built frame index.
// Returns false when the center has fewer than d+1 eligible neighbors.
bool regress_center_step(const TrajectorySet& set, const SpatialIndex& index,
                         const std::vector<std::uint8_t>& mask, const CenterRef& center,
                         int frame, const KernelConfig& cfg, StepWorkspace& ws,
                         Mat2& out, bool& shortfall, int& n_used) {
    const TrajectorySet::Track& ct = set.track_at(center.slot);
    const Vec2 c0 = ct.at_frame(frame);
    const Vec2 c1 = ct.at_frame(frame + 1);
    const auto found = index.query_k(c0, cfg.k, center.id, &mask);
    const int m = static_cast<int>(found.size());
    if (m < set.dimension() + 1) return false;

    ws.dx0.clear();
    ws.dx1.clear();
    for (const auto& nb : found) {
        const TrajectorySet::Track& nt = set.track_at(nb.payload);
        ws.dx0.push_back(nt.at_frame(frame) - c0);
        ws.dx1.push_back(nt.at_frame(frame + 1) - c1);
    }
    ws.w = gaussian_kernel_weights(ws.dx0, cfg.s);
    out = fit_linear_map(ws.dx0, ws.dx1, ws.w, cfg.gamma);
    shortfall = shortfall || m < cfg.k;
    n_used = std::min(n_used, m);
    return true;
}

} // namespace

std::vector<FlowMapJacobian> step_jacobian_field(const TrajectorySet& set, int frame,
                                                 const KernelConfig& cfg,
                                                 FieldDiagnostics* diag,
                                                 Execution mode) {
    cfg.validate(set.dimension());
    if (frame < 0 || frame + 1 >= set.frame_count()) {
        throw Error("step jacobians need frames " + std::to_string(frame) + " and " +
                    std::to_string(frame + 1) + " inside [0, " +
                    std::to_string(set.frame_count() - 1) + "]");
    }
    const std::size_t present = set.frame_view(frame).entries.size();
    const auto centers = resolve_centers(set, set.persisting_ids(frame, frame + 1));

    const SpatialIndex index(set, frame);
    const auto mask = persistence_mask(index, set, frame + 1);

    std::vector<FlowMapJacobian> results(centers.size());
    std::vector<CenterStatus> status(centers.size(), CenterStatus::Emitted);
    parallel_for(centers.size(), mode, [&](std::size_t i) {
        StepWorkspace ws;
        FlowMapJacobian jac;
        jac.center = centers[i].id;
        jac.frame_start = frame;
        jac.frame_end = frame + 1;
        jac.n_used = std::numeric_limits<int>::max();
        try {
            if (!regress_center_step(set, index, mask, centers[i], frame, cfg, ws,
                                     jac.m, jac.shortfall, jac.n_used)) {
                status[i] = CenterStatus::FewNeighbors;
                return;
            }
        } catch (const Error&) {
            status[i] = CenterStatus::RankDeficient;
            return;
        }
        results[i] = jac;
    });

    std::vector<FlowMapJacobian> emitted;
    emitted.reserve(centers.size());
    FieldDiagnostics local;
    local.candidates = present;
    local.skipped_persistence = present - centers.size();
    for (std::size_t i = 0; i < centers.size(); ++i) {
        switch (status[i]) {
        case CenterStatus::Emitted:
            emitted.push_back(results[i]);
            ++local.emitted;
            break;
        case CenterStatus::FewNeighbors:
            ++local.skipped_neighbors;
            break;
        case CenterStatus::RankDeficient:
            ++local.skipped_rank;
            break;
        }
    }
    if (diag) *diag = local;
    return emitted;
}

std::vector<FlowMapJacobian> composed_jacobian_field(const TrajectorySet& set,
                                                     int frame_start, int frame_end,
                                                     const KernelConfig& cfg,
                                                     FieldDiagnostics* diag,
                                                     Execution mode) {
    cfg.validate(set.dimension());
    if (frame_start < 0 || frame_end >= set.frame_count() || frame_start >= frame_end) {
        throw Error("composed jacobians need a forward interval inside [0, " +
                    std::to_string(set.frame_count() - 1) + "], got [" +
                    std::to_string(frame_start) + ", " + std::to_string(frame_end) + "]");
    }
    const std::size_t present = set.frame_view(frame_start).entries.size();
    const auto centers = resolve_centers(set, set.persisting_ids(frame_start, frame_end));

    std::vector<Mat2> acc(centers.size(), Mat2::identity());
    std::vector<CenterStatus> status(centers.size(), CenterStatus::Emitted);
    std::vector<std::uint8_t> shortfall(centers.size(), 0);
    std::vector<int> n_used(centers.size(), std::numeric_limits<int>::max());

    for (int frame = frame_start; frame < frame_end; ++frame) {
        const SpatialIndex index(set, frame);
        const auto mask = persistence_mask(index, set, frame + 1);
        parallel_for(centers.size(), mode, [&](std::size_t i) {
            if (status[i] != CenterStatus::Emitted) return;
            StepWorkspace ws;
            Mat2 step;
            bool sf = shortfall[i] != 0;
            try {
                if (!regress_center_step(set, index, mask, centers[i], frame, cfg, ws,
                                         step, sf, n_used[i])) {
                    status[i] = CenterStatus::FewNeighbors;
                    return;
                }
            } catch (const Error&) {
                status[i] = CenterStatus::RankDeficient;
                return;
            }
            shortfall[i] = sf ? 1 : 0;
            acc[i] = step * acc[i];
        });
    }

    std::vector<FlowMapJacobian> emitted;
    emitted.reserve(centers.size());
    FieldDiagnostics local;
    local.candidates = present;
    local.skipped_persistence = present - centers.size();
    for (std::size_t i = 0; i < centers.size(); ++i) {
        switch (status[i]) {
        case CenterStatus::Emitted: {
            FlowMapJacobian jac;
            jac.m = acc[i];
            jac.center = centers[i].id;
            jac.frame_start = frame_start;
            jac.frame_end = frame_end;
            jac.shortfall = shortfall[i] != 0;
            jac.n_used = n_used[i];
            emitted.push_back(jac);
            ++local.emitted;
            break;
        }
        case CenterStatus::FewNeighbors:
            ++local.skipped_neighbors;
            break;
        case CenterStatus::RankDeficient:
            ++local.skipped_rank;
            break;
        }
    }
    if (diag) *diag = local;
    return emitted;
}

std::vector<VelocityGradient> gradient_field(const TrajectorySet& set, int frame,
                                             const KernelConfig& cfg,
                                             FieldDiagnostics* diag, Execution mode) {
    const auto jacobians = step_jacobian_field(set, frame, cfg, diag, mode);
    const double dt = set.dt_at(frame);
    std::vector<VelocityGradient> grads;
    grads.reserve(jacobians.size());
    for (const FlowMapJacobian& jac : jacobians) {
        grads.push_back(velocity_gradient(jac, dt));
    }
    return grads;
}

} // namespace flowmap
