#include "flowmap/reference.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "flowmap/error.hpp"

namespace flowmap::reference {

namespace {

struct ScanHit {
    double dist2;
    TracerId id;
};

std::vector<ScanHit> scan_frame(const TrajectorySet& set, const Vec2& query,
                                TracerId exclude, int frame_start, int frame_end) {
    std::vector<ScanHit> hits;
    for (const FrameEntry& e : set.frame_view(frame_start).entries) {
        if (e.id == exclude) continue;
        if (set.track(e.id).last_frame() < frame_end) continue;
        hits.push_back({distance2(query, e.pos), e.id});
    }
    std::sort(hits.begin(), hits.end(), [](const ScanHit& a, const ScanHit& b) {
        if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
        return a.id < b.id;
    });
    return hits;
}

} // namespace

NeighborQuery k_nearest_linear_scan(const TrajectorySet& set, TracerId center, int k,
                                    int frame_start, int frame_end) {
    if (k < set.dimension() + 1) {
        throw Error("k must be at least d+1 = " + std::to_string(set.dimension() + 1));
    }
    if (frame_end < frame_start || frame_end >= set.frame_count()) {
        throw Error("invalid interval [" + std::to_string(frame_start) + ", " +
                    std::to_string(frame_end) + "]");
    }
    if (!set.has_sample(center, frame_start)) {
        throw Error("center tracer " + std::to_string(center) + " absent at frame " +
                    std::to_string(frame_start));
    }
    const Vec2 query = set.position(center, frame_start);
    auto hits = scan_frame(set, query, center, frame_start, frame_end);
    NeighborQuery result;
    result.shortfall = hits.size() < static_cast<std::size_t>(k);
    const std::size_t take = std::min<std::size_t>(hits.size(), static_cast<std::size_t>(k));
    result.ids.reserve(take);
    for (std::size_t i = 0; i < take; ++i) result.ids.push_back(hits[i].id);
    return result;
}

namespace {

// One regression step against a linear scan; mirrors the production kernel.
bool regress_step(const TrajectorySet& set, TracerId center, int frame,
                  const KernelConfig& cfg, Mat2& out, bool& shortfall, int& n_used) {
    const Vec2 c0 = set.position(center, frame);
    const Vec2 c1 = set.position(center, frame + 1);
    auto hits = scan_frame(set, c0, center, frame, frame + 1);
    const std::size_t take = std::min<std::size_t>(hits.size(), static_cast<std::size_t>(cfg.k));
    if (take < static_cast<std::size_t>(set.dimension() + 1)) return false;

    std::vector<Vec2> dx0, dx1;
    dx0.reserve(take);
    dx1.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        dx0.push_back(set.position(hits[i].id, frame) - c0);
        dx1.push_back(set.position(hits[i].id, frame + 1) - c1);
    }
    const auto weights = gaussian_kernel_weights(dx0, cfg.s);
    out = fit_linear_map(dx0, dx1, weights, cfg.gamma);
    shortfall = shortfall || take < static_cast<std::size_t>(cfg.k);
    n_used = std::min(n_used, static_cast<int>(take));
    return true;
}

} // namespace

std::vector<FlowMapJacobian> step_jacobian_field(const TrajectorySet& set, int frame,
                                                 const KernelConfig& cfg,
                                                 FieldDiagnostics* diag) {
    cfg.validate(set.dimension());
    if (frame < 0 || frame + 1 >= set.frame_count()) {
        throw Error("step jacobians need two consecutive valid frames");
    }
    FieldDiagnostics local;
    local.candidates = set.frame_view(frame).entries.size();
    std::vector<FlowMapJacobian> out;
    for (TracerId center : set.persisting_ids(frame, frame + 1)) {
        FlowMapJacobian jac;
        jac.center = center;
        jac.frame_start = frame;
        jac.frame_end = frame + 1;
        jac.n_used = std::numeric_limits<int>::max();
        bool ok = false;
        try {
            ok = regress_step(set, center, frame, cfg, jac.m, jac.shortfall, jac.n_used);
        } catch (const Error&) {
            ++local.skipped_rank;
            continue;
        }
        if (!ok) {
            ++local.skipped_neighbors;
            continue;
        }
        ++local.emitted;
        out.push_back(jac);
    }
    local.skipped_persistence =
        local.candidates - local.emitted - local.skipped_neighbors - local.skipped_rank;
    if (diag) *diag = local;
    return out;
}

std::vector<FlowMapJacobian> composed_jacobian_field(const TrajectorySet& set,
                                                     int frame_start, int frame_end,
                                                     const KernelConfig& cfg,
                                                     FieldDiagnostics* diag) {
    cfg.validate(set.dimension());
    if (frame_start < 0 || frame_end >= set.frame_count() || frame_start >= frame_end) {
        throw Error("composed jacobians need a forward interval of valid frames");
    }
    FieldDiagnostics local;
    local.candidates = set.frame_view(frame_start).entries.size();
    const auto centers = set.persisting_ids(frame_start, frame_end);
    local.skipped_persistence = local.candidates - centers.size();

    std::vector<FlowMapJacobian> out;
    for (TracerId center : centers) {
        FlowMapJacobian jac;
        jac.center = center;
        jac.frame_start = frame_start;
        jac.frame_end = frame_end;
        jac.n_used = std::numeric_limits<int>::max();
        bool ok = true;
        for (int frame = frame_start; frame < frame_end && ok; ++frame) {
            Mat2 step;
            try {
                ok = regress_step(set, center, frame, cfg, step, jac.shortfall, jac.n_used);
            } catch (const Error&) {
                ++local.skipped_rank;
                ok = false;
                jac.n_used = -1; // rank failure, not a neighbor shortfall
            }
            if (ok) jac.m = step * jac.m;
        }
        if (!ok) {
            if (jac.n_used != -1) ++local.skipped_neighbors;
            continue;
        }
        ++local.emitted;
        out.push_back(jac);
    }
    if (diag) *diag = local;
    return out;
}

} // namespace flowmap::reference
