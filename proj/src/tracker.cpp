#include "flowmap/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flowmap/error.hpp"

namespace flowmap {

void GatingConfig::validate() const {
    if (!(max_speed > 0.0) || !(max_accel > 0.0) || !(max_match_radius > 0.0)) {
        throw Error("gating config: max_speed, max_accel, and max_match_radius "
                    "must all be set and positive");
    }
}

void SmoothingConfig::validate() const {
    if (median_kernel < 1 || median_kernel % 2 == 0) {
        throw Error("smoothing config: median kernel must be an odd positive length");
    }
    if (gaussian_kernel < 1) {
        throw Error("smoothing config: gaussian kernel must be positive");
    }
    if (!(gaussian_sigma > 0.0)) {
        throw Error("smoothing config: gaussian sigma must be positive");
    }
}

Association associate(std::span<const ActiveTrack> tracks,
                      const DetectionFrame& detections, const GatingConfig& gating) {
    gating.validate();
    for (const Vec2& p : detections.points) {
        if (!p.finite()) {
            throw Error("non-finite detection at frame " + std::to_string(detections.frame));
        }
    }

    struct Candidate {
        double dist;
        std::size_t det;
        TracerId track_id;
        std::size_t track;
    };
    std::vector<Candidate> candidates;

    for (std::size_t ti = 0; ti < tracks.size(); ++ti) {
        const ActiveTrack& track = tracks[ti];
        const double dt = detections.time - track.last_time;
        if (!(dt > 0.0)) {
            throw Error("detection frame " + std::to_string(detections.frame) +
                        " does not advance time for track " + std::to_string(track.id));
        }
        const Vec2 predicted =
            track.has_velocity ? track.last_pos + dt * track.velocity : track.last_pos;
        for (std::size_t di = 0; di < detections.points.size(); ++di) {
            const Vec2& det = detections.points[di];
            const double match_dist = (det - predicted).norm();
            if (match_dist > gating.max_match_radius) continue;
            const Vec2 new_velocity = (det - track.last_pos) * (1.0 / dt);
            if (new_velocity.norm() > gating.max_speed) continue;
            if (track.has_velocity &&
                (new_velocity - track.velocity).norm() > gating.max_accel * dt) {
                continue;
            }
            candidates.push_back({match_dist, di, track.id, ti});
        }
    }

    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        if (a.det != b.det) return a.det < b.det;
        return a.track_id < b.track_id;
    });

    Association result;
    std::vector<std::uint8_t> track_taken(tracks.size(), 0);
    std::vector<std::uint8_t> det_taken(detections.points.size(), 0);
    for (const Candidate& c : candidates) {
        if (track_taken[c.track] || det_taken[c.det]) continue;
        track_taken[c.track] = 1;
        det_taken[c.det] = 1;
        result.matches.emplace_back(c.track, c.det);
    }
    std::sort(result.matches.begin(), result.matches.end());
    for (std::size_t ti = 0; ti < tracks.size(); ++ti) {
        if (!track_taken[ti]) result.unmatched_tracks.push_back(ti);
    }
    for (std::size_t di = 0; di < detections.points.size(); ++di) {
        if (!det_taken[di]) result.unmatched_detections.push_back(di);
    }
    return result;
}

TrajectorySet link_detections(std::vector<DetectionFrame> detections,
                              const GatingConfig& gating) {
    gating.validate();
    std::stable_sort(detections.begin(), detections.end(),
                     [](const DetectionFrame& a, const DetectionFrame& b) {
                         return a.frame < b.frame;
                     });
    for (std::size_t i = 0; i + 1 < detections.size(); ++i) {
        if (detections[i].frame == detections[i + 1].frame) {
            throw Error("duplicate detection frame " + std::to_string(detections[i].frame));
        }
    }

    std::vector<double> timestamps;
    timestamps.reserve(detections.size());
    std::vector<TrajectoryRecord> records;
    std::vector<ActiveTrack> active;
    TracerId next_id = 0;

    for (std::size_t fi = 0; fi < detections.size(); ++fi) {
        const DetectionFrame& frame = detections[fi];
        const int out_frame = static_cast<int>(fi);
        timestamps.push_back(frame.time);

        if (fi == 0) {
            for (const Vec2& p : frame.points) {
                if (!p.finite()) {
                    throw Error("non-finite detection at frame " + std::to_string(frame.frame));
                }
                records.push_back({next_id, out_frame, p});
                active.push_back({next_id, 1, out_frame, frame.time, p, Vec2{}, false});
                ++next_id;
            }
            continue;
        }

        const Association assoc = associate(active, frame, gating);
        std::vector<ActiveTrack> still_active;
        still_active.reserve(assoc.matches.size() + assoc.unmatched_detections.size());
        for (const auto& [ti, di] : assoc.matches) {
            ActiveTrack track = active[ti];
            const Vec2& det = frame.points[di];
            const double dt = frame.time - track.last_time;
            track.velocity = (det - track.last_pos) * (1.0 / dt);
            track.has_velocity = true;
            track.last_pos = det;
            track.last_time = frame.time;
            track.last_frame = out_frame;
            ++track.length;
            records.push_back({track.id, out_frame, det});
            still_active.push_back(track);
        }
        for (std::size_t di : assoc.unmatched_detections) {
            const Vec2& det = frame.points[di];
            records.push_back({next_id, out_frame, det});
            still_active.push_back({next_id, 1, out_frame, frame.time, det, Vec2{}, false});
            ++next_id;
        }
        active = std::move(still_active); // unmatched tracks terminate
    }

    return TrajectorySet::build(records, std::move(timestamps));
}

namespace {

std::vector<double> median_filter(const std::vector<double>& xs, int kernel) {
    const int n = static_cast<int>(xs.size());
    const int half = kernel / 2;
    std::vector<double> out(xs.size());
    std::vector<double> window(static_cast<std::size_t>(kernel));
    for (int i = 0; i < n; ++i) {
        for (int j = -half; j <= half; ++j) {
            const int idx = std::clamp(i + j, 0, n - 1); // replicate edges
            window[static_cast<std::size_t>(j + half)] = xs[static_cast<std::size_t>(idx)];
        }
        auto mid = window.begin() + half;
        std::nth_element(window.begin(), mid, window.end());
        out[static_cast<std::size_t>(i)] = *mid;
    }
    return out;
}

std::vector<double> gaussian_filter(const std::vector<double>& xs, int kernel,
                                    double sigma) {
    const int n = static_cast<int>(xs.size());
    const double center = 0.5 * (kernel - 1);
    const int lead = (kernel - 1) / 2; // taps cover [-lead, kernel-1-lead]
    std::vector<double> weights(static_cast<std::size_t>(kernel));
    double total = 0.0;
    for (int j = 0; j < kernel; ++j) {
        const double u = (static_cast<double>(j) - center) / sigma;
        weights[static_cast<std::size_t>(j)] = std::exp(-0.5 * u * u);
        total += weights[static_cast<std::size_t>(j)];
    }
    for (double& w : weights) w /= total;

    std::vector<double> out(xs.size());
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < kernel; ++j) {
            const int idx = std::clamp(i + j - lead, 0, n - 1);
            acc += weights[static_cast<std::size_t>(j)] * xs[static_cast<std::size_t>(idx)];
        }
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

} // namespace

std::vector<Vec2> smooth_positions(std::span<const Vec2> positions,
                                   const SmoothingConfig& cfg) {
    cfg.validate();
    if (positions.size() <= 1) {
        return {positions.begin(), positions.end()};
    }
    std::vector<double> xs(positions.size()), ys(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        xs[i] = positions[i].x;
        ys[i] = positions[i].y;
    }
    xs = median_filter(xs, cfg.median_kernel);
    ys = median_filter(ys, cfg.median_kernel);
    xs = gaussian_filter(xs, cfg.gaussian_kernel, cfg.gaussian_sigma);
    ys = gaussian_filter(ys, cfg.gaussian_kernel, cfg.gaussian_sigma);
    std::vector<Vec2> out(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        out[i] = {xs[i], ys[i]};
    }
    return out;
}

TrajectorySet smooth_set(const TrajectorySet& set, const SmoothingConfig& cfg,
                         Execution mode) {
    cfg.validate();
    std::vector<TrajectorySet::Track> tracks = set.tracks();
    parallel_for(tracks.size(), mode, [&](std::size_t i) {
        tracks[i].positions = smooth_positions(tracks[i].positions, cfg);
    });
    return set.with_tracks(std::move(tracks));
}

TrajectorySet filter_min_length(const TrajectorySet& set, int min_length) {
    if (min_length < 1) throw Error("minimum track length must be at least 1");
    std::vector<TrajectorySet::Track> kept;
    for (const auto& track : set.tracks()) {
        if (track.length() >= min_length) kept.push_back(track);
    }
    return set.with_tracks(std::move(kept));
}

} // namespace flowmap
