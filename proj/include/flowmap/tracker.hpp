#pragma once

#include <span>
#include <vector>

#include "flowmap/parallel.hpp"
#include "flowmap/trajectory_set.hpp"

namespace flowmap {

/// Point detections of one frame, in a shared coordinate system.
struct DetectionFrame {
    int frame = 0;
    double time = 0.0; ///< seconds
    std::vector<Vec2> points;
};

/// Physical plausibility gates for association. All three are mandatory
/// user configuration; there are no meaningful defaults.
struct GatingConfig {
    double max_speed = 0.0;        ///< distance / second
    double max_accel = 0.0;        ///< distance / second^2
    double max_match_radius = 0.0; ///< distance between prediction and detection

    void validate() const;
};

/// Trajectory smoothing: median filter, then a normalized Gaussian, both
/// with edge-replication padding. Kernel lengths are in samples.
struct SmoothingConfig {
    int median_kernel = 5;
    int gaussian_kernel = 10;
    double gaussian_sigma = 2.5; ///< samples; default kernel / 4

    void validate() const;
};

/// The live tail of a trajectory as seen by the associator.
struct ActiveTrack {
    TracerId id = 0;
    int length = 0;
    int last_frame = 0;
    double last_time = 0.0;
    Vec2 last_pos;
    Vec2 velocity;             ///< from the two most recent samples
    bool has_velocity = false; ///< false for length-1 tracks
};

/// Result of matching one detection frame against the active tracks: a
/// partial matching, injective on both sides, in which every match passed
/// the radius, speed, and acceleration gates.
struct Association {
    std::vector<std::pair<std::size_t, std::size_t>> matches; ///< (track, detection)
    std::vector<std::size_t> unmatched_tracks;
    std::vector<std::size_t> unmatched_detections;
};

/// Greedy globally-nearest association between constant-velocity
/// predictions and detections. Candidate pairs are taken in order of
/// prediction distance, ties broken by lower detection index then lower
/// track id; gated pairs are never matched. Throws if the detection frame
/// does not advance time.
Association associate(std::span<const ActiveTrack> tracks,
                      const DetectionFrame& detections, const GatingConfig& gating);

/// Run the associator over a detection sequence, starting a new track for
/// every unmatched detection and terminating unmatched tracks. Output frame
/// indices are the positions of the (frame-sorted) detection frames; ids
/// are assigned in creation order.
TrajectorySet link_detections(std::vector<DetectionFrame> detections,
                              const GatingConfig& gating);

/// Median + Gaussian smoothing of one track's positions; output length
/// equals input length and a single sample is returned unchanged.
std::vector<Vec2> smooth_positions(std::span<const Vec2> positions,
                                   const SmoothingConfig& cfg);

/// Smooth every track of a set; ids and frame spans are unchanged.
TrajectorySet smooth_set(const TrajectorySet& set, const SmoothingConfig& cfg,
                         Execution mode = Execution::Parallel);

/// Drop tracks shorter than min_length samples; survivors are untouched.
TrajectorySet filter_min_length(const TrajectorySet& set, int min_length);

} // namespace flowmap
