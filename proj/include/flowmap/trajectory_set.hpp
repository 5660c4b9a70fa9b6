#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "flowmap/linalg.hpp"

namespace flowmap {

/// Stable label of one tracked object. An id never refers to two different
/// physical tracks within a set; objects re-entering the scene get fresh ids.
using TracerId = std::int64_t;

/// One observed sample: tracer `id` sits at `pos` in frame `frame`.
struct TrajectoryRecord {
    TracerId id = 0;
    int frame = 0;
    Vec2 pos;
};

struct FrameEntry {
    TracerId id = 0;
    Vec2 pos;
};

/// All tracers present in one frame, sorted by id.
struct FrameView {
    int frame = 0;
    std::vector<FrameEntry> entries;
};

/// Immutable columnar store of multi-object trajectories.
///
/// Tracks are frame-contiguous by construction: gapped input tracks are
/// split into separate ids when the set is built. Timestamps are stored per
/// frame in seconds and are strictly increasing; metric code always works
/// with real time deltas, never frame counts. Construction is
/// single-threaded; afterwards the set is safe for concurrent reads.
class TrajectorySet {
public:
    struct Track {
        TracerId id = 0;
        int first_frame = 0;
        std::vector<Vec2> positions; // one per frame, frame-contiguous

        int length() const { return static_cast<int>(positions.size()); }
        int last_frame() const { return first_frame + length() - 1; }
        bool present(int frame) const {
            return frame >= first_frame && frame <= last_frame();
        }
        const Vec2& at_frame(int frame) const {
            return positions[static_cast<std::size_t>(frame - first_frame)];
        }
    };

    TrajectorySet() = default;

    /// Build from unordered samples. Gapped tracks are split: the first
    /// segment keeps the original id, later segments get fresh ids
    /// (running max id + 1), assigned in order of the id's first appearance
    /// in the input and then by frame. Throws on duplicate (id, frame)
    /// pairs, non-finite positions, frames outside the timestamp range, or
    /// timestamps that are not strictly increasing.
    static TrajectorySet build(const std::vector<TrajectoryRecord>& records,
                               std::vector<double> timestamps);

    int dimension() const { return 2; }
    int frame_count() const { return static_cast<int>(timestamps_.size()); }
    std::size_t track_count() const { return tracks_.size(); }
    std::size_t sample_count() const;
    bool empty() const { return tracks_.empty(); }

    const std::vector<double>& timestamps() const { return timestamps_; }
    double time_at(int frame) const;
    /// Time step between consecutive frames; frame must not be the last.
    double dt_at(int frame) const { return time_at(frame + 1) - time_at(frame); }

    /// Tracks sorted by id; slot indices below refer to this ordering.
    const std::vector<Track>& tracks() const { return tracks_; }
    std::vector<TracerId> tracer_ids() const;

    bool has_tracer(TracerId id) const { return slot_by_id_.count(id) != 0; }
    std::size_t slot_of(TracerId id) const;
    const Track& track(TracerId id) const { return tracks_[slot_of(id)]; }
    const Track& track_at(std::size_t slot) const { return tracks_[slot]; }

    bool has_sample(TracerId id, int frame) const;
    /// Position of `id` at `frame`; throws if absent.
    Vec2 position(TracerId id, int frame) const;

    /// All tracers present at `frame`, sorted by id. Throws on unknown frame.
    FrameView frame_view(int frame) const;

    /// Ids present at every frame of [frame_start, frame_end], sorted.
    std::vector<TracerId> persisting_ids(int frame_start, int frame_end) const;

    /// Every sample, ordered by (id, frame). write(read(.)) round-trips.
    std::vector<TrajectoryRecord> all_records() const;

    /// Same frames/timestamps, tracks replaced (used by smoothing and
    /// coordinate transforms; callers keep ids and frame spans unchanged).
    TrajectorySet with_tracks(std::vector<Track> tracks) const;

private:
    void check_frame(int frame) const;
    void rebuild_frame_index();

    std::vector<Track> tracks_; // sorted by id
    std::unordered_map<TracerId, std::size_t> slot_by_id_;
    std::vector<double> timestamps_;
    std::vector<std::vector<std::size_t>> slots_by_frame_; // frame -> track slots
};

} // namespace flowmap
