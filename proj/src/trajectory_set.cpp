#include "flowmap/trajectory_set.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flowmap/error.hpp"

namespace flowmap {

namespace {

std::string frame_range_message(int frame, int frame_count) {
    return "frame " + std::to_string(frame) + " out of range [0, " +
           std::to_string(frame_count - 1) + "]";
}

} // namespace

TrajectorySet TrajectorySet::build(const std::vector<TrajectoryRecord>& records,
                                   std::vector<double> timestamps) {
    for (std::size_t i = 0; i + 1 < timestamps.size(); ++i) {
        if (!(timestamps[i] < timestamps[i + 1])) {
            throw Error("timestamps must be strictly increasing (violated at frame " +
                        std::to_string(i + 1) + ")");
        }
    }
    for (double t : timestamps) {
        if (!std::isfinite(t)) throw Error("non-finite timestamp");
    }

    // Group samples per id, keeping the order in which ids first appear so
    // that gap-split id assignment is deterministic for any input order.
    std::unordered_map<TracerId, std::size_t> group_of;
    std::vector<TracerId> id_order;
    std::vector<std::vector<std::pair<int, Vec2>>> groups;
    TracerId max_id = -1;

    for (const TrajectoryRecord& rec : records) {
        if (rec.id < 0) throw Error("negative tracer id " + std::to_string(rec.id));
        if (!rec.pos.finite()) {
            throw Error("non-finite position for tracer " + std::to_string(rec.id) +
                        " at frame " + std::to_string(rec.frame));
        }
        if (rec.frame < 0 || rec.frame >= static_cast<int>(timestamps.size())) {
            throw Error("tracer " + std::to_string(rec.id) + ": " +
                        frame_range_message(rec.frame, static_cast<int>(timestamps.size())));
        }
        auto [it, inserted] = group_of.try_emplace(rec.id, groups.size());
        if (inserted) {
            groups.emplace_back();
            id_order.push_back(rec.id);
        }
        groups[it->second].emplace_back(rec.frame, rec.pos);
        max_id = std::max(max_id, rec.id);
    }

    TrajectorySet set;
    set.timestamps_ = std::move(timestamps);

    TracerId next_id = max_id + 1;
    for (TracerId original_id : id_order) {
        auto& samples = groups[group_of[original_id]];
        std::stable_sort(samples.begin(), samples.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
            if (samples[i].first == samples[i + 1].first) {
                throw Error("duplicate sample for tracer " + std::to_string(original_id) +
                            " at frame " + std::to_string(samples[i].first));
            }
        }
        // Split at frame gaps; first segment keeps the original id.
        std::size_t start = 0;
        while (start < samples.size()) {
            std::size_t end = start + 1;
            while (end < samples.size() &&
                   samples[end].first == samples[end - 1].first + 1) {
                ++end;
            }
            Track track;
            track.id = (start == 0) ? original_id : next_id++;
            track.first_frame = samples[start].first;
            track.positions.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) {
                track.positions.push_back(samples[i].second);
            }
            set.tracks_.push_back(std::move(track));
            start = end;
        }
    }

    std::sort(set.tracks_.begin(), set.tracks_.end(),
              [](const Track& a, const Track& b) { return a.id < b.id; });
    set.slot_by_id_.reserve(set.tracks_.size());
    for (std::size_t slot = 0; slot < set.tracks_.size(); ++slot) {
        set.slot_by_id_.emplace(set.tracks_[slot].id, slot);
    }
    set.rebuild_frame_index();
    return set;
}

void TrajectorySet::rebuild_frame_index() {
    slots_by_frame_.assign(timestamps_.size(), {});
    for (std::size_t slot = 0; slot < tracks_.size(); ++slot) {
        const Track& track = tracks_[slot];
        for (int f = track.first_frame; f <= track.last_frame(); ++f) {
            slots_by_frame_[static_cast<std::size_t>(f)].push_back(slot);
        }
    }
    // Track slots are id-sorted already, so each frame list is id-sorted too.
}

std::size_t TrajectorySet::sample_count() const {
    std::size_t n = 0;
    for (const Track& t : tracks_) n += t.positions.size();
    return n;
}

double TrajectorySet::time_at(int frame) const {
    check_frame(frame);
    return timestamps_[static_cast<std::size_t>(frame)];
}

std::vector<TracerId> TrajectorySet::tracer_ids() const {
    std::vector<TracerId> ids;
    ids.reserve(tracks_.size());
    for (const Track& t : tracks_) ids.push_back(t.id);
    return ids;
}

std::size_t TrajectorySet::slot_of(TracerId id) const {
    auto it = slot_by_id_.find(id);
    if (it == slot_by_id_.end()) {
        throw Error("unknown tracer id " + std::to_string(id));
    }
    return it->second;
}

bool TrajectorySet::has_sample(TracerId id, int frame) const {
    auto it = slot_by_id_.find(id);
    return it != slot_by_id_.end() && tracks_[it->second].present(frame);
}

Vec2 TrajectorySet::position(TracerId id, int frame) const {
    const Track& track = tracks_[slot_of(id)];
    if (!track.present(frame)) {
        throw Error("tracer " + std::to_string(id) + " has no sample at frame " +
                    std::to_string(frame));
    }
    return track.at_frame(frame);
}

FrameView TrajectorySet::frame_view(int frame) const {
    check_frame(frame);
    FrameView view;
    view.frame = frame;
    const auto& slots = slots_by_frame_[static_cast<std::size_t>(frame)];
    view.entries.reserve(slots.size());
    for (std::size_t slot : slots) {
        view.entries.push_back({tracks_[slot].id, tracks_[slot].at_frame(frame)});
    }
    return view;
}

std::vector<TracerId> TrajectorySet::persisting_ids(int frame_start, int frame_end) const {
    check_frame(frame_start);
    check_frame(frame_end);
    if (frame_start > frame_end) {
        throw Error("invalid interval [" + std::to_string(frame_start) + ", " +
                    std::to_string(frame_end) + "]");
    }
    std::vector<TracerId> ids;
    // Contiguity makes persistence a span check on the start frame's tracks.
    for (std::size_t slot : slots_by_frame_[static_cast<std::size_t>(frame_start)]) {
        if (tracks_[slot].last_frame() >= frame_end) {
            ids.push_back(tracks_[slot].id);
        }
    }
    return ids;
}

std::vector<TrajectoryRecord> TrajectorySet::all_records() const {
    std::vector<TrajectoryRecord> records;
    records.reserve(sample_count());
    for (const Track& track : tracks_) {
        for (int f = track.first_frame; f <= track.last_frame(); ++f) {
            records.push_back({track.id, f, track.at_frame(f)});
        }
    }
    return records;
}

TrajectorySet TrajectorySet::with_tracks(std::vector<Track> tracks) const {
    TrajectorySet set;
    set.timestamps_ = timestamps_;
    set.tracks_ = std::move(tracks);
    std::sort(set.tracks_.begin(), set.tracks_.end(),
              [](const Track& a, const Track& b) { return a.id < b.id; });
    set.slot_by_id_.reserve(set.tracks_.size());
    for (std::size_t slot = 0; slot < set.tracks_.size(); ++slot) {
        const Track& t = set.tracks_[slot];
        if (t.first_frame < 0 || t.last_frame() >= set.frame_count()) {
            throw Error("track " + std::to_string(t.id) + " exceeds frame range");
        }
        if (!set.slot_by_id_.emplace(t.id, slot).second) {
            throw Error("duplicate tracer id " + std::to_string(t.id));
        }
    }
    set.rebuild_frame_index();
    return set;
}

void TrajectorySet::check_frame(int frame) const {
    if (frame < 0 || frame >= frame_count()) {
        throw Error(frame_range_message(frame, frame_count()));
    }
}

} // namespace flowmap
