#pragma once

#include <cstdint>
#include <vector>

#include "flowmap/trajectory_set.hpp"

namespace flowmap {

/// k nearest tracers around a query, sorted by distance with ties broken by
/// lower id. `shortfall` is set when fewer than the requested k were
/// available; callers decide whether that disqualifies the center.
struct NeighborQuery {
    std::vector<TracerId> ids;
    bool shortfall = false;
};

/// Static k-d tree over one frame's tracer positions. Queries can be
/// restricted to an arbitrary subset of entries (used for persistence
/// filtering) and always reproduce an exhaustive linear scan exactly.
/// Immutable after construction; concurrent queries are safe.
class SpatialIndex {
public:
    struct Neighbor {
        double dist2 = 0.0;
        TracerId id = 0;
        std::uint32_t payload = 0;
    };

    /// Index the tracers of one frame view; payloads are positions of the
    /// entries in the (id-sorted) view. Throws on an empty frame.
    explicit SpatialIndex(const FrameView& view);

    /// Index frame `frame` of `set`; payloads are track slots in `set`,
    /// which lets hot loops skip id hashing.
    SpatialIndex(const TrajectorySet& set, int frame);

    int frame() const { return frame_; }
    std::size_t size() const { return pts_.size(); }

    /// Ids in internal entry order; eligibility masks index this order.
    const std::vector<TracerId>& entry_ids() const { return ids_; }

    /// The k nearest entries to `query` among eligible ones, excluding any
    /// entry with id == exclude. `eligible`, when non-null, must have one
    /// flag per entry in entry_ids() order. Result sorted by (dist2, id).
    std::vector<Neighbor> query_k(const Vec2& query, int k, TracerId exclude,
                                  const std::vector<std::uint8_t>* eligible) const;

private:
    void build(std::size_t lo, std::size_t hi, int axis);
    void search(std::size_t lo, std::size_t hi, int axis, const Vec2& query, int k,
                TracerId exclude, const std::vector<std::uint8_t>* eligible,
                std::vector<Neighbor>& heap) const;

    int frame_ = 0;
    std::vector<Vec2> pts_;
    std::vector<TracerId> ids_;
    std::vector<std::uint32_t> payloads_;
};

/// Eligibility flags (in entry order) for tracers persisting through
/// [frame_start, frame_end].
std::vector<std::uint8_t> persistence_mask(const SpatialIndex& index,
                                           const TrajectorySet& set, int frame_end);

/// The k nearest neighbors of `center` at frame_start, drawn only from
/// tracers that persist through [frame_start, frame_end]. The index must be
/// built on frame_start. Throws if center is absent at frame_start or
/// k < d+1; fewer than k persisting neighbors yields a flagged shortfall.
NeighborQuery k_nearest_persisting(const SpatialIndex& index, TracerId center, int k,
                                   const TrajectorySet& set, int frame_start,
                                   int frame_end);

/// Mean distance to the nearest neighbor over all tracers of one frame;
/// handy for matching a kernel bandwidth to the data density.
double mean_nn_distance(const TrajectorySet& set, int frame);

} // namespace flowmap
