#include "flowmap/neighbors.hpp"

#include <algorithm>
#include <string>

#include "flowmap/error.hpp"

namespace flowmap {

namespace {

constexpr std::size_t kLeafSize = 16;

// Worst-first ordering for the bounded candidate heap: larger distance is
// worse, and among equal distances the larger id is worse, so ties resolve
// toward lower ids exactly as a (dist2, id) sort would.
inline bool neighbor_less(const SpatialIndex::Neighbor& a,
                          const SpatialIndex::Neighbor& b) {
    if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
    return a.id < b.id;
}

} // namespace

SpatialIndex::SpatialIndex(const FrameView& view) : frame_(view.frame) {
    if (view.entries.empty()) {
        throw Error("cannot index empty frame " + std::to_string(view.frame));
    }
    pts_.reserve(view.entries.size());
    ids_.reserve(view.entries.size());
    payloads_.reserve(view.entries.size());
    for (std::size_t i = 0; i < view.entries.size(); ++i) {
        pts_.push_back(view.entries[i].pos);
        ids_.push_back(view.entries[i].id);
        payloads_.push_back(static_cast<std::uint32_t>(i));
    }
    build(0, pts_.size(), 0);
}

SpatialIndex::SpatialIndex(const TrajectorySet& set, int frame) : frame_(frame) {
    FrameView view = set.frame_view(frame);
    if (view.entries.empty()) {
        throw Error("cannot index empty frame " + std::to_string(frame));
    }
    pts_.reserve(view.entries.size());
    ids_.reserve(view.entries.size());
    payloads_.reserve(view.entries.size());
    for (const FrameEntry& e : view.entries) {
        pts_.push_back(e.pos);
        ids_.push_back(e.id);
        payloads_.push_back(static_cast<std::uint32_t>(set.slot_of(e.id)));
    }
    build(0, pts_.size(), 0);
}

void SpatialIndex::build(std::size_t lo, std::size_t hi, int axis) {
    if (hi - lo <= kLeafSize) return;
    const std::size_t mid = lo + (hi - lo) / 2;
    // Partition the parallel arrays around the axis median via an index
    // permutation, applied in place.
    std::vector<std::uint32_t> order(hi - lo);
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = static_cast<std::uint32_t>(lo + i);
    }
    auto key = [&](std::uint32_t i) { return axis == 0 ? pts_[i].x : pts_[i].y; };
    std::nth_element(order.begin(), order.begin() + (mid - lo), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return key(a) < key(b); });
    std::vector<Vec2> pts_tmp(order.size());
    std::vector<TracerId> ids_tmp(order.size());
    std::vector<std::uint32_t> pay_tmp(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        pts_tmp[i] = pts_[order[i]];
        ids_tmp[i] = ids_[order[i]];
        pay_tmp[i] = payloads_[order[i]];
    }
    std::copy(pts_tmp.begin(), pts_tmp.end(), pts_.begin() + static_cast<long>(lo));
    std::copy(ids_tmp.begin(), ids_tmp.end(), ids_.begin() + static_cast<long>(lo));
    std::copy(pay_tmp.begin(), pay_tmp.end(),
              payloads_.begin() + static_cast<long>(lo));

    build(lo, mid, 1 - axis);
    build(mid + 1, hi, 1 - axis);
}

std::vector<SpatialIndex::Neighbor> SpatialIndex::query_k(
    const Vec2& query, int k, TracerId exclude,
    const std::vector<std::uint8_t>* eligible) const {
    if (k <= 0) return {};
    if (eligible && eligible->size() != pts_.size()) {
        throw Error("eligibility mask size does not match index");
    }
    std::vector<Neighbor> heap;
    heap.reserve(static_cast<std::size_t>(k) + 1);
    search(0, pts_.size(), 0, query, k, exclude, eligible, heap);
    std::sort(heap.begin(), heap.end(), neighbor_less);
    return heap;
}

void SpatialIndex::search(std::size_t lo, std::size_t hi, int axis, const Vec2& query,
                          int k, TracerId exclude,
                          const std::vector<std::uint8_t>* eligible,
                          std::vector<Neighbor>& heap) const {
    auto worse = [](const Neighbor& a, const Neighbor& b) { return neighbor_less(a, b); };
    auto consider = [&](std::size_t i) {
        if (ids_[i] == exclude) return;
        if (eligible && !(*eligible)[i]) return;
        Neighbor cand{distance2(query, pts_[i]), ids_[i], payloads_[i]};
        if (heap.size() < static_cast<std::size_t>(k)) {
            heap.push_back(cand);
            std::push_heap(heap.begin(), heap.end(), worse);
        } else if (neighbor_less(cand, heap.front())) {
            std::pop_heap(heap.begin(), heap.end(), worse);
            heap.back() = cand;
            std::push_heap(heap.begin(), heap.end(), worse);
        }
    };

    if (hi - lo <= kLeafSize) {
        for (std::size_t i = lo; i < hi; ++i) consider(i);
        return;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    const double split = axis == 0 ? pts_[mid].x : pts_[mid].y;
    const double q = axis == 0 ? query.x : query.y;
    const double plane_dist2 = (q - split) * (q - split);

    consider(mid);
    const bool near_is_left = q < split;
    const auto descend = [&](std::size_t a, std::size_t b) {
        if (a < b) search(a, b, 1 - axis, query, k, exclude, eligible, heap);
    };
    if (near_is_left) {
        descend(lo, mid);
    } else {
        descend(mid + 1, hi);
    }
    // Visit the far side unless every candidate there is strictly worse than
    // the current k-th best. Equal distances must still be visited so id
    // tie-breaking matches the linear scan.
    if (heap.size() < static_cast<std::size_t>(k) || plane_dist2 <= heap.front().dist2) {
        if (near_is_left) {
            descend(mid + 1, hi);
        } else {
            descend(lo, mid);
        }
    }
}

std::vector<std::uint8_t> persistence_mask(const SpatialIndex& index,
                                           const TrajectorySet& set, int frame_end) {
    const auto& ids = index.entry_ids();
    std::vector<std::uint8_t> mask(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        mask[i] = set.track(ids[i]).last_frame() >= frame_end ? 1 : 0;
    }
    return mask;
}

NeighborQuery k_nearest_persisting(const SpatialIndex& index, TracerId center, int k,
                                   const TrajectorySet& set, int frame_start,
                                   int frame_end) {
    if (index.frame() != frame_start) {
        throw Error("index built on frame " + std::to_string(index.frame()) +
                    ", queried for frame " + std::to_string(frame_start));
    }
    if (k < set.dimension() + 1) {
        throw Error("k must be at least d+1 = " + std::to_string(set.dimension() + 1));
    }
    if (frame_end < frame_start || frame_end >= set.frame_count()) {
        throw Error("invalid interval [" + std::to_string(frame_start) + ", " +
                    std::to_string(frame_end) + "]");
    }
    if (!set.has_sample(center, frame_start)) {
        throw Error("center tracer " + std::to_string(center) +
                    " absent at frame " + std::to_string(frame_start));
    }
    const Vec2 query = set.position(center, frame_start);
    const auto mask = persistence_mask(index, set, frame_end);

    std::size_t eligible_count = 0;
    const auto& ids = index.entry_ids();
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (mask[i] && ids[i] != center) ++eligible_count;
    }

    auto found = index.query_k(query, k, center, &mask);
    NeighborQuery result;
    result.ids.reserve(found.size());
    for (const auto& n : found) result.ids.push_back(n.id);
    result.shortfall = eligible_count < static_cast<std::size_t>(k);
    return result;
}

double mean_nn_distance(const TrajectorySet& set, int frame) {
    SpatialIndex index(set, frame);
    const FrameView view = set.frame_view(frame);
    if (view.entries.size() < 2) {
        throw Error("frame " + std::to_string(frame) +
                    " needs at least two tracers for a spacing estimate");
    }
    double sum = 0.0;
    for (const FrameEntry& e : view.entries) {
        auto nn = index.query_k(e.pos, 1, e.id, nullptr);
        sum += std::sqrt(nn.front().dist2);
    }
    return sum / static_cast<double>(view.entries.size());
}

} // namespace flowmap
