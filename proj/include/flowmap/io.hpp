#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "flowmap/metrics.hpp"
#include "flowmap/synthetic.hpp"
#include "flowmap/tracker.hpp"
#include "flowmap/trajectory_set.hpp"

namespace flowmap {

/// Trajectory files are UTF-8 comma-separated text with the mandatory
/// header `tracer_id,frame,t,x,y`. Doubles are written with 17 significant
/// digits, so write/read round-trips are bit exact.
TrajectorySet read_trajectories(const std::string& path);
void write_trajectories(const TrajectorySet& set, const std::string& path);

/// Detection files carry the header `frame,t,x,y`; rows may arrive in any
/// order and are grouped and sorted by frame on load.
std::vector<DetectionFrame> read_detections(const std::string& path);
void write_detections(const std::vector<DetectionFrame>& frames,
                      const std::string& path);

/// Metric sample files carry the header
/// `tracer_id,x,y,metric,value,interval_start,interval_end`.
void write_metric_samples(const std::vector<MetricSample>& samples,
                          const std::string& path);
std::vector<MetricSample> read_metric_samples(const std::string& path);

/// Dense oracle grids are written as `x,y,value` rows, nodes in row-major
/// order.
void write_oracle_grid(const FtleOracleGrid& grid, const std::string& path);

/// Projective transform applied to points (not images). Row-major 3x3.
struct Homography {
    std::array<double, 9> h{1, 0, 0, 0, 1, 0, 0, 0, 1};

    void validate() const; ///< throws unless |det| > 1e-12
    Vec2 apply(const Vec2& p) const;
};

TrajectorySet apply_homography(const TrajectorySet& set, const Homography& h);
std::vector<DetectionFrame> apply_homography(std::vector<DetectionFrame> frames,
                                             const Homography& h);

/// Scatter plot styling. The colormap is "sequential" or "diverging";
/// diverging maps are centered on zero.
struct PlotStyle {
    int width = 800;
    double marker_radius = 3.0;
    std::string colormap = "sequential";
};

/// Emit a scalar-colored SVG scatter of the samples with a color legend.
/// Output bytes depend only on the inputs. Throws on empty input.
void render_scatter(const std::vector<MetricSample>& samples, const PlotStyle& style,
                    const std::string& path);

/// Resolved run configuration as flat `key = value` lines (reproducibility
/// sidecar written next to every CLI output).
void write_config_file(const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>& entries);

} // namespace flowmap
