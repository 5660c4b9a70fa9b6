#pragma once

#include <functional>
#include <string>
#include <vector>

#include "flowmap/parallel.hpp"
#include "flowmap/trajectory_set.hpp"

namespace flowmap {

/// A planar velocity field with its exact spatial gradient, used as ground
/// truth when exercising the estimation pipeline.
struct AnalyticFlow {
    std::string name;
    std::function<Vec2(const Vec2&, double)> velocity;
    std::function<Mat2(const Vec2&, double)> gradient;
};

/// Solid-body rotation about the origin: v = omega * (-y, x).
AnalyticFlow rigid_rotation_flow(double omega = 1.0);
/// Hyperbolic stagnation point: v = (lambda x, -lambda y).
AnalyticFlow saddle_flow(double lambda = 1.0);
/// Simple shear: v = (rate * y, 0).
AnalyticFlow shear_flow(double rate = 1.0);
/// Time-periodic double gyre on [0,2]x[0,1]; the usual transport benchmark
/// configuration is amplitude 0.1, eps 0.25, omega pi/5.
AnalyticFlow double_gyre_flow(double amplitude = 0.1, double eps = 0.25,
                              double omega = 0.6283185307179586);

/// Look up a catalog flow by name ("rotation", "saddle", "shear",
/// "double-gyre") with explicit parameters where given.
AnalyticFlow catalog_flow(const std::string& name, const std::vector<double>& params);

/// Axis-aligned sampling window.
struct Domain {
    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
};

/// Uniform random seed positions (deterministic in `seed`).
std::vector<Vec2> random_seeds(std::size_t count, const Domain& domain,
                               std::uint64_t seed);

/// Integrate one trajectory per seed with classical fourth-order steps,
/// sampling every dt from t0 to t_end. Tracer ids follow seed order.
TrajectorySet advect(const AnalyticFlow& flow, const std::vector<Vec2>& seeds,
                     double t0, double t_end, double dt,
                     Execution mode = Execution::Parallel);

struct GridSpec {
    int nx = 0, ny = 0;
    Domain domain;
};

/// Dense finite-difference FTLE reference field: every node's flow map is
/// integrated exactly like `advect`, the Jacobian is taken by central
/// differences of neighboring nodes, and the growth rate of the largest
/// singular value is stored per node.
class FtleOracleGrid {
public:
    FtleOracleGrid(GridSpec spec, std::vector<double> values);

    const GridSpec& spec() const { return spec_; }
    double value_at(int ix, int iy) const;
    /// Bilinear interpolation; throws outside the grid domain.
    double sample(const Vec2& p) const;
    double max_abs() const;

private:
    GridSpec spec_;
    std::vector<double> values_; // row-major, iy * nx + ix
};

FtleOracleGrid dense_ftle_oracle(const AnalyticFlow& flow, const GridSpec& spec,
                                 double t0, double t_end, double integrator_dt = 0.01,
                                 Execution mode = Execution::Parallel);

/// Euclidean change of observer: every sample x(t) becomes
/// R(angle(t)) x(t) + translation(t). Ids and frames are unchanged, and all
/// per-frame pairwise distances are preserved.
TrajectorySet apply_euclidean_motion(const TrajectorySet& set,
                                     const std::function<double(double)>& angle,
                                     const std::function<Vec2(double)>& translation);

} // namespace flowmap
