#pragma once

#include <span>
#include <vector>

#include "flowmap/linalg.hpp"
#include "flowmap/neighbors.hpp"
#include "flowmap/parallel.hpp"
#include "flowmap/trajectory_set.hpp"

namespace flowmap {

/// Tunables of the kernel-weighted Jacobian regression.
struct KernelConfig {
    int k = 15;             ///< neighbor count
    double s = 0.03;        ///< Gaussian bandwidth, world distance units
    double gamma = 1e-10;   ///< Tikhonov constant, dimensionless, >= 0

    void validate(int dimension = 2) const;
};

/// Lab water-channel preset: k=15, s=0.03 m.
KernelConfig lab_preset();
/// Field (pond surface) preset: k=25, s=0.6 m.
KernelConfig field_preset();

/// A d x d linear operator mapping small displacements about the center
/// tracer at frame_start to displacements at frame_end.
struct FlowMapJacobian {
    Mat2 m = Mat2::identity();
    TracerId center = 0;
    int frame_start = 0;
    int frame_end = 0;
    bool shortfall = false; ///< fewer than the requested k neighbors used
    int n_used = 0;         ///< neighbor count behind the regression
};

/// Velocity gradient tensor (1/s) of one tracer at one frame.
struct VelocityGradient {
    Mat2 m;
    TracerId center = 0;
    int frame = 0;
};

/// Diagonal kernel weights w_i = exp(-|dx_i|^2 / (2 s^2)) for the initial
/// displacements of the regression neighbors.
std::vector<double> gaussian_kernel_weights(std::span<const Vec2> displacements,
                                            double s);

/// Weighted least-squares fit of the 2x2 map taking initial displacements to
/// final displacements: solves
///   M * (sum_j w_j dx0_j dx0_j^T + gamma n I) = sum_j w_j dx1_j dx0_j^T
/// for M. Throws on a rank-deficient normal matrix when gamma == 0.
Mat2 fit_linear_map(std::span<const Vec2> dx0, std::span<const Vec2> dx1,
                    std::span<const double> weights, double gamma);

/// Regress the flow-map Jacobian of `center` over [frame_start, frame_end]
/// from the displacements of the given neighbors, which must all be present
/// at both frames. frame_start == frame_end returns the identity. With
/// gamma == 0, fewer than d+1 neighbors (or a degenerate neighbor geometry)
/// raises a rank-deficiency error naming the center.
FlowMapJacobian regress_jacobian(const TrajectorySet& set, TracerId center,
                                 std::span<const TracerId> neighbors, int frame_start,
                                 int frame_end, const KernelConfig& cfg);

/// Instantaneous velocity gradient from a one-step Jacobian: (DF - I) / dt.
VelocityGradient velocity_gradient(const FlowMapJacobian& jac, double dt);

/// Multiply a contiguous chain of short-time Jacobians into the Jacobian of
/// the full interval; later steps apply on the left. Throws on an empty
/// chain, a center mismatch, or a frame gap.
FlowMapJacobian compose_jacobians(std::span<const FlowMapJacobian> chain);

/// Why a candidate tracer produced no output in a field computation.
struct FieldDiagnostics {
    std::size_t candidates = 0;           ///< tracers considered
    std::size_t emitted = 0;              ///< tracers with output
    std::size_t skipped_persistence = 0;  ///< absent from part of the interval
    std::size_t skipped_neighbors = 0;    ///< fewer than d+1 persisting neighbors
    std::size_t skipped_rank = 0;         ///< degenerate neighbor geometry

    std::size_t skipped_total() const {
        return skipped_persistence + skipped_neighbors + skipped_rank;
    }
};

/// One-step Jacobians for every tracer present at both `frame` and
/// `frame + 1` with at least d+1 persisting neighbors. Output is sorted by
/// center id and independent of the execution mode.
std::vector<FlowMapJacobian> step_jacobian_field(const TrajectorySet& set, int frame,
                                                 const KernelConfig& cfg,
                                                 FieldDiagnostics* diag = nullptr,
                                                 Execution mode = Execution::Parallel);

/// Per-step regressions composed over [frame_start, frame_end] for every
/// tracer persisting through the whole interval. Neighbor sets are refreshed
/// at every step from the tracers persisting that step.
std::vector<FlowMapJacobian> composed_jacobian_field(
    const TrajectorySet& set, int frame_start, int frame_end, const KernelConfig& cfg,
    FieldDiagnostics* diag = nullptr, Execution mode = Execution::Parallel);

/// Instantaneous velocity gradients at `frame` from step_jacobian_field.
std::vector<VelocityGradient> gradient_field(const TrajectorySet& set, int frame,
                                             const KernelConfig& cfg,
                                             FieldDiagnostics* diag = nullptr,
                                             Execution mode = Execution::Parallel);

} // namespace flowmap
