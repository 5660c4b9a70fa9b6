#pragma once

#include "flowmap/regression.hpp"

namespace flowmap::reference {

/// Plainly-written serial counterparts of the field kernels, with neighbor
/// search done by exhaustive linear scan instead of the spatial index. They
/// produce bit-identical results to the production kernels and exist as the
/// baseline for correctness tests and the benchmark.

/// k nearest persisting neighbors by scanning every tracer of the frame.
NeighborQuery k_nearest_linear_scan(const TrajectorySet& set, TracerId center, int k,
                                    int frame_start, int frame_end);

std::vector<FlowMapJacobian> step_jacobian_field(const TrajectorySet& set, int frame,
                                                 const KernelConfig& cfg,
                                                 FieldDiagnostics* diag = nullptr);

std::vector<FlowMapJacobian> composed_jacobian_field(const TrajectorySet& set,
                                                     int frame_start, int frame_end,
                                                     const KernelConfig& cfg,
                                                     FieldDiagnostics* diag = nullptr);

} // namespace flowmap::reference
