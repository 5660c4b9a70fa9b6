#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flowmap/regression.hpp"

namespace flowmap {

/// Skew/symmetric split of a velocity gradient: spin W and stretch D with
/// W + D reconstructing the input exactly.
struct SpinStretch {
    Mat2 spin;
    Mat2 stretch;
};

SpinStretch spin_stretch_decompose(const Mat2& grad);

/// Out-of-plane vorticity dv/dx - du/dy (1/s). Row = component, column =
/// derivative direction.
double vorticity_2d(const Mat2& grad);

/// Unweighted mean over per-tracer vorticity samples of one frame.
double mean_vorticity(std::span<const double> samples);

/// |omega - omega_bar|; the frame-change tolerant vorticity measure.
double vorticity_deviation(double omega, double omega_mean);

/// Largest eigenvalue of the stretch tensor (1/s). Input must be symmetric
/// within 1e-9.
double principal_strain_rate(const Mat2& stretch);

/// Exponential growth rate ln(max singular value) / dt of a finite-time
/// Jacobian. Negative values mean local contraction.
double ftle(const FlowMapJacobian& jac, double dt_total);

struct LavdResult {
    double lavd = 0.0;           ///< radians
    double rotation_angle = 0.0; ///< lavd / 2, radians
};

/// Trapezoidal integral of vorticity-deviation samples (time, omega')
/// along one trajectory. Needs >= 2 samples with strictly increasing times
/// and non-negative values.
LavdResult lavd(std::span<const std::pair<double, double>> samples);

enum class MetricKind {
    Vorticity,
    VorticityDeviation,
    PrincipalStrain,
    Ftle,
    Lavd,
};

const char* metric_kind_name(MetricKind kind);
MetricKind parse_metric_kind(const std::string& name);
bool metric_is_instantaneous(MetricKind kind);

/// One scalar diagnostic attached to a tracer at its evaluation position
/// (the interval's start frame).
struct MetricSample {
    TracerId id = 0;
    Vec2 position;
    double value = 0.0;
    MetricKind kind = MetricKind::Vorticity;
    int frame_start = 0;
    int frame_end = 0;
};

struct FieldResult {
    std::vector<MetricSample> samples; ///< sorted by tracer id
    FieldDiagnostics diagnostics;
};

/// Evaluate one metric for every eligible tracer over [frame_start,
/// frame_end]. Instantaneous metrics require frame_end == frame_start + 1;
/// finite-time metrics use only tracers persisting through the interval.
/// Ineligible tracers are counted in the diagnostics; an interval with no
/// eligible tracer at all is an error.
FieldResult field_pipeline(const TrajectorySet& set, const KernelConfig& cfg,
                           int frame_start, int frame_end, MetricKind kind,
                           Execution mode = Execution::Parallel);

} // namespace flowmap
