// Timing comparison between the serial linear-scan reference, the indexed
// serial kernels, and the OpenMP kernels, with output equality checked.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "flowmap/reference.hpp"
#include "flowmap/regression.hpp"
#include "flowmap/synthetic.hpp"

using namespace flowmap;

namespace {

double seconds_of(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class Fn>
double timed(Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return seconds_of(t0);
}

double max_entry_diff(const std::vector<FlowMapJacobian>& a,
                      const std::vector<FlowMapJacobian>& b) {
    if (a.size() != b.size()) return 1e300;
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, (a[i].m - b[i].m).frobenius());
    }
    return m;
}

} // namespace

int main() {
    const int tracers = 4000;
    const int frames = 40;
    const double dt = 0.05;
#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (compiled without OpenMP)\n");
#endif
    std::printf("scene: double gyre, %d tracers, %d frames, dt=%.3f\n\n", tracers,
                frames, dt);

    const auto seeds = random_seeds(tracers, {0.02, 1.98, 0.02, 0.98}, 99);
    const auto set = advect(double_gyre_flow(), seeds, 0.0, frames * dt, dt);
    const KernelConfig cfg{15, 0.08, 1e-10};

    std::vector<FlowMapJacobian> ref, ser, par;
    const double t_ref = timed([&] { ref = reference::composed_jacobian_field(set, 0, frames, cfg); });
    const double t_ser = timed(
        [&] { ser = composed_jacobian_field(set, 0, frames, cfg, nullptr, Execution::Serial); });
    const double t_par = timed(
        [&] { par = composed_jacobian_field(set, 0, frames, cfg, nullptr, Execution::Parallel); });

    std::printf("composed jacobians over %d steps (%zu tracers emitted)\n", frames,
                par.size());
    std::printf("  %-28s %8.3f s\n", "reference (linear scan)", t_ref);
    std::printf("  %-28s %8.3f s   speedup vs reference %5.2fx\n", "indexed, serial",
                t_ser, t_ref / t_ser);
    std::printf("  %-28s %8.3f s   speedup vs serial    %5.2fx\n", "indexed, OpenMP",
                t_par, t_ser / t_par);
    std::printf("  max |serial - reference| = %.3g, max |parallel - serial| = %.3g\n\n",
                max_entry_diff(ser, ref), max_entry_diff(par, ser));

    std::vector<FlowMapJacobian> sref, sser, spar;
    const double ts_ref = timed([&] { sref = reference::step_jacobian_field(set, 0, cfg); });
    const double ts_ser =
        timed([&] { sser = step_jacobian_field(set, 0, cfg, nullptr, Execution::Serial); });
    const double ts_par =
        timed([&] { spar = step_jacobian_field(set, 0, cfg, nullptr, Execution::Parallel); });
    std::printf("one-step jacobian field (%zu tracers)\n", spar.size());
    std::printf("  %-28s %8.3f s\n", "reference (linear scan)", ts_ref);
    std::printf("  %-28s %8.3f s\n", "indexed, serial", ts_ser);
    std::printf("  %-28s %8.3f s\n", "indexed, OpenMP", ts_par);
    std::printf("  max |serial - reference| = %.3g, max |parallel - serial| = %.3g\n\n",
                max_entry_diff(sser, sref), max_entry_diff(spar, sser));

    const GridSpec spec{256, 128, {0, 2, 0, 1}};
    FtleOracleGrid g1({2, 2, {0, 1, 0, 1}}, {0, 0, 0, 0}), g2 = g1;
    const double tg_ser = timed(
        [&] { g1 = dense_ftle_oracle(double_gyre_flow(), spec, 0, 5, 0.01, Execution::Serial); });
    const double tg_par = timed(
        [&] { g2 = dense_ftle_oracle(double_gyre_flow(), spec, 0, 5, 0.01, Execution::Parallel); });
    double grid_diff = 0.0;
    for (int iy = 0; iy < spec.ny; ++iy) {
        for (int ix = 0; ix < spec.nx; ++ix) {
            grid_diff = std::max(grid_diff, std::abs(g1.value_at(ix, iy) - g2.value_at(ix, iy)));
        }
    }
    std::printf("dense FTLE oracle, %dx%d grid, T=5\n", spec.nx, spec.ny);
    std::printf("  %-28s %8.3f s\n", "serial", tg_ser);
    std::printf("  %-28s %8.3f s   speedup %5.2fx\n", "OpenMP", tg_par, tg_ser / tg_par);
    std::printf("  max |serial - parallel| = %.3g\n", grid_diff);
    return 0;
}
