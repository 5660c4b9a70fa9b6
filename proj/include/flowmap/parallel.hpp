#pragma once

#include <cstddef>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace flowmap {

/// Execution mode of the per-tracer field kernels. Parallel runs use OpenMP
/// when available and fall back to serial otherwise. Either way the output
/// is keyed by tracer, so results are identical across modes and thread
/// counts.
enum class Execution { Serial, Parallel };

/// Apply body(i) for i in [0, n). Each iteration must write only to its own
/// output slot.
template <class Body>
void parallel_for(std::size_t n, Execution mode, Body&& body) {
#ifdef _OPENMP
    if (mode == Execution::Parallel) {
        const std::int64_t count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < count; ++i) {
            body(static_cast<std::size_t>(i));
        }
        return;
    }
#else
    (void)mode;
#endif
    for (std::size_t i = 0; i < n; ++i) {
        body(i);
    }
}

} // namespace flowmap
