#pragma once

namespace stochlin {

// Serial kernels are the reference implementation; parallel kernels must
// reproduce them bit-for-bit (fixed work decomposition, ordered reductions).
enum class Execution { Serial, Parallel };

// Work items per reduction block. Fixed so results never depend on thread count.
inline constexpr long kReductionBlock = 64;

// Threads the parallel kernels may use (OpenMP). 0 leaves the runtime default.
void set_thread_count(int threads);
int thread_count();

}  // namespace stochlin
