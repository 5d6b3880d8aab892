#pragma once

namespace ngate {

/// Number of OpenMP threads parallel kernels will use (1 without OpenMP).
int thread_count();

/// Caps kernel parallelism; 0 restores the runtime default.
void set_thread_limit(int threads);

/// Applies NEUTRAL_GATE_THREADS if set (0 = auto). Returns false if the value is malformed.
bool apply_thread_env();

}  // namespace ngate
