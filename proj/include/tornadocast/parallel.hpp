#pragma once

namespace tornadocast::parallel {

/// Process-wide worker count for the OpenMP kernels. 1 (the default)
/// selects the serial reference path. Every kernel is deterministic for a
/// fixed input order regardless of this setting; the knob only trades
/// wall-clock time.
void set_max_threads(int n);
int max_threads();

/// True when a parallel path would actually run (threads > 1 and the
/// build has OpenMP).
bool enabled();

/// True when this build has OpenMP at all.
bool available();

}  // namespace tornadocast::parallel
