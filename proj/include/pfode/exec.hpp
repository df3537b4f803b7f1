#pragma once

namespace pfode {

/// Selects the OpenMP kernel or its serial reference. Both produce
/// bit-identical results; the serial path exists for testing and benchmarks.
enum class Exec { serial, parallel };

void set_threads(int n);
int max_threads();

}  // namespace pfode
