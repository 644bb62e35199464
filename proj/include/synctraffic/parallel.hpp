// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace synctraffic {

// Kernel execution policy. Parallel kernels must be bitwise-deterministic:
// identical results for any thread count, which fixed-chunk summation and
// per-element independence guarantee.
enum class Exec { kSerial, kParallel };

}  // namespace synctraffic
