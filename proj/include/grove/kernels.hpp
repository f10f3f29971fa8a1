#pragma once

// Data-parallel inner loops used across the ensemble pipeline.
//
// Every kernel has a portable scalar reference and, where the build and the
// CPU allow, a SIMD variant. Variants are required to be bit-identical to the
// scalar reference: reductions use a fixed four-lane accumulation order that
// both implementations follow, and FMA contraction is disabled project-wide.
//
// Absent values (the ensemble's null marker) are encoded as quiet NaN.

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>

namespace grove::kernels {

inline constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();

struct Extent {
  double min;
  double max;
  std::size_t count;  // non-absent values seen
};

struct KernelSet {
  std::string_view isa;

  /// Sum of all values. Absent values propagate (callers filter first).
  double (*sum)(std::span<const double> values);

  /// Min/max over present values; {+inf, -inf, 0} when none are present.
  Extent (*extent)(std::span<const double> values);

  /// dst[i] = dst[i] + src[i] with absent acting as the additive identity;
  /// absent + absent stays absent.
  void (*accumulate_present)(std::span<double> dst, std::span<const double> src);

  /// Equal-width bin index per value: clamp(floor((x - lo) / width), 0, bins-1).
  /// width must be positive and values present.
  void (*bin_index)(std::span<const double> values, double lo, double width,
                    std::uint32_t bins, std::span<std::uint32_t> out);

  /// Squared Euclidean distance between equally sized vectors.
  double (*squared_distance)(std::span<const double> a, std::span<const double> b);
};

const KernelSet& scalar_kernels();

/// nullptr when the build lacks AVX2 support or the CPU does not report it.
const KernelSet* avx2_kernels();

/// Kernel set chosen once at startup: the widest supported variant, unless
/// GROVE_KERNELS=scalar is set in the environment.
const KernelSet& active();

}  // namespace grove::kernels
