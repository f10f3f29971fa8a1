#include "grove/kernels.hpp"

#include <cmath>

namespace grove::kernels {
namespace {

// The lane layout mirrors a 4 x double SIMD register: lane j accumulates
// elements j, j+4, j+8, ... and lanes fold as (l0 + l1) + (l2 + l3) before
// the tail is added in order.
double sum(std::span<const double> x) {
  const std::size_t n = x.size();
  const std::size_t blocked = n - n % 4;
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < blocked; i += 4) {
    for (std::size_t j = 0; j < 4; ++j) lane[j] += x[i + j];
  }
  double total = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (std::size_t i = blocked; i < n; ++i) total += x[i];
  return total;
}

Extent extent(std::span<const double> x) {
  Extent e{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), 0};
  for (double v : x) {
    if (std::isnan(v)) continue;
    if (v < e.min) e.min = v;
    if (v > e.max) e.max = v;
    ++e.count;
  }
  return e;
}

void accumulate_present(std::span<double> dst, std::span<const double> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double a = dst[i];
    const double b = src[i];
    if (std::isnan(a)) {
      dst[i] = b;
    } else if (!std::isnan(b)) {
      dst[i] = a + b;
    }
  }
}

void bin_index(std::span<const double> x, double lo, double width, std::uint32_t bins,
               std::span<std::uint32_t> out) {
  const double top = static_cast<double>(bins - 1);
  for (std::size_t i = 0; i < x.size(); ++i) {
    double b = std::floor((x[i] - lo) / width);
    b = b < 0.0 ? 0.0 : b;
    b = b > top ? top : b;
    out[i] = static_cast<std::uint32_t>(b);
  }
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const std::size_t blocked = n - n % 4;
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < blocked; i += 4) {
    for (std::size_t j = 0; j < 4; ++j) {
      const double d = a[i + j] - b[i + j];
      const double sq = d * d;
      lane[j] += sq;
    }
  }
  double total = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (std::size_t i = blocked; i < n; ++i) {
    const double d = a[i] - b[i];
    const double sq = d * d;
    total += sq;
  }
  return total;
}

}  // namespace

const KernelSet& scalar_kernels() {
  static const KernelSet set{"scalar", sum, extent, accumulate_present, bin_index,
                             squared_distance};
  return set;
}

}  // namespace grove::kernels
