#include "grove/kernels.hpp"

#include <immintrin.h>

#include <cmath>

namespace grove::kernels::detail {
namespace {

inline double fold(__m256d v) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, v);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double sum(std::span<const double> x) {
  const std::size_t n = x.size();
  const std::size_t blocked = n - n % 4;
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < blocked; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_loadu_pd(x.data() + i));
  }
  double total = fold(acc);
  for (std::size_t i = blocked; i < n; ++i) total += x[i];
  return total;
}

Extent extent(std::span<const double> x) {
  const std::size_t n = x.size();
  const std::size_t blocked = n - n % 4;
  const __m256d pos_inf = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  const __m256d neg_inf = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
  __m256d lo = pos_inf;
  __m256d hi = neg_inf;
  std::size_t count = 0;
  for (std::size_t i = 0; i < blocked; i += 4) {
    const __m256d v = _mm256_loadu_pd(x.data() + i);
    const __m256d ok = _mm256_cmp_pd(v, v, _CMP_ORD_Q);
    lo = _mm256_min_pd(lo, _mm256_blendv_pd(pos_inf, v, ok));
    hi = _mm256_max_pd(hi, _mm256_blendv_pd(neg_inf, v, ok));
    count += static_cast<std::size_t>(__builtin_popcount(_mm256_movemask_pd(ok)));
  }
  alignas(32) double lo_lane[4];
  alignas(32) double hi_lane[4];
  _mm256_store_pd(lo_lane, lo);
  _mm256_store_pd(hi_lane, hi);
  Extent e{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), count};
  for (int j = 0; j < 4; ++j) {
    if (lo_lane[j] < e.min) e.min = lo_lane[j];
    if (hi_lane[j] > e.max) e.max = hi_lane[j];
  }
  for (std::size_t i = blocked; i < n; ++i) {
    const double v = x[i];
    if (std::isnan(v)) continue;
    if (v < e.min) e.min = v;
    if (v > e.max) e.max = v;
    ++e.count;
  }
  return e;
}

void accumulate_present(std::span<double> dst, std::span<const double> src) {
  const std::size_t n = dst.size();
  const std::size_t blocked = n - n % 4;
  for (std::size_t i = 0; i < blocked; i += 4) {
    const __m256d a = _mm256_loadu_pd(dst.data() + i);
    const __m256d b = _mm256_loadu_pd(src.data() + i);
    const __m256d a_missing = _mm256_cmp_pd(a, a, _CMP_UNORD_Q);
    const __m256d b_missing = _mm256_cmp_pd(b, b, _CMP_UNORD_Q);
    __m256d r = _mm256_add_pd(a, b);
    r = _mm256_blendv_pd(r, a, b_missing);
    r = _mm256_blendv_pd(r, b, a_missing);
    _mm256_storeu_pd(dst.data() + i, r);
  }
  for (std::size_t i = blocked; i < n; ++i) {
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
  const std::size_t n = x.size();
  const std::size_t blocked = n - n % 4;
  const double top = static_cast<double>(bins - 1);
  const __m256d vlo = _mm256_set1_pd(lo);
  const __m256d vwidth = _mm256_set1_pd(width);
  const __m256d vzero = _mm256_setzero_pd();
  const __m256d vtop = _mm256_set1_pd(top);
  for (std::size_t i = 0; i < blocked; i += 4) {
    __m256d b = _mm256_floor_pd(_mm256_div_pd(_mm256_sub_pd(_mm256_loadu_pd(x.data() + i), vlo), vwidth));
    b = _mm256_max_pd(b, vzero);
    b = _mm256_min_pd(b, vtop);
    const __m128i idx = _mm256_cvttpd_epi32(b);
    _mm_storeu_si128(reinterpret_cast<__m128i*>(out.data() + i), idx);
  }
  for (std::size_t i = blocked; i < n; ++i) {
    double b = std::floor((x[i] - lo) / width);
    b = b < 0.0 ? 0.0 : b;
    b = b > top ? top : b;
    out[i] = static_cast<std::uint32_t>(b);
  }
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const std::size_t blocked = n - n % 4;
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < blocked; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  double total = fold(acc);
  for (std::size_t i = blocked; i < n; ++i) {
    const double d = a[i] - b[i];
    const double sq = d * d;
    total += sq;
  }
  return total;
}

}  // namespace

const KernelSet& avx2_set() {
  static const KernelSet set{"avx2", sum, extent, accumulate_present, bin_index,
                             squared_distance};
  return set;
}

}  // namespace grove::kernels::detail
