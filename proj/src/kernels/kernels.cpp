#include "dr2s/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>

#ifdef DR2S_HAVE_AVX2_KERNELS
#include <immintrin.h>
#endif

namespace dr2s::kernels {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double norm_inf(const double* a, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::fmax(m, std::fabs(a[i]));
  return m;
}

double orthant_step(const double* s, const double* ds, std::size_t n) {
  double alpha = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    if (ds[i] < 0.0) alpha = std::fmin(alpha, -s[i] / ds[i]);
  return alpha;
}

}  // namespace scalar

#ifdef DR2S_HAVE_AVX2_KERNELS
namespace avx2 {

__attribute__((target("avx2,fma"))) double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  acc0 = _mm256_add_pd(acc0, acc1);
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc0);
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

__attribute__((target("avx2,fma"))) void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

__attribute__((target("avx2,fma"))) double norm_inf(const double* a, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) m = _mm256_max_pd(m, _mm256_andnot_pd(sign, _mm256_loadu_pd(a + i)));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, m);
  double r = std::fmax(std::fmax(lanes[0], lanes[1]), std::fmax(lanes[2], lanes[3]));
  for (; i < n; ++i) r = std::fmax(r, std::fabs(a[i]));
  return r;
}

__attribute__((target("avx2,fma"))) double orthant_step(const double* s, const double* ds, std::size_t n) {
  const double inf = std::numeric_limits<double>::infinity();
  const __m256d vinf = _mm256_set1_pd(inf);
  const __m256d zero = _mm256_setzero_pd();
  __m256d m = vinf;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vds = _mm256_loadu_pd(ds + i);
    __m256d neg = _mm256_cmp_pd(vds, zero, _CMP_LT_OQ);
    // -s/ds where ds < 0, +inf elsewhere (division result masked out, never used)
    __m256d ratio = _mm256_div_pd(_mm256_sub_pd(zero, _mm256_loadu_pd(s + i)), vds);
    m = _mm256_min_pd(m, _mm256_blendv_pd(vinf, ratio, neg));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, m);
  double r = std::fmin(std::fmin(lanes[0], lanes[1]), std::fmin(lanes[2], lanes[3]));
  for (; i < n; ++i)
    if (ds[i] < 0.0) r = std::fmin(r, -s[i] / ds[i]);
  return r;
}

}  // namespace avx2
#endif

namespace {

struct Table {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  double (*norm_inf)(const double*, std::size_t);
  double (*orthant_step)(const double*, const double*, std::size_t);
};

constexpr Table scalar_table{scalar::dot, scalar::axpy, scalar::norm_inf, scalar::orthant_step};
#ifdef DR2S_HAVE_AVX2_KERNELS
constexpr Table avx2_table{avx2::dot, avx2::axpy, avx2::norm_inf, avx2::orthant_step};
#endif

Isa detect() {
  const char* env = std::getenv("DR2S_SIMD");
  if (env && std::strcmp(env, "scalar") == 0) return Isa::scalar;
  return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

std::atomic<int> g_isa{-1};

const Table& table() {
  int v = g_isa.load(std::memory_order_acquire);
  if (v < 0) {
    v = static_cast<int>(detect());
    g_isa.store(v, std::memory_order_release);
  }
#ifdef DR2S_HAVE_AVX2_KERNELS
  if (v == static_cast<int>(Isa::avx2)) return avx2_table;
#endif
  return scalar_table;
}

}  // namespace

bool isa_supported(Isa isa) {
  if (isa == Isa::scalar) return true;
#ifdef DR2S_HAVE_AVX2_KERNELS
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa active_isa() {
  table();
  return static_cast<Isa>(g_isa.load(std::memory_order_acquire));
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

void force_isa(Isa isa) {
  if (!isa_supported(isa)) isa = Isa::scalar;
  g_isa.store(static_cast<int>(isa), std::memory_order_release);
}

double dot(const double* a, const double* b, std::size_t n) { return table().dot(a, b, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { table().axpy(alpha, x, y, n); }
double norm_inf(const double* a, std::size_t n) { return table().norm_inf(a, n); }
double orthant_step(const double* s, const double* ds, std::size_t n) {
  return table().orthant_step(s, ds, n);
}

}  // namespace dr2s::kernels
