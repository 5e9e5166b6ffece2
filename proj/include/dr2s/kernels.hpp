#pragma once

#include <cstddef>
#include <string_view>

// Dense vector kernels used by the interior-point iterations.
// Each kernel has a portable scalar version and, on x86-64, an AVX2 version.
// The variant is chosen once at first use; DR2S_SIMD=scalar forces the scalar path.

namespace dr2s::kernels {

enum class Isa { scalar, avx2 };

Isa active_isa();
std::string_view isa_name(Isa isa);
bool isa_supported(Isa isa);
// Test hook. Not thread-safe with concurrent kernel calls.
void force_isa(Isa isa);

double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double norm_inf(const double* a, std::size_t n);
// Largest alpha >= 0 with s + alpha*ds >= 0 componentwise, or +inf.
double orthant_step(const double* s, const double* ds, std::size_t n);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double norm_inf(const double* a, std::size_t n);
double orthant_step(const double* s, const double* ds, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define DR2S_HAVE_AVX2_KERNELS 1
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double norm_inf(const double* a, std::size_t n);
double orthant_step(const double* s, const double* ds, std::size_t n);
}  // namespace avx2
#endif

}  // namespace dr2s::kernels
