#pragma once

// Data-parallel inner loops used by the solvers. Every routine has a scalar
// reference implementation; SIMD variants (AVX2+FMA on x86-64, NEON on
// aarch64) are selected once at startup. Set PBRDR_SIMD=scalar|avx2|neon to
// force a variant.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace pbrdr::kernels {

enum class Isa { Scalar, Avx2, Neon };

struct KernelTable {
    // sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // sum_i w[i] * a[i] * b[i]
    double (*wdot)(const double* w, const double* a, const double* b, std::size_t n);
    // y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // sum_i a[i]
    double (*sum)(const double* a, std::size_t n);
};

std::string_view isa_name(Isa isa);
bool isa_available(Isa isa);

// Table for a specific ISA; throws DomainError if unavailable on this host.
const KernelTable& table(Isa isa);

// ISA used by the dispatching wrappers below.
Isa active_isa();

double dot(std::span<const double> a, std::span<const double> b);
double wdot(std::span<const double> w, std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double sum(std::span<const double> a);

// out[j] = sum_i x(i, j) * v[i] for a column-major n x cols block.
void gemv_t(const double* x, std::size_t n, std::size_t cols, std::span<const double> v,
            std::span<double> out);
// out[i] = sum_j x(i, j) * coef[j]
void gemv(const double* x, std::size_t n, std::size_t cols, std::span<const double> coef,
          std::span<double> out);

namespace detail {
const KernelTable& scalar_table();
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_table();
#endif
#if defined(__aarch64__)
const KernelTable& neon_table();
#endif
}  // namespace detail

}  // namespace pbrdr::kernels
