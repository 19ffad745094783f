#include <algorithm>
#include <cstdlib>
#include <string>

#include "pbrdr/error.hpp"
#include "pbrdr/kernels.hpp"

namespace pbrdr::kernels {
namespace {

Isa select_isa() {
    if (const char* forced = std::getenv("PBRDR_SIMD")) {
        const std::string name(forced);
        if (name == "scalar") return Isa::Scalar;
        if (name == "avx2" && isa_available(Isa::Avx2)) return Isa::Avx2;
        if (name == "neon" && isa_available(Isa::Neon)) return Isa::Neon;
    }
    if (isa_available(Isa::Avx2)) return Isa::Avx2;
    if (isa_available(Isa::Neon)) return Isa::Neon;
    return Isa::Scalar;
}

const KernelTable& active() {
    static const KernelTable& t = table(active_isa());
    return t;
}

}  // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "unknown";
}

bool isa_available(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return true;
        case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Isa::Neon:
#if defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

const KernelTable& table(Isa isa) {
    if (!isa_available(isa)) {
        fail(ErrorKind::DomainError, std::string("kernel ISA not available: ") +
                                         std::string(isa_name(isa)));
    }
    switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
        case Isa::Avx2: return detail::avx2_table();
#endif
#if defined(__aarch64__)
        case Isa::Neon: return detail::neon_table();
#endif
        default: return detail::scalar_table();
    }
}

Isa active_isa() {
    static const Isa isa = select_isa();
    return isa;
}

double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), std::min(a.size(), b.size()));
}

double wdot(std::span<const double> w, std::span<const double> a, std::span<const double> b) {
    return active().wdot(w.data(), a.data(), b.data(), std::min({w.size(), a.size(), b.size()}));
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active().axpy(alpha, x.data(), y.data(), std::min(x.size(), y.size()));
}

double sum(std::span<const double> a) { return active().sum(a.data(), a.size()); }

void gemv_t(const double* x, std::size_t n, std::size_t cols, std::span<const double> v,
            std::span<double> out) {
    const KernelTable& k = active();
    for (std::size_t j = 0; j < cols; ++j) out[j] = k.dot(x + j * n, v.data(), n);
}

void gemv(const double* x, std::size_t n, std::size_t cols, std::span<const double> coef,
          std::span<double> out) {
    const KernelTable& k = active();
    std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n), 0.0);
    for (std::size_t j = 0; j < cols; ++j) {
        if (coef[j] != 0.0) k.axpy(coef[j], x + j * n, out.data(), n);
    }
}

}  // namespace pbrdr::kernels
