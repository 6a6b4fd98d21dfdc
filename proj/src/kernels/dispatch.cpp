#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernels_internal.hpp"

namespace phasecert::kernels {

std::string_view name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
  }
  return "unknown";
}

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(PHASECERT_BUILD_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const KernelSet* kernels_for(Isa isa) {
  if (!cpu_supports(isa)) return nullptr;
  switch (isa) {
    case Isa::Scalar:
      return &detail::kScalarKernels;
    case Isa::Avx2:
#if defined(PHASECERT_BUILD_AVX2)
      return &detail::kAvx2Kernels;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

namespace {

const KernelSet& select_kernels() {
  if (const char* forced = std::getenv("PHASECERT_ISA")) {
    const std::string request(forced);
    if (request == "scalar") return detail::kScalarKernels;
    if (request == "avx2") {
      if (const KernelSet* set = kernels_for(Isa::Avx2)) return *set;
      return detail::kScalarKernels;
    }
  }
  if (const KernelSet* set = kernels_for(Isa::Avx2)) return *set;
  return detail::kScalarKernels;
}

}  // namespace

const KernelSet& active() {
  static const KernelSet& selected = select_kernels();
  return selected;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("kernels::dot: length mismatch");
  return active().dot(a.data(), b.data(), a.size());
}

SinusoidMoments sinusoid_moments(std::span<const double> c, std::span<const double> s, std::span<const double> y,
                                 std::span<const double> w) {
  if (c.size() != s.size() || c.size() != y.size() || (!w.empty() && w.size() != c.size())) {
    throw std::invalid_argument("kernels::sinusoid_moments: length mismatch");
  }
  return active().sinusoid_moments(c.data(), s.data(), y.data(), w.empty() ? nullptr : w.data(), c.size());
}

}  // namespace phasecert::kernels
