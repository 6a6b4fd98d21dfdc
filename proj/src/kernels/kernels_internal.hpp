#pragma once

#include "phasecert/kernels.hpp"

namespace phasecert::kernels::detail {

extern const KernelSet kScalarKernels;
#if defined(PHASECERT_BUILD_AVX2)
extern const KernelSet kAvx2Kernels;
#endif

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 6.28318530717958647692;

}  // namespace phasecert::kernels::detail
