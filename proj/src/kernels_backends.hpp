#pragma once

// Internal: per-backend kernel tables linked into the dispatcher.

#include "ddcl/kernels.hpp"

namespace ddcl::kernels {
namespace scalar { extern const Kernels table; }
#if DDCL_BUILD_AVX2
namespace avx2 { extern const Kernels table; }
#endif
#if DDCL_BUILD_NEON
namespace neon { extern const Kernels table; }
#endif
} // namespace ddcl::kernels
