#pragma once

#include <cstddef>
#include <cstdint>

namespace tdbs::kernels {

// Hot inner loops of the matcher: XOR + popcount over 64-bit words for
// Hamming distance, and squared L2 over floats for the timing baseline.
// Scalar versions are the reference; SIMD variants are selected once at
// startup and must produce identical results (hamming) or results
// within floating-point reassociation tolerance (l2).

using HammingFn = std::uint64_t (*)(const std::uint64_t*, const std::uint64_t*,
                                    std::size_t);
using L2Fn = float (*)(const float*, const float*, std::size_t);

std::uint64_t hamming_scalar(const std::uint64_t* a, const std::uint64_t* b,
                             std::size_t words);
float l2_sq_scalar(const float* a, const float* b, std::size_t n);

#if defined(__x86_64__) || defined(_M_X64)
std::uint64_t hamming_avx2(const std::uint64_t* a, const std::uint64_t* b,
                           std::size_t words);
float l2_sq_avx2(const float* a, const float* b, std::size_t n);
#endif

#if defined(__aarch64__)
std::uint64_t hamming_neon(const std::uint64_t* a, const std::uint64_t* b,
                           std::size_t words);
#endif

/// Best available implementations for this machine, chosen at runtime.
HammingFn hamming_kernel();
L2Fn l2_kernel();

/// "avx2", "neon" or "scalar".
const char* active_isa();

}  // namespace tdbs::kernels
