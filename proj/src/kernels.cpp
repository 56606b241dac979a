#include "tdbs/kernels.hpp"

#include <bit>

#if defined(__aarch64__)
#include <arm_neon.h>
#endif

namespace tdbs::kernels {

std::uint64_t hamming_scalar(const std::uint64_t* a, const std::uint64_t* b,
                             std::size_t words) {
  std::uint64_t count = 0;
  for (std::size_t i = 0; i < words; ++i) {
    count += static_cast<std::uint64_t>(std::popcount(a[i] ^ b[i]));
  }
  return count;
}

float l2_sq_scalar(const float* a, const float* b, std::size_t n) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < n; ++i) {
    const float d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

#if defined(__aarch64__)
std::uint64_t hamming_neon(const std::uint64_t* a, const std::uint64_t* b,
                           std::size_t words) {
  uint64x2_t acc = vdupq_n_u64(0);
  std::size_t i = 0;
  for (; i + 2 <= words; i += 2) {
    uint8x16_t va = vreinterpretq_u8_u64(vld1q_u64(a + i));
    uint8x16_t vb = vreinterpretq_u8_u64(vld1q_u64(b + i));
    uint8x16_t x = veorq_u8(va, vb);
    acc = vaddq_u64(acc, vpaddlq_u32(vpaddlq_u16(vpaddlq_u8(vcntq_u8(x)))));
  }
  std::uint64_t count = vgetq_lane_u64(acc, 0) + vgetq_lane_u64(acc, 1);
  for (; i < words; ++i) count += std::popcount(a[i] ^ b[i]);
  return count;
}
#endif

namespace {

struct Dispatch {
  HammingFn hamming = hamming_scalar;
  L2Fn l2 = l2_sq_scalar;
  const char* isa = "scalar";

  Dispatch() {
#if defined(__x86_64__) || defined(_M_X64)
#if defined(TDBS_HAVE_AVX2_TU)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
      hamming = hamming_avx2;
      l2 = l2_sq_avx2;
      isa = "avx2";
    }
#endif
#elif defined(__aarch64__)
    hamming = hamming_neon;
    isa = "neon";
#endif
  }
};

const Dispatch& dispatch() {
  static const Dispatch d;
  return d;
}

}  // namespace

HammingFn hamming_kernel() { return dispatch().hamming; }
L2Fn l2_kernel() { return dispatch().l2; }
const char* active_isa() { return dispatch().isa; }

}  // namespace tdbs::kernels
