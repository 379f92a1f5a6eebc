#include "divprox/simd/simd.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

namespace divprox::simd {

#ifdef DIVPROX_HAVE_AVX2
const Kernels* avx2_kernels_impl();
#endif

const Kernels* avx2_kernels() {
#ifdef DIVPROX_HAVE_AVX2
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
        return avx2_kernels_impl();
#endif
    return nullptr;
}

namespace {

std::atomic<const Kernels*> g_active{nullptr};

const Kernels* pick_auto() {
    if (const Kernels* k = avx2_kernels()) return k;
    return &scalar_kernels();
}

const Kernels* pick_named(const char* name) {
    if (std::strcmp(name, "scalar") == 0) return &scalar_kernels();
    if (std::strcmp(name, "avx2") == 0) {
        const Kernels* k = avx2_kernels();
        if (!k) throw std::runtime_error("avx2 lane not available on this CPU/build");
        return k;
    }
    if (std::strcmp(name, "auto") == 0) return pick_auto();
    throw std::invalid_argument(std::string("unknown simd lane: ") + name);
}

}  // namespace

const Kernels& active() {
    const Kernels* k = g_active.load(std::memory_order_acquire);
    if (!k) {
        const char* env = std::getenv("DIVPROX_SIMD");
        k = env ? pick_named(env) : pick_auto();
        g_active.store(k, std::memory_order_release);
    }
    return *k;
}

void force_lane(const char* name) {
    g_active.store(pick_named(name), std::memory_order_release);
}

}  // namespace divprox::simd
