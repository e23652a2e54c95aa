#include "fatformer/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace ftf::kernels {
namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

bool forced_scalar() {
    const char* env = std::getenv("FATFORMER_KERNELS");
    return env != nullptr && std::strcmp(env, "scalar") == 0;
}

struct Choice {
    const Table<float>* f32;
    const Table<double>* f64;
    const char* name;
};

const Choice& choose() {
    static const Choice c = [] {
        if (!forced_scalar() && cpu_has_avx2_fma() && avx2_f32() && avx2_f64())
            return Choice{avx2_f32(), avx2_f64(), "avx2"};
        return Choice{&scalar_f32(), &scalar_f64(), "scalar"};
    }();
    return c;
}

}  // namespace

const Table<float>& active_f32() { return *choose().f32; }
const Table<double>& active_f64() { return *choose().f64; }
const char* active_name() { return choose().name; }

}  // namespace ftf::kernels
