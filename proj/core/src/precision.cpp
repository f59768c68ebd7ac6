#include "scalewave/precision.hpp"

#include <cstdlib>
#include <string>

namespace scalewave {

namespace {
Precision g_precision = Precision::f64;
}

Precision default_precision() { return g_precision; }

void set_default_precision(Precision p) { g_precision = p; }

void init_precision_from_env() {
    const char* env = std::getenv("SCALEWAVE_PRECISION");
    if (!env) return;
    const std::string v(env);
    if (v == "f32") g_precision = Precision::f32;
    else if (v == "f64") g_precision = Precision::f64;
}

}  // namespace scalewave
