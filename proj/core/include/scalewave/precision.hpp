#pragma once

namespace scalewave {

// Storage is always 64-bit. In f32 mode every op result is rounded through
// IEEE single precision, so training runs reproduce single-precision value
// semantics while verification suites keep full headroom in f64.
enum class Precision { f64, f32 };

Precision default_precision();
void set_default_precision(Precision p);

// Reads SCALEWAVE_PRECISION ("f32"/"f64") into the process-wide default.
// Unset or unrecognized values leave the default at f64.
void init_precision_from_env();

inline double round_to_precision(double v, Precision p) {
    return p == Precision::f32 ? static_cast<double>(static_cast<float>(v)) : v;
}

}  // namespace scalewave
