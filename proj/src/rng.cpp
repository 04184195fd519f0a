#include "remest/rng.hpp"

#include <cmath>

namespace remest {
namespace {

// Ziggurat layout for the standard normal (Doornik's ZIGNOR construction,
// 128 layers, published constants).
constexpr int kLayers = 128;
constexpr double kTailX = 3.442619855899;      // x coordinate of the rightmost layer
constexpr double kBlockArea = 9.91256303526217e-3;

struct ZigTables {
    double x[kLayers + 1];   // layer right edges; x[0] is the base pseudo-edge
    double ratio[kLayers];   // x[i+1] / x[i]
    ZigTables() {
        double f = std::exp(-0.5 * kTailX * kTailX);
        x[0] = kBlockArea / f;
        x[1] = kTailX;
        x[kLayers] = 0.0;
        for (int i = 2; i < kLayers; ++i) {
            x[i] = std::sqrt(-2.0 * std::log(kBlockArea / x[i - 1] + std::exp(-0.5 * x[i - 1] * x[i - 1])));
        }
        for (int i = 0; i < kLayers; ++i) ratio[i] = x[i + 1] / x[i];
    }
};

const ZigTables& tables() {
    static const ZigTables t;
    return t;
}

}  // namespace

double Rng::gaussian_tail(bool negative) {
    double x, y;
    do {
        x = std::log(uniform01_positive()) / kTailX;  // x <= 0
        y = std::log(uniform01_positive());
    } while (-2.0 * y < x * x);
    return negative ? x - kTailX : kTailX - x;
}

double Rng::gaussian() {
    const ZigTables& t = tables();
    for (;;) {
        const double u = 2.0 * uniform01() - 1.0;
        const unsigned i = static_cast<unsigned>(raw() & 0x7F);
        if (std::fabs(u) < t.ratio[i]) return u * t.x[i];
        if (i == 0) return gaussian_tail(u < 0.0);
        const double xx = u * t.x[i];
        const double f0 = std::exp(-0.5 * (t.x[i] * t.x[i] - xx * xx));
        const double f1 = std::exp(-0.5 * (t.x[i + 1] * t.x[i + 1] - xx * xx));
        if (f1 + uniform01() * (f0 - f1) < 1.0) return xx;
    }
}

}  // namespace remest
