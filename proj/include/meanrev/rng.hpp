#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace meanrev {

// splitmix64 finalizer, used both to season seeds and to derive per-path streams.
inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Stream-splitting rule: path k of a run with master seed m draws from
// mt19937_64 seeded with splitmix64(m ^ (k+1) * golden). Order-independent.
inline std::uint64_t path_seed(std::uint64_t master, std::uint64_t k) {
    return splitmix64(master ^ ((k + 1) * 0x9E3779B97F4A7C15ull));
}

// Standard normals via Box-Muller on explicitly mapped uint64 draws, so results
// are identical across standard libraries.
class normal_source {
  public:
    explicit normal_source(std::uint64_t seed) : eng_(seed) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
        const double u2 = static_cast<double>(eng_() >> 11) * 0x1.0p-53;          // [0, 1)
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 6.283185307179586476925286766559 * u2;
        spare_ = rad * std::sin(ang);
        have_spare_ = true;
        return rad * std::cos(ang);
    }

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Kahan compensated accumulator.
struct kahan_sum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double v) {
        const double y = v - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

}  // namespace meanrev
