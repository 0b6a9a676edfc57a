#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace regimenet {

// Seedable generator with explicitly coded uniform/normal transforms.
// std::normal_distribution is implementation-defined, so sampling goes
// through our own Box-Muller to keep datasets reproducible bit-for-bit.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double normal(double mean, double stddev) {
        if (!have_spare_) {
            double u1 = uniform01();
            double u2 = uniform01();
            while (u1 <= 0.0) u1 = uniform01();
            const double r = std::sqrt(-2.0 * std::log(u1));
            const double theta = 2.0 * M_PI * u2;
            spare_ = r * std::sin(theta);
            have_spare_ = true;
            return mean + stddev * r * std::cos(theta);
        }
        have_spare_ = false;
        return mean + stddev * spare_;
    }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // rejection sampling keeps the draw unbiased
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = engine_();
        while (v >= limit) v = engine_();
        return v % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace regimenet
