#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>

namespace nvi {

// Deterministic 64-bit generator: xoshiro256++ seeded through splitmix64.
// The integer stream is reproducible bit-for-bit across platforms and
// languages; uniform() maps the top 53 bits to [0,1) and gaussian() is a
// plain Box-Muller transform on top of it, so floating-point outputs are
// reproducible wherever libm's log/sqrt/cos agree (always on one platform).
//
// Independent sub-streams are derived from (seed, a, b): every channel of a
// generated window pulls from stream(seed, window_index, channel), which
// makes parallel and serial generation of a dataset byte-identical.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
        have_spare_ = false;
        spare_ = 0.0;
    }

    static Rng stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
        std::uint64_t x = seed;
        std::uint64_t mixed = splitmix64(x);
        x = mixed ^ (a + 0x9e3779b97f4a7c15ULL);
        mixed = splitmix64(x);
        x = mixed ^ (b + 0x7f4a7c159e3779b9ULL);
        return Rng(splitmix64(x));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 bits of resolution.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // Standard normal via Box-Muller; caches the second deviate.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double gaussian(double mean, double sd) {
        return mean + sd * gaussian();
    }

    // Full generator state (4 state words, spare flag, spare bits) for
    // checkpointing; restoring it resumes the stream exactly.
    std::array<std::uint64_t, 6> serialize() const {
        return {state_[0], state_[1], state_[2], state_[3],
                have_spare_ ? 1ULL : 0ULL, std::bit_cast<std::uint64_t>(spare_)};
    }

    static Rng deserialize(const std::array<std::uint64_t, 6>& s) {
        Rng rng(0);
        rng.state_[0] = s[0];
        rng.state_[1] = s[1];
        rng.state_[2] = s[2];
        rng.state_[3] = s[3];
        rng.have_spare_ = s[4] != 0;
        rng.spare_ = std::bit_cast<double>(s[5]);
        return rng;
    }

    // Index in [0, n), derived from uniform() so the draw order is documented.
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t rotl(std::uint64_t v, int k) {
        return (v << k) | (v >> (64 - k));
    }

    std::uint64_t state_[4];
    bool have_spare_;
    double spare_;
};

} // namespace nvi
