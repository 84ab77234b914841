#pragma once

#include <cstdint>
#include <cmath>

namespace snse {

// SplitMix64 stream. Each Monte Carlo path owns one instance seeded by
// mix_seed(master, path_id), so streams depend only on (master, id) and
// never on scheduling or worker count.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform on (0,1]; never returns 0 so log() below is safe.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1p-53;
    }

    // Standard normal via Box-Muller, spare cached.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Counter-style seed derivation: the stream for a path is a pure function of
// (master seed, path id), so growing the ensemble never reshuffles existing
// paths.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t counter) {
    Rng g(master ^ (0x6a09e667f3bcc909ull + counter * 0x9e3779b97f4a7c15ull));
    g.next_u64();
    return g.next_u64();
}

} // namespace snse
