#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace abaf {

/// FNV-1a 64-bit hash. Stable across platforms; used for stream names and
/// config hashes.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::uint64_t splitmix64(std::uint64_t x);

/// Seeded generator with platform-independent distributions. The standard
/// library distributions are implementation-defined, so everything that
/// feeds reproducible artifacts draws through this class instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)), base_seed_(seed) {}

    /// Independent child stream keyed by a name ("fold2/image_model", ...).
    Rng stream(std::string_view name) const;
    static Rng named(std::uint64_t seed, std::string_view name);

    std::uint64_t next_u64() { return engine_(); }
    double uniform();                       // [0, 1)
    double uniform(double lo, double hi);   // [lo, hi)
    double normal();                        // standard normal, Box-Muller
    std::size_t below(std::size_t n);       // [0, n)
    bool bernoulli(double p) { return uniform() < p; }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 engine_;
    std::uint64_t base_seed_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace abaf
