#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace ctxrec {

// All randomness in the toolkit flows through this generator so that runs are
// reproducible bit-for-bit across platforms and compilers. std::shuffle and
// std::uniform_int_distribution are implementation-defined, so we avoid them.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n). Modulo bias is below 2^-50 for any n we ever use.
    std::uint64_t bounded(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

    // Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Derives an independent stream seed from a base seed and a label, e.g. one
// stream per test session id or per pipeline stage.
inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view label) {
    SplitMix64 g(seed ^ fnv1a64(label));
    return g.next();
}

// Fisher-Yates with SplitMix64 draws; deterministic for a fixed seed.
template <typename T>
void seeded_shuffle(std::vector<T>& values, std::uint64_t seed) {
    SplitMix64 g(seed);
    for (std::size_t i = values.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(g.bounded(i));
        using std::swap;
        swap(values[i - 1], values[j]);
    }
}

}  // namespace ctxrec
