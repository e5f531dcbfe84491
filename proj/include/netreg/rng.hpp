#ifndef NETREG_RNG_HPP
#define NETREG_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

namespace netreg {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

enum class StreamId : std::uint64_t {
    latents = 1,
    edges = 2,
    noise = 3,
    multipliers = 4,
    selection = 5,
    monte_carlo = 6,
};

/* Counter-based stream: every draw is a pure function of (key, index). */
class Stream {
public:
    Stream() = default;
    explicit Stream(std::uint64_t seed) : key_(splitmix64(seed ^ 0x5851f42d4c957f2dULL)) {}

    Stream child(std::uint64_t id) const {
        Stream s;
        s.key_ = splitmix64(key_ ^ splitmix64(id + 0x632be59bd9b4e019ULL));
        return s;
    }
    Stream child(StreamId id) const { return child(static_cast<std::uint64_t>(id)); }

    std::uint64_t bits(std::uint64_t index) const {
        return splitmix64(key_ + splitmix64(index));
    }

    /* Uniform on [0,1). */
    double uniform(std::uint64_t index) const {
        return static_cast<double>(bits(index) >> 11) * 0x1.0p-53;
    }

    /* Uniform on (0,1). */
    double open_uniform(std::uint64_t index) const {
        return (static_cast<double>(bits(index) >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal(std::uint64_t index) const {
        double u1 = open_uniform(2 * index);
        double u2 = uniform(2 * index + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t key() const { return key_; }

private:
    std::uint64_t key_ = 0;
};

}

#endif
