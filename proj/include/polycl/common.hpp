#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace polycl {

// Base for all library errors. Specific conditions get their own type so
// callers can distinguish them without parsing messages.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MissingFileError : Error {
    using Error::Error;
};
struct FormatError : Error {
    using Error::Error;
};
struct ShapeMismatchError : Error {
    using Error::Error;
};
struct InvalidArgumentError : Error {
    using Error::Error;
};
struct SamplingError : Error {
    using Error::Error;
};
struct UnsupportedCapabilityError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};

// 64-bit FNV-1a, used for config hashes stamped into checkpoints and
// artifact directories. Stable across runs and platforms.
inline uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

// splitmix64 finalizer; mixes a master seed with stream labels so that
// workers / stages / repeats get decorrelated generators.
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(uint64_t seed, uint64_t stream = 0) {
    return std::mt19937_64(mix_seed(seed, stream));
}

}  // namespace polycl
