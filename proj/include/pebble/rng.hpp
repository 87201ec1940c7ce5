#pragma once

#include <cstdint>

namespace pebble {

// SplitMix64. Portable and fast; every consumer of randomness in the pipeline
// draws from its own substream so results do not depend on evaluation order.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stream tags keep substreams for different purposes disjoint.
enum class RngStream : uint64_t {
    ClusterScale = 0x636c7573746572ULL,   // per-cluster r1, r2 draws
    TextureOffset = 0x74657874757265ULL,  // per-pebble texture offsets
    LabelColor = 0x6c6162656c00ULL,       // debug label-map colors
};

class Substream {
public:
    Substream(uint64_t seed, RngStream stream, uint64_t index) {
        state_ = seed;
        // Fold the stream tag and index in through two full mixing rounds.
        state_ ^= splitmix64(state_) ^ static_cast<uint64_t>(stream);
        state_ ^= splitmix64(state_) ^ (index * 0x9e3779b97f4a7c15ULL);
        splitmix64(state_);
    }

    uint64_t next() { return splitmix64(state_); }

    // Uniform in [0,1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    uint64_t state_;
};

}  // namespace pebble
