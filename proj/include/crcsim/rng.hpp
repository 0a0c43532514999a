#pragma once

#include <cstdint>
#include <string_view>

namespace crcsim {

// splitmix64 finalizer; bijective on 64-bit words.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based random stream. A key is derived from (master_seed, purpose,
/// draw_index, individual_index); equal keys give equal streams and the value
/// at any counter can be computed without generating predecessors, so results
/// do not depend on evaluation order or worker count.
struct StreamKey {
    std::uint64_t state = 0;

    static StreamKey derive(std::uint64_t master_seed, std::string_view purpose,
                            std::uint64_t draw_index, std::uint64_t individual_index) {
        std::uint64_t h = mix64(master_seed + 0x9e3779b97f4a7c15ULL);
        for (unsigned char c : purpose) {
            h = mix64(h ^ (c + 0x9e3779b97f4a7c15ULL));
        }
        h = mix64(h ^ mix64(draw_index + 0x9e3779b97f4a7c15ULL));
        h = mix64(h ^ mix64(individual_index + 0x9e3779b97f4a7c15ULL));
        return StreamKey{h};
    }

    std::uint64_t bits_at(std::uint64_t counter) const {
        return mix64(state ^ mix64(counter + 0x9e3779b97f4a7c15ULL));
    }

    // Uniform on the open interval (0,1); never returns 0 or 1 so quantile
    // transforms stay finite.
    double uniform_at(std::uint64_t counter) const {
        return (static_cast<double>(bits_at(counter) >> 11) + 0.5) * 0x1.0p-53;
    }
};

/// Sequential adapter over a StreamKey for variable-length consumption
/// (rejection sampling, proposal draws).
class RngStream {
public:
    explicit RngStream(StreamKey key) : key_(key) {}

    double uniform() { return key_.uniform_at(counter_++); }
    std::uint64_t bits() { return key_.bits_at(counter_++); }
    double normal();  // inverse-CDF; one uniform per draw

private:
    StreamKey key_;
    std::uint64_t counter_ = 0;
};

}  // namespace crcsim
