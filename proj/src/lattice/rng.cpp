#include "opgrowth/lattice/rng.hpp"

namespace opgrowth {

RngStream::RngStream(std::uint64_t master_seed, StreamKey key) : seed_(master_seed), key_(key) {
    std::uint64_t h = mix64(master_seed ^ 0x6a09e667f3bcc909ULL);
    h = mix64(h ^ (static_cast<std::uint64_t>(key.role) + 0x51ed270b27a5c3d1ULL));
    h = mix64(h ^ key.a);
    h = mix64(h ^ (key.b + 0x2545f4914f6cdd1dULL));
    h = mix64(h ^ (key.c + 0x9fb21c651e98df25ULL));
    // splitmix64 expansion of the hashed key fills the generator state; it
    // cannot produce the all-zero state.
    for (auto &word : s_) {
        h += 0x9e3779b97f4a7c15ULL;
        word = mix64(h);
    }
}

}  // namespace opgrowth
