#pragma once

#include <cstddef>
#include <cstdint>

namespace handwash {

// FNV-1a, used to fingerprint parameter blocks and cached weight files.
inline std::uint64_t fnv1a64(const void* data, std::size_t size,
                             std::uint64_t state = 0xcbf29ce484222325ULL) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        state ^= bytes[i];
        state *= 0x100000001b3ULL;
    }
    return state;
}

}  // namespace handwash
