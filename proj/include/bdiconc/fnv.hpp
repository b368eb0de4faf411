#pragma once

#include <cstdint>
#include <string_view>

namespace bdiconc {

inline constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

// Incremental FNV-1a/64: feeding chunks one after another gives the same
// value as hashing their concatenation.
class Fnv1a {
public:
    void update(std::string_view bytes)
    {
        for (unsigned char c : bytes) {
            state_ ^= c;
            state_ *= kFnvPrime;
        }
    }
    void update_u64_be(std::uint64_t v)
    {
        char buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (56 - 8 * i)) & 0xff);
        update(std::string_view(buf, 8));
    }
    std::uint64_t value() const { return state_; }

private:
    std::uint64_t state_ = kFnvOffsetBasis;
};

inline std::uint64_t fnv1a64(std::string_view bytes)
{
    Fnv1a h;
    h.update(bytes);
    return h.value();
}

} // namespace bdiconc
