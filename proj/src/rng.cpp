#include "tailstab/rng.hpp"

namespace tailstab::rng {

namespace {

std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) noexcept {
    std::uint64_t key = mix64(seed ^ 0x6a09e667f3bcc909ULL);
    std::uint64_t position = 1;
    for (std::uint64_t id : ids) {
        key = mix64(key ^ mix64(id + position * 0xd1b54a32d192ed03ULL));
        ++position;
    }
    return key;
}

}  // namespace

Stream::Stream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) noexcept
    : key_(derive_key(seed, ids)) {}

Stream::Stream(std::uint64_t seed, Tag tag, std::initializer_list<std::uint64_t> ids) noexcept
    : key_(mix64(derive_key(seed, ids) ^ mix64(static_cast<std::uint64_t>(tag)))) {}

}  // namespace tailstab::rng
