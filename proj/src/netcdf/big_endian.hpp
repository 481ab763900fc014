#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace dcpviz::nc::detail {

inline std::uint32_t load_u32(const std::byte* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

inline std::uint64_t load_u64(const std::byte* p) {
    return (std::uint64_t(load_u32(p)) << 32) | load_u32(p + 4);
}

inline std::uint16_t load_u16(const std::byte* p) {
    return std::uint16_t((std::uint16_t(p[0]) << 8) | std::uint16_t(p[1]));
}

inline void append_u32(std::vector<std::byte>& out, std::uint32_t v) {
    out.push_back(std::byte(v >> 24));
    out.push_back(std::byte(v >> 16));
    out.push_back(std::byte(v >> 8));
    out.push_back(std::byte(v));
}

inline void append_u64(std::vector<std::byte>& out, std::uint64_t v) {
    append_u32(out, std::uint32_t(v >> 32));
    append_u32(out, std::uint32_t(v));
}

inline void append_u16(std::vector<std::byte>& out, std::uint16_t v) {
    out.push_back(std::byte(v >> 8));
    out.push_back(std::byte(v));
}

inline std::uint64_t padded4(std::uint64_t n) { return (n + 3) & ~std::uint64_t{3}; }

} // namespace dcpviz::nc::detail
