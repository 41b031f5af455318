#pragma once

#include <cstddef>
#include <cstdint>

namespace ecgmon {

// CRC-32 (the common reflected variant: polynomial 0x04C11DB7, reflected
// table constant 0xEDB88320, initial value 0xFFFFFFFF, final XOR 0xFFFFFFFF).
// Compatible with zlib's crc32().
std::uint32_t crc32(const std::uint8_t* data, std::size_t len);

// Incremental form: feed `crc32_init()` through `crc32_update` calls and
// finish with `crc32_final`.
std::uint32_t crc32_init();
std::uint32_t crc32_update(std::uint32_t state, const std::uint8_t* data, std::size_t len);
std::uint32_t crc32_final(std::uint32_t state);

}  // namespace ecgmon
