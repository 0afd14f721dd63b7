#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace frofa::detail {

// Encodes an 8-bit grayscale image as baseline JPEG at `quality` (1..100) and
// decodes it again. Throws std::runtime_error on codec failure.
std::vector<std::uint8_t> jpeg_roundtrip_gray(const std::vector<std::uint8_t>& pixels,
                                              std::size_t height, std::size_t width, int quality);

}  // namespace frofa::detail
