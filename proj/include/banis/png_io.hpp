#pragma once

#include <string>

#include "banis/image.hpp"

namespace banis {

// 8-bit PNG, 1 or 3 channels. Writing is deterministic for fixed input.
Image8 read_png(const std::string& path);
void write_png(const std::string& path, const Image8& img);

} // namespace banis
