#pragma once

#include <string>

#include "ddcl/image.hpp"

namespace ddcl::imgio {

// PNG: 8-bit gray / gray+alpha / RGB / RGBA, non-interlaced. Alpha is dropped.
// PPM/PGM: binary P6/P5, maxval <= 255.
Image load_png(const std::string& path);
Image load_ppm(const std::string& path);
Image load_image(const std::string& path);  // dispatch on extension

// Writer emits stored-deflate PNG (valid zlib stream, no compression).
void save_png(const std::string& path, const Image& img);
void save_ppm(const std::string& path, const Image& img);

} // namespace ddcl::imgio
