#pragma once

#include <string>

#include "cd2/imaging.hpp"
#include "cd2/scoring.hpp"

namespace cd2::io {

/// Decodes PNG/BMP/JPEG/PNM. Colour images go through the CIELAB
/// conversion; single-channel images are taken as luminance directly.
/// 16-bit samples are reduced to their high byte; alpha is dropped.
/// Throws IoError when the file cannot be read or decoded.
imaging::LuminanceMap load_luminance(const std::string& path);

/// Writes P5 for ".pgm", otherwise lets the codec pick from the extension.
void write_gray(const scoring::GrayImage& img, const std::string& path);

}  // namespace cd2::io
