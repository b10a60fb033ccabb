#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace promptsteer {

inline constexpr int kImageSide = 512;

// 8-bit interleaved RGB raster.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  std::uint8_t at(int x, int y, int channel) const {
    return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + channel];
  }
  friend bool operator==(const Image&, const Image&) = default;
};

// Decodes PNG or JPEG into RGB. Throws FormatError on anything else.
Image decode_image(std::string_view bytes);

using PngText = std::map<std::string, std::string>;

std::string encode_png(const Image& image, const PngText& text = {});

// tEXt chunks of a PNG, without decoding pixel data.
PngText read_png_text(std::string_view bytes);

bool looks_like_png(std::string_view bytes);

struct CropPlan {
  int scaled_width = 0;
  int scaled_height = 0;
  int crop_x = 0;
  int crop_y = 0;
  int side = kImageSide;
};

// Scale so the short side equals `side`, then center-crop the long side.
CropPlan plan_square_crop(int width, int height, int side = kImageSide);

Image resize_bilinear(const Image& src, int width, int height);
Image crop(const Image& src, int x, int y, int width, int height);

Image prepare_image(const Image& src, int side = kImageSide);
Image prepare_image(std::string_view encoded, int side = kImageSide);

}  // namespace promptsteer
