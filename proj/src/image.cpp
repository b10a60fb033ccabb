#include "promptsteer/image.hpp"

#include <png.h>

#include <cstdio>
#include <jpeglib.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>

#include "promptsteer/errors.hpp"

namespace promptsteer {

namespace {

constexpr unsigned char kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

struct PngReadCursor {
  std::string_view data;
  std::size_t offset = 0;
};

void png_read_from_memory(png_structp png, png_bytep out, png_size_t length) {
  auto* cursor = static_cast<PngReadCursor*>(png_get_io_ptr(png));
  if (cursor->offset + length > cursor->data.size()) png_error(png, "truncated PNG");
  std::memcpy(out, cursor->data.data() + cursor->offset, length);
  cursor->offset += length;
}

void png_write_to_string(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), length);
}

void png_flush_noop(png_structp) {}

class PngReader {
 public:
  explicit PngReader(std::string_view bytes) : cursor_{bytes} {
    png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png_ == nullptr) throw FormatError("png_create_read_struct failed");
    info_ = png_create_info_struct(png_);
    if (info_ == nullptr) {
      png_destroy_read_struct(&png_, nullptr, nullptr);
      throw FormatError("png_create_info_struct failed");
    }
    png_set_read_fn(png_, &cursor_, png_read_from_memory);
  }
  ~PngReader() { png_destroy_read_struct(&png_, &info_, nullptr); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;

  png_structp png() { return png_; }
  png_infop info() { return info_; }

 private:
  PngReadCursor cursor_;
  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
};

PngText collect_text(png_structp png, png_infop info) {
  PngText out;
  png_textp text = nullptr;
  int count = 0;
  png_get_text(png, info, &text, &count);
  for (int i = 0; i < count; ++i) {
    out[text[i].key] = std::string(text[i].text, text[i].text_length);
  }
  return out;
}

Image decode_png(std::string_view bytes) {
  PngReader reader(bytes);
  png_structp png = reader.png();
  png_infop info = reader.info();
  Image img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) throw FormatError("corrupt PNG data");

  png_read_info(png, info);
  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  if (png_get_rowbytes(png, info) != static_cast<png_size_t>(width) * 3) {
    throw FormatError("unsupported PNG pixel layout");
  }

  img.width = static_cast<int>(width);
  img.height = static_cast<int>(height);
  img.rgb.resize(static_cast<std::size_t>(width) * height * 3);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = img.rgb.data() + y * width * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  return img;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

Image decode_jpeg(std::string_view bytes) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  Image img;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw FormatError(std::string("corrupt JPEG data: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, reinterpret_cast<const unsigned char*>(bytes.data()),
               static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  img.width = static_cast<int>(cinfo.output_width);
  img.height = static_cast<int>(cinfo.output_height);
  img.rgb.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = img.rgb.data() + static_cast<std::size_t>(cinfo.output_scanline) * img.width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

bool looks_like_jpeg(std::string_view bytes) {
  return bytes.size() >= 3 && static_cast<unsigned char>(bytes[0]) == 0xFF &&
         static_cast<unsigned char>(bytes[1]) == 0xD8 && static_cast<unsigned char>(bytes[2]) == 0xFF;
}

}  // namespace

bool looks_like_png(std::string_view bytes) {
  return bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0;
}

Image decode_image(std::string_view bytes) {
  Image img;
  if (looks_like_png(bytes)) {
    img = decode_png(bytes);
  } else if (looks_like_jpeg(bytes)) {
    img = decode_jpeg(bytes);
  } else {
    throw FormatError("unrecognized image format (expected PNG or JPEG)");
  }
  if (img.width < 1 || img.height < 1) throw FormatError("image has zero extent");
  return img;
}

std::string encode_png(const Image& image, const PngText& text) {
  if (image.width < 1 || image.height < 1 ||
      image.rgb.size() != static_cast<std::size_t>(image.width) * image.height * 3) {
    throw FormatError("encode_png: inconsistent image buffer");
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw FormatError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::string out;
  std::vector<png_text> chunks;
  std::vector<png_const_bytep> rows;
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("PNG encoding failed");
  }
  png_set_write_fn(png, &out, png_write_to_string, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 1);
  png_set_filter(png, 0, PNG_FILTER_NONE);
  // libpng only reads the pointers; the const_cast is never written through.
  for (const auto& [key, value] : text) {
    png_text t{};
    t.compression = PNG_TEXT_COMPRESSION_NONE;
    t.key = const_cast<char*>(key.c_str());
    t.text = const_cast<char*>(value.c_str());
    t.text_length = value.size();
    chunks.push_back(t);
  }
  if (!chunks.empty()) png_set_text(png, info, chunks.data(), static_cast<int>(chunks.size()));
  png_write_info(png, info);
  rows.resize(image.height);
  for (int y = 0; y < image.height; ++y) {
    rows[y] = image.rgb.data() + static_cast<std::size_t>(y) * image.width * 3;
  }
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

PngText read_png_text(std::string_view bytes) {
  if (!looks_like_png(bytes)) throw FormatError("not a PNG");
  PngReader reader(bytes);
  if (setjmp(png_jmpbuf(reader.png()))) throw FormatError("corrupt PNG header");
  png_read_info(reader.png(), reader.info());
  return collect_text(reader.png(), reader.info());
}

CropPlan plan_square_crop(int width, int height, int side) {
  if (width < 1 || height < 1 || side < 1) throw FormatError("image dimensions must be >= 1");
  CropPlan plan;
  plan.side = side;
  const int short_side = std::min(width, height);
  const double scale = static_cast<double>(side) / short_side;
  if (width <= height) {
    plan.scaled_width = side;
    plan.scaled_height = std::max(side, static_cast<int>(std::lround(height * scale)));
  } else {
    plan.scaled_height = side;
    plan.scaled_width = std::max(side, static_cast<int>(std::lround(width * scale)));
  }
  plan.crop_x = (plan.scaled_width - side) / 2;
  plan.crop_y = (plan.scaled_height - side) / 2;
  return plan;
}

Image resize_bilinear(const Image& src, int width, int height) {
  if (src.width == width && src.height == height) return src;
  Image out;
  out.width = width;
  out.height = height;
  out.rgb.resize(static_cast<std::size_t>(width) * height * 3);
  const double sx = static_cast<double>(src.width) / width;
  const double sy = static_cast<double>(src.height) / height;
  for (int y = 0; y < height; ++y) {
    // Pixel-center alignment.
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = src.at(x0, y0, c) * (1 - wx) + src.at(x1, y0, c) * wx;
        const double bottom = src.at(x0, y1, c) * (1 - wx) + src.at(x1, y1, c) * wx;
        out.rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c] =
            static_cast<std::uint8_t>(std::lround(top * (1 - wy) + bottom * wy));
      }
    }
  }
  return out;
}

Image crop(const Image& src, int x, int y, int width, int height) {
  if (x < 0 || y < 0 || x + width > src.width || y + height > src.height) {
    throw FormatError("crop window outside image");
  }
  Image out;
  out.width = width;
  out.height = height;
  out.rgb.resize(static_cast<std::size_t>(width) * height * 3);
  for (int row = 0; row < height; ++row) {
    const auto* from = src.rgb.data() + (static_cast<std::size_t>(y + row) * src.width + x) * 3;
    std::copy_n(from, static_cast<std::size_t>(width) * 3,
                out.rgb.data() + static_cast<std::size_t>(row) * width * 3);
  }
  return out;
}

Image prepare_image(const Image& src, int side) {
  const CropPlan plan = plan_square_crop(src.width, src.height, side);
  const Image scaled = resize_bilinear(src, plan.scaled_width, plan.scaled_height);
  return crop(scaled, plan.crop_x, plan.crop_y, side, side);
}

Image prepare_image(std::string_view encoded, int side) {
  return prepare_image(decode_image(encoded), side);
}

}  // namespace promptsteer
