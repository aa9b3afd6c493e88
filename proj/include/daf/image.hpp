#pragma once

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "daf/error.hpp"

namespace daf {

/// Square grayscale raster with intensities in [0, 1], row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  GrayImage() = default;
  GrayImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, 0.0) {}

  double& at(int y, int x) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path);
  return bytes;
}

struct Rgb8Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // interleaved RGB
};

inline Rgb8Image decode_png_rgb(const std::vector<std::uint8_t>& bytes,
                                const std::string& origin) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw DecodeError("png decode failed (" + origin + "): " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  Rgb8Image out;
  out.width = static_cast<int>(image.width);
  out.height = static_cast<int>(image.height);
  out.data.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.data.data(), 0, nullptr)) {
    png_image_free(&image);
    throw DecodeError("png decode failed (" + origin + "): " + image.message);
  }
  return out;
}

struct JpegErrorTrap {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX] = {0};
};

inline void jpeg_error_exit_trap(j_common_ptr cinfo) {
  auto* trap = reinterpret_cast<JpegErrorTrap*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, trap->message);
  std::longjmp(trap->jump, 1);
}

inline void jpeg_silence_output(j_common_ptr cinfo, int msg_level) {
  // Keep the default corrupt-data accounting, drop the stderr chatter.
  if (msg_level < 0) ++cinfo->err->num_warnings;
}

inline Rgb8Image decode_jpeg_rgb(const std::vector<std::uint8_t>& bytes,
                                 const std::string& origin) {
  jpeg_decompress_struct cinfo;
  JpegErrorTrap trap;
  cinfo.err = jpeg_std_error(&trap.mgr);
  trap.mgr.error_exit = jpeg_error_exit_trap;
  trap.mgr.emit_message = jpeg_silence_output;

  Rgb8Image out;
  std::vector<std::uint8_t> row_buffer;
  if (setjmp(trap.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw DecodeError("jpeg decode failed (" + origin + "): " + trap.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, const_cast<std::uint8_t*>(bytes.data()),
               static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  out.width = static_cast<int>(cinfo.output_width);
  out.height = static_cast<int>(cinfo.output_height);
  out.data.resize(static_cast<std::size_t>(out.width) * out.height * 3);
  row_buffer.resize(static_cast<std::size_t>(out.width) * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = row_buffer.data();
    jpeg_read_scanlines(&cinfo, &row, 1);
    std::memcpy(out.data.data() +
                    static_cast<std::size_t>(cinfo.output_scanline - 1) * out.width * 3,
                row_buffer.data(), row_buffer.size());
  }
  jpeg_finish_decompress(&cinfo);
  const long warnings = cinfo.err->num_warnings;
  jpeg_destroy_decompress(&cinfo);
  if (warnings > 0) {
    // Corrupt-data warnings mean libjpeg padded missing content (e.g. a
    // truncated file); treat that as a failed decode.
    throw DecodeError("jpeg data corrupt or truncated (" + origin + ")");
  }
  return out;
}

inline bool looks_like_png(const std::vector<std::uint8_t>& bytes) {
  static const std::uint8_t magic[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  return bytes.size() >= 8 && std::memcmp(bytes.data(), magic, 8) == 0;
}

inline bool looks_like_jpeg(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 2 && bytes[0] == 0xff && bytes[1] == 0xd8;
}

/// Corner-aligned bilinear sample positions: output index i maps to
/// i * (src - 1) / (dst - 1); a single output pixel samples the centroid.
inline double sample_position(int i, int src, int dst) {
  if (dst == 1) return 0.5 * (src - 1);
  return static_cast<double>(i) * (src - 1) / (dst - 1);
}

}  // namespace detail

/// Bilinear resize of one channel (corner-aligned sampling).
inline std::vector<double> bilinear_resize(const std::vector<double>& src,
                                           int src_w, int src_h, int dst_w,
                                           int dst_h) {
  std::vector<double> dst(static_cast<std::size_t>(dst_w) * dst_h);
  for (int y = 0; y < dst_h; ++y) {
    const double sy = detail::sample_position(y, src_h, dst_h);
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, src_h - 1);
    const double fy = sy - y0;
    for (int x = 0; x < dst_w; ++x) {
      const double sx = detail::sample_position(x, src_w, dst_w);
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, src_w - 1);
      const double fx = sx - x0;
      const double top = src[static_cast<std::size_t>(y0) * src_w + x0] * (1.0 - fx) +
                         src[static_cast<std::size_t>(y0) * src_w + x1] * fx;
      const double bottom = src[static_cast<std::size_t>(y1) * src_w + x0] * (1.0 - fx) +
                            src[static_cast<std::size_t>(y1) * src_w + x1] * fx;
      dst[static_cast<std::size_t>(y) * dst_w + x] = top * (1.0 - fy) + bottom * fy;
    }
  }
  return dst;
}

inline GrayImage resize_gray(const GrayImage& img, int size) {
  GrayImage out(size, size);
  out.pixels = bilinear_resize(img.pixels, img.width, img.height, size, size);
  return out;
}

/// Decodes a PNG or JPEG file, bilinearly resizes to size x size, converts
/// to grayscale with luminance weights 0.299 / 0.587 / 0.114, and scales
/// intensities to [0, 1].
inline GrayImage load_image(const std::string& path, int size) {
  if (size < 1) throw InvalidSpec("load_image: size must be >= 1");
  const std::vector<std::uint8_t> bytes = detail::read_file_bytes(path);

  detail::Rgb8Image rgb;
  if (detail::looks_like_png(bytes)) {
    rgb = detail::decode_png_rgb(bytes, path);
  } else if (detail::looks_like_jpeg(bytes)) {
    rgb = detail::decode_jpeg_rgb(bytes, path);
  } else {
    throw DecodeError("unsupported image format: " + path);
  }
  if (rgb.width < 1 || rgb.height < 1) {
    throw DecodeError("empty image: " + path);
  }

  const std::size_t n = static_cast<std::size_t>(rgb.width) * rgb.height;
  std::vector<double> r(n), g(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = rgb.data[3 * i + 0];
    g[i] = rgb.data[3 * i + 1];
    b[i] = rgb.data[3 * i + 2];
  }
  const auto rr = bilinear_resize(r, rgb.width, rgb.height, size, size);
  const auto rg = bilinear_resize(g, rgb.width, rgb.height, size, size);
  const auto rb = bilinear_resize(b, rgb.width, rgb.height, size, size);

  GrayImage out(size, size);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const double luma = 0.299 * rr[i] + 0.587 * rg[i] + 0.114 * rb[i];
    out.pixels[i] = std::clamp(luma / 255.0, 0.0, 1.0);
  }
  return out;
}

inline std::vector<std::uint8_t> to_gray8(const GrayImage& img) {
  std::vector<std::uint8_t> out(img.pixels.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = std::clamp(img.pixels[i], 0.0, 1.0) * 255.0;
    out[i] = static_cast<std::uint8_t>(std::lround(v));
  }
  return out;
}

inline void write_png_gray(const std::string& path, const GrayImage& img) {
  const std::vector<std::uint8_t> gray = to_gray8(img);
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, gray.data(), 0, nullptr)) {
    throw IoError("png write failed (" + path + "): " + image.message);
  }
}

/// Baseline sequential JPEG encoding of a grayscale image; quality follows
/// the standard quantization-table scaling.
inline std::vector<std::uint8_t> encode_jpeg_gray(const GrayImage& img,
                                                  int quality) {
  if (quality < 1 || quality > 100) {
    throw InvalidSpec("jpeg quality must be in [1, 100]");
  }
  const std::vector<std::uint8_t> gray = to_gray8(img);

  jpeg_compress_struct cinfo;
  detail::JpegErrorTrap trap;
  cinfo.err = jpeg_std_error(&trap.mgr);
  trap.mgr.error_exit = detail::jpeg_error_exit_trap;
  trap.mgr.emit_message = detail::jpeg_silence_output;

  unsigned char* buffer = nullptr;
  unsigned long buffer_size = 0;
  if (setjmp(trap.jump)) {
    jpeg_destroy_compress(&cinfo);
    if (buffer) free(buffer);
    throw Error(std::string("jpeg encode failed: ") + trap.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &buffer, &buffer_size);
  cinfo.image_width = static_cast<JDIMENSION>(img.width);
  cinfo.image_height = static_cast<JDIMENSION>(img.height);
  cinfo.input_components = 1;
  cinfo.in_color_space = JCS_GRAYSCALE;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE /* force baseline */);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<JSAMPROW>(
        gray.data() + static_cast<std::size_t>(cinfo.next_scanline) * img.width);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);

  std::vector<std::uint8_t> out(buffer, buffer + buffer_size);
  free(buffer);
  return out;
}

inline GrayImage decode_jpeg_to_gray(const std::vector<std::uint8_t>& bytes) {
  const detail::Rgb8Image rgb = detail::decode_jpeg_rgb(bytes, "<memory>");
  GrayImage out(rgb.width, rgb.height);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const double luma = 0.299 * rgb.data[3 * i + 0] + 0.587 * rgb.data[3 * i + 1] +
                        0.114 * rgb.data[3 * i + 2];
    out.pixels[i] = std::clamp(luma / 255.0, 0.0, 1.0);
  }
  return out;
}

}  // namespace daf
