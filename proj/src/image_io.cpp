// Copyright 2026 The LayerComp Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "layercomp/image_io.hpp"

#include <png.h>
// jpeglib.h needs FILE and size_t declared first.
#include <cstdio>
#include <jpeglib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>

#include "layercomp/error.hpp"

namespace layercomp {
namespace {

bool is_png(const std::vector<std::uint8_t>& bytes) {
  static constexpr std::array<std::uint8_t, 8> kSig = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return bytes.size() >= kSig.size() && std::equal(kSig.begin(), kSig.end(), bytes.begin());
}

bool is_jpeg(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 3 && bytes[0] == 0xff && bytes[1] == 0xd8 && bytes[2] == 0xff;
}

Canvas decode_png(const std::vector<std::uint8_t>& bytes) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    fail(ErrorCode::kParse, std::string("png: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    fail(ErrorCode::kParse, std::string("png: ") + image.message);
  }
  const int h = static_cast<int>(image.height);
  const int w = static_cast<int>(image.width);
  std::vector<float> data(pixels.size());
  std::transform(pixels.begin(), pixels.end(), data.begin(), from_byte);
  return Canvas(h, w, 3, std::move(data));
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

Canvas decode_jpeg(const std::vector<std::uint8_t>& bytes) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager jerr;
  cinfo.err = jpeg_std_error(&jerr.base);
  jerr.base.error_exit = jpeg_error_exit;
  std::vector<std::uint8_t> pixels;
  int h = 0, w = 0;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    fail(ErrorCode::kParse, std::string("jpeg: ") + jerr.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  h = static_cast<int>(cinfo.output_height);
  w = static_cast<int>(cinfo.output_width);
  pixels.resize(static_cast<std::size_t>(h) * w * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  std::vector<float> data(pixels.size());
  std::transform(pixels.begin(), pixels.end(), data.begin(), from_byte);
  return Canvas(h, w, 3, std::move(data));
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Canvas& canvas) {
  require(canvas.channels() == 3, ErrorCode::kInvalidInput, "PNG export needs 3 channels");
  std::vector<std::uint8_t> pixels(canvas.size());
  auto src = canvas.data();
  std::transform(src.begin(), src.end(), pixels.begin(), to_byte);
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(canvas.width());
  image.height = static_cast<png_uint_32>(canvas.height());
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    fail(ErrorCode::kIo, std::string("png: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels.data(), 0, nullptr)) {
    fail(ErrorCode::kIo, std::string("png: ") + image.message);
  }
  out.resize(size);
  return out;
}

Canvas decode_image(const std::vector<std::uint8_t>& bytes) {
  if (is_png(bytes)) return decode_png(bytes);
  if (is_jpeg(bytes)) return decode_jpeg(bytes);
  fail(ErrorCode::kParse, "unsupported image format (expected PNG or JPEG)");
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

void save_png(const Canvas& canvas, const std::filesystem::path& path) {
  write_file(path, encode_png(canvas));
}

Canvas load_image(const std::filesystem::path& path) { return decode_image(read_file(path)); }

Canvas resize_bilinear(const Canvas& image, int height, int width) {
  require(height > 0 && width > 0, ErrorCode::kInvalidInput, "resize target must be positive");
  if (image.height() == height && image.width() == width) return image;
  Canvas out(height, width, image.channels());
  const double sy = static_cast<double>(image.height()) / height;
  const double sx = static_cast<double>(image.width()) / width;
  for (int i = 0; i < height; ++i) {
    const double y = std::clamp((i + 0.5) * sy - 0.5, 0.0, image.height() - 1.0);
    const int y0 = static_cast<int>(std::floor(y));
    const int y1 = std::min(y0 + 1, image.height() - 1);
    const double wy = y - y0;
    for (int j = 0; j < width; ++j) {
      const double x = std::clamp((j + 0.5) * sx - 0.5, 0.0, image.width() - 1.0);
      const int x0 = static_cast<int>(std::floor(x));
      const int x1 = std::min(x0 + 1, image.width() - 1);
      const double wx = x - x0;
      for (int c = 0; c < image.channels(); ++c) {
        const double v = (1 - wy) * ((1 - wx) * image.at(y0, x0, c) + wx * image.at(y0, x1, c)) +
                         wy * ((1 - wx) * image.at(y1, x0, c) + wx * image.at(y1, x1, c));
        out.at(i, j, c) = static_cast<float>(v);
      }
    }
  }
  return out;
}

OccupancyMap resize_nearest(const OccupancyMap& map, int height, int width) {
  require(height > 0 && width > 0, ErrorCode::kInvalidInput, "resize target must be positive");
  if (map.height() == height && map.width() == width) return map;
  OccupancyMap out(height, width);
  for (int i = 0; i < height; ++i) {
    const int si = std::min(map.height() - 1,
                            static_cast<int>((i + 0.5) * map.height() / height));
    for (int j = 0; j < width; ++j) {
      const int sj = std::min(map.width() - 1, static_cast<int>((j + 0.5) * map.width() / width));
      if (map.at(si, sj)) out.set(i, j);
    }
  }
  return out;
}

Canvas render_layout(const SemanticLayout& layout, const ClassPalette& palette) {
  Canvas out(layout.height(), layout.width(), 3, -0.6f);
  for (const auto& inst : layout.instances()) {
    const Rgb color = palette.color(inst.class_id());
    for (int i = 0; i < layout.height(); ++i)
      for (int j = 0; j < layout.width(); ++j)
        if (inst.plane().at(i, j))
          for (int c = 0; c < 3; ++c) out.at(i, j, c) = from_byte(color[c]);
  }
  return out;
}

Canvas make_grid(const std::vector<std::vector<Canvas>>& rows, int gap) {
  require(!rows.empty() && !rows.front().empty(), ErrorCode::kInvalidInput, "empty grid");
  const int h = rows.front().front().height();
  const int w = rows.front().front().width();
  std::size_t cols = 0;
  for (const auto& r : rows) cols = std::max(cols, r.size());
  const int gh = static_cast<int>(rows.size()) * (h + gap) - gap;
  const int gw = static_cast<int>(cols) * (w + gap) - gap;
  Canvas grid(gh, gw, 3, 1.0f);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      const Canvas& tile = rows[r][c];
      require(tile.height() == h && tile.width() == w && tile.channels() == 3,
              ErrorCode::kInvalidInput, "grid tiles must share one shape");
      const int oy = static_cast<int>(r) * (h + gap);
      const int ox = static_cast<int>(c) * (w + gap);
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
          for (int ch = 0; ch < 3; ++ch) grid.at(oy + i, ox + j, ch) = tile.at(i, j, ch);
    }
  }
  return grid;
}

namespace {
constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += kB64[(v >> 6) & 63];
    out += kB64[v & 63];
  }
  if (i + 1 == bytes.size()) {
    const std::uint32_t v = bytes[i] << 16;
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += kB64[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  std::array<int, 256> table;
  table.fill(-1);
  for (int k = 0; k < 64; ++k) table[static_cast<unsigned char>(kB64[k])] = k;
  std::vector<std::uint8_t> out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char ch : text) {
    if (ch == '=' || ch == '\n' || ch == '\r' || ch == ' ') continue;
    const int v = table[static_cast<unsigned char>(ch)];
    require(v >= 0, ErrorCode::kParse, "invalid base64 character");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xff));
    }
  }
  return out;
}

}  // namespace layercomp
