// Copyright 2026 The buildseg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "buildseg/data/image_io.h"

#include <cctype>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include <png.h>

#include "buildseg/core/error.h"

namespace buildseg::data {
namespace {

namespace fs = std::filesystem;

struct NetpbmHeader {
  char kind = 0;
  int width = 0;
  int height = 0;
  int maxval = 0;
};

int read_header_int(std::istream& in, const fs::path& path) {
  int c = in.peek();
  while (in && (std::isspace(c) || c == '#')) {
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
    } else {
      in.get();
    }
    c = in.peek();
  }
  int value = -1;
  if (!(in >> value) || value < 0) throw FormatError(path.string() + ": malformed netpbm header");
  return value;
}

NetpbmHeader read_netpbm_header(std::istream& in, const fs::path& path) {
  char magic[2] = {};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
    throw FormatError(path.string() + ": not a binary PGM/PPM file");
  }
  NetpbmHeader h;
  h.kind = magic[1];
  h.width = read_header_int(in, path);
  h.height = read_header_int(in, path);
  h.maxval = read_header_int(in, path);
  in.get();  // single whitespace before the raster
  if (h.width < 1 || h.height < 1 || h.maxval < 1 || h.maxval > 65535) {
    throw FormatError(path.string() + ": unsupported netpbm dimensions or maxval");
  }
  return h;
}

bool is_png(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  return in && png_sig_cmp(sig, 0, 8) == 0;
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::vector<std::uint8_t> read_raster(std::istream& in, const fs::path& path, std::size_t bytes) {
  std::vector<std::uint8_t> out(bytes);
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(in.gcount()) != bytes) throw FormatError(path.string() + ": truncated raster");
  return out;
}

struct PngImage {
  png_image image;
  explicit PngImage(const fs::path& path) {
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
      throw FormatError(path.string() + ": " + image.message);
    }
  }
  ~PngImage() { png_image_free(&image); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;

  std::vector<std::uint8_t> finish(const fs::path& path, std::uint32_t format, std::size_t channels) {
    image.format = format;
    std::vector<std::uint8_t> buffer(static_cast<std::size_t>(image.width) * image.height * channels);
    std::vector<std::uint8_t> colormap(PNG_IMAGE_COLORMAP_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, colormap.empty() ? nullptr : colormap.data())) {
      throw FormatError(path.string() + ": " + image.message);
    }
    return buffer;
  }
};

void check_writable(std::ofstream& out, const fs::path& path) {
  if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace

RgbImage read_rgb(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("missing file " + path.string());
  if (is_png(path)) {
    PngImage png(path);
    RgbImage img;
    img.width = static_cast<int>(png.image.width);
    img.height = static_cast<int>(png.image.height);
    img.pixels = png.finish(path, PNG_FORMAT_RGB, 3);
    return img;
  }
  auto in = open_input(path);
  const auto h = read_netpbm_header(in, path);
  if (h.kind != '6' || h.maxval != 255) throw FormatError(path.string() + ": expected an 8-bit RGB image");
  RgbImage img;
  img.width = h.width;
  img.height = h.height;
  img.pixels = read_raster(in, path, static_cast<std::size_t>(h.width) * h.height * 3);
  return img;
}

LabelGrid read_labels(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("missing file " + path.string());
  LabelGrid out;
  if (is_png(path)) {
    PngImage png(path);
    out.width = static_cast<int>(png.image.width);
    out.height = static_cast<int>(png.image.height);
    const bool indexed = (png.image.format & PNG_FORMAT_FLAG_COLORMAP) != 0;
    if (!indexed && (png.image.format & PNG_FORMAT_FLAG_COLOR) != 0) {
      throw FormatError(path.string() + ": label maps must be single-channel or palette PNGs");
    }
    // Colormapped read keeps the raw palette indices.
    const auto raw = png.finish(path, indexed ? PNG_FORMAT_RGB_COLORMAP : PNG_FORMAT_GRAY, 1);
    out.values.assign(raw.begin(), raw.end());
    return out;
  }
  auto in = open_input(path);
  const auto h = read_netpbm_header(in, path);
  if (h.kind != '5') throw FormatError(path.string() + ": expected a single-channel label image");
  out.width = h.width;
  out.height = h.height;
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
  if (h.maxval < 256) {
    const auto raw = read_raster(in, path, n);
    out.values.assign(raw.begin(), raw.end());
  } else {
    const auto raw = read_raster(in, path, n * 2);
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = static_cast<std::uint16_t>(raw[2 * i] << 8 | raw[2 * i + 1]);
  }
  return out;
}

std::pair<int, int> read_size(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("missing file " + path.string());
  if (is_png(path)) {
    PngImage png(path);
    return {static_cast<int>(png.image.width), static_cast<int>(png.image.height)};
  }
  auto in = open_input(path);
  const auto h = read_netpbm_header(in, path);
  return {h.width, h.height};
}

void write_ppm(const fs::path& path, const RgbImage& image) {
  std::ofstream out(path, std::ios::binary);
  check_writable(out, path);
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
  check_writable(out, path);
}

void write_pgm(const fs::path& path, const LabelGrid& labels) {
  std::uint16_t top = 0;
  for (auto v : labels.values) top = std::max(top, v);
  std::ofstream out(path, std::ios::binary);
  check_writable(out, path);
  out << "P5\n" << labels.width << ' ' << labels.height << '\n' << (top > 255 ? 65535 : 255) << '\n';
  for (auto v : labels.values) {
    if (top > 255) out.put(static_cast<char>(v >> 8));
    out.put(static_cast<char>(v & 0xff));
  }
  check_writable(out, path);
}

void write_pgm(const fs::path& path, const Mask& mask, std::uint8_t on_value) {
  std::ofstream out(path, std::ios::binary);
  check_writable(out, path);
  out << "P5\n" << mask.width() << ' ' << mask.height() << "\n255\n";
  for (auto v : mask.values()) out.put(static_cast<char>(v ? on_value : 0));
  check_writable(out, path);
}

}  // namespace buildseg::data
