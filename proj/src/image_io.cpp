#include "holotrack/image_io.hpp"

#include "holotrack/errors.hpp"

#include <png.h>
#include <tiffio.h>

#include <algorithm>
#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

namespace holotrack {
namespace fs = std::filesystem;

namespace {

std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return e;
}

double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

// ---------------------------------------------------------------------------
// PNM (P2/P5 grey, P3/P6 colour)

struct PnmHeader {
  char kind = 0;
  Eigen::Index width = 0;
  Eigen::Index height = 0;
  int maxval = 255;
};

int next_token(std::istream& in) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  std::string tok;
  while (c != EOF && !std::isspace(c) && c != '#') {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  if (tok.empty()) throw DataError("truncated PNM header");
  return std::stoi(tok);
}

PnmHeader read_pnm_header(std::istream& in, const fs::path& path) {
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || (magic[1] != '2' && magic[1] != '3' && magic[1] != '5' && magic[1] != '6')) {
    throw DataError("not a PGM/PPM file: " + path.string());
  }
  PnmHeader h;
  h.kind = magic[1];
  h.width = next_token(in);
  h.height = next_token(in);
  h.maxval = next_token(in);
  if (h.width <= 0 || h.height <= 0 || h.maxval <= 0 || h.maxval > 65535) {
    throw DataError("bad PNM header: " + path.string());
  }
  return h;
}

Image read_pnm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  const PnmHeader h = read_pnm_header(in, path);
  const bool colour = h.kind == '3' || h.kind == '6';
  const bool binary = h.kind == '5' || h.kind == '6';
  const int channels = colour ? 3 : 1;
  const double scale = 1.0 / h.maxval;
  Image img(h.height, h.width);
  auto read_sample = [&]() -> double {
    if (!binary) return next_token(in) * scale;
    if (h.maxval < 256) {
      const int c = in.get();
      if (c == EOF) throw DataError("truncated PNM data: " + path.string());
      return c * scale;
    }
    const int hi = in.get();
    const int lo = in.get();
    if (lo == EOF) throw DataError("truncated PNM data: " + path.string());
    return ((hi << 8) | lo) * scale;
  };
  for (Eigen::Index y = 0; y < h.height; ++y) {
    for (Eigen::Index x = 0; x < h.width; ++x) {
      if (channels == 1) {
        img(y, x) = read_sample();
      } else {
        const double r = read_sample();
        const double g = read_sample();
        const double b = read_sample();
        img(y, x) = luma(r, g, b);
      }
    }
  }
  return img;
}

// ---------------------------------------------------------------------------
// PNG

struct PngReader {
  FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;

  explicit PngReader(const fs::path& path) {
    fp = std::fopen(path.c_str(), "rb");
    if (fp == nullptr) throw DataError("cannot open " + path.string());
    png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    info = png != nullptr ? png_create_info_struct(png) : nullptr;
    if (png == nullptr || info == nullptr) throw DataError("libpng init failed");
  }
  ~PngReader() {
    png_destroy_read_struct(&png, info != nullptr ? &info : nullptr, nullptr);
    if (fp != nullptr) std::fclose(fp);
  }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;
};

ImageInfo probe_png(const fs::path& path) {
  PngReader r(path);
  if (setjmp(png_jmpbuf(r.png))) throw DataError("corrupt PNG: " + path.string());
  png_init_io(r.png, r.fp);
  png_read_info(r.png, r.info);
  return {static_cast<Eigen::Index>(png_get_image_width(r.png, r.info)),
          static_cast<Eigen::Index>(png_get_image_height(r.png, r.info))};
}

Image read_png(const fs::path& path) {
  PngReader r(path);
  if (setjmp(png_jmpbuf(r.png))) throw DataError("corrupt PNG: " + path.string());
  png_init_io(r.png, r.fp);
  png_read_info(r.png, r.info);
  const png_uint_32 w = png_get_image_width(r.png, r.info);
  const png_uint_32 h = png_get_image_height(r.png, r.info);
  const int colour_type = png_get_color_type(r.png, r.info);
  const int depth = png_get_bit_depth(r.png, r.info);
  if (colour_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
  if (colour_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(r.png);
  if ((colour_type & PNG_COLOR_MASK_ALPHA) != 0) png_set_strip_alpha(r.png);
  if (depth == 16) png_set_swap(r.png);
  png_read_update_info(r.png, r.info);
  const int channels = png_get_channels(r.png, r.info);
  const int out_depth = png_get_bit_depth(r.png, r.info);
  const std::size_t rowbytes = png_get_rowbytes(r.png, r.info);
  std::vector<png_byte> data(rowbytes * h);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = data.data() + y * rowbytes;
  png_read_image(r.png, rows.data());
  Image img(h, w);
  const double scale = out_depth == 16 ? 1.0 / 65535.0 : 1.0 / 255.0;
  for (png_uint_32 y = 0; y < h; ++y) {
    for (png_uint_32 x = 0; x < w; ++x) {
      auto sample = [&](int c) -> double {
        const std::size_t idx = static_cast<std::size_t>(x) * static_cast<std::size_t>(channels) + static_cast<std::size_t>(c);
        if (out_depth == 16) {
          std::uint16_t v;
          std::memcpy(&v, rows[y] + 2 * idx, 2);
          return v * scale;
        }
        return rows[y][idx] * scale;
      };
      img(y, x) = channels >= 3 ? luma(sample(0), sample(1), sample(2)) : sample(0);
    }
  }
  return img;
}

// ---------------------------------------------------------------------------
// TIFF

struct TiffHandle {
  TIFF* tif = nullptr;
  explicit TiffHandle(const fs::path& path) {
    TIFFSetWarningHandler(nullptr);
    tif = TIFFOpen(path.c_str(), "r");
    if (tif == nullptr) throw DataError("cannot open " + path.string());
  }
  ~TiffHandle() { TIFFClose(tif); }
  TiffHandle(const TiffHandle&) = delete;
  TiffHandle& operator=(const TiffHandle&) = delete;
};

ImageInfo probe_tiff(const fs::path& path) {
  TiffHandle t(path);
  std::uint32_t w = 0, h = 0;
  TIFFGetField(t.tif, TIFFTAG_IMAGEWIDTH, &w);
  TIFFGetField(t.tif, TIFFTAG_IMAGELENGTH, &h);
  return {static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(h)};
}

Image read_tiff(const fs::path& path) {
  TiffHandle t(path);
  std::uint32_t w = 0, h = 0;
  std::uint16_t bps = 8, spp = 1, fmt = SAMPLEFORMAT_UINT, planar = PLANARCONFIG_CONTIG;
  TIFFGetField(t.tif, TIFFTAG_IMAGEWIDTH, &w);
  TIFFGetField(t.tif, TIFFTAG_IMAGELENGTH, &h);
  TIFFGetFieldDefaulted(t.tif, TIFFTAG_BITSPERSAMPLE, &bps);
  TIFFGetFieldDefaulted(t.tif, TIFFTAG_SAMPLESPERPIXEL, &spp);
  TIFFGetFieldDefaulted(t.tif, TIFFTAG_SAMPLEFORMAT, &fmt);
  TIFFGetFieldDefaulted(t.tif, TIFFTAG_PLANARCONFIG, &planar);
  if (planar != PLANARCONFIG_CONTIG || (bps != 8 && bps != 16 && !(bps == 32 && fmt == SAMPLEFORMAT_IEEEFP))) {
    throw DataError("unsupported TIFF layout: " + path.string());
  }
  std::vector<unsigned char> line(static_cast<std::size_t>(TIFFScanlineSize(t.tif)));
  Image img(h, w);
  for (std::uint32_t y = 0; y < h; ++y) {
    if (TIFFReadScanline(t.tif, line.data(), y, 0) < 0) throw DataError("corrupt TIFF: " + path.string());
    for (std::uint32_t x = 0; x < w; ++x) {
      auto sample = [&](int c) -> double {
        const std::size_t idx = static_cast<std::size_t>(x) * spp + static_cast<std::size_t>(c);
        if (bps == 8) return line[idx] / 255.0;
        if (bps == 16) {
          std::uint16_t v;
          std::memcpy(&v, line.data() + 2 * idx, 2);
          return v / 65535.0;
        }
        float f;
        std::memcpy(&f, line.data() + 4 * idx, 4);
        return static_cast<double>(f);
      };
      img(y, x) = spp >= 3 ? luma(sample(0), sample(1), sample(2)) : sample(0);
    }
  }
  return img;
}

}  // namespace

bool is_supported_image(const fs::path& path) {
  const std::string e = lower_ext(path);
  return e == ".pgm" || e == ".ppm" || e == ".png" || e == ".tif" || e == ".tiff";
}

ImageInfo probe_image(const fs::path& path) {
  const std::string e = lower_ext(path);
  if (e == ".png") return probe_png(path);
  if (e == ".tif" || e == ".tiff") return probe_tiff(path);
  if (e == ".pgm" || e == ".ppm") {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    const PnmHeader h = read_pnm_header(in, path);
    return {h.width, h.height};
  }
  throw DataError("unsupported image format: " + path.string());
}

Image read_image(const fs::path& path) {
  const std::string e = lower_ext(path);
  if (e == ".png") return read_png(path);
  if (e == ".tif" || e == ".tiff") return read_tiff(path);
  if (e == ".pgm" || e == ".ppm") return read_pnm(path);
  throw DataError("unsupported image format: " + path.string());
}

void write_pgm16(const fs::path& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "P5\n" << img.cols() << ' ' << img.rows() << "\n65535\n";
  std::vector<char> buf(static_cast<std::size_t>(img.size()) * 2);
  std::size_t i = 0;
  for (Eigen::Index y = 0; y < img.rows(); ++y) {
    for (Eigen::Index x = 0; x < img.cols(); ++x) {
      const double v = std::clamp(img(y, x), 0.0, 1.0);
      const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
      buf[i++] = static_cast<char>(q >> 8);
      buf[i++] = static_cast<char>(q & 0xff);
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_png(const fs::path& path, const RgbImage& img) {
  png_image desc{};
  desc.version = PNG_IMAGE_VERSION;
  desc.width = static_cast<png_uint_32>(img.width);
  desc.height = static_cast<png_uint_32>(img.height);
  desc.format = PNG_FORMAT_RGB;
  if (png_image_write_to_file(&desc, path.c_str(), 0, img.pixels.data(), 0, nullptr) == 0) {
    throw DataError("cannot write " + path.string() + ": " + desc.message);
  }
}

RgbImage to_rgb(const Image& img) {
  RgbImage out(static_cast<int>(img.cols()), static_cast<int>(img.rows()));
  for (Eigen::Index y = 0; y < img.rows(); ++y) {
    for (Eigen::Index x = 0; x < img.cols(); ++x) {
      const auto v = static_cast<std::uint8_t>(std::lround(std::clamp(img(y, x), 0.0, 1.0) * 255.0));
      out.set(static_cast<int>(x), static_cast<int>(y), v, v, v);
    }
  }
  return out;
}

}  // namespace holotrack
