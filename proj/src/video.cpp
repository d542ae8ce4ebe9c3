#include "lrnerv/video.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "lrnerv/config.hpp"
#include "lrnerv/container.hpp"

namespace lrnerv {
namespace {

std::size_t manifest_size(const std::map<std::string, std::string>& kv, const std::string& key, bool required,
                          std::size_t fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) {
    if (required) throw std::invalid_argument("manifest: missing '" + key + "'");
    return fallback;
  }
  try {
    std::size_t used = 0;
    const unsigned long v = std::stoul(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("manifest: '" + key + "' expects an integer, got '" + it->second + "'");
  }
}

void check_pattern(const std::string& pattern) {
  std::size_t conversions = 0;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (pattern[i] != '%') continue;
    if (i + 1 < pattern.size() && pattern[i + 1] == '%') {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < pattern.size() && (std::isdigit(static_cast<unsigned char>(pattern[j])) || pattern[j] == '0')) ++j;
    if (j >= pattern.size() || (pattern[j] != 'd' && pattern[j] != 'u')) {
      throw std::invalid_argument("manifest: pattern '" + pattern + "' must use %d-style conversions only");
    }
    ++conversions;
    i = j;
  }
  if (conversions != 1) {
    throw std::invalid_argument("manifest: pattern '" + pattern + "' needs exactly one integer conversion");
  }
}

// Skips whitespace and '#' comments, then reads an unsigned decimal.
std::size_t header_number(const std::vector<std::uint8_t>& b, std::size_t& pos, const std::string& what) {
  while (pos < b.size()) {
    if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else if (std::isspace(b[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  if (pos >= b.size() || !std::isdigit(b[pos])) throw std::runtime_error(what + ": malformed PPM header");
  std::size_t v = 0;
  while (pos < b.size() && std::isdigit(b[pos])) {
    v = v * 10 + (b[pos++] - '0');
    if (v > (1u << 24)) throw std::runtime_error(what + ": malformed PPM header (value too large)");
  }
  return v;
}

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace

std::string VideoManifest::frame_path(const std::string& dir, std::size_t index) const {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern.c_str(), static_cast<int>(start + index));
  return (std::filesystem::path(dir) / buf).string();
}

VideoManifest parse_manifest(const std::string& text) {
  const auto kv = parse_key_values(text, "manifest");
  for (const auto& [k, v] : kv) {
    if (k != "width" && k != "height" && k != "frames" && k != "pattern" && k != "format" && k != "start") {
      throw std::invalid_argument("manifest: unknown key '" + k + "'");
    }
  }
  VideoManifest m;
  m.width = manifest_size(kv, "width", true, 0);
  m.height = manifest_size(kv, "height", true, 0);
  m.frames = manifest_size(kv, "frames", true, 0);
  m.start = manifest_size(kv, "start", false, 0);
  if (auto it = kv.find("pattern"); it != kv.end()) m.pattern = it->second;
  if (auto it = kv.find("format"); it != kv.end()) m.format = it->second;
  if (m.format != "ppm") throw std::invalid_argument("manifest: unsupported pixel format '" + m.format + "'");
  if (m.width == 0 || m.height == 0 || m.frames == 0) {
    throw std::invalid_argument("manifest: width, height and frames must be positive");
  }
  check_pattern(m.pattern);
  return m;
}

std::string format_manifest(const VideoManifest& m) {
  std::ostringstream os;
  os << "width = " << m.width << "\nheight = " << m.height << "\nframes = " << m.frames
     << "\npattern = " << m.pattern << "\nformat = " << m.format << "\nstart = " << m.start << '\n';
  return os.str();
}

Tensor decode_ppm(const std::vector<std::uint8_t>& b, const std::string& what) {
  if (b.size() < 2 || b[0] != 'P' || b[1] != '6') throw std::runtime_error(what + ": not a binary PPM (P6)");
  std::size_t pos = 2;
  const std::size_t w = header_number(b, pos, what);
  const std::size_t h = header_number(b, pos, what);
  const std::size_t maxval = header_number(b, pos, what);
  if (maxval != 255) throw std::runtime_error(what + ": only 8-bit PPM (maxval 255) is supported");
  if (pos >= b.size() || !std::isspace(b[pos])) throw std::runtime_error(what + ": malformed PPM header");
  ++pos;
  if (w == 0 || h == 0) throw std::runtime_error(what + ": empty image");
  if (b.size() - pos != 3 * w * h) {
    throw std::runtime_error(what + ": expected " + std::to_string(3 * w * h) + " pixel bytes, found " +
                             std::to_string(b.size() - pos));
  }
  Tensor t({3, h, w});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c) t.at(c, y, x) = b[pos + 3 * (y * w + x) + c] / 255.0;
  return t;
}

std::vector<std::uint8_t> encode_ppm(const Tensor& frame) {
  if (frame.rank() != 3 || frame.dim(0) != 3) {
    throw std::invalid_argument("write_ppm: expected a 3 x H x W frame, got " + shape_string(frame.shape()));
  }
  const std::size_t h = frame.dim(1), w = frame.dim(2);
  const std::string header = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + 3 * h * w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = std::clamp(frame.at(c, y, x), 0.0, 1.0);
        out.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
      }
  return out;
}

Tensor read_ppm(const std::string& path) { return decode_ppm(read_file_bytes(path), path); }

void write_ppm(const std::string& path, const Tensor& frame) { write_file_bytes(path, encode_ppm(frame)); }

std::vector<Tensor> load_video(const std::string& manifest_path) {
  const auto text = read_file_bytes(manifest_path);
  const VideoManifest m = parse_manifest(std::string(text.begin(), text.end()));
  const std::string dir = std::filesystem::path(manifest_path).parent_path().string();
  std::vector<Tensor> frames;
  for (std::size_t i = 0; i < m.frames; ++i) {
    const std::string path = m.frame_path(dir, i);
    if (!std::filesystem::exists(path)) throw std::runtime_error("missing frame file '" + path + "'");
    Tensor f = read_ppm(path);
    if (f.dim(1) != m.height || f.dim(2) != m.width) {
      throw std::runtime_error("'" + path + "' is " + std::to_string(f.dim(2)) + "x" + std::to_string(f.dim(1)) +
                               " but the manifest declares " + std::to_string(m.width) + "x" +
                               std::to_string(m.height));
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

void write_video(const std::string& dir, const std::vector<Tensor>& frames, const std::string& manifest_name,
                 const std::string& pattern) {
  if (frames.empty()) throw std::invalid_argument("write_video: no frames");
  VideoManifest m;
  m.height = frames[0].dim(1);
  m.width = frames[0].dim(2);
  m.frames = frames.size();
  m.pattern = pattern;
  check_pattern(pattern);
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].shape() != frames[0].shape()) throw std::invalid_argument("write_video: frame sizes differ");
    write_ppm(m.frame_path(dir, i), frames[i]);
  }
  const std::string text = format_manifest(m);
  write_file_bytes((std::filesystem::path(dir) / manifest_name).string(),
                   std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<Tensor> synthetic_video(std::size_t frames, std::size_t height, std::size_t width) {
  if (frames == 0 || height == 0 || width == 0) throw std::invalid_argument("synthetic_video: empty video");
  const double pi = std::numbers::pi;
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < frames; ++i) {
    const double phase = static_cast<double>(i) / static_cast<double>(frames);
    const double box = 0.25 * static_cast<double>(height);
    const double bx = (0.15 + 0.6 * phase) * static_cast<double>(width);
    const double by = (0.3 + 0.2 * std::sin(2.0 * pi * phase)) * static_cast<double>(height);
    Tensor f({3, height, width});
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x) {
        const double u = static_cast<double>(x) / static_cast<double>(width);
        const double v = static_cast<double>(y) / static_cast<double>(height);
        double r = 0.5 + 0.35 * std::sin(2.0 * pi * (u + 0.5 * v + phase));
        double g = 0.2 + 0.6 * v;
        double b = 0.5 + 0.3 * std::cos(2.0 * pi * (0.5 * u - v + 0.5 * phase));
        const double px = static_cast<double>(x) + 0.5, py = static_cast<double>(y) + 0.5;
        const double inside = smoothstep(-1.0, 1.0, px - bx) * smoothstep(-1.0, 1.0, bx + box - px) *
                              smoothstep(-1.0, 1.0, py - by) * smoothstep(-1.0, 1.0, by + box - py);
        r = r * (1.0 - inside) + 0.95 * inside;
        g = g * (1.0 - inside) + 0.85 * inside;
        b = b * (1.0 - inside) + 0.10 * inside;
        f.at(0, y, x) = std::round(std::clamp(r, 0.0, 1.0) * 255.0) / 255.0;
        f.at(1, y, x) = std::round(std::clamp(g, 0.0, 1.0) * 255.0) / 255.0;
        f.at(2, y, x) = std::round(std::clamp(b, 0.0, 1.0) * 255.0) / 255.0;
      }
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace lrnerv
