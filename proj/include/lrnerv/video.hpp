#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lrnerv/tensor.hpp"

namespace lrnerv {

// Key = value text next to the frame files:
//   width = 128
//   height = 64
//   frames = 8
//   pattern = frame_%04d.ppm   (printf-style, one integer conversion)
//   format = ppm               (binary P6, maxval 255)
//   start = 0                  (index of the first file, optional)
struct VideoManifest {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t frames = 0;
  std::string pattern = "frame_%04d.ppm";
  std::string format = "ppm";
  std::size_t start = 0;

  std::string frame_path(const std::string& dir, std::size_t index) const;
};

VideoManifest parse_manifest(const std::string& text);
std::string format_manifest(const VideoManifest& m);

// 3 x H x W tensor with byte / 255.
Tensor read_ppm(const std::string& path);
// Values are clamped to [0, 1] and rounded to the nearest byte.
void write_ppm(const std::string& path, const Tensor& frame);
std::vector<std::uint8_t> encode_ppm(const Tensor& frame);
Tensor decode_ppm(const std::vector<std::uint8_t>& bytes, const std::string& what = "PPM");

std::vector<Tensor> load_video(const std::string& manifest_path);
// Writes the frames and a manifest named `manifest_name` into `dir`.
void write_video(const std::string& dir, const std::vector<Tensor>& frames,
                 const std::string& manifest_name = "video.txt", const std::string& pattern = "frame_%04d.ppm");

// Smooth colour gradient drifting diagonally with a soft-edged box moving
// across it. Values are 8-bit representable so the video survives PPM export.
std::vector<Tensor> synthetic_video(std::size_t frames, std::size_t height, std::size_t width);

}  // namespace lrnerv
