#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "msd/motion.hpp"
#include "msd/types.hpp"

namespace msd::io {

// File/format failures; distinct from solver errors so the CLI can map
// them to their own exit code.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GrayImage {
  int width = 0, height = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

// Signal CSV: one real per line, blank lines ignored.
Vec read_signal_csv(const std::string& path);
void write_signal_csv(const std::string& path, const Vec& v);

// Flow CSV: header "x,y,u,v", one row per pixel, row-major.
FlowField read_flow_csv(const std::string& path);
void write_flow_csv(const std::string& path, const FlowField& flow);

// 8-bit grayscale PGM, P5 (binary) or P2 (ASCII) accepted on read;
// always written as P5.
GrayImage read_pgm(const std::string& path);
void write_pgm(const std::string& path, const GrayImage& img);

// Masks travel as PGM with 0 = background, 255 = foreground.
BinVec mask_from_image(const GrayImage& img);
GrayImage mask_to_image(const BinVec& mask, int width, int height);

void write_text(const std::string& path, const std::string& text);

}  // namespace msd::io
