#include "io.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace msd::io {

namespace {

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream f(path, mode);
  if (!f) throw IoError("cannot open for reading: " + path);
  return f;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream f(path, mode);
  if (!f) throw IoError("cannot open for writing: " + path);
  return f;
}

// Skips whitespace and '#' comment lines in a PGM header.
int pgm_header_int(std::istream& in, const std::string& path) {
  int c;
  while ((c = in.peek()) != EOF) {
    if (std::isspace(c)) {
      in.get();
    } else if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else {
      break;
    }
  }
  int value;
  if (!(in >> value)) throw IoError("truncated PGM header: " + path);
  return value;
}

}  // namespace

Vec read_signal_csv(const std::string& path) {
  auto f = open_in(path);
  std::vector<double> values;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    try {
      std::size_t used = 0;
      const double v = std::stod(line, &used);
      // Trailing garbage after the number is a format error, not noise.
      for (std::size_t i = used; i < line.size(); ++i)
        if (!std::isspace(static_cast<unsigned char>(line[i])))
          throw std::invalid_argument("trailing characters");
      values.push_back(v);
    } catch (const std::exception&) {
      throw IoError(path + ":" + std::to_string(lineno) + ": not a number: " + line);
    }
  }
  if (values.empty()) throw IoError("empty signal file: " + path);
  return Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void write_signal_csv(const std::string& path, const Vec& v) {
  auto f = open_out(path);
  f.precision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) f << v[i] << "\n";
  if (!f) throw IoError("write failed: " + path);
}

FlowField read_flow_csv(const std::string& path) {
  auto f = open_in(path);
  std::string line;
  if (!std::getline(f, line)) throw IoError("empty flow file: " + path);
  // Tolerate a trailing \r from Windows-edited files.
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
  if (line != "x,y,u,v")
    throw IoError(path + ": expected header \"x,y,u,v\", got \"" + line + "\"");

  struct Row {
    int x, y;
    double u, v;
  };
  std::vector<Row> rows;
  int max_x = -1, max_y = -1;
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::istringstream ss(line);
    Row r;
    char c1, c2, c3;
    if (!(ss >> r.x >> c1 >> r.y >> c2 >> r.u >> c3 >> r.v) ||
        c1 != ',' || c2 != ',' || c3 != ',')
      throw IoError(path + ":" + std::to_string(lineno) + ": malformed flow row");
    if (r.x < 0 || r.y < 0)
      throw IoError(path + ":" + std::to_string(lineno) + ": negative pixel coordinate");
    max_x = std::max(max_x, r.x);
    max_y = std::max(max_y, r.y);
    rows.push_back(r);
  }

  FlowField flow;
  flow.width = max_x + 1;
  flow.height = max_y + 1;
  if (static_cast<int>(rows.size()) != flow.width * flow.height)
    throw IoError(path + ": expected " + std::to_string(flow.width * flow.height) +
                  " rows for a " + std::to_string(flow.width) + "x" +
                  std::to_string(flow.height) + " grid, got " +
                  std::to_string(rows.size()));
  flow.u = Vec::Zero(flow.size());
  flow.v = Vec::Zero(flow.size());
  std::vector<char> seen(flow.size(), 0);
  for (const Row& r : rows) {
    const int i = r.y * flow.width + r.x;
    if (seen[i]) throw IoError(path + ": duplicate pixel (" + std::to_string(r.x) +
                               "," + std::to_string(r.y) + ")");
    seen[i] = 1;
    flow.u[i] = r.u;
    flow.v[i] = r.v;
  }
  flow.validate();
  return flow;
}

void write_flow_csv(const std::string& path, const FlowField& flow) {
  flow.validate();
  auto f = open_out(path);
  f.precision(17);
  f << "x,y,u,v\n";
  for (int y = 0; y < flow.height; ++y)
    for (int x = 0; x < flow.width; ++x) {
      const int i = y * flow.width + x;
      f << x << "," << y << "," << flow.u[i] << "," << flow.v[i] << "\n";
    }
  if (!f) throw IoError("write failed: " + path);
}

GrayImage read_pgm(const std::string& path) {
  auto f = open_in(path, std::ios::in | std::ios::binary);
  std::string magic;
  if (!(f >> magic) || (magic != "P5" && magic != "P2"))
    throw IoError(path + ": not a PGM file (magic \"" + magic + "\")");

  GrayImage img;
  img.width = pgm_header_int(f, path);
  img.height = pgm_header_int(f, path);
  const int maxval = pgm_header_int(f, path);
  if (img.width < 1 || img.height < 1)
    throw IoError(path + ": bad PGM dimensions");
  if (maxval < 1 || maxval > 255)
    throw IoError(path + ": only 8-bit PGM supported (maxval " +
                  std::to_string(maxval) + ")");

  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  img.pixels.resize(n);
  if (magic == "P5") {
    f.get();  // single whitespace byte after maxval
    f.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(f.gcount()) != n)
      throw IoError(path + ": truncated PGM pixel data");
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      int v;
      if (!(f >> v) || v < 0 || v > maxval)
        throw IoError(path + ": bad ASCII PGM sample");
      img.pixels[i] = static_cast<std::uint8_t>(v);
    }
  }
  return img;
}

void write_pgm(const std::string& path, const GrayImage& img) {
  if (img.width < 1 || img.height < 1 ||
      img.pixels.size() != static_cast<std::size_t>(img.width) * img.height)
    throw IoError("write_pgm: inconsistent image");
  auto f = open_out(path, std::ios::out | std::ios::binary);
  f << "P5\n" << img.width << " " << img.height << "\n255\n";
  f.write(reinterpret_cast<const char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (!f) throw IoError("write failed: " + path);
}

BinVec mask_from_image(const GrayImage& img) {
  BinVec mask(static_cast<int>(img.pixels.size()));
  for (int i = 0; i < mask.size(); ++i) mask[i] = img.pixels[i] >= 128 ? 1 : 0;
  return mask;
}

GrayImage mask_to_image(const BinVec& mask, int width, int height) {
  if (mask.size() != static_cast<Eigen::Index>(width) * height)
    throw IoError("mask_to_image: size does not match dimensions");
  GrayImage img;
  img.width = width;
  img.height = height;
  img.pixels.resize(mask.size());
  for (int i = 0; i < mask.size(); ++i) img.pixels[i] = mask[i] ? 255 : 0;
  return img;
}

void write_text(const std::string& path, const std::string& text) {
  auto f = open_out(path, std::ios::out | std::ios::binary);
  f << text;
  if (!f) throw IoError("write failed: " + path);
}

}  // namespace msd::io
