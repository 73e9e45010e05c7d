#include "twibridge/pnm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "twibridge/errors.hpp"

namespace twibridge::pnm {
namespace {

struct Header {
  std::string magic;
  std::size_t width = 0;
  std::size_t height = 0;
  int maxval = 0;
};

// Reads the next whitespace-delimited token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string dummy;
      std::getline(in, dummy);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

Header read_header(std::istream& in, const std::filesystem::path& path) {
  Header h;
  h.magic = next_token(in);
  try {
    h.width = std::stoul(next_token(in));
    h.height = std::stoul(next_token(in));
    h.maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    throw IoError("malformed PNM header in " + path.string());
  }
  if (h.maxval != 255) throw IoError("unsupported maxval in " + path.string() + " (only 255)");
  return h;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

}  // namespace

void write_ppm(const std::filesystem::path& path, const Image& image) {
  if (image.channels != 3 && image.channels != 1) throw ShapeError("PPM output needs 1 or 3 channels");
  auto out = open_out(path);
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  std::vector<unsigned char> buf;
  buf.reserve(image.pixel_count() * 3);
  for (std::size_t p = 0; p < image.pixel_count(); ++p) {
    for (std::size_t c = 0; c < 3; ++c) {
      const double v = image.data[p * image.channels + (image.channels == 3 ? c : 0)];
      buf.push_back(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
    }
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Image read_ppm(const std::filesystem::path& path) {
  auto in = open_in(path);
  const Header h = read_header(in, path);
  if (h.magic != "P6") throw IoError(path.string() + " is not a binary PPM");
  std::vector<unsigned char> buf(h.width * h.height * 3);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) throw IoError("truncated PPM " + path.string());
  Image img(h.height, h.width, 3);
  for (std::size_t i = 0; i < buf.size(); ++i) img.data[i] = buf[i] / 255.0;
  return img;
}

void write_pgm(const std::filesystem::path& path, const LabelMap& labels) {
  auto out = open_out(path);
  out << "P5\n" << labels.width << " " << labels.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(labels.labels.data()), static_cast<std::streamsize>(labels.labels.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

LabelMap read_pgm(const std::filesystem::path& path) {
  auto in = open_in(path);
  const Header h = read_header(in, path);
  if (h.magic != "P5") throw IoError(path.string() + " is not a binary PGM");
  LabelMap lm(h.height, h.width);
  in.read(reinterpret_cast<char*>(lm.labels.data()), static_cast<std::streamsize>(lm.labels.size()));
  if (in.gcount() != static_cast<std::streamsize>(lm.labels.size())) throw IoError("truncated PGM " + path.string());
  return lm;
}

}  // namespace twibridge::pnm
