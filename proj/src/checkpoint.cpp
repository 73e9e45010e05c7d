#include "twibridge/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "twibridge/errors.hpp"
#include "twibridge/rng.hpp"

namespace twibridge::checkpoint {
namespace {

constexpr char kMagic[4] = {'T', 'W', 'B', 'R'};
constexpr std::size_t kHeaderSize = 4 + 2 + 3 * 4;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <typename T>
T get_le(std::span<const std::uint8_t> in, std::size_t& pos) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(in[pos + i]) << (8 * i);
  pos += sizeof(T);
  return v;
}

}  // namespace

std::vector<std::uint8_t> serialize(const segnet::ModelParams& model) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.reserve(kHeaderSize + model.weights.size() * 8);
  put_le<std::uint16_t>(out, kFormatVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.class_count));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.patch_radius));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.channels));
  for (double w : model.weights) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(w));
  return out;
}

segnet::ModelParams deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw IoError("not a TWBR checkpoint");
  }
  std::size_t pos = 4;
  const auto version = get_le<std::uint16_t>(bytes, pos);
  if (version != kFormatVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
  segnet::ModelParams m;
  m.class_count = get_le<std::uint32_t>(bytes, pos);
  m.patch_radius = get_le<std::uint32_t>(bytes, pos);
  m.channels = get_le<std::uint32_t>(bytes, pos);
  if (m.class_count < 2 || m.channels == 0) throw IoError("checkpoint header has invalid shape");
  const std::size_t n = m.class_count * m.feature_count();
  if (bytes.size() != kHeaderSize + n * 8) throw IoError("checkpoint size does not match header");
  m.weights.resize(n);
  for (double& w : m.weights) w = std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos));
  return m;
}

void save(const std::filesystem::path& path, const segnet::ModelParams& model) {
  const auto bytes = serialize(model);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

segnet::ModelParams load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

std::string hash(const segnet::ModelParams& model) {
  const auto bytes = serialize(model);
  const std::uint64_t h =
      fnv1a(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace twibridge::checkpoint
