#include "texdistill/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "texdistill/serialization.hpp"

namespace texdistill {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'T', 'X', 'D', 'C', 'K', 'P', 'T', '\0'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const std::string& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw std::runtime_error("truncated checkpoint " + path);
  return v;
}

void write_doubles(std::ostream& os, std::span<const double> v) {
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_doubles(std::istream& is, std::size_t n, const std::string& path) {
  std::vector<double> v(n);
  if (!is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double))))
    throw std::runtime_error("truncated checkpoint " + path);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const DistillState& state) {
  nlohmann::json header;
  header["hash_grid"] = state.field.config();
  header["adam"] = state.adam.params();
  header["adam_steps"] = state.adam.steps();
  header["next_iteration"] = state.next_iteration;
  header["parameter_count"] = state.field.parameter_count();
  const std::string text = header.dump();

  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write checkpoint " + tmp);
    os.write(kMagic, sizeof(kMagic));
    write_pod<std::uint32_t>(os, kCheckpointVersion);
    write_pod<std::uint64_t>(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    write_doubles(os, state.field.parameters());
    write_doubles(os, state.adam.first_moment());
    write_doubles(os, state.adam.second_moment());
    if (!os) throw std::runtime_error("failed writing checkpoint " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

DistillState load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path);
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  const auto version = read_pod<std::uint32_t>(is, path);
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint " + path + " has version " + std::to_string(version) + ", expected " +
                             std::to_string(kCheckpointVersion));
  const auto header_len = read_pod<std::uint64_t>(is, path);
  if (header_len > (1u << 24)) throw std::runtime_error("corrupt checkpoint header in " + path);
  std::string text(header_len, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(header_len)))
    throw std::runtime_error("truncated checkpoint " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw std::runtime_error("corrupt checkpoint header in " + path + ": " + e.what());
  }
  const auto grid = header.at("hash_grid").get<HashGridConfig>();
  const auto adam = header.at("adam").get<AdamParams>();
  const auto n = header.at("parameter_count").get<std::size_t>();
  if (n != TextureField::parameter_count_for(grid))
    throw std::runtime_error("checkpoint parameter count does not match its grid config");

  auto params = read_doubles(is, n, path);
  auto m = read_doubles(is, n, path);
  auto v = read_doubles(is, n, path);
  if (is.peek() != std::char_traits<char>::eof()) throw std::runtime_error("trailing bytes in checkpoint " + path);

  DistillState state(TextureField(grid, std::move(params)), adam);
  state.adam.restore(header.at("adam_steps").get<std::int64_t>(), std::move(m), std::move(v));
  state.next_iteration = header.at("next_iteration").get<int>();
  return state;
}

}  // namespace texdistill
