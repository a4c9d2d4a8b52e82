#include "transtext/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace transtext {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'T', 'T', 'X', 'T'};

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const char* what) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw std::runtime_error(std::string("checkpoint truncated reading ") + what);
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::string& config_json, const ParamStore& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kCheckpointVersion);
  put<std::uint64_t>(os, config_json.size());
  os.write(config_json.data(), static_cast<std::streamsize>(config_json.size()));
  for (std::size_t i = 0; i < params.entries().size(); ++i) {
    const auto& e = params.entries()[i];
    put<std::uint32_t>(os, static_cast<std::uint32_t>(e.name.size()));
    os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(e.shape.size()));
    for (std::size_t d : e.shape) put<std::uint64_t>(os, d);
    const auto v = params.view(i);
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error(path.string() + " is not a checkpoint");
  const auto version = get<std::uint32_t>(is, "version");
  if (version != kCheckpointVersion) throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));

  Checkpoint ck;
  const auto blob = get<std::uint64_t>(is, "config length");
  if (blob > (1ull << 30)) throw std::runtime_error("checkpoint config blob too large");
  ck.config_json.resize(blob);
  if (!is.read(ck.config_json.data(), static_cast<std::streamsize>(blob))) throw std::runtime_error("checkpoint truncated in config");

  while (is.peek() != std::char_traits<char>::eof()) {
    const auto len = get<std::uint32_t>(is, "name length");
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw std::runtime_error("checkpoint truncated in tensor name");
    const auto ndim = get<std::uint32_t>(is, "ndim");
    std::vector<std::size_t> shape(ndim);
    for (auto& d : shape) d = get<std::uint64_t>(is, "dims");
    const std::size_t idx = ck.params.add(name, shape);
    auto v = ck.params.view(idx);
    if (!is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double))))
      throw std::runtime_error("checkpoint truncated in tensor " + name);
  }
  return ck;
}

}  // namespace transtext
