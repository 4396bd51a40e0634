#include "sensor/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "sensor/errors.hpp"

namespace sensor {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& is, const char* what) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw FatalError(std::string("checkpoint: truncated while reading ") + what);
  return v;
}

struct Record {
  Shape shape;
  std::vector<double> value;
};

std::map<std::string, Record> read_all(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FatalError("checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw FatalError("checkpoint: bad magic in " + path);
  }
  const std::uint32_t version = read_u32(is, "version");
  if (version != kCheckpointVersion) {
    throw FatalError("checkpoint: version mismatch in " + path + " (file " +
                     std::to_string(version) + ", expected " + std::to_string(kCheckpointVersion) + ")");
  }
  std::map<std::string, Record> records;
  while (true) {
    std::uint32_t name_len = 0;
    is.read(reinterpret_cast<char*>(&name_len), sizeof name_len);
    if (is.eof()) break;
    if (!is) throw FatalError("checkpoint: truncated record header in " + path);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const std::uint32_t rank = read_u32(is, "rank");
    Record rec;
    std::size_t n = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      const std::uint32_t d = read_u32(is, "dim");
      rec.shape.push_back(static_cast<int>(d));
      n *= d;
    }
    rec.value.resize(n);
    is.read(reinterpret_cast<char*>(rec.value.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw FatalError("checkpoint: truncated tensor data for '" + name + "' in " + path);
    if (!records.emplace(std::move(name), std::move(rec)).second) {
      throw FatalError("checkpoint: duplicate tensor name in " + path);
    }
  }
  return records;
}

}  // namespace

void save_checkpoint(const std::string& path, const NamedParams& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FatalError("checkpoint: cannot write " + path);
  os.write(kCheckpointMagic, 8);
  write_u32(os, kCheckpointVersion);
  for (const auto& [name, t] : params.items) {
    write_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (int d : t.shape()) write_u32(os, static_cast<std::uint32_t>(d));
    os.write(reinterpret_cast<const char*>(t.value().data()),
             static_cast<std::streamsize>(t.value().size() * sizeof(double)));
  }
  if (!os) throw FatalError("checkpoint: write failed for " + path);
}

void load_checkpoint(const std::string& path, NamedParams& params) {
  auto records = read_all(path);
  for (auto& [name, t] : params.items) {
    auto it = records.find(name);
    if (it == records.end()) throw FatalError("checkpoint: missing tensor '" + name + "' in " + path);
    if (it->second.shape != t.shape()) {
      throw FatalError("checkpoint: shape mismatch for '" + name + "' in " + path + " (file " +
                       shape_str(it->second.shape) + ", expected " + shape_str(t.shape()) + ")");
    }
    t.value() = std::move(it->second.value);
    records.erase(it);
  }
  if (!records.empty()) {
    throw FatalError("checkpoint: unexpected tensor '" + records.begin()->first + "' in " + path);
  }
}

std::vector<double> peek_checkpoint_tensor(const std::string& path, const std::string& name) {
  auto records = read_all(path);
  auto it = records.find(name);
  if (it == records.end()) throw FatalError("checkpoint: missing tensor '" + name + "' in " + path);
  return std::move(it->second.value);
}

}  // namespace sensor
