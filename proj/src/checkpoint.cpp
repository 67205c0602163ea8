#include "ogsf/checkpoint.hpp"

#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <sstream>

#include "ogsf/binary_io.hpp"
#include "ogsf/error.hpp"

namespace ogsf {

namespace io {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace io

std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedTensor>& tensors) {
  io::Writer w;
  w.put_bytes("OGSW");
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    if (name.size() > std::numeric_limits<std::uint16_t>::max())
      throw ContractError("checkpoint: tensor name too long: " + name.substr(0, 32) + "...");
    if (t.rank() > std::numeric_limits<std::uint8_t>::max())
      throw ContractError("checkpoint: rank too large for '" + name + "'");
    w.put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    w.put_bytes(name);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(t.rank()));
    for (auto d : t.shape()) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
    for (auto v : t.values()) w.put<float>(static_cast<float>(v));
  }
  return std::move(w.bytes());
}

std::vector<CheckpointEntry> decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  io::Reader r(bytes, "checkpoint");
  if (bytes.size() < 4 || r.get_string(4) != "OGSW") throw FormatError("checkpoint: bad magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  const auto count = r.get<std::uint32_t>();
  std::vector<CheckpointEntry> entries;
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    const auto len = r.get<std::uint16_t>();
    e.name = r.get_string(len);
    const auto rank = r.get<std::uint8_t>();
    for (std::uint8_t d = 0; d < rank; ++d) e.shape.push_back(r.get<std::uint32_t>());
    const std::size_t n = shape_numel(e.shape);
    r.require(n * sizeof(float));
    e.values.resize(n);
    for (auto& v : e.values) v = r.get<float>();
    entries.push_back(std::move(e));
  }
  return entries;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  io::write_file(path, encode_checkpoint(tensors));
}

std::vector<CheckpointEntry> load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(io::read_file(path));
}

void assign_checkpoint(const std::vector<CheckpointEntry>& entries,
                       std::vector<NamedTensor>& params) {
  std::map<std::string, const CheckpointEntry*> by_name;
  for (const auto& e : entries) by_name[e.name] = &e;
  std::ostringstream problems;
  for (auto& [name, t] : params) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      problems << " missing:" << name;
    } else if (it->second->shape != t.shape()) {
      problems << " shape:" << name << shape_string(it->second->shape) << "!="
               << shape_string(t.shape());
    }
  }
  for (const auto& e : entries) {
    bool known = false;
    for (const auto& p : params) known = known || p.name == e.name;
    if (!known) problems << " unexpected:" << e.name;
  }
  if (!problems.str().empty())
    throw DimensionError("checkpoint does not match network:" + problems.str());
  for (auto& [name, t] : params) {
    const auto* e = by_name.at(name);
    auto dst = t.mutable_values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<Real>(e->values[i]);
  }
}

}  // namespace ogsf
