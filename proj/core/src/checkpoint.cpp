#include "frofa/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace frofa {

namespace {

constexpr const char* kFormat = "frofa-checkpoint";

std::size_t element_count(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

}  // namespace

const NamedTensor& Checkpoint::get(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw std::runtime_error("checkpoint has no tensor '" + name + "'");
}

std::filesystem::path checkpoint_index_path(const std::filesystem::path& bin_path) {
  auto p = bin_path;
  return p.replace_extension(".json");
}

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& bin_path) {
  nlohmann::json index{{"format", kFormat}, {"dtype", "float32"}, {"meta", ckpt.meta}};
  auto entries = nlohmann::json::array();
  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot open " + bin_path.string() + " for writing");
  std::size_t offset = 0;
  for (const auto& t : ckpt.tensors) {
    if (element_count(t.shape) != t.values.size()) {
      throw std::invalid_argument("tensor '" + t.name + "' shape does not match its values");
    }
    entries.push_back({{"name", t.name}, {"offset", offset}, {"shape", t.shape}});
    bin.write(reinterpret_cast<const char*>(t.values.data()),
              static_cast<std::streamsize>(t.values.size() * sizeof(float)));
    offset += t.values.size();
  }
  if (!bin) throw std::runtime_error("write failed: " + bin_path.string());
  index["tensors"] = std::move(entries);
  index["total_elements"] = offset;
  std::ofstream idx(checkpoint_index_path(bin_path));
  if (!idx) throw std::runtime_error("cannot write checkpoint index for " + bin_path.string());
  idx << index.dump(2) << '\n';
}

Checkpoint read_checkpoint(const std::filesystem::path& bin_path) {
  std::ifstream idx(checkpoint_index_path(bin_path));
  if (!idx) throw std::runtime_error("missing checkpoint index for " + bin_path.string());
  nlohmann::json index;
  try {
    idx >> index;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed checkpoint index: " + std::string(e.what()));
  }
  if (index.value("format", "") != kFormat) throw std::runtime_error("not a frofa checkpoint index");

  std::ifstream bin(bin_path, std::ios::binary | std::ios::ate);
  if (!bin) throw std::runtime_error("cannot open " + bin_path.string());
  const auto bytes = static_cast<std::size_t>(bin.tellg());
  bin.seekg(0);
  std::vector<float> flat(bytes / sizeof(float));
  if (bytes % sizeof(float) != 0 || flat.size() != index.at("total_elements").get<std::size_t>()) {
    throw std::runtime_error("truncated payload in " + bin_path.string());
  }
  bin.read(reinterpret_cast<char*>(flat.data()), static_cast<std::streamsize>(bytes));

  Checkpoint ckpt;
  ckpt.meta = index.value("meta", nlohmann::json::object());
  for (const auto& e : index.at("tensors")) {
    NamedTensor t;
    t.name = e.at("name").get<std::string>();
    t.shape = e.at("shape").get<std::vector<std::size_t>>();
    const auto offset = e.at("offset").get<std::size_t>();
    const auto n = element_count(t.shape);
    if (offset + n > flat.size()) throw std::runtime_error("tensor '" + t.name + "' exceeds payload");
    t.values.assign(flat.begin() + static_cast<std::ptrdiff_t>(offset),
                    flat.begin() + static_cast<std::ptrdiff_t>(offset + n));
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

Checkpoint to_checkpoint(const MapHeadParams& params) {
  Checkpoint ckpt;
  ckpt.meta = {{"model", "map_head"},
               {"channels", params.channels()},
               {"classes", params.classes()},
               {"heads", params.heads()}};
  for (const auto& s : params.slices()) {
    const auto* begin = params.flat().data() + s.offset;
    ckpt.tensors.push_back({s.name, s.shape, std::vector<float>(begin, begin + s.size())});
  }
  return ckpt;
}

MapHeadParams map_head_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.meta.value("model", "") != "map_head") throw std::runtime_error("checkpoint is not a map head");
  MapHeadParams params(ckpt.meta.at("channels").get<std::size_t>(),
                       ckpt.meta.at("classes").get<std::size_t>(),
                       ckpt.meta.at("heads").get<std::size_t>());
  for (const auto& s : params.slices()) {
    const auto& t = ckpt.get(s.name);
    if (t.shape != s.shape) throw std::runtime_error("shape mismatch for tensor '" + s.name + "'");
    std::copy(t.values.begin(), t.values.end(), params.flat().begin() + static_cast<std::ptrdiff_t>(s.offset));
  }
  return params;
}

}  // namespace frofa
