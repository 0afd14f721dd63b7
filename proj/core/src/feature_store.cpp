#include "frofa/feature_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "frofa/npy.hpp"

namespace frofa {

static_assert(std::endian::native == std::endian::little,
              "cache I/O assumes a little-endian host");

namespace {

constexpr char kCacheMagic[4] = {'F', 'F', 'A', 'C'};
constexpr std::uint32_t kCacheVersion = 1;

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(const std::vector<char>& buf, std::size_t offset) {
  T v;
  std::memcpy(&v, buf.data() + offset, sizeof(T));
  return v;
}

}  // namespace

std::string to_string(Layout layout) {
  return layout == Layout::token_grid ? "token_grid" : "pooled";
}

Layout layout_from_string(const std::string& s) {
  if (s == "token_grid") return Layout::token_grid;
  if (s == "pooled") return Layout::pooled;
  throw std::invalid_argument("unknown layout '" + s + "' (expected token_grid or pooled)");
}

void to_json(nlohmann::json& j, const CacheManifest& m) {
  j = nlohmann::json{{"version", m.version},
                     {"layout", to_string(m.layout)},
                     {"N", m.tokens},
                     {"C", m.channels},
                     {"E", m.num_examples},
                     {"S", m.num_classes},
                     {"split_name", m.split_name},
                     {"source", m.source}};
}

void from_json(const nlohmann::json& j, CacheManifest& m) {
  m.version = j.value("version", kCacheVersion);
  m.layout = layout_from_string(j.at("layout").get<std::string>());
  m.tokens = j.at("N").get<std::uint32_t>();
  m.channels = j.at("C").get<std::uint32_t>();
  m.num_examples = j.at("E").get<std::uint64_t>();
  m.num_classes = j.at("S").get<std::uint32_t>();
  m.split_name = j.value("split_name", std::string("all"));
  m.source = j.value("source", std::string());
}

void FeatureCache::validate() const {
  const auto& m = manifest;
  if (m.num_examples < 1) throw std::invalid_argument("cache must hold at least one example");
  if (m.num_classes < 2) throw std::invalid_argument("cache must have at least two classes");
  if (m.tokens < 1 || m.channels < 1) throw std::invalid_argument("cache N and C must be positive");
  if (m.layout == Layout::pooled && m.tokens != 1) {
    throw std::invalid_argument("pooled layout requires N=1");
  }
  if (labels.size() != m.num_examples || features.size() != m.num_examples) {
    throw std::invalid_argument("shape mismatch: manifest E=" + std::to_string(m.num_examples) +
                                " but " + std::to_string(labels.size()) + " labels and " +
                                std::to_string(features.size()) + " feature tensors");
  }
  for (const auto label : labels) {
    if (label >= m.num_classes) {
      throw std::invalid_argument("label out of range: " + std::to_string(label) +
                                  " >= S=" + std::to_string(m.num_classes));
    }
  }
  for (const auto& f : features) {
    if (f.tokens() != m.tokens || f.channels() != m.channels) {
      throw std::invalid_argument("shape mismatch: tensor " + std::to_string(f.tokens()) + "x" +
                                  std::to_string(f.channels()) + " vs manifest " +
                                  std::to_string(m.tokens) + "x" + std::to_string(m.channels));
    }
    if (!f.all_finite()) throw std::invalid_argument("feature tensor contains NaN or Inf");
  }
}

FeatureCache FeatureCache::subset(const std::vector<std::size_t>& indices,
                                  std::string split_name) const {
  FeatureCache out;
  out.manifest = manifest;
  out.manifest.split_name = std::move(split_name);
  out.manifest.num_examples = indices.size();
  out.labels.reserve(indices.size());
  out.features.reserve(indices.size());
  for (auto i : indices) {
    out.labels.push_back(labels.at(i));
    out.features.push_back(features.at(i));
  }
  return out;
}

std::filesystem::path sidecar_path(const std::filesystem::path& cache_path) {
  auto p = cache_path;
  p.replace_extension(".json");
  return p;
}

void write_cache(const FeatureCache& cache, const std::filesystem::path& path) {
  cache.validate();
  const auto& m = cache.manifest;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(kCacheMagic, 4);
  put<std::uint32_t>(out, m.version);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(m.layout));
  const char pad[3] = {0, 0, 0};
  out.write(pad, 3);
  put<std::uint32_t>(out, m.tokens);
  put<std::uint32_t>(out, m.channels);
  put<std::uint32_t>(out, m.num_classes);
  put<std::uint64_t>(out, m.num_examples);
  out.write(reinterpret_cast<const char*>(cache.labels.data()),
            static_cast<std::streamsize>(cache.labels.size() * sizeof(std::uint32_t)));
  for (const auto& f : cache.features) {
    out.write(reinterpret_cast<const char*>(f.data().data()),
              static_cast<std::streamsize>(f.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("I/O failure writing " + path.string());
  out.close();

  std::ofstream side(sidecar_path(path), std::ios::trunc);
  if (!side) throw std::runtime_error("cannot write manifest sidecar for " + path.string());
  side << nlohmann::json(m).dump(2) << "\n";
}

FeatureCache read_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open feature cache " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (buf.size() < 4 || std::memcmp(buf.data(), kCacheMagic, 4) != 0) {
    throw std::runtime_error(path.string() + ": not a feature cache");
  }
  if (buf.size() < kCacheHeaderBytes) throw std::runtime_error(path.string() + ": truncated header");

  FeatureCache cache;
  auto& m = cache.manifest;
  m.version = get<std::uint32_t>(buf, 4);
  if (m.version != kCacheVersion) {
    throw std::runtime_error(path.string() + ": unsupported cache version " +
                             std::to_string(m.version));
  }
  const auto layout_byte = get<std::uint8_t>(buf, 8);
  if (layout_byte > 1) throw std::runtime_error(path.string() + ": invalid layout byte");
  m.layout = static_cast<Layout>(layout_byte);
  m.tokens = get<std::uint32_t>(buf, 12);
  m.channels = get<std::uint32_t>(buf, 16);
  m.num_classes = get<std::uint32_t>(buf, 20);
  m.num_examples = get<std::uint64_t>(buf, 24);

  const std::uint64_t per_example = static_cast<std::uint64_t>(m.tokens) * m.channels;
  const std::uint64_t expected = kCacheHeaderBytes + m.num_examples * 4 +
                                 m.num_examples * per_example * 4;
  if (buf.size() < expected) throw std::runtime_error(path.string() + ": truncated payload");
  if (buf.size() > expected) {
    throw std::runtime_error(path.string() + ": byte count mismatch (" +
                             std::to_string(buf.size()) + " bytes, expected " +
                             std::to_string(expected) + ")");
  }

  cache.labels.resize(m.num_examples);
  std::memcpy(cache.labels.data(), buf.data() + kCacheHeaderBytes, m.num_examples * 4);
  std::size_t offset = kCacheHeaderBytes + m.num_examples * 4;
  cache.features.reserve(m.num_examples);
  for (std::uint64_t e = 0; e < m.num_examples; ++e) {
    std::vector<float> values(per_example);
    std::memcpy(values.data(), buf.data() + offset, per_example * 4);
    offset += per_example * 4;
    cache.features.emplace_back(m.tokens, m.channels, std::move(values));
  }

  const auto side = sidecar_path(path);
  if (std::filesystem::exists(side)) {
    std::ifstream js(side);
    const auto j = nlohmann::json::parse(js, nullptr, /*allow_exceptions=*/false);
    if (j.is_object()) {
      m.split_name = j.value("split_name", m.split_name);
      m.source = j.value("source", m.source);
    }
  }
  cache.validate();
  return cache;
}

FeatureCache import_npy(const std::filesystem::path& features_path,
                        const std::filesystem::path& labels_path, Layout layout) {
  const auto feats = npy::read(features_path);
  const auto labs = npy::read(labels_path);

  if (feats.descr != "<f4") {
    throw std::invalid_argument("unsupported dtype '" + feats.descr + "' for features (need <f4)");
  }
  if (labs.descr != "<i4" && labs.descr != "<i8") {
    throw std::invalid_argument("unsupported dtype '" + labs.descr + "' for labels (need <i4 or <i8)");
  }
  if (feats.fortran_order || labs.fortran_order) {
    throw std::invalid_argument("only C-order arrays are supported");
  }
  const std::size_t want_rank = layout == Layout::token_grid ? 3 : 2;
  if (feats.shape.size() != want_rank) {
    throw std::invalid_argument("rank mismatch: " + to_string(layout) + " features need rank " +
                                std::to_string(want_rank) + ", got rank " +
                                std::to_string(feats.shape.size()));
  }
  if (labs.shape.size() != 1) {
    throw std::invalid_argument("rank mismatch: labels must have rank 1, got rank " +
                                std::to_string(labs.shape.size()));
  }
  const std::uint64_t num = feats.shape[0];
  if (labs.shape[0] != num) {
    throw std::invalid_argument("E mismatch: " + std::to_string(num) + " feature rows vs " +
                                std::to_string(labs.shape[0]) + " labels");
  }

  FeatureCache cache;
  auto& m = cache.manifest;
  m.layout = layout;
  m.tokens = layout == Layout::token_grid ? static_cast<std::uint32_t>(feats.shape[1]) : 1u;
  m.channels = static_cast<std::uint32_t>(feats.shape.back());
  m.num_examples = num;
  m.split_name = "imported";
  m.source = features_path.filename().string();

  std::int64_t max_label = -1;
  cache.labels.resize(num);
  for (std::uint64_t i = 0; i < num; ++i) {
    std::int64_t v;
    if (labs.descr == "<i4") {
      std::int32_t v32;
      std::memcpy(&v32, labs.bytes.data() + i * 4, 4);
      v = v32;
    } else {
      std::memcpy(&v, labs.bytes.data() + i * 8, 8);
    }
    if (v < 0 || v > UINT32_MAX) {
      throw std::invalid_argument("label out of range: " + std::to_string(v));
    }
    cache.labels[i] = static_cast<std::uint32_t>(v);
    max_label = std::max(max_label, v);
  }
  m.num_classes = static_cast<std::uint32_t>(max_label + 1);

  const std::size_t per_example = static_cast<std::size_t>(m.tokens) * m.channels;
  cache.features.reserve(num);
  for (std::uint64_t i = 0; i < num; ++i) {
    std::vector<float> values(per_example);
    std::memcpy(values.data(), feats.bytes.data() + i * per_example * 4, per_example * 4);
    cache.features.emplace_back(m.tokens, m.channels, std::move(values));
  }
  cache.validate();
  return cache;
}

void export_npy(const FeatureCache& cache, const std::filesystem::path& features_path,
                const std::filesystem::path& labels_path) {
  const auto& m = cache.manifest;
  std::vector<float> flat;
  flat.reserve(m.num_examples * m.tokens * m.channels);
  for (const auto& f : cache.features) flat.insert(flat.end(), f.data().begin(), f.data().end());
  std::vector<std::uint64_t> shape = m.layout == Layout::token_grid
                                         ? std::vector<std::uint64_t>{m.num_examples, m.tokens, m.channels}
                                         : std::vector<std::uint64_t>{m.num_examples, m.channels};
  npy::write(features_path, npy::from_floats(flat, shape));
  std::vector<std::int64_t> labels(cache.labels.begin(), cache.labels.end());
  npy::write(labels_path, npy::from_int64(labels, {m.num_examples}));
}

FeatureCache generate_synthetic(const SyntheticSpec& spec) {
  if (spec.num_classes < 2 || spec.per_class < 1 || spec.tokens < 1 || spec.channels < 1) {
    throw std::invalid_argument("synthetic cache needs S>=2 and positive per_class, N, C");
  }
  const RngKey root = RngKey(spec.seed).fold("synthetic");

  std::vector<std::vector<double>> means(spec.num_classes, std::vector<double>(spec.channels));
  for (std::uint32_t s = 0; s < spec.num_classes; ++s) {
    Rng rng(root.fold({0, s}));
    for (auto& mu : means[s]) mu = spec.cluster_scale * rng.normal();
  }

  FeatureCache cache;
  auto& m = cache.manifest;
  m.layout = spec.tokens == 1 ? Layout::pooled : Layout::token_grid;
  m.tokens = spec.tokens;
  m.channels = spec.channels;
  m.num_classes = spec.num_classes;
  m.num_examples = static_cast<std::uint64_t>(spec.num_classes) * spec.per_class;
  m.split_name = "all";
  m.source = "synthetic(S=" + std::to_string(spec.num_classes) +
             ",per_class=" + std::to_string(spec.per_class) + ",seed=" + std::to_string(spec.seed) +
             ")";

  cache.labels.reserve(m.num_examples);
  cache.features.reserve(m.num_examples);
  for (std::uint32_t s = 0; s < spec.num_classes; ++s) {
    for (std::uint32_t i = 0; i < spec.per_class; ++i) {
      Rng rng(root.fold({1, s, i}));
      FeatureTensor f(spec.tokens, spec.channels);
      for (std::uint32_t n = 0; n < spec.tokens; ++n) {
        for (std::uint32_t c = 0; c < spec.channels; ++c) {
          f.at(n, c) = static_cast<float>(means[s][c] + spec.noise_scale * rng.normal());
        }
      }
      cache.labels.push_back(s);
      cache.features.push_back(std::move(f));
    }
  }
  return cache;
}

namespace {
std::vector<std::vector<std::size_t>> members_by_class(const FeatureCache& cache) {
  std::vector<std::vector<std::size_t>> members(cache.num_classes());
  for (std::size_t i = 0; i < cache.size(); ++i) members[cache.labels[i]].push_back(i);
  return members;
}
}  // namespace

FewShotSample sample_few_shot(const FeatureCache& cache, std::uint32_t k, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("shot count must be positive");
  const auto members = members_by_class(cache);
  const RngKey root = RngKey(seed).fold("few_shot");

  FewShotSample sample{k, seed, {}};
  sample.indices.reserve(static_cast<std::size_t>(k) * members.size());
  for (std::size_t s = 0; s < members.size(); ++s) {
    if (members[s].size() < k) {
      throw std::invalid_argument("class " + std::to_string(s) + " has " +
                                  std::to_string(members[s].size()) + " examples, fewer than k=" +
                                  std::to_string(k));
    }
    Rng rng(root.fold(s));
    for (auto pos : rng.sample_without_replacement(members[s].size(), k)) {
      sample.indices.push_back(members[s][pos]);
    }
  }
  return sample;
}

SplitCaches holdout_split(const FeatureCache& cache, double val_fraction, double test_fraction,
                          std::uint64_t seed) {
  if (val_fraction < 0 || test_fraction < 0 || val_fraction + test_fraction >= 1.0) {
    throw std::invalid_argument("holdout fractions must be non-negative and sum below 1");
  }
  const auto members = members_by_class(cache);
  const RngKey root = RngKey(seed).fold("holdout");
  std::vector<std::size_t> train, val, test;
  for (std::size_t s = 0; s < members.size(); ++s) {
    const auto n = members[s].size();
    Rng rng(root.fold(s));
    const auto order = rng.permutation(n);
    const auto n_val = static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(n)));
    const auto n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(n)));
    for (std::size_t i = 0; i < n; ++i) {
      const auto idx = members[s][order[i]];
      if (i < n_val) {
        val.push_back(idx);
      } else if (i < n_val + n_test) {
        test.push_back(idx);
      } else {
        train.push_back(idx);
      }
    }
  }
  return {cache.subset(train, "train"), cache.subset(val, "val"), cache.subset(test, "test")};
}

FeatureCache mean_pool(const FeatureCache& cache) {
  if (cache.manifest.layout == Layout::pooled) return cache;
  FeatureCache out;
  out.manifest = cache.manifest;
  out.manifest.layout = Layout::pooled;
  out.manifest.tokens = 1;
  out.labels = cache.labels;
  out.features.reserve(cache.size());
  for (const auto& f : cache.features) {
    std::vector<double> acc(f.channels(), 0.0);
    for (std::size_t n = 0; n < f.tokens(); ++n) {
      for (std::size_t c = 0; c < f.channels(); ++c) acc[c] += f.at(n, c);
    }
    FeatureTensor pooled(1, f.channels());
    for (std::size_t c = 0; c < f.channels(); ++c) {
      pooled.at(0, c) = static_cast<float>(acc[c] / static_cast<double>(f.tokens()));
    }
    out.features.push_back(std::move(pooled));
  }
  return out;
}

}  // namespace frofa
