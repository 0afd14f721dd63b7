#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "frofa/feature_tensor.hpp"
#include "frofa/rng.hpp"

namespace frofa {

enum class Layout : std::uint8_t { token_grid = 0, pooled = 1 };

std::string to_string(Layout layout);
Layout layout_from_string(const std::string& s);

struct CacheManifest {
  std::uint32_t version = 1;
  Layout layout = Layout::token_grid;
  std::uint32_t tokens = 0;    // N (1 for pooled)
  std::uint32_t channels = 0;  // C
  std::uint64_t num_examples = 0;
  std::uint32_t num_classes = 0;
  std::string split_name = "all";
  std::string source;

  friend bool operator==(const CacheManifest&, const CacheManifest&) = default;
};

void to_json(nlohmann::json& j, const CacheManifest& m);
void from_json(const nlohmann::json& j, CacheManifest& m);

// An in-memory dataset of frozen features with integer labels in [0, S).
struct FeatureCache {
  CacheManifest manifest;
  std::vector<std::uint32_t> labels;
  std::vector<FeatureTensor> features;

  [[nodiscard]] std::size_t size() const { return labels.size(); }
  [[nodiscard]] std::uint32_t num_classes() const { return manifest.num_classes; }

  // Subset with the same class count and layout; manifest E is updated.
  [[nodiscard]] FeatureCache subset(const std::vector<std::size_t>& indices,
                                    std::string split_name) const;
  // Throws std::invalid_argument when any contract of the manifest is violated.
  void validate() const;

  friend bool operator==(const FeatureCache&, const FeatureCache&) = default;
};

// Binary cache, little-endian:
//   "FFAC" | version u32 | layout u8 | pad[3] | N u32 | C u32 | S u32 | E u64 |
//   labels E x u32 | data E*N*C x f32 row-major [example][token][channel]
// A sidecar "<stem>.json" carries the manifest including split_name/source.
inline constexpr std::size_t kCacheHeaderBytes = 32;

void write_cache(const FeatureCache& cache, const std::filesystem::path& path);
FeatureCache read_cache(const std::filesystem::path& path);
std::filesystem::path sidecar_path(const std::filesystem::path& cache_path);

// .npy ingestion: features (E,N,C) for token_grid or (E,C) for pooled, "<f4";
// labels (E,), "<i4" or "<i8". S = 1 + max(label).
FeatureCache import_npy(const std::filesystem::path& features_path,
                        const std::filesystem::path& labels_path, Layout layout);
void export_npy(const FeatureCache& cache, const std::filesystem::path& features_path,
                const std::filesystem::path& labels_path);

struct SyntheticSpec {
  std::uint32_t num_classes = 10;
  std::uint32_t per_class = 30;
  std::uint32_t tokens = 16;
  std::uint32_t channels = 8;
  double cluster_scale = 1.0;
  double noise_scale = 1.0;
  std::uint64_t seed = 0;
};

// Class-conditional Gaussian tokens: one mean per (class, channel) with
// standard deviation cluster_scale, plus i.i.d. per-token noise.
// Examples are ordered class-major.
FeatureCache generate_synthetic(const SyntheticSpec& spec);

struct FewShotSample {
  std::uint32_t shots = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> indices;  // class-major, exactly `shots` per class
};

// Exactly k distinct indices per class, drawn with a key derived from (seed, class).
FewShotSample sample_few_shot(const FeatureCache& cache, std::uint32_t k, std::uint64_t seed);

// Deterministic per-class holdout split of a single cache into
// train pool / validation / test.
struct SplitCaches {
  FeatureCache train;
  FeatureCache val;
  FeatureCache test;
};
SplitCaches holdout_split(const FeatureCache& cache, double val_fraction, double test_fraction,
                          std::uint64_t seed);

// Mean over tokens: N x C -> 1 x C. Identity on pooled caches.
FeatureCache mean_pool(const FeatureCache& cache);

}  // namespace frofa
