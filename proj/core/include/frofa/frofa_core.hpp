#pragma once

#include <functional>
#include <string>
#include <vector>

#include "frofa/feature_tensor.hpp"
#include "frofa/rng.hpp"

namespace frofa {

struct AugmentationSpec;

// How augmentation values are sampled and how the value range is normalized.
//   default_  one sampled value for the whole tensor, global min/max
//   channel   one sampled value per channel, global min/max
//   channel2  one sampled value per channel, per-channel min/max
enum class Variant { default_, channel, channel2 };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

enum class NormScope { global, per_channel };

inline NormScope scope_for(Variant v) {
  return v == Variant::channel2 ? NormScope::per_channel : NormScope::global;
}

struct NormStats {
  NormScope scope = NormScope::global;
  // One entry for global scope, C entries for per-channel scope.
  std::vector<double> min;
  std::vector<double> max;

  [[nodiscard]] double min_for(std::size_t channel) const {
    return scope == NormScope::global ? min[0] : min[channel];
  }
  [[nodiscard]] double max_for(std::size_t channel) const {
    return scope == NormScope::global ? max[0] : max[channel];
  }
};

NormStats compute_stats(const FeatureTensor& f, NormScope scope);

// Feature values mapped onto the unit interval, with the stats needed to map back.
struct MappedFeature {
  FeatureTensor grid;
  NormStats stats;
};

// (f - f_min) / (f_max - f_min) per scope unit. A constant unit maps to zeros.
MappedFeature feature_to_image(const FeatureTensor& f, NormScope scope);

// x * (f_max - f_min) + f_min per scope unit.
FeatureTensor image_to_feature(const MappedFeature& x);

// Maps f into [0, 1], runs `augment` on the mapped grid, clips the grid back
// into [0, 1] and inverts the mapping.
FeatureTensor compose_in_mapped_space(const FeatureTensor& f, NormScope scope,
                                      const std::function<void(FeatureTensor&)>& augment);

struct FrofaResult {
  FeatureTensor features;
  // True when the sampled augmentation is the identity; features is then
  // exactly the input.
  bool unchanged = false;
};

// Applies one frozen feature augmentation. Mapped-space augmentations run
// through compose_in_mapped_space; raw-space and structural ones bypass the
// mapping. Pure function of (f, aug, key). Throws std::invalid_argument for
// batch-level kinds (mixup), which go through mixup_batch instead.
FrofaResult apply_frofa(const FeatureTensor& f, const AugmentationSpec& aug, RngKey key);

}  // namespace frofa
