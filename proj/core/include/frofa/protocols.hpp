#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "frofa/augmentations.hpp"
#include "frofa/frofa_core.hpp"
#include "frofa/rng.hpp"

namespace frofa {

enum class PipelineMode { single, sequential, rand_augment_star, trivial_augment_star };

std::string to_string(PipelineMode mode);
PipelineMode pipeline_mode_from_string(const std::string& s);

// Named operation pools for the random samplers.
//   top3: brightness c2 (v=1), contrast (v=5), posterize c (1..8)
//   top2: brightness c2 (v=1), posterize c (1..8)
std::vector<AugmentationSpec> named_pool(const std::string& name);

struct Pipeline {
  PipelineMode mode = PipelineMode::single;
  // single: one op; sequential: two ops in order; samplers: the pool when
  // pool_name is empty.
  std::vector<AugmentationSpec> ops;
  std::optional<std::string> pool_name;  // "top2" | "top3"
  std::string id;

  void validate() const;
  // The ops the samplers draw from.
  [[nodiscard]] std::vector<AugmentationSpec> pool() const;
  // Mixup strength when the pipeline ends in a batch-level mixup op.
  [[nodiscard]] std::optional<double> batch_mixup() const;
  // `id` when set, otherwise a label derived from the ops.
  [[nodiscard]] std::string display_id() const;

  friend bool operator==(const Pipeline&, const Pipeline&) = default;
};

Pipeline single_op_pipeline(const AugmentationSpec& spec, std::string id = {});
Pipeline identity_pipeline();

void to_json(nlohmann::json& j, const Pipeline& p);
void from_json(const nlohmann::json& j, Pipeline& p);

// Key used by the op in position `slot` of a drawn sequence.
RngKey op_key(RngKey key, std::size_t slot);

// Indices into pool() of the ops a sampler draws for this key, in application
// order. single/sequential return all op indices.
std::vector<std::size_t> draw_ops(const Pipeline& pipeline, RngKey key);

// Per-example application. Batch-level mixup ops are skipped here; the
// trainer applies them to the assembled batch.
FrofaResult apply_pipeline(const Pipeline& pipeline, const FeatureTensor& example, RngKey key);

}  // namespace frofa
