#include "frofa/protocols.hpp"

#include <stdexcept>

namespace frofa {

std::string to_string(PipelineMode mode) {
  switch (mode) {
    case PipelineMode::single: return "single";
    case PipelineMode::sequential: return "sequential";
    case PipelineMode::rand_augment_star: return "rand_augment_star";
    case PipelineMode::trivial_augment_star: return "trivial_augment_star";
  }
  return "single";
}

PipelineMode pipeline_mode_from_string(const std::string& s) {
  if (s == "single") return PipelineMode::single;
  if (s == "sequential") return PipelineMode::sequential;
  if (s == "rand_augment_star" || s == "ra*") return PipelineMode::rand_augment_star;
  if (s == "trivial_augment_star" || s == "ta*") return PipelineMode::trivial_augment_star;
  throw std::invalid_argument("unknown pipeline mode '" + s + "'");
}

std::vector<AugmentationSpec> named_pool(const std::string& name) {
  const auto bc2 = make_spec(AugKind::brightness, 1.0, std::nullopt, Variant::channel2);
  const auto contrast = make_spec(AugKind::contrast, 5.0);
  const auto pc = make_spec(AugKind::posterize, 1.0, 8.0, Variant::channel);
  if (name == "top3") return {bc2, contrast, pc};
  if (name == "top2") return {bc2, pc};
  throw std::invalid_argument("unknown pool '" + name + "' (expected top2 or top3)");
}

std::vector<AugmentationSpec> Pipeline::pool() const {
  if (pool_name) return named_pool(*pool_name);
  return ops;
}

void Pipeline::validate() const {
  switch (mode) {
    case PipelineMode::single:
      if (ops.size() != 1) throw std::invalid_argument("single pipeline needs exactly 1 op");
      break;
    case PipelineMode::sequential:
      if (ops.size() != 2) throw std::invalid_argument("sequential pipeline needs exactly 2 ops");
      if (ops[0].kind == AugKind::mixup) {
        throw std::invalid_argument("mixup may only be the last op of a sequential pipeline");
      }
      break;
    case PipelineMode::rand_augment_star:
    case PipelineMode::trivial_augment_star: {
      const auto p = pool();
      if (p.empty()) throw std::invalid_argument("sampler pipeline needs a non-empty pool");
      for (const auto& op : p) {
        if (op.kind == AugKind::mixup) {
          throw std::invalid_argument("mixup cannot be drawn per example by a sampler");
        }
      }
      break;
    }
  }
  for (const auto& op : pool()) op.validate();
}

std::optional<double> Pipeline::batch_mixup() const {
  if (mode != PipelineMode::single && mode != PipelineMode::sequential) return std::nullopt;
  if (!ops.empty() && ops.back().kind == AugKind::mixup) return ops.back().v;
  return std::nullopt;
}

std::string Pipeline::display_id() const {
  if (!id.empty()) return id;
  std::string out;
  switch (mode) {
    case PipelineMode::single: return ops.empty() ? "empty" : ops[0].label();
    case PipelineMode::sequential: return ops.size() == 2 ? ops[0].label() + "+" + ops[1].label() : "seq";
    case PipelineMode::rand_augment_star: out = "ra_star_"; break;
    case PipelineMode::trivial_augment_star: out = "ta_star_"; break;
  }
  if (pool_name) return out + *pool_name;
  for (std::size_t i = 0; i < ops.size(); ++i) out += (i ? "+" : "") + ops[i].label();
  return out;
}

Pipeline single_op_pipeline(const AugmentationSpec& spec, std::string id) {
  Pipeline p;
  p.mode = PipelineMode::single;
  p.ops = {spec};
  p.id = std::move(id);
  p.validate();
  return p;
}

Pipeline identity_pipeline() { return single_op_pipeline(AugmentationSpec{}, "identity"); }

void to_json(nlohmann::json& j, const Pipeline& p) {
  j = nlohmann::json{{"mode", to_string(p.mode)}, {"ops", p.ops}};
  j["pool"] = p.pool_name ? nlohmann::json(*p.pool_name) : nlohmann::json(nullptr);
  if (!p.id.empty()) j["id"] = p.id;
}

void from_json(const nlohmann::json& j, Pipeline& p) {
  if (!j.is_object()) throw std::invalid_argument("pipeline JSON must be an object");
  p = Pipeline{};
  p.mode = pipeline_mode_from_string(j.at("mode").get<std::string>());
  if (j.contains("ops")) p.ops = j.at("ops").get<std::vector<AugmentationSpec>>();
  if (j.contains("pool") && !j.at("pool").is_null()) p.pool_name = j.at("pool").get<std::string>();
  if (j.contains("id")) p.id = j.at("id").get<std::string>();
  p.validate();
}

RngKey op_key(RngKey key, std::size_t slot) { return key.fold({0x6f70ULL, slot}); }

std::vector<std::size_t> draw_ops(const Pipeline& pipeline, RngKey key) {
  const std::size_t pool_size = pipeline.pool().size();
  switch (pipeline.mode) {
    case PipelineMode::single:
    case PipelineMode::sequential: {
      std::vector<std::size_t> all(pool_size);
      for (std::size_t i = 0; i < pool_size; ++i) all[i] = i;
      return all;
    }
    case PipelineMode::rand_augment_star: {
      Rng rng(key.fold("select"));
      const auto length = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(pool_size)));
      return rng.sample_without_replacement(pool_size, length);
    }
    case PipelineMode::trivial_augment_star: {
      Rng rng(key.fold("select"));
      return {static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pool_size) - 1))};
    }
  }
  return {};
}

FrofaResult apply_pipeline(const Pipeline& pipeline, const FeatureTensor& example, RngKey key) {
  const auto pool = pipeline.pool();
  const auto order = draw_ops(pipeline, key);
  FrofaResult current{example, true};
  for (std::size_t slot = 0; slot < order.size(); ++slot) {
    const auto& op = pool[order[slot]];
    if (op.kind == AugKind::mixup) continue;
    FrofaResult next = apply_frofa(current.features, op, op_key(key, slot));
    if (!next.unchanged) current = FrofaResult{std::move(next.features), false};
  }
  return current;
}

}  // namespace frofa
