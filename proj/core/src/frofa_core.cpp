#include "frofa/frofa_core.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "frofa/augmentations.hpp"

namespace frofa {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::default_: return "default";
    case Variant::channel: return "channel";
    case Variant::channel2: return "channel2";
  }
  return "default";
}

Variant variant_from_string(const std::string& s) {
  if (s == "default" || s.empty()) return Variant::default_;
  if (s == "channel" || s == "c") return Variant::channel;
  if (s == "channel2" || s == "c2") return Variant::channel2;
  throw std::invalid_argument("unknown variant '" + s + "' (expected default, channel, channel2)");
}

NormStats compute_stats(const FeatureTensor& f, NormScope scope) {
  NormStats st;
  st.scope = scope;
  const std::size_t units = scope == NormScope::global ? 1 : f.channels();
  st.min.assign(units, std::numeric_limits<double>::infinity());
  st.max.assign(units, -std::numeric_limits<double>::infinity());
  for (std::size_t n = 0; n < f.tokens(); ++n) {
    for (std::size_t c = 0; c < f.channels(); ++c) {
      const std::size_t u = scope == NormScope::global ? 0 : c;
      const double x = f.at(n, c);
      st.min[u] = std::min(st.min[u], x);
      st.max[u] = std::max(st.max[u], x);
    }
  }
  return st;
}

MappedFeature feature_to_image(const FeatureTensor& f, NormScope scope) {
  MappedFeature out{FeatureTensor(f.tokens(), f.channels()), compute_stats(f, scope)};
  const auto& st = out.stats;
  for (std::size_t n = 0; n < f.tokens(); ++n) {
    for (std::size_t c = 0; c < f.channels(); ++c) {
      const double lo = st.min_for(c);
      const double hi = st.max_for(c);
      out.grid.at(n, c) = hi > lo ? static_cast<float>((f.at(n, c) - lo) / (hi - lo)) : 0.0f;
    }
  }
  return out;
}

FeatureTensor image_to_feature(const MappedFeature& x) {
  const auto& st = x.stats;
  FeatureTensor out(x.grid.tokens(), x.grid.channels());
  for (std::size_t n = 0; n < out.tokens(); ++n) {
    for (std::size_t c = 0; c < out.channels(); ++c) {
      const double lo = st.min_for(c);
      const double hi = st.max_for(c);
      out.at(n, c) = hi > lo ? static_cast<float>(x.grid.at(n, c) * (hi - lo) + lo)
                             : static_cast<float>(lo);
    }
  }
  return out;
}

FeatureTensor compose_in_mapped_space(const FeatureTensor& f, NormScope scope,
                                      const std::function<void(FeatureTensor&)>& augment) {
  MappedFeature mapped = feature_to_image(f, scope);
  augment(mapped.grid);
  for (auto& v : mapped.grid.values()) v = std::clamp(v, 0.0f, 1.0f);
  return image_to_feature(mapped);
}

namespace {

// Draws `units` values with `draw` and broadcasts a single draw to all channels.
template <typename T, typename Draw>
std::vector<T> per_channel(std::size_t channels, bool independent, Draw&& draw) {
  const std::size_t units = independent ? channels : 1;
  std::vector<T> values;
  values.reserve(channels);
  for (std::size_t u = 0; u < units; ++u) values.push_back(draw());
  if (!independent) values.assign(channels, values.front());
  return values;
}

template <typename T>
bool all_equal_to(const std::vector<T>& v, T value) {
  return std::all_of(v.begin(), v.end(), [&](T x) { return x == value; });
}

bool none(const std::vector<bool>& v) {
  return std::none_of(v.begin(), v.end(), [](bool b) { return b; });
}

}  // namespace

FrofaResult apply_frofa(const FeatureTensor& f, const AugmentationSpec& aug, RngKey key) {
  const std::size_t C = f.channels();
  const bool independent = aug.variant != Variant::default_;
  const NormScope scope = scope_for(aug.variant);
  const double v = aug.v;
  Rng rng(key);

  auto mapped = [&](auto&& kernel) {
    return FrofaResult{compose_in_mapped_space(f, scope, kernel), false};
  };
  auto gates = [&] { return per_channel<bool>(C, independent, [&] { return rng.bernoulli(v); }); };

  switch (aug.kind) {
    case AugKind::identity: return {f, true};

    case AugKind::rotate: {
      (void)f.side();
      const auto z = per_channel<double>(C, independent, [&] { return rng.uniform(-v, v); });
      if (all_equal_to(z, 0.0)) return {f, true};
      return mapped([&](FeatureTensor& g) { kernels::rotate(g, z); });
    }
    case AugKind::shear_x:
    case AugKind::shear_y: {
      (void)f.side();
      const auto z = per_channel<double>(C, independent, [&] { return rng.uniform(0.0, v); });
      if (all_equal_to(z, 0.0)) return {f, true};
      if (aug.kind == AugKind::shear_x) return mapped([&](FeatureTensor& g) { kernels::shear_x(g, z); });
      return mapped([&](FeatureTensor& g) { kernels::shear_y(g, z); });
    }
    case AugKind::translate_x:
    case AugKind::translate_y: {
      (void)f.side();
      const auto max_shift = static_cast<std::int64_t>(v);
      const auto shift = per_channel<std::int64_t>(C, independent, [&] {
        const std::int64_t z = rng.uniform_int(0, max_shift);
        return rng.bernoulli(0.5) ? z : -z;
      });
      if (all_equal_to<std::int64_t>(shift, 0)) return {f, true};
      if (aug.kind == AugKind::translate_x) {
        return mapped([&](FeatureTensor& g) { kernels::translate_x(g, shift); });
      }
      return mapped([&](FeatureTensor& g) { kernels::translate_y(g, shift); });
    }

    case AugKind::crop: {
      const std::size_t side = f.side();
      const auto size = static_cast<std::size_t>(v);
      if (size > side) {
        throw std::invalid_argument("crop size v=" + std::to_string(size) +
                                    " exceeds the grid side " + std::to_string(side));
      }
      const auto max_off = static_cast<std::int64_t>(side - size);
      const auto windows = per_channel<kernels::Window>(C, independent, [&] {
        const auto y = static_cast<std::size_t>(rng.uniform_int(0, max_off));
        const auto x = static_cast<std::size_t>(rng.uniform_int(0, max_off));
        return kernels::Window{y, x, size, size};
      });
      return {kernels::crop(f, size, windows), size == side};
    }
    case AugKind::resized_crop: {
      const std::size_t side = f.side();
      const auto size = static_cast<std::size_t>(v);
      if (size < side) {
        throw std::invalid_argument("resized_crop size v=" + std::to_string(size) +
                                    " is smaller than the grid side " + std::to_string(side));
      }
      const auto max_off = static_cast<std::int64_t>(size - side);
      const auto windows = per_channel<kernels::Window>(C, independent, [&] {
        const auto y = static_cast<std::size_t>(rng.uniform_int(0, max_off));
        const auto x = static_cast<std::size_t>(rng.uniform_int(0, max_off));
        return kernels::Window{y, x, side, side};
      });
      return {kernels::resized_crop(f, size, windows), false};
    }
    case AugKind::inception_crop: {
      const std::size_t side = f.side();
      bool any = false;
      const auto windows = per_channel<kernels::Window>(C, independent, [&] {
        if (!rng.bernoulli(v)) return kernels::Window{0, 0, side, side};
        any = true;
        return sample_inception_window(side, rng);
      });
      if (!any) return {f, true};
      return {kernels::crop_and_resize(f, windows), false};
    }
    case AugKind::patch_dropout: {
      const auto keep_count = static_cast<std::size_t>(v);
      if (keep_count < 1 || keep_count > f.tokens()) {
        throw std::invalid_argument("patch_dropout keeps v=" + std::to_string(keep_count) +
                                    " patches, must lie in [1, N=" + std::to_string(f.tokens()) + "]");
      }
      const auto keep = per_channel<std::vector<std::size_t>>(C, independent, [&] {
        return rng.sample_without_replacement(f.tokens(), keep_count);
      });
      return {kernels::patch_dropout(f, keep), false};
    }
    case AugKind::channel_dropout: {
      // Dropout masks are per channel by construction, whatever the variant.
      std::vector<bool> drop(C);
      for (std::size_t c = 0; c < C; ++c) drop[c] = rng.bernoulli(v);
      if (none(drop)) return {f, true};
      FeatureTensor out = f;
      kernels::channel_dropout(out, drop);
      return {std::move(out), false};
    }

    case AugKind::brightness: {
      const auto z = per_channel<double>(C, independent, [&] { return rng.uniform(-v, v); });
      if (all_equal_to(z, 0.0)) return {f, true};
      return mapped([&](FeatureTensor& g) { kernels::brightness(g, z); });
    }
    case AugKind::contrast: {
      const auto z = per_channel<double>(C, independent, [&] { return rng.uniform(1.0 / v, v); });
      if (all_equal_to(z, 1.0)) return {f, true};
      return mapped([&](FeatureTensor& g) { kernels::contrast(g, z); });
    }
    case AugKind::equalize: {
      const auto fire = gates();
      if (none(fire)) return {f, true};
      return mapped([&](FeatureTensor& g) { kernels::equalize(g, independent, fire); });
    }
    case AugKind::invert: {
      const auto fire = gates();
      if (none(fire)) return {f, true};
      if (aug.invert_in_mapped_space) {
        return mapped([&](FeatureTensor& g) { kernels::invert_mapped(g, fire); });
      }
      FeatureTensor out = f;
      kernels::invert_raw(out, fire);
      return {std::move(out), false};
    }
    case AugKind::posterize: {
      const auto lo = static_cast<std::int64_t>(v);
      const auto hi = static_cast<std::int64_t>(aug.v2.value_or(v));
      const auto bits = per_channel<std::int64_t>(C, independent, [&] { return rng.uniform_int(lo, hi); });
      return mapped([&](FeatureTensor& g) { kernels::posterize(g, bits); });
    }
    case AugKind::sharpness: {
      if (f.side() < 3) throw std::invalid_argument("sharpness needs a grid of at least 3x3");
      const auto z = per_channel<double>(C, independent, [&] { return rng.uniform(0.0, v); });
      if (all_equal_to(z, 0.0)) return {f, true};
      return mapped([&](FeatureTensor& g) { kernels::sharpness(g, z); });
    }
    case AugKind::solarize: {
      const auto fire = gates();
      if (none(fire)) return {f, true};
      FeatureTensor out = f;
      kernels::solarize(out, compute_stats(f, scope), fire);
      return {std::move(out), false};
    }
    case AugKind::uniform_noise:
      return mapped([&](FeatureTensor& g) { kernels::uniform_noise(g, v, rng); });
    case AugKind::jpeg: {
      (void)f.side();
      const auto lo = static_cast<std::int64_t>(v);
      const auto hi = static_cast<std::int64_t>(aug.v2.value_or(v));
      const auto quality = per_channel<std::int64_t>(C, independent, [&] { return rng.uniform_int(lo, hi); });
      return mapped([&](FeatureTensor& g) { kernels::jpeg(g, quality); });
    }
    case AugKind::mixup:
      throw std::invalid_argument("mixup operates on whole batches; use mixup_batch");
  }
  throw std::logic_error("unhandled augmentation kind");
}

}  // namespace frofa
