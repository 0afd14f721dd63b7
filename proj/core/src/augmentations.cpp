#include "frofa/augmentations.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "jpeg_codec.hpp"

namespace frofa {

namespace {

struct KindInfo {
  AugKind kind;
  const char* name;
  Space space;
};

constexpr std::array<KindInfo, 21> kKinds = {{
    {AugKind::identity, "identity", Space::none},
    {AugKind::rotate, "rotate", Space::mapped},
    {AugKind::shear_x, "shear_x", Space::mapped},
    {AugKind::shear_y, "shear_y", Space::mapped},
    {AugKind::translate_x, "translate_x", Space::mapped},
    {AugKind::translate_y, "translate_y", Space::mapped},
    {AugKind::crop, "crop", Space::structural},
    {AugKind::resized_crop, "resized_crop", Space::structural},
    {AugKind::inception_crop, "inception_crop", Space::structural},
    {AugKind::patch_dropout, "patch_dropout", Space::structural},
    {AugKind::channel_dropout, "channel_dropout", Space::raw},
    {AugKind::brightness, "brightness", Space::mapped},
    {AugKind::contrast, "contrast", Space::mapped},
    {AugKind::equalize, "equalize", Space::mapped},
    {AugKind::invert, "invert", Space::raw},
    {AugKind::posterize, "posterize", Space::mapped},
    {AugKind::sharpness, "sharpness", Space::mapped},
    {AugKind::solarize, "solarize", Space::raw},
    {AugKind::uniform_noise, "uniform_noise", Space::mapped},
    {AugKind::jpeg, "jpeg", Space::mapped},
    {AugKind::mixup, "mixup", Space::batch},
}};

const KindInfo& info(AugKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k;
  }
  throw std::logic_error("unknown augmentation kind");
}

bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v); }

[[noreturn]] void reject(const AugmentationSpec& s, const std::string& why) {
  throw std::invalid_argument("invalid " + to_string(s.kind) + " spec: " + why);
}

void require_range(const AugmentationSpec& s, double lo, double hi) {
  if (!(s.v >= lo && s.v <= hi)) {
    reject(s, "v=" + std::to_string(s.v) + " outside [" + std::to_string(lo) + ", " +
                  std::to_string(hi) + "]");
  }
}

void require_probability(const AugmentationSpec& s) { require_range(s, 0.0, 1.0); }

void require_positive_int(const AugmentationSpec& s) {
  if (!is_integer(s.v) || s.v < 1) reject(s, "v must be a positive integer");
}

void require_int_pair(const AugmentationSpec& s, double lo, double hi) {
  if (!s.v2) reject(s, "v2 is required");
  if (!is_integer(s.v) || !is_integer(*s.v2)) reject(s, "v1 and v2 must be integers");
  if (!(lo <= s.v && s.v < *s.v2 && *s.v2 <= hi)) {
    reject(s, "need " + std::to_string(static_cast<int>(lo)) + " <= v1 < v2 <= " +
                  std::to_string(static_cast<int>(hi)));
  }
}

std::string compact_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

std::string to_string(AugKind kind) { return info(kind).name; }

AugKind aug_kind_from_string(const std::string& s) {
  for (const auto& k : kKinds) {
    if (s == k.name) return k.kind;
  }
  throw std::invalid_argument("unknown augmentation kind '" + s + "'");
}

const std::vector<AugKind>& all_aug_kinds() {
  static const std::vector<AugKind> kinds = [] {
    std::vector<AugKind> out;
    for (const auto& k : kKinds) {
      if (k.kind != AugKind::identity) out.push_back(k.kind);
    }
    return out;
  }();
  return kinds;
}

Space AugmentationSpec::space() const {
  if (kind == AugKind::invert && invert_in_mapped_space) return Space::mapped;
  return info(kind).space;
}

void AugmentationSpec::validate() const {
  if (!std::isfinite(v)) reject(*this, "v must be finite");
  if (kind != AugKind::posterize && kind != AugKind::jpeg && v2) {
    reject(*this, "v2 is only meaningful for posterize and jpeg");
  }
  switch (kind) {
    case AugKind::identity: break;
    case AugKind::rotate: require_range(*this, 15.0, 90.0); break;
    case AugKind::shear_x:
    case AugKind::shear_y: require_range(*this, 0.1, 0.7); break;
    case AugKind::translate_x:
    case AugKind::translate_y:
      require_range(*this, 1.0, 7.0);
      if (!is_integer(v)) reject(*this, "v must be an integer");
      break;
    case AugKind::crop:
    case AugKind::resized_crop:
    case AugKind::patch_dropout: require_positive_int(*this); break;
    case AugKind::inception_crop:
    case AugKind::channel_dropout:
    case AugKind::equalize:
    case AugKind::invert:
    case AugKind::solarize: require_probability(*this); break;
    case AugKind::brightness: require_range(*this, 0.1, 1.0); break;
    case AugKind::contrast: require_range(*this, 1.25, 10.0); break;
    case AugKind::posterize: require_int_pair(*this, 1.0, 8.0); break;
    case AugKind::sharpness: require_range(*this, 0.2, 3.0); break;
    case AugKind::uniform_noise: require_range(*this, 0.1, 0.7); break;
    case AugKind::jpeg: require_int_pair(*this, 1.0, 100.0); break;
    case AugKind::mixup:
      require_range(*this, 0.025, 1.0);
      if (variant != Variant::default_) reject(*this, "mixup has no per-channel variant");
      break;
  }
}

bool AugmentationSpec::is_reference_setting() const {
  if (kind == AugKind::identity || variant == Variant::default_) return true;
  switch (kind) {
    case AugKind::brightness:
    case AugKind::posterize: return true;
    case AugKind::contrast: return variant == Variant::channel;
    default: return false;
  }
}

std::string AugmentationSpec::label() const {
  std::string out = to_string(kind);
  if (kind == AugKind::identity) return out;
  if (variant == Variant::channel) out += "_c";
  if (variant == Variant::channel2) out += "_c2";
  out += "_v" + compact_number(v);
  if (v2) out += "-" + compact_number(*v2);
  return out;
}

AugmentationSpec make_spec(AugKind kind, double v, std::optional<double> v2, Variant variant) {
  AugmentationSpec s;
  s.kind = kind;
  s.v = v;
  s.v2 = v2;
  s.variant = variant;
  s.validate();
  return s;
}

void to_json(nlohmann::json& j, const AugmentationSpec& s) {
  j = nlohmann::json{{"kind", to_string(s.kind)}, {"v", s.v}, {"variant", to_string(s.variant)}};
  if (s.v2) j["v2"] = *s.v2;
  if (s.invert_in_mapped_space) j["invert_in_mapped_space"] = true;
  if (!s.probability_space_note.empty()) j["probability_space_note"] = s.probability_space_note;
  if (!s.is_reference_setting()) j["nonstandard"] = true;
}

void from_json(const nlohmann::json& j, AugmentationSpec& s) {
  s = AugmentationSpec{};
  s.kind = aug_kind_from_string(j.at("kind").get<std::string>());
  s.v = j.value("v", 0.0);
  if (j.contains("v2") && !j.at("v2").is_null()) s.v2 = j.at("v2").get<double>();
  s.variant = variant_from_string(j.value("variant", std::string("default")));
  s.invert_in_mapped_space = j.value("invert_in_mapped_space", false);
  s.probability_space_note = j.value("probability_space_note", std::string());
  s.validate();
}

std::vector<double> sweep_values(AugKind kind) {
  switch (kind) {
    case AugKind::rotate: return {15, 30, 45, 60, 75, 90};
    case AugKind::shear_x:
    case AugKind::shear_y: return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
    case AugKind::translate_x:
    case AugKind::translate_y: return {1, 2, 3, 4, 5, 6, 7};
    case AugKind::crop: return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13};
    case AugKind::resized_crop: return {16, 18, 20, 22, 24, 26, 28, 35, 42};
    case AugKind::inception_crop:
    case AugKind::brightness:
    case AugKind::solarize: return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    case AugKind::channel_dropout: return {0.1, 0.3, 0.5, 0.99};
    case AugKind::patch_dropout:
      return {1, 2, 4, 12, 20, 28, 36, 44, 52, 60, 68, 76, 84, 92, 100, 116, 132, 148, 164, 180};
    case AugKind::contrast: return {1.25, 1.5, 2, 3, 4, 5, 6, 7, 9, 10};
    case AugKind::equalize:
    case AugKind::invert: return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    case AugKind::sharpness: return {0.2, 0.4, 0.6, 0.8, 1.0, 1.5, 2.0, 3.0};
    case AugKind::uniform_noise: return {0.1, 0.3, 0.5, 0.7};
    case AugKind::mixup: return {0.025, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    case AugKind::identity:
    case AugKind::posterize:
    case AugKind::jpeg: return {};
  }
  return {};
}

std::vector<std::pair<double, double>> sweep_pairs(AugKind kind) {
  std::vector<std::pair<double, double>> out;
  if (kind == AugKind::posterize) {
    for (int v1 = 7; v1 >= 1; --v1) out.emplace_back(v1, 8);
    for (int v2 = 2; v2 <= 7; ++v2) out.emplace_back(1, v2);
  } else if (kind == AugKind::jpeg) {
    for (double v1 : {10, 25, 50, 75}) {
      for (double v2 : {25, 50, 75, 100}) {
        if (v2 > v1) out.emplace_back(v1, v2);
      }
    }
  }
  return out;
}

namespace kernels {

namespace {

void require_channels(const FeatureTensor& g, std::size_t n, const char* what) {
  if (n != g.channels()) {
    throw std::invalid_argument(std::string(what) + ": expected one parameter per channel");
  }
}

// Bilinear sample of channel c at (y, x) in index coordinates; zero outside.
double sample_zero(const FeatureTensor& g, std::size_t side, std::size_t c, double y, double x) {
  const double fy = std::floor(y);
  const double fx = std::floor(x);
  const double wy = y - fy;
  const double wx = x - fx;
  const auto y0 = static_cast<std::int64_t>(fy);
  const auto x0 = static_cast<std::int64_t>(fx);
  const auto s = static_cast<std::int64_t>(side);
  auto at = [&](std::int64_t yy, std::int64_t xx) -> double {
    if (yy < 0 || xx < 0 || yy >= s || xx >= s) return 0.0;
    return g.at(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx), c);
  };
  double out = 0.0;
  if ((1 - wy) * (1 - wx) != 0.0) out += (1 - wy) * (1 - wx) * at(y0, x0);
  if ((1 - wy) * wx != 0.0) out += (1 - wy) * wx * at(y0, x0 + 1);
  if (wy * (1 - wx) != 0.0) out += wy * (1 - wx) * at(y0 + 1, x0);
  if (wy * wx != 0.0) out += wy * wx * at(y0 + 1, x0 + 1);
  return out;
}

// Resamples every channel through an inverse coordinate map (out -> src).
template <typename Map>
void warp(FeatureTensor& grid, Map&& src_of) {
  const std::size_t side = grid.side();
  const FeatureTensor src = grid;
  for (std::size_t c = 0; c < grid.channels(); ++c) {
    for (std::size_t i = 0; i < side; ++i) {
      for (std::size_t j = 0; j < side; ++j) {
        const auto [sy, sx] = src_of(c, static_cast<double>(i), static_cast<double>(j));
        grid.at(i, j, c) = static_cast<float>(sample_zero(src, side, c, sy, sx));
      }
    }
  }
}

float clip01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

std::vector<double> channel_plane(const FeatureTensor& f, std::size_t c) {
  std::vector<double> plane(f.tokens());
  for (std::size_t n = 0; n < f.tokens(); ++n) plane[n] = f.at(n, c);
  return plane;
}

}  // namespace

void rotate(FeatureTensor& grid, std::span<const double> angle_deg) {
  require_channels(grid, angle_deg.size(), "rotate");
  const double centre = (static_cast<double>(grid.side()) - 1.0) / 2.0;
  std::vector<std::pair<double, double>> cs(angle_deg.size());
  for (std::size_t c = 0; c < angle_deg.size(); ++c) {
    const double t = angle_deg[c] * std::numbers::pi / 180.0;
    cs[c] = {std::cos(t), std::sin(t)};
  }
  warp(grid, [&](std::size_t c, double i, double j) {
    const auto [co, si] = cs[c];
    const double dy = i - centre;
    const double dx = j - centre;
    return std::pair{-si * dx + co * dy + centre, co * dx + si * dy + centre};
  });
}

void shear_x(FeatureTensor& grid, std::span<const double> z) {
  require_channels(grid, z.size(), "shear_x");
  const double centre = (static_cast<double>(grid.side()) - 1.0) / 2.0;
  warp(grid, [&](std::size_t c, double i, double j) {
    return std::pair{i, j + z[c] * (i - centre)};
  });
}

void shear_y(FeatureTensor& grid, std::span<const double> z) {
  require_channels(grid, z.size(), "shear_y");
  const double centre = (static_cast<double>(grid.side()) - 1.0) / 2.0;
  warp(grid, [&](std::size_t c, double i, double j) {
    return std::pair{i + z[c] * (j - centre), j};
  });
}

namespace {
void translate(FeatureTensor& grid, std::span<const std::int64_t> shift, bool horizontal) {
  const auto side = static_cast<std::int64_t>(grid.side());
  const FeatureTensor src = grid;
  for (std::size_t c = 0; c < grid.channels(); ++c) {
    for (std::int64_t i = 0; i < side; ++i) {
      for (std::int64_t j = 0; j < side; ++j) {
        const std::int64_t si = horizontal ? i : i - shift[c];
        const std::int64_t sj = horizontal ? j - shift[c] : j;
        const bool inside = si >= 0 && sj >= 0 && si < side && sj < side;
        grid.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j), c) =
            inside ? src.at(static_cast<std::size_t>(si), static_cast<std::size_t>(sj), c) : 0.0f;
      }
    }
  }
}
}  // namespace

void translate_x(FeatureTensor& grid, std::span<const std::int64_t> shift) {
  require_channels(grid, shift.size(), "translate_x");
  translate(grid, shift, true);
}

void translate_y(FeatureTensor& grid, std::span<const std::int64_t> shift) {
  require_channels(grid, shift.size(), "translate_y");
  translate(grid, shift, false);
}

void brightness(FeatureTensor& grid, std::span<const double> z) {
  require_channels(grid, z.size(), "brightness");
  for (std::size_t n = 0; n < grid.tokens(); ++n) {
    for (std::size_t c = 0; c < grid.channels(); ++c) grid.at(n, c) = clip01(grid.at(n, c) + z[c]);
  }
}

void contrast(FeatureTensor& grid, std::span<const double> z) {
  require_channels(grid, z.size(), "contrast");
  for (std::size_t n = 0; n < grid.tokens(); ++n) {
    for (std::size_t c = 0; c < grid.channels(); ++c) grid.at(n, c) = clip01(grid.at(n, c) * z[c]);
  }
}

void posterize(FeatureTensor& grid, std::span<const std::int64_t> bits) {
  require_channels(grid, bits.size(), "posterize");
  for (std::size_t n = 0; n < grid.tokens(); ++n) {
    for (std::size_t c = 0; c < grid.channels(); ++c) {
      const auto q = static_cast<std::uint32_t>(std::lround(255.0 * std::clamp<double>(grid.at(n, c), 0, 1)));
      const auto z = static_cast<std::uint32_t>(bits[c]);
      const std::uint32_t shifted = z >= 8 ? 0u : ((q >> z) << z);
      grid.at(n, c) = static_cast<float>(shifted / 255.0);
    }
  }
}

namespace {
// Equalizes the listed flat positions of `grid` on their shared histogram.
void equalize_positions(FeatureTensor& grid, const std::vector<std::size_t>& pos, int levels) {
  auto values = grid.values();
  std::vector<int> q(pos.size());
  std::vector<std::int64_t> hist(static_cast<std::size_t>(levels), 0);
  const double top = levels - 1;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    q[i] = static_cast<int>(std::lround(top * std::clamp<double>(values[pos[i]], 0.0, 1.0)));
    ++hist[static_cast<std::size_t>(q[i])];
  }
  std::int64_t last_nonzero = 0;
  for (auto h : hist) {
    if (h != 0) last_nonzero = h;
  }
  const std::int64_t total = static_cast<std::int64_t>(pos.size());
  const std::int64_t step = (total - last_nonzero) / (levels - 1);
  if (step == 0) return;  // degenerate histogram: equalization is a no-op
  std::vector<int> lut(static_cast<std::size_t>(levels));
  std::int64_t cum = 0;
  for (int i = 0; i < levels; ++i) {
    lut[static_cast<std::size_t>(i)] =
        static_cast<int>(std::min<std::int64_t>(levels - 1, (cum + step / 2) / step));
    cum += hist[static_cast<std::size_t>(i)];
  }
  for (std::size_t i = 0; i < pos.size(); ++i) {
    values[pos[i]] = static_cast<float>(lut[static_cast<std::size_t>(q[i])] / top);
  }
}
}  // namespace

void equalize(FeatureTensor& grid, bool per_channel, const std::vector<bool>& mask, int levels) {
  if (levels < 2) throw std::invalid_argument("equalize: need at least two levels");
  const std::size_t C = grid.channels();
  if (!per_channel) {
    if (mask.empty() || !mask[0]) return;
    std::vector<std::size_t> pos(grid.size());
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = i;
    equalize_positions(grid, pos, levels);
    return;
  }
  require_channels(grid, mask.size(), "equalize");
  for (std::size_t c = 0; c < C; ++c) {
    if (!mask[c]) continue;
    std::vector<std::size_t> pos(grid.tokens());
    for (std::size_t n = 0; n < grid.tokens(); ++n) pos[n] = n * C + c;
    equalize_positions(grid, pos, levels);
  }
}

FeatureTensor box_smooth(const FeatureTensor& grid) {
  const auto side = static_cast<std::int64_t>(grid.side());
  FeatureTensor out(grid.tokens(), grid.channels());
  for (std::size_t c = 0; c < grid.channels(); ++c) {
    for (std::int64_t i = 0; i < side; ++i) {
      for (std::int64_t j = 0; j < side; ++j) {
        double acc = 0.0;
        for (std::int64_t di = -1; di <= 1; ++di) {
          for (std::int64_t dj = -1; dj <= 1; ++dj) {
            const auto ii = std::clamp<std::int64_t>(i + di, 0, side - 1);
            const auto jj = std::clamp<std::int64_t>(j + dj, 0, side - 1);
            acc += grid.at(static_cast<std::size_t>(ii), static_cast<std::size_t>(jj), c);
          }
        }
        out.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j), c) =
            static_cast<float>(acc / 9.0);
      }
    }
  }
  return out;
}

void sharpness(FeatureTensor& grid, std::span<const double> z) {
  require_channels(grid, z.size(), "sharpness");
  if (grid.side() < 3) throw std::invalid_argument("sharpness needs a grid of at least 3x3");
  const FeatureTensor smooth = box_smooth(grid);
  for (std::size_t n = 0; n < grid.tokens(); ++n) {
    for (std::size_t c = 0; c < grid.channels(); ++c) {
      const double x = grid.at(n, c);
      grid.at(n, c) = clip01(x + z[c] * (smooth.at(n, c) - x));
    }
  }
}

void invert_mapped(FeatureTensor& grid, const std::vector<bool>& fire) {
  require_channels(grid, fire.size(), "invert");
  for (std::size_t n = 0; n < grid.tokens(); ++n) {
    for (std::size_t c = 0; c < grid.channels(); ++c) {
      if (fire[c]) grid.at(n, c) = 1.0f - grid.at(n, c);
    }
  }
}

void uniform_noise(FeatureTensor& grid, double v, Rng& rng) {
  for (auto& x : grid.values()) x = clip01(x + rng.uniform(-v, v));
}

void jpeg(FeatureTensor& grid, std::span<const std::int64_t> quality) {
  require_channels(grid, quality.size(), "jpeg");
  const std::size_t side = grid.side();
  std::vector<std::uint8_t> plane(side * side);
  for (std::size_t c = 0; c < grid.channels(); ++c) {
    for (std::size_t n = 0; n < grid.tokens(); ++n) {
      plane[n] = static_cast<std::uint8_t>(
          std::lround(255.0 * std::clamp<double>(grid.at(n, c), 0.0, 1.0)));
    }
    const auto decoded = detail::jpeg_roundtrip_gray(plane, side, side, static_cast<int>(quality[c]));
    for (std::size_t n = 0; n < grid.tokens(); ++n) {
      grid.at(n, c) = static_cast<float>(decoded[n] / 255.0);
    }
  }
}

void solarize(FeatureTensor& f, const NormStats& stats, const std::vector<bool>& fire) {
  require_channels(f, fire.size(), "solarize");
  for (std::size_t n = 0; n < f.tokens(); ++n) {
    for (std::size_t c = 0; c < f.channels(); ++c) {
      if (!fire[c]) continue;
      const double lo = stats.min_for(c);
      const double hi = stats.max_for(c);
      const double x = f.at(n, c);
      if (x < 0.5 * lo) {
        f.at(n, c) = static_cast<float>(lo - x);
      } else if (x > 0.5 * hi) {
        f.at(n, c) = static_cast<float>(hi - x);
      }
    }
  }
}

void invert_raw(FeatureTensor& f, const std::vector<bool>& fire) {
  require_channels(f, fire.size(), "invert");
  for (std::size_t n = 0; n < f.tokens(); ++n) {
    for (std::size_t c = 0; c < f.channels(); ++c) {
      if (fire[c]) f.at(n, c) = -f.at(n, c);
    }
  }
}

void channel_dropout(FeatureTensor& f, const std::vector<bool>& drop) {
  require_channels(f, drop.size(), "channel_dropout");
  for (std::size_t n = 0; n < f.tokens(); ++n) {
    for (std::size_t c = 0; c < f.channels(); ++c) {
      if (drop[c]) f.at(n, c) = 0.0f;
    }
  }
}

FeatureTensor crop(const FeatureTensor& f, std::size_t v, std::span<const Window> windows) {
  const std::size_t side = f.side();
  require_channels(f, windows.size(), "crop");
  if (v < 1 || v > side) {
    throw std::invalid_argument("crop size v=" + std::to_string(v) + " must lie in [1, " +
                                std::to_string(side) + "]");
  }
  FeatureTensor out(v * v, f.channels());
  for (std::size_t c = 0; c < f.channels(); ++c) {
    const auto& w = windows[c];
    if (w.y + v > side || w.x + v > side) throw std::invalid_argument("crop window out of bounds");
    for (std::size_t i = 0; i < v; ++i) {
      for (std::size_t j = 0; j < v; ++j) out.at(i * v + j, c) = f.at(w.y + i, w.x + j, c);
    }
  }
  return out;
}

std::vector<double> resize_bilinear(std::span<const double> src, std::size_t src_h,
                                    std::size_t src_w, std::size_t dst_h, std::size_t dst_w) {
  std::vector<double> out(dst_h * dst_w);
  const double ry = static_cast<double>(src_h) / static_cast<double>(dst_h);
  const double rx = static_cast<double>(src_w) / static_cast<double>(dst_w);
  for (std::size_t i = 0; i < dst_h; ++i) {
    const double sy = std::clamp((static_cast<double>(i) + 0.5) * ry - 0.5, 0.0,
                                 static_cast<double>(src_h - 1));
    const auto y0 = static_cast<std::size_t>(std::floor(sy));
    const std::size_t y1 = std::min(y0 + 1, src_h - 1);
    const double wy = sy - static_cast<double>(y0);
    for (std::size_t j = 0; j < dst_w; ++j) {
      const double sx = std::clamp((static_cast<double>(j) + 0.5) * rx - 0.5, 0.0,
                                   static_cast<double>(src_w - 1));
      const auto x0 = static_cast<std::size_t>(std::floor(sx));
      const std::size_t x1 = std::min(x0 + 1, src_w - 1);
      const double wx = sx - static_cast<double>(x0);
      out[i * dst_w + j] = (1 - wy) * ((1 - wx) * src[y0 * src_w + x0] + wx * src[y0 * src_w + x1]) +
                           wy * ((1 - wx) * src[y1 * src_w + x0] + wx * src[y1 * src_w + x1]);
    }
  }
  return out;
}

FeatureTensor resized_crop(const FeatureTensor& f, std::size_t v, std::span<const Window> windows) {
  const std::size_t side = f.side();
  require_channels(f, windows.size(), "resized_crop");
  if (v < side) {
    throw std::invalid_argument("resized_crop size v=" + std::to_string(v) +
                                " is smaller than the grid side " + std::to_string(side));
  }
  FeatureTensor out(f.tokens(), f.channels());
  for (std::size_t c = 0; c < f.channels(); ++c) {
    const auto big = resize_bilinear(channel_plane(f, c), side, side, v, v);
    const auto& w = windows[c];
    if (w.y + side > v || w.x + side > v) throw std::invalid_argument("resized_crop window out of bounds");
    for (std::size_t i = 0; i < side; ++i) {
      for (std::size_t j = 0; j < side; ++j) {
        out.at(i * side + j, c) = static_cast<float>(big[(w.y + i) * v + (w.x + j)]);
      }
    }
  }
  return out;
}

FeatureTensor crop_and_resize(const FeatureTensor& f, std::span<const Window> windows) {
  const std::size_t side = f.side();
  require_channels(f, windows.size(), "crop_and_resize");
  FeatureTensor out(f.tokens(), f.channels());
  for (std::size_t c = 0; c < f.channels(); ++c) {
    const auto& w = windows[c];
    if (w.h < 1 || w.w < 1 || w.y + w.h > side || w.x + w.w > side) {
      throw std::invalid_argument("crop_and_resize window out of bounds");
    }
    std::vector<double> patch(w.h * w.w);
    for (std::size_t i = 0; i < w.h; ++i) {
      for (std::size_t j = 0; j < w.w; ++j) patch[i * w.w + j] = f.at(w.y + i, w.x + j, c);
    }
    const auto resized = resize_bilinear(patch, w.h, w.w, side, side);
    for (std::size_t n = 0; n < f.tokens(); ++n) out.at(n, c) = static_cast<float>(resized[n]);
  }
  return out;
}

FeatureTensor patch_dropout(const FeatureTensor& f,
                            const std::vector<std::vector<std::size_t>>& keep) {
  require_channels(f, keep.size(), "patch_dropout");
  const std::size_t v = keep.empty() ? 0 : keep[0].size();
  FeatureTensor out(v, f.channels());
  for (std::size_t c = 0; c < f.channels(); ++c) {
    if (keep[c].size() != v) throw std::invalid_argument("patch_dropout: ragged keep lists");
    for (std::size_t i = 0; i < v; ++i) out.at(i, c) = f.at(keep[c][i], c);
  }
  return out;
}

void mixup(std::vector<FeatureTensor>& features, std::vector<std::vector<float>>& labels,
           std::span<const std::size_t> partner, std::span<const double> z) {
  const std::size_t B = features.size();
  if (B < 2) throw std::invalid_argument("mixup needs a batch of at least two examples");
  if (labels.size() != B || partner.size() != B || z.size() != B) {
    throw std::invalid_argument("mixup: batch, labels, partners and weights must align");
  }
  const auto src_f = features;
  const auto src_y = labels;
  for (std::size_t i = 0; i < B; ++i) {
    const auto& fi = src_f[i];
    const auto& fj = src_f[partner[i]];
    if (fi.tokens() != fj.tokens() || fi.channels() != fj.channels()) {
      throw std::invalid_argument("mixup: partner shapes differ");
    }
    const double zi = z[i];
    auto out = features[i].values();
    for (std::size_t k = 0; k < out.size(); ++k) {
      out[k] = static_cast<float>(zi * fi.values()[k] + (1.0 - zi) * fj.values()[k]);
    }
    for (std::size_t s = 0; s < labels[i].size(); ++s) {
      labels[i][s] = static_cast<float>(zi * src_y[i][s] + (1.0 - zi) * src_y[partner[i]][s]);
    }
  }
}

}  // namespace kernels

kernels::Window sample_inception_window(std::size_t side, Rng& rng) {
  const double area = static_cast<double>(side * side);
  const double log_lo = std::log(3.0 / 4.0);
  const double log_hi = std::log(4.0 / 3.0);
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double target = rng.uniform(0.05, 1.0) * area;
    const double aspect = std::exp(rng.uniform(log_lo, log_hi));
    const auto w = static_cast<std::size_t>(std::lround(std::sqrt(target * aspect)));
    const auto h = static_cast<std::size_t>(std::lround(std::sqrt(target / aspect)));
    if (w >= 1 && h >= 1 && w <= side && h <= side) {
      const auto y = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(side - h)));
      const auto x = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(side - w)));
      return {y, x, h, w};
    }
  }
  return {0, 0, side, side};
}

FeatureTensor patch_dropout(const FeatureTensor& f, std::size_t v, Rng& rng) {
  if (v < 1 || v > f.tokens()) {
    throw std::invalid_argument("patch_dropout keeps v=" + std::to_string(v) +
                                " patches, must lie in [1, N=" + std::to_string(f.tokens()) + "]");
  }
  const auto keep = rng.sample_without_replacement(f.tokens(), v);
  return kernels::patch_dropout(f, std::vector<std::vector<std::size_t>>(f.channels(), keep));
}

void mixup_batch(std::vector<FeatureTensor>& features, std::vector<std::vector<float>>& labels,
                 double v, RngKey key) {
  if (features.size() < 2) throw std::invalid_argument("mixup needs a batch of at least two examples");
  Rng rng(key.fold("mixup"));
  const auto partner = rng.permutation(features.size());
  std::vector<double> z(features.size());
  for (auto& zi : z) zi = rng.beta(v, v);
  kernels::mixup(features, labels, partner, z);
}

}  // namespace frofa
