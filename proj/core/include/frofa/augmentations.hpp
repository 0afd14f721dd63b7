#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "frofa/feature_tensor.hpp"
#include "frofa/frofa_core.hpp"
#include "frofa/rng.hpp"

namespace frofa {

enum class AugKind {
  identity,
  rotate,
  shear_x,
  shear_y,
  translate_x,
  translate_y,
  crop,
  resized_crop,
  inception_crop,
  patch_dropout,
  channel_dropout,
  brightness,
  contrast,
  equalize,
  invert,
  posterize,
  sharpness,
  solarize,
  uniform_noise,
  jpeg,
  mixup,
};

// Where an augmentation operates.
//   mapped      on the [0,1] grid produced by feature_to_image
//   raw         on the original feature values
//   structural  token selection / resampling, value-preserving, raw values
//   batch       needs the whole batch (mixup)
enum class Space { none, mapped, raw, structural, batch };

std::string to_string(AugKind kind);
AugKind aug_kind_from_string(const std::string& s);
const std::vector<AugKind>& all_aug_kinds();

struct AugmentationSpec {
  AugKind kind = AugKind::identity;
  double v = 0.0;
  std::optional<double> v2;  // posterize / jpeg upper bound
  Variant variant = Variant::default_;
  // Invert flips the sign of raw features unless this is set, in which case
  // it maps x -> 1 - x in mapped space.
  bool invert_in_mapped_space = false;
  std::string probability_space_note;

  [[nodiscard]] Space space() const;
  // Rejects parameters outside the sweep domain of the kind.
  void validate() const;
  // False for variant/kind combinations the reference experiments never ran.
  [[nodiscard]] bool is_reference_setting() const;
  // Short identifier such as "brightness_c2_v1" used in logs and pipeline ids.
  [[nodiscard]] std::string label() const;

  friend bool operator==(const AugmentationSpec&, const AugmentationSpec&) = default;
};

// Validating constructor.
AugmentationSpec make_spec(AugKind kind, double v, std::optional<double> v2 = std::nullopt,
                           Variant variant = Variant::default_);

void to_json(nlohmann::json& j, const AugmentationSpec& spec);
void from_json(const nlohmann::json& j, AugmentationSpec& spec);

// Sweep values for each kind (posterize/jpeg return their (v1, v2) pairs
// through sweep_pairs instead).
std::vector<double> sweep_values(AugKind kind);
std::vector<std::pair<double, double>> sweep_pairs(AugKind kind);

// Deterministic kernels. Each takes explicit, already-sampled parameters so
// that every sampled value can be forced in tests. Per-channel parameter
// spans have one entry per channel.
namespace kernels {

// ---- mapped space: grids are side x side x C with values in [0, 1] --------

// Rotation about the grid centre by angle_deg[c]; bilinear, zero fill.
void rotate(FeatureTensor& grid, std::span<const double> angle_deg);
// x' = x + z (y - centre); bilinear, zero fill.
void shear_x(FeatureTensor& grid, std::span<const double> z);
void shear_y(FeatureTensor& grid, std::span<const double> z);
// Integer shift; positive moves content right (x) or down (y). Zero fill.
void translate_x(FeatureTensor& grid, std::span<const std::int64_t> shift);
void translate_y(FeatureTensor& grid, std::span<const std::int64_t> shift);

void brightness(FeatureTensor& grid, std::span<const double> z);
void contrast(FeatureTensor& grid, std::span<const double> z);
// q = round(255 x); q' = (q >> z) << z; x' = q' / 255.
void posterize(FeatureTensor& grid, std::span<const std::int64_t> bits);
// Cumulative-histogram equalization over `levels` bins. With `per_channel`
// each channel flagged in `mask` is equalized on its own histogram;
// otherwise one histogram spans the whole grid.
inline constexpr int kEqualizeLevels = 196;
void equalize(FeatureTensor& grid, bool per_channel, const std::vector<bool>& mask,
              int levels = kEqualizeLevels);
// 3x3 box filter with edge replication.
FeatureTensor box_smooth(const FeatureTensor& grid);
// x + z (smooth - x).
void sharpness(FeatureTensor& grid, std::span<const double> z);
void invert_mapped(FeatureTensor& grid, const std::vector<bool>& fire);
void uniform_noise(FeatureTensor& grid, double v, Rng& rng);
// Per-channel 8-bit grayscale JPEG round trip at the given quality.
void jpeg(FeatureTensor& grid, std::span<const std::int64_t> quality);

// ---- raw space ------------------------------------------------------------

// x < 0.5 f_min -> f_min - x; x > 0.5 f_max -> f_max - x, for fired channels.
void solarize(FeatureTensor& f, const NormStats& stats, const std::vector<bool>& fire);
void invert_raw(FeatureTensor& f, const std::vector<bool>& fire);
void channel_dropout(FeatureTensor& f, const std::vector<bool>& drop);

// ---- structural -----------------------------------------------------------

struct Window {
  std::size_t y = 0, x = 0, h = 0, w = 0;
};

// v x v window at per-channel offsets; output has v*v tokens.
FeatureTensor crop(const FeatureTensor& f, std::size_t v, std::span<const Window> windows);
// Bilinear resize to v x v, then side x side crop at per-channel offsets.
FeatureTensor resized_crop(const FeatureTensor& f, std::size_t v, std::span<const Window> windows);
// Crop each channel to its window and bilinearly resize it back to side x side.
FeatureTensor crop_and_resize(const FeatureTensor& f, std::span<const Window> windows);
// Keep rows keep[c][i] (in that order) for each channel c.
FeatureTensor patch_dropout(const FeatureTensor& f,
                            const std::vector<std::vector<std::size_t>>& keep);

// Bilinear resampling of one channel plane (half-pixel centres, edge clamp).
std::vector<double> resize_bilinear(std::span<const double> src, std::size_t src_h,
                                    std::size_t src_w, std::size_t dst_h, std::size_t dst_w);

// ---- batch ----------------------------------------------------------------

// features[i] <- z[i] f_i + (1 - z[i]) f_partner[i], labels likewise.
void mixup(std::vector<FeatureTensor>& features, std::vector<std::vector<float>>& labels,
           std::span<const std::size_t> partner, std::span<const double> z);

}  // namespace kernels

// Inception-style box: area fraction in [0.05, 1], aspect ratio log-uniform in
// [3/4, 4/3], up to 10 attempts, falling back to the full grid.
kernels::Window sample_inception_window(std::size_t side, Rng& rng);

// Sampled patch dropout on the 2-D token view: v of N rows in random order.
FeatureTensor patch_dropout(const FeatureTensor& f, std::size_t v, Rng& rng);

// Sampled mixup over a batch; z ~ Beta(v, v), partner = random permutation.
void mixup_batch(std::vector<FeatureTensor>& features, std::vector<std::vector<float>>& labels,
                 double v, RngKey key);

}  // namespace frofa
