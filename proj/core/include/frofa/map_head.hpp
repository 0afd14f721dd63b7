#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "frofa/feature_tensor.hpp"

namespace frofa {

// Largest divisor of C that does not exceed max(1, C / 64).
std::size_t default_head_count(std::size_t channels);

// Attention pooling head followed by a linear classifier:
//   q      = Wq probe + bq
//   a_h    = softmax_n((Wk x_n + bk)_h . q_h / sqrt(C/h))
//   attn_h = sum_n a_h,n (Wv x_n + bv)_h
//   o      = Wo attn + bo
//   y      = o + W2 gelu(W1 LayerNorm(o) + b1) + b2
//   logits = Wc y + bc
// All parameters live in one flat f32 vector; kernels are row-major
// [out, in] so that a layer computes W x.
class MapHeadParams {
public:
  enum Tensor : std::size_t {
    probe,
    query_kernel, query_bias,
    key_kernel, key_bias,
    value_kernel, value_bias,
    out_kernel, out_bias,
    ln_scale, ln_bias,
    mlp1_kernel, mlp1_bias,
    mlp2_kernel, mlp2_bias,
    head_kernel, head_bias,
    kTensorCount
  };

  struct Slice {
    std::string name;
    std::size_t offset = 0;
    std::vector<std::size_t> shape;
    bool decayed = false;  // receives weight decay
    [[nodiscard]] std::size_t size() const;
    friend bool operator==(const Slice&, const Slice&) = default;
  };

  MapHeadParams() = default;
  // All-zero parameters except the layer-norm scale, which is one.
  MapHeadParams(std::size_t channels, std::size_t classes, std::size_t heads);

  [[nodiscard]] std::size_t channels() const { return channels_; }
  [[nodiscard]] std::size_t classes() const { return classes_; }
  [[nodiscard]] std::size_t heads() const { return heads_; }
  [[nodiscard]] std::size_t hidden() const { return 4 * channels_; }

  [[nodiscard]] const std::array<Slice, kTensorCount>& slices() const { return slices_; }
  [[nodiscard]] const Slice& slice(Tensor t) const { return slices_[t]; }
  [[nodiscard]] std::span<float> tensor(Tensor t);
  [[nodiscard]] std::span<const float> tensor(Tensor t) const;
  [[nodiscard]] float* ptr(Tensor t) { return flat_.data() + slices_[t].offset; }
  [[nodiscard]] const float* ptr(Tensor t) const { return flat_.data() + slices_[t].offset; }

  [[nodiscard]] std::vector<float>& flat() { return flat_; }
  [[nodiscard]] const std::vector<float>& flat() const { return flat_; }
  // Same shape, all zeros (gradient / momentum buffers).
  [[nodiscard]] MapHeadParams zeros_like() const;
  [[nodiscard]] bool all_finite() const;

  friend bool operator==(const MapHeadParams&, const MapHeadParams&) = default;

private:
  std::size_t channels_ = 0, classes_ = 0, heads_ = 0;
  std::array<Slice, kTensorCount> slices_{};
  std::vector<float> flat_;
};

// Xavier-uniform probe and attention/MLP kernels, zero biases, layer-norm
// scale one, zero classifier. Throws std::invalid_argument unless h divides C.
MapHeadParams init_map_head(std::size_t channels, std::size_t classes, std::size_t heads,
                            std::uint64_t seed);

struct HeadOutput {
  std::vector<float> pooled;  // y, C values
  std::vector<float> logits;  // S values
};

HeadOutput forward(const MapHeadParams& params, const FeatureTensor& tokens);
std::vector<HeadOutput> forward(const MapHeadParams& params, std::span<const FeatureTensor> batch);

// Sum over classes of the stable sigmoid cross-entropy for one example.
double sigmoid_ce(std::span<const float> logits, std::span<const float> labels);
// Mean over the batch of sigmoid_ce.
double loss_sigmoid_ce(const std::vector<std::vector<float>>& logits,
                       const std::vector<std::vector<float>>& labels);

struct WeightedExample {
  const FeatureTensor* tokens = nullptr;
  const float* labels = nullptr;  // S probabilities
  float weight = 1.0f;            // multiplicity within the batch
};

// Mean loss over the batch (weights count as multiplicities) and, when
// `grad` is non-null, its exact gradient with respect to every parameter.
// `grad` must have the layout of `params`; it is overwritten.
double loss_and_gradient(const MapHeadParams& params, std::span<const WeightedExample> batch,
                         MapHeadParams* grad);

// Index of the largest logit; ties go to the smallest index.
std::size_t argmax(std::span<const float> scores);

}  // namespace frofa
