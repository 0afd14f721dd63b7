#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace frofa {

// One example's frozen features: N tokens x C channels, row-major
// [token][channel]. The 3-D view (side x side x C, side = sqrt(N)) is a pure
// reshape: grid element (n1, n2, c) is token n1 * side + n2, channel c.
class FeatureTensor {
public:
  FeatureTensor() = default;
  FeatureTensor(std::size_t tokens, std::size_t channels, float fill = 0.0f);
  FeatureTensor(std::size_t tokens, std::size_t channels, std::vector<float> data);

  [[nodiscard]] std::size_t tokens() const { return tokens_; }
  [[nodiscard]] std::size_t channels() const { return channels_; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }

  [[nodiscard]] bool is_square() const;
  // Spatial side length; throws std::invalid_argument if N is not a perfect square.
  [[nodiscard]] std::size_t side() const;

  float& at(std::size_t n, std::size_t c) { return data_[n * channels_ + c]; }
  [[nodiscard]] float at(std::size_t n, std::size_t c) const { return data_[n * channels_ + c]; }

  float& at(std::size_t n1, std::size_t n2, std::size_t c) {
    return data_[(n1 * side_unchecked() + n2) * channels_ + c];
  }
  [[nodiscard]] float at(std::size_t n1, std::size_t n2, std::size_t c) const {
    return data_[(n1 * side_unchecked() + n2) * channels_ + c];
  }

  std::span<float> row(std::size_t n) { return {data_.data() + n * channels_, channels_}; }
  [[nodiscard]] std::span<const float> row(std::size_t n) const {
    return {data_.data() + n * channels_, channels_};
  }

  std::span<float> values() { return data_; }
  [[nodiscard]] std::span<const float> values() const { return data_; }
  [[nodiscard]] const std::vector<float>& data() const { return data_; }

  [[nodiscard]] bool all_finite() const;

  friend bool operator==(const FeatureTensor&, const FeatureTensor&) = default;

private:
  [[nodiscard]] std::size_t side_unchecked() const { return side_; }

  std::size_t tokens_ = 0;
  std::size_t side_ = 0;  // 0 when N is not a perfect square
  std::size_t channels_ = 0;
  std::vector<float> data_;
};

// Integer square root when n is a perfect square, otherwise 0.
std::size_t exact_sqrt(std::size_t n);

}  // namespace frofa
