#include "frofa/feature_tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace frofa {

std::size_t exact_sqrt(std::size_t n) {
  auto r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r * r == n ? r : 0;
}

FeatureTensor::FeatureTensor(std::size_t tokens, std::size_t channels, float fill)
    : tokens_(tokens), side_(exact_sqrt(tokens)), channels_(channels), data_(tokens * channels, fill) {}

FeatureTensor::FeatureTensor(std::size_t tokens, std::size_t channels, std::vector<float> data)
    : tokens_(tokens), side_(exact_sqrt(tokens)), channels_(channels), data_(std::move(data)) {
  if (data_.size() != tokens_ * channels_) {
    throw std::invalid_argument("FeatureTensor: expected " + std::to_string(tokens_ * channels_) +
                                " values, got " + std::to_string(data_.size()));
  }
}

bool FeatureTensor::is_square() const { return side_ != 0; }

std::size_t FeatureTensor::side() const {
  if (side_ == 0) {
    throw std::invalid_argument("spatial augmentation requires a square token grid, got N=" +
                                std::to_string(tokens_));
  }
  return side_;
}

bool FeatureTensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

}  // namespace frofa
