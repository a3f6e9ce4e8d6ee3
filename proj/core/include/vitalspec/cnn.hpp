#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vitalspec/stft.hpp"

namespace vitalspec {

struct CnnChannels {
  std::size_t c1 = 16;
  std::size_t c2 = 16;
  std::size_t c3 = 16;

  static CnnChannels published() { return {128, 128, 64}; }
  bool operator==(const CnnChannels&) const = default;
};

/// Shallow convolutional binary classifier:
///
///   conv3x3(1->c1) relu  conv3x3(c1->c2) relu  maxpool2x2
///   conv3x3(c2->c3) relu  global-average-pool  dense(c3->1)  sigmoid
///
/// Convolutions are stride 1 with zero "same" padding. All parameters live in
/// one flat vector in the canonical order
///   conv1.w[c1][1][3][3] conv1.b[c1] conv2.w[c2][c1][3][3] conv2.b[c2]
///   conv3.w[c3][c2][3][3] conv3.b[c3] dense.w[c3] dense.b
/// which is also the on-disk snapshot layout.
class ShallowCnn {
 public:
  explicit ShallowCnn(CnnChannels channels = {});

  // He-normal conv kernels, zero biases, zero dense layer (so an untrained model
  // outputs exactly 0.5).
  static ShallowCnn initialized(CnnChannels channels, std::uint64_t seed);

  static std::size_t parameter_count(const CnnChannels& ch);
  std::size_t parameter_count() const { return params_.size(); }
  const CnnChannels& channels() const noexcept { return channels_; }

  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }
  void set_params(std::vector<double> p);

  struct Offsets {
    std::size_t conv1_w, conv1_b, conv2_w, conv2_b, conv3_w, conv3_b, dense_w, dense_b, total;
  };
  Offsets offsets() const noexcept { return offsets_; }

  /// Pre-sigmoid output for an h x w single-channel image (h, w >= 2).
  double logit(std::span<const double> image, std::size_t h, std::size_t w) const;
  double forward(std::span<const double> image, std::size_t h, std::size_t w) const;
  /// Requires a 128x128 image with pixels in [0,1].
  double forward(const SpectroImage& image) const;

  /// Binary cross-entropy of one example; accumulates dLoss/dparams into grad
  /// (same layout as params()). Returns the loss.
  double loss_and_gradient(std::span<const double> image, std::size_t h, std::size_t w, int label,
                           std::span<double> grad) const;

 private:
  CnnChannels channels_;
  Offsets offsets_;
  std::vector<double> params_;
};

double sigmoid(double z);
// log(1 + e^z) - y z, stable for large |z|.
double bce_with_logit(double z, int label);

std::vector<double> to_input(const SpectroImage& image);

}  // namespace vitalspec
