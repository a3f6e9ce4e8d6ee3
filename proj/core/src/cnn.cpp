#include "vitalspec/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "vitalspec/error.hpp"

namespace vitalspec {
namespace {

constexpr std::size_t kTaps = 9;

// out[o] = bias[o] + sum_i conv3x3(in[i], weights[o][i]) with zero "same" padding.
void conv_forward(const double* in, std::size_t cin, std::size_t h, std::size_t w, const double* weights,
                  const double* bias, std::size_t cout, double* out) {
  const std::size_t plane = h * w;
  for (std::size_t o = 0; o < cout; ++o) {
    double* dst = out + o * plane;
    std::fill(dst, dst + plane, bias[o]);
    for (std::size_t i = 0; i < cin; ++i) {
      const double* src = in + i * plane;
      const double* k = weights + (o * cin + i) * kTaps;
      for (std::size_t y = 0; y < h; ++y) {
        double* drow = dst + y * w;
        for (int dy = -1; dy <= 1; ++dy) {
          const auto sy = static_cast<std::ptrdiff_t>(y) + dy;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
          const double* srow = src + static_cast<std::size_t>(sy) * w;
          const double k0 = k[(dy + 1) * 3 + 0];
          const double k1 = k[(dy + 1) * 3 + 1];
          const double k2 = k[(dy + 1) * 3 + 2];
          drow[0] += k1 * srow[0] + (w > 1 ? k2 * srow[1] : 0.0);
          for (std::size_t x = 1; x + 1 < w; ++x) drow[x] += k0 * srow[x - 1] + k1 * srow[x] + k2 * srow[x + 1];
          if (w > 1) drow[w - 1] += k0 * srow[w - 2] + k1 * srow[w - 1];
        }
      }
    }
  }
}

// Accumulates weight/bias gradients and (if din != nullptr) the input gradient.
// Weight gradients are gathered in per-column accumulators and reduced once per
// kernel row so the inner loops stay free of floating-point reductions.
void conv_backward(const double* in, std::size_t cin, std::size_t h, std::size_t w, const double* weights,
                   const double* dout, std::size_t cout, double* dweights, double* dbias, double* din) {
  const std::size_t plane = h * w;
  thread_local std::vector<double> acc;
  acc.resize(3 * w);
  double* acc0 = acc.data();
  double* acc1 = acc0 + w;
  double* acc2 = acc1 + w;
  for (std::size_t o = 0; o < cout; ++o) {
    const double* g = dout + o * plane;
    std::fill(acc0, acc0 + w, 0.0);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) acc0[x] += g[y * w + x];
    double sum = 0.0;
    for (std::size_t x = 0; x < w; ++x) sum += acc0[x];
    dbias[o] += sum;
    for (std::size_t i = 0; i < cin; ++i) {
      const double* src = in + i * plane;
      const double* k = weights + (o * cin + i) * kTaps;
      double* dk = dweights + (o * cin + i) * kTaps;
      double* dsrc = din ? din + i * plane : nullptr;
      for (int dy = -1; dy <= 1; ++dy) {
        const std::size_t y_lo = dy < 0 ? 1 : 0;
        const std::size_t y_hi = dy > 0 ? h - 1 : h;
        const double k0 = k[(dy + 1) * 3 + 0];
        const double k1 = k[(dy + 1) * 3 + 1];
        const double k2 = k[(dy + 1) * 3 + 2];
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t y = y_lo; y < y_hi; ++y) {
          const double* grow = g + y * w;
          const std::size_t sy = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(y) + dy);
          const double* srow = src + sy * w;
          // dx = -1 pairs grow[x] with srow[x-1]; dx = +1 pairs grow[x] with srow[x+1].
          acc1[0] += grow[0] * srow[0];
          if (w > 1) acc2[0] += grow[0] * srow[1];
          for (std::size_t x = 1; x + 1 < w; ++x) {
            acc0[x] += grow[x] * srow[x - 1];
            acc1[x] += grow[x] * srow[x];
            acc2[x] += grow[x] * srow[x + 1];
          }
          if (w > 1) {
            acc0[w - 1] += grow[w - 1] * srow[w - 2];
            acc1[w - 1] += grow[w - 1] * srow[w - 1];
          }
          if (dsrc) {
            double* drow = dsrc + sy * w;
            drow[0] += k1 * grow[0] + (w > 1 ? k0 * grow[1] : 0.0);
            for (std::size_t x = 1; x + 1 < w; ++x) drow[x] += k0 * grow[x + 1] + k1 * grow[x] + k2 * grow[x - 1];
            if (w > 1) drow[w - 1] += k1 * grow[w - 1] + k2 * grow[w - 2];
          }
        }
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
        for (std::size_t x = 0; x < w; ++x) {
          s0 += acc0[x];
          s1 += acc1[x];
          s2 += acc2[x];
        }
        dk[(dy + 1) * 3 + 0] += s0;
        dk[(dy + 1) * 3 + 1] += s1;
        dk[(dy + 1) * 3 + 2] += s2;
      }
    }
  }
}

void relu_inplace(double* v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) v[i] = v[i] > 0.0 ? v[i] : 0.0;
}

// Gradient through relu given the post-activation values.
void relu_backward(const double* activated, double* grad, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!(activated[i] > 0.0)) grad[i] = 0.0;
}

void maxpool_forward(const double* in, std::size_t c, std::size_t h, std::size_t w, double* out,
                     std::uint32_t* argmax) {
  const std::size_t ho = h / 2, wo = w / 2;
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* src = in + ch * h * w;
    for (std::size_t y = 0; y < ho; ++y) {
      for (std::size_t x = 0; x < wo; ++x) {
        std::size_t best = (2 * y) * w + 2 * x;
        for (std::size_t idx : {best + 1, best + w, best + w + 1})
          if (src[idx] > src[best]) best = idx;
        const std::size_t o = ch * ho * wo + y * wo + x;
        out[o] = src[best];
        argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
}

struct Workspace {
  std::vector<double> a1, a2, pooled, a3, d_a3, d_pooled, d_a2, d_a1;
  std::vector<std::uint32_t> argmax;
};

Workspace& workspace() {
  thread_local Workspace ws;
  return ws;
}

void check_input(std::size_t size, std::size_t h, std::size_t w) {
  if (h < 2 || w < 2) throw ValidationError("image must be at least 2x2");
  if (size != h * w) throw ValidationError("image buffer does not match its dimensions");
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double bce_with_logit(double z, int label) {
  const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  return softplus - (label == 1 ? z : 0.0);
}

std::vector<double> to_input(const SpectroImage& image) {
  if (image.pixels.size() != kImageSize * kImageSize) throw ValidationError("image must be 128x128");
  std::vector<double> out(image.pixels.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double p = image.pixels[i];
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("image pixels must lie in [0, 1]");
    out[i] = p;
  }
  return out;
}

std::size_t ShallowCnn::parameter_count(const CnnChannels& ch) {
  return (ch.c1 * kTaps + ch.c1) + (ch.c2 * ch.c1 * kTaps + ch.c2) + (ch.c3 * ch.c2 * kTaps + ch.c3) + (ch.c3 + 1);
}

ShallowCnn::ShallowCnn(CnnChannels channels) : channels_(channels) {
  if (channels.c1 == 0 || channels.c2 == 0 || channels.c3 == 0)
    throw ValidationError("channel counts must be positive");
  auto& o = offsets_;
  o.conv1_w = 0;
  o.conv1_b = o.conv1_w + channels.c1 * kTaps;
  o.conv2_w = o.conv1_b + channels.c1;
  o.conv2_b = o.conv2_w + channels.c2 * channels.c1 * kTaps;
  o.conv3_w = o.conv2_b + channels.c2;
  o.conv3_b = o.conv3_w + channels.c3 * channels.c2 * kTaps;
  o.dense_w = o.conv3_b + channels.c3;
  o.dense_b = o.dense_w + channels.c3;
  o.total = o.dense_b + 1;
  params_.assign(o.total, 0.0);
}

ShallowCnn ShallowCnn::initialized(CnnChannels channels, std::uint64_t seed) {
  ShallowCnn net(channels);
  std::mt19937_64 rng(seed);
  auto fill = [&](std::size_t begin, std::size_t count, std::size_t fan_in) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    for (std::size_t i = 0; i < count; ++i) net.params_[begin + i] = dist(rng);
  };
  const auto& o = net.offsets_;
  fill(o.conv1_w, o.conv1_b - o.conv1_w, kTaps);
  fill(o.conv2_w, o.conv2_b - o.conv2_w, channels.c1 * kTaps);
  fill(o.conv3_w, o.conv3_b - o.conv3_w, channels.c2 * kTaps);
  return net;
}

void ShallowCnn::set_params(std::vector<double> p) {
  if (p.size() != params_.size())
    throw ValidationError("parameter vector has " + std::to_string(p.size()) + " entries, expected " +
                          std::to_string(params_.size()));
  params_ = std::move(p);
}

double ShallowCnn::logit(std::span<const double> image, std::size_t h, std::size_t w) const {
  check_input(image.size(), h, w);
  const auto& ch = channels_;
  const auto& o = offsets_;
  const double* p = params_.data();
  auto& ws = workspace();
  const std::size_t plane = h * w;
  const std::size_t ho = h / 2, wo = w / 2, pplane = ho * wo;

  ws.a1.resize(ch.c1 * plane);
  ws.a2.resize(ch.c2 * plane);
  ws.pooled.resize(ch.c2 * pplane);
  ws.argmax.resize(ch.c2 * pplane);
  ws.a3.resize(ch.c3 * pplane);

  conv_forward(image.data(), 1, h, w, p + o.conv1_w, p + o.conv1_b, ch.c1, ws.a1.data());
  relu_inplace(ws.a1.data(), ws.a1.size());
  conv_forward(ws.a1.data(), ch.c1, h, w, p + o.conv2_w, p + o.conv2_b, ch.c2, ws.a2.data());
  relu_inplace(ws.a2.data(), ws.a2.size());
  maxpool_forward(ws.a2.data(), ch.c2, h, w, ws.pooled.data(), ws.argmax.data());
  conv_forward(ws.pooled.data(), ch.c2, ho, wo, p + o.conv3_w, p + o.conv3_b, ch.c3, ws.a3.data());
  relu_inplace(ws.a3.data(), ws.a3.size());

  double z = p[o.dense_b];
  for (std::size_t c = 0; c < ch.c3; ++c) {
    double sum = 0.0;
    const double* a = ws.a3.data() + c * pplane;
    for (std::size_t i = 0; i < pplane; ++i) sum += a[i];
    z += p[o.dense_w + c] * (sum / static_cast<double>(pplane));
  }
  return z;
}

double ShallowCnn::forward(std::span<const double> image, std::size_t h, std::size_t w) const {
  return sigmoid(logit(image, h, w));
}

double ShallowCnn::forward(const SpectroImage& image) const {
  const auto input = to_input(image);
  return forward(input, kImageSize, kImageSize);
}

double ShallowCnn::loss_and_gradient(std::span<const double> image, std::size_t h, std::size_t w, int label,
                                     std::span<double> grad) const {
  if (grad.size() != params_.size()) throw ValidationError("gradient buffer has the wrong size");
  const double z = logit(image, h, w);  // fills the workspace activations
  const auto& ch = channels_;
  const auto& o = offsets_;
  const double* p = params_.data();
  double* g = grad.data();
  auto& ws = workspace();
  const std::size_t plane = h * w;
  const std::size_t ho = h / 2, wo = w / 2, pplane = ho * wo;

  const double dz = sigmoid(z) - (label == 1 ? 1.0 : 0.0);
  g[o.dense_b] += dz;

  ws.d_a3.resize(ch.c3 * pplane);
  for (std::size_t c = 0; c < ch.c3; ++c) {
    const double* a = ws.a3.data() + c * pplane;
    double sum = 0.0;
    for (std::size_t i = 0; i < pplane; ++i) sum += a[i];
    g[o.dense_w + c] += dz * sum / static_cast<double>(pplane);
    const double d = dz * p[o.dense_w + c] / static_cast<double>(pplane);
    std::fill(ws.d_a3.begin() + static_cast<std::ptrdiff_t>(c * pplane),
              ws.d_a3.begin() + static_cast<std::ptrdiff_t>((c + 1) * pplane), d);
  }
  relu_backward(ws.a3.data(), ws.d_a3.data(), ws.d_a3.size());

  ws.d_pooled.assign(ch.c2 * pplane, 0.0);
  conv_backward(ws.pooled.data(), ch.c2, ho, wo, p + o.conv3_w, ws.d_a3.data(), ch.c3, g + o.conv3_w,
                g + o.conv3_b, ws.d_pooled.data());

  ws.d_a2.assign(ch.c2 * plane, 0.0);
  for (std::size_t c = 0; c < ch.c2; ++c) {
    for (std::size_t i = 0; i < pplane; ++i) {
      const std::size_t idx = c * pplane + i;
      ws.d_a2[c * plane + ws.argmax[idx]] += ws.d_pooled[idx];
    }
  }
  relu_backward(ws.a2.data(), ws.d_a2.data(), ws.d_a2.size());

  ws.d_a1.assign(ch.c1 * plane, 0.0);
  conv_backward(ws.a1.data(), ch.c1, h, w, p + o.conv2_w, ws.d_a2.data(), ch.c2, g + o.conv2_w, g + o.conv2_b,
                ws.d_a1.data());
  relu_backward(ws.a1.data(), ws.d_a1.data(), ws.d_a1.size());

  conv_backward(image.data(), 1, h, w, p + o.conv1_w, ws.d_a1.data(), ch.c1, g + o.conv1_w, g + o.conv1_b,
                nullptr);
  return bce_with_logit(z, label);
}

}  // namespace vitalspec
