#include "vitalspec/training.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "vitalspec/error.hpp"

namespace vitalspec {

void RmsPropConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
  if (!(decay_rho > 0.0 && decay_rho < 1.0)) throw ValidationError("decay_rho must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be > 0");
  if (batch_size == 0) throw ValidationError("batch_size must be >= 1");
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
}

RmsProp::RmsProp(const RmsPropConfig& cfg, std::size_t n_params)
    : lr_(cfg.learning_rate), rho_(cfg.decay_rho), eps_(cfg.epsilon), mean_square_(n_params, 0.0) {
  cfg.validate();
}

void RmsProp::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != mean_square_.size() || grad.size() != mean_square_.size())
    throw ValidationError("RmsProp::step: size mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    double& v = mean_square_[i];
    v = rho_ * v + (1.0 - rho_) * g * g;
    params[i] -= lr_ * g / (std::sqrt(v) + eps_);
  }
}

int majority_vote(std::span<const int> votes) {
  if (votes.empty() || votes.size() % 2 == 0) throw ValidationError("majority_vote needs an odd number of votes");
  const auto positives = static_cast<std::size_t>(std::count(votes.begin(), votes.end(), 1));
  return 2 * positives > votes.size() ? 1 : 0;
}

SnapshotEnsemble::SnapshotEnsemble(CnnChannels channels, std::vector<Snapshot> snapshots,
                                   std::vector<int> vote_epochs)
    : channels_(channels), snapshots_(std::move(snapshots)), vote_epochs_(std::move(vote_epochs)) {
  if (vote_epochs_.empty() || vote_epochs_.size() % 2 == 0)
    throw ValidationError("vote set must have an odd number of epochs, got " + std::to_string(vote_epochs_.size()));
  for (int e : vote_epochs_) {
    const auto it = std::find_if(snapshots_.begin(), snapshots_.end(), [e](const Snapshot& s) { return s.epoch == e; });
    if (it == snapshots_.end()) throw ValidationError("no snapshot for vote epoch " + std::to_string(e));
    ShallowCnn net(channels_);
    net.set_params(it->params);
    voters_.push_back(std::move(net));
  }
}

std::vector<double> SnapshotEnsemble::voter_probabilities(std::span<const double> image, std::size_t h,
                                                          std::size_t w) const {
  std::vector<double> probs;
  probs.reserve(voters_.size());
  for (const auto& net : voters_) probs.push_back(net.forward(image, h, w));
  return probs;
}

int SnapshotEnsemble::predict_vote(std::span<const double> image, std::size_t h, std::size_t w) const {
  std::vector<int> votes;
  for (double p : voter_probabilities(image, h, w)) votes.push_back(p >= 0.5 ? 1 : 0);
  return majority_vote(votes);
}

int SnapshotEnsemble::predict_vote(const SpectroImage& image) const {
  const auto input = to_input(image);
  return predict_vote(input, kImageSize, kImageSize);
}

double SnapshotEnsemble::mean_probability(const SpectroImage& image) const {
  const auto input = to_input(image);
  const auto probs = voter_probabilities(input, kImageSize, kImageSize);
  return std::accumulate(probs.begin(), probs.end(), 0.0) / static_cast<double>(probs.size());
}

TrainResult train(ShallowCnn& model, const std::vector<const LabeledSample*>& samples, const RmsPropConfig& opt,
                  int snapshot_every) {
  opt.validate();
  if (samples.empty()) throw ValidationError("train: empty training set");
  if (snapshot_every < 1) throw ValidationError("train: snapshot_every must be >= 1");

  std::vector<std::vector<double>> inputs;
  inputs.reserve(samples.size());
  for (const auto* s : samples) inputs.push_back(to_input(s->image));

  TrainResult result;
  {
    double total = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i)
      total += bce_with_logit(model.logit(inputs[i], kImageSize, kImageSize), samples[i]->label);
    result.initial_loss = total / static_cast<double>(samples.size());
  }

  RmsProp optimizer(opt, model.parameter_count());
  std::vector<double> grad(model.parameter_count());
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(opt.seed);

  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      const std::size_t end = std::min(order.size(), start + opt.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        const double loss = model.loss_and_gradient(inputs[i], kImageSize, kImageSize, samples[i]->label, grad);
        if (!std::isfinite(loss)) throw TrainingDiverged(epoch);
        epoch_loss += loss;
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      for (auto& g : grad) g *= scale;
      optimizer.step(model.params(), grad);
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss)) throw TrainingDiverged(epoch);
    result.epoch_loss.push_back(epoch_loss);
    if (epoch % snapshot_every == 0)
      result.snapshots.push_back({epoch, std::vector<double>(model.params().begin(), model.params().end())});
  }
  return result;
}

TrainResult train(ShallowCnn& model, const std::vector<LabeledSample>& samples, const RmsPropConfig& opt,
                  int snapshot_every) {
  std::vector<const LabeledSample*> ptrs;
  ptrs.reserve(samples.size());
  for (const auto& s : samples) ptrs.push_back(&s);
  return train(model, ptrs, opt, snapshot_every);
}

void write_snapshot(const std::string& stem, const Snapshot& snap, const CnnChannels& ch, std::uint64_t seed) {
  std::ofstream out(stem + ".params", std::ios::binary);
  if (!out) throw ValidationError("cannot write " + stem + ".params");
  for (double v : snap.params) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char bytes[8];
    std::memcpy(bytes, &bits, 8);
    out.write(bytes, 8);
  }
  nlohmann::json header{{"arch", "shallow_cnn"},
                        {"channels", {ch.c1, ch.c2, ch.c3}},
                        {"epoch", snap.epoch},
                        {"seed", seed},
                        {"n_params", snap.params.size()},
                        {"layout", {"conv1.w", "conv1.b", "conv2.w", "conv2.b", "conv3.w", "conv3.b", "dense.w",
                                    "dense.b"}}};
  std::ofstream side(stem + ".json");
  side << header.dump(2) << '\n';
}

Snapshot read_snapshot(const std::string& stem, CnnChannels* channels) {
  std::ifstream side(stem + ".json");
  if (!side) throw ValidationError("cannot open " + stem + ".json");
  const auto header = nlohmann::json::parse(side);
  if (header.at("arch") != "shallow_cnn") throw ValidationError(stem + ": unsupported arch");
  const auto ch = header.at("channels").get<std::array<std::size_t, 3>>();
  const CnnChannels parsed{ch[0], ch[1], ch[2]};
  if (channels) *channels = parsed;
  const auto n = header.at("n_params").get<std::size_t>();
  if (n != ShallowCnn::parameter_count(parsed)) throw ValidationError(stem + ": n_params does not match channels");

  Snapshot snap;
  snap.epoch = header.at("epoch").get<int>();
  snap.params.resize(n);
  std::ifstream in(stem + ".params", std::ios::binary);
  if (!in) throw ValidationError("cannot open " + stem + ".params");
  for (auto& v : snap.params) {
    char bytes[8];
    if (!in.read(bytes, 8)) throw ValidationError(stem + ".params is truncated");
    std::uint64_t bits;
    std::memcpy(&bits, bytes, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    v = std::bit_cast<double>(bits);
  }
  return snap;
}

}  // namespace vitalspec
