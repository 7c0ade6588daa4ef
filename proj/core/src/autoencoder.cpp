#include "upcc/autoencoder.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "upcc/distances.hpp"
#include "upcc/error.hpp"

namespace upcc {

namespace {

std::vector<std::size_t> with_tail(std::vector<std::size_t> widths, std::size_t tail) {
  widths.push_back(tail);
  return widths;
}

std::string join(const std::vector<std::size_t>& v) {
  std::ostringstream ss;
  for (std::size_t i = 0; i < v.size(); ++i) ss << (i ? "," : "") << v[i];
  return ss.str();
}

std::vector<std::size_t> split_widths(const std::string& s) {
  std::vector<std::size_t> out;
  std::istringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stoul(tok));
  }
  return out;
}

}  // namespace

void AutoencoderSpec::validate() const {
  if (n == 0) throw InvalidArgument("autoencoder: n must be positive");
  if (k == 0) throw InvalidArgument("autoencoder: k must be positive");
  for (auto w : encoder_widths) {
    if (w == 0) throw InvalidArgument("autoencoder: encoder widths must be positive");
  }
  for (auto w : decoder_widths) {
    if (w == 0) throw InvalidArgument("autoencoder: decoder widths must be positive");
  }
}

Autoencoder::Autoencoder(AutoencoderSpec spec, Rng& rng) : spec_(std::move(spec)) {
  spec_.validate();
  const auto enc = with_tail(spec_.encoder_widths, spec_.k);
  const auto dec = with_tail(spec_.decoder_widths, 3 * spec_.n);
  encoder_ = nn::Network(nn::pointnet_specs(3, enc), rng);
  decoder_ = nn::Network(nn::mlp_specs(spec_.k, dec), rng);
}

Autoencoder::Autoencoder(AutoencoderSpec spec, nn::Network encoder, nn::Network decoder)
    : spec_(std::move(spec)), encoder_(std::move(encoder)), decoder_(std::move(decoder)) {
  spec_.validate();
  Rng unused(0);
  Autoencoder reference(spec_, unused);
  if (encoder_.architecture_hash() != reference.encoder_.architecture_hash() ||
      decoder_.architecture_hash() != reference.decoder_.architecture_hash()) {
    throw CheckpointError("autoencoder networks do not match the stored spec");
  }
}

void Autoencoder::set_mode(nn::Mode mode) {
  encoder_.set_mode(mode);
  decoder_.set_mode(mode);
}

nn::Tensor Autoencoder::points_tensor(std::span<const PointSet> sets) const {
  if (sets.empty()) throw InvalidArgument("autoencoder: empty batch");
  nn::Tensor t(sets.size(), spec_.n, 3);
  for (std::size_t b = 0; b < sets.size(); ++b) {
    if (sets[b].size() != spec_.n) {
      throw InvalidArgument("autoencoder expects " + std::to_string(spec_.n) + " points, got " +
                            std::to_string(sets[b].size()));
    }
    for (std::size_t p = 0; p < spec_.n; ++p) {
      t.at(b, p, 0) = sets[b][p].x;
      t.at(b, p, 1) = sets[b][p].y;
      t.at(b, p, 2) = sets[b][p].z;
    }
  }
  return t;
}

nn::Tensor codes_tensor(std::span<const LatentCode> codes) {
  if (codes.empty()) throw InvalidArgument("empty code batch");
  const std::size_t k = codes.front().size();
  nn::Tensor t(codes.size(), 1, k);
  for (std::size_t b = 0; b < codes.size(); ++b) {
    if (codes[b].size() != k) throw InvalidArgument("latent codes of different widths in one batch");
    std::copy(codes[b].values.begin(), codes[b].values.end(), t.row(b).begin());
  }
  return t;
}

std::vector<LatentCode> codes_from_tensor(const nn::Tensor& t) {
  std::vector<LatentCode> out(t.batch);
  for (std::size_t b = 0; b < t.batch; ++b) {
    out[b].values.assign(t.data.begin() + static_cast<std::ptrdiff_t>(b * t.points * t.features),
                         t.data.begin() + static_cast<std::ptrdiff_t>((b + 1) * t.points * t.features));
  }
  return out;
}

std::vector<PointSet> clouds_from_tensor(const nn::Tensor& t) {
  std::vector<PointSet> out;
  out.reserve(t.batch);
  const std::size_t width = t.points * t.features;
  for (std::size_t b = 0; b < t.batch; ++b) {
    out.push_back(PointSet::from_flat(std::span<const double>(t.data).subspan(b * width, width)));
  }
  return out;
}

LatentCode Autoencoder::encode(const PointSet& set) {
  return encode(std::span<const PointSet>(&set, 1)).front();
}

std::vector<LatentCode> Autoencoder::encode(std::span<const PointSet> sets) {
  return codes_from_tensor(encoder_.forward(points_tensor(sets)));
}

PointSet Autoencoder::decode(const LatentCode& z) {
  return decode(std::span<const LatentCode>(&z, 1)).front();
}

std::vector<PointSet> Autoencoder::decode(std::span<const LatentCode> codes) {
  for (const auto& z : codes) {
    if (z.size() != spec_.k) {
      throw InvalidArgument("decode expects a code of length " + std::to_string(spec_.k) +
                            ", got " + std::to_string(z.size()));
    }
  }
  return clouds_from_tensor(decoder_.forward(codes_tensor(codes)));
}

double Autoencoder::loss(std::span<const PointSet> batch) {
  const auto recon = clouds_from_tensor(decoder_.forward(encoder_.forward(points_tensor(batch))));
  double total = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) total += emd(batch[b], recon[b]).cost;
  return total / static_cast<double>(batch.size());
}

double Autoencoder::train_step(std::span<const PointSet> batch, nn::AdamState& encoder_opt,
                               nn::AdamState& decoder_opt) {
  encoder_.zero_grad();
  decoder_.zero_grad();
  const nn::Tensor out = decoder_.forward(encoder_.forward(points_tensor(batch)));
  const auto recon = clouds_from_tensor(out);
  nn::Tensor grad(out.batch, out.points, out.features);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    auto eg = emd_with_grad(recon[b], batch[b]);
    total += eg.assignment.cost;
    for (std::size_t p = 0; p < spec_.n; ++p) {
      for (int c = 0; c < 3; ++c) grad.data[b * 3 * spec_.n + 3 * p + c] = eg.grad_a[p][c] * inv_b;
    }
  }
  const double loss = total * inv_b;
  if (!std::isfinite(loss)) throw NumericError("autoencoder loss is not finite");
  encoder_.backward(decoder_.backward(grad));
  nn::adam_step(encoder_opt, encoder_.params(), encoder_.grads());
  nn::adam_step(decoder_opt, decoder_.params(), decoder_.grads());
  return loss;
}

AeTrainConfig AeTrainConfig::preset(const std::string& name) {
  if (name == "paper" || name == "paper-scale") return paper();
  if (name == "desk" || name == "desk-scale") return desk();
  throw InvalidArgument("unknown autoencoder training preset '" + name + "'");
}

TrainedAutoencoder train_ae(std::span<const PointSet> dataset, const AutoencoderSpec& spec,
                            const AeTrainConfig& cfg, const EpochCallback& on_epoch) {
  if (dataset.empty()) throw InvalidArgument("train_ae: empty dataset");
  if (cfg.batch_size == 0) throw InvalidArgument("train_ae: batch size must be positive");
  if (!(cfg.lr_decay > 0.0 && cfg.lr_decay <= 1.0)) {
    throw InvalidArgument("train_ae: lr_decay must be in (0, 1]");
  }
  Rng rng(cfg.seed);
  Rng init_rng = rng.fork(0);
  Rng order_rng = rng.fork(1);
  TrainedAutoencoder out{Autoencoder(spec, init_rng), {}, {}, {}};
  auto& ae = out.ae;
  ae.set_mode(nn::Mode::Train);
  out.encoder_opt = nn::AdamState(cfg.adam, ae.encoder().param_count());
  out.decoder_opt = nn::AdamState(cfg.adam, ae.decoder().param_count());

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<PointSet> batch;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(order.begin(), order.end());
    double weighted = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(dataset[order[i]]);
      double loss = 0.0;
      try {
        loss = ae.train_step(batch, out.encoder_opt, out.decoder_opt);
      } catch (const NumericError& e) {
        throw NumericError("train_ae diverged at epoch " + std::to_string(epoch + 1) + ": " +
                           e.what());
      }
      weighted += loss * static_cast<double>(stop - start);
    }
    const double epoch_loss = weighted / static_cast<double>(order.size());
    out.loss_curve.push_back(epoch_loss);
    out.encoder_opt.config.lr *= cfg.lr_decay;
    out.decoder_opt.config.lr *= cfg.lr_decay;
    if (on_epoch) on_epoch(epoch + 1, epoch_loss);
  }
  ae.set_mode(nn::Mode::Infer);
  return out;
}

nn::Checkpoint to_checkpoint(const TrainedAutoencoder& trained, std::uint64_t seed) {
  nn::Checkpoint ckpt;
  ckpt.kind = "autoencoder";
  ckpt.seed = seed;
  const auto& spec = trained.ae.spec();
  ckpt.meta["n"] = std::to_string(spec.n);
  ckpt.meta["k"] = std::to_string(spec.k);
  ckpt.meta["encoder_widths"] = join(spec.encoder_widths);
  ckpt.meta["decoder_widths"] = join(spec.decoder_widths);
  ckpt.networks.emplace("encoder", trained.ae.encoder());
  ckpt.networks.emplace("decoder", trained.ae.decoder());
  ckpt.optimizers.emplace("encoder", trained.encoder_opt);
  ckpt.optimizers.emplace("decoder", trained.decoder_opt);
  return ckpt;
}

Autoencoder autoencoder_from_checkpoint(const nn::Checkpoint& ckpt) {
  if (ckpt.kind != "autoencoder") {
    throw CheckpointError("expected an autoencoder checkpoint, found '" + ckpt.kind + "'");
  }
  try {
    AutoencoderSpec spec{std::stoul(ckpt.meta.at("n")), std::stoul(ckpt.meta.at("k")),
                         split_widths(ckpt.meta.at("encoder_widths")),
                         split_widths(ckpt.meta.at("decoder_widths"))};
    Autoencoder ae(spec, ckpt.networks.at("encoder"), ckpt.networks.at("decoder"));
    ae.set_mode(nn::Mode::Infer);
    return ae;
  } catch (const std::out_of_range&) {
    throw CheckpointError("autoencoder checkpoint lacks required fields");
  } catch (const std::invalid_argument&) {
    throw CheckpointError("autoencoder checkpoint has malformed spec fields");
  }
}

}  // namespace upcc
