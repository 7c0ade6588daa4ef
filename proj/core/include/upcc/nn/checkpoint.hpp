#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "upcc/nn/adam.hpp"
#include "upcc/nn/network.hpp"

namespace upcc::nn {

inline constexpr int kCheckpointVersion = 1;

/// A named set of networks with optional optimizer state, stored as JSON.
/// Doubles are written with round-trip precision, so a load reproduces the
/// saved parameters bit for bit.
struct Checkpoint {
  std::string kind;  // "autoencoder", "latent_gan", ...
  std::uint64_t seed = 0;
  std::map<std::string, Network> networks;
  std::map<std::string, AdamState> optimizers;
  /// Free-form string metadata (mode, referenced checkpoint digests, ...).
  std::map<std::string, std::string> meta;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies the parameters and running statistics of `stored` into `target`.
/// Throws CheckpointError if the architecture hashes differ.
void restore_into(Network& target, const Network& stored, const std::string& name);

}  // namespace upcc::nn
