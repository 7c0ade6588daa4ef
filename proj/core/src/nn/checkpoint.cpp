#include "upcc/nn/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "upcc/error.hpp"
#include "upcc/hash.hpp"

namespace upcc::nn {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "upcc-checkpoint";

LayerKind kind_from_string(const std::string& s) {
  for (auto k : {LayerKind::Dense, LayerKind::SharedMlp, LayerKind::BatchNorm, LayerKind::Relu,
                 LayerKind::MaxPool}) {
    if (to_string(k) == s) return k;
  }
  throw CheckpointError("unknown layer kind '" + s + "'");
}

json network_to_json(const Network& net) {
  json layers = json::array();
  for (const auto& s : net.specs()) {
    layers.push_back({{"kind", to_string(s.kind)}, {"in", s.in}, {"out", s.out}, {"bias", s.bias}});
  }
  const auto params = net.params();
  return {{"architecture", net.architecture()},
          {"architecture_hash", to_hex(net.architecture_hash())},
          {"layers", layers},
          {"params", std::vector<double>(params.begin(), params.end())},
          {"state", net.state()}};
}

Network network_from_json(const json& j, const std::string& name) {
  std::vector<LayerSpec> specs;
  for (const auto& l : j.at("layers")) {
    LayerSpec s;
    s.kind = kind_from_string(l.at("kind").get<std::string>());
    s.in = l.at("in").get<std::size_t>();
    s.out = l.at("out").get<std::size_t>();
    s.bias = l.at("bias").get<bool>();
    specs.push_back(s);
  }
  Rng unused(0);
  Network net(std::move(specs), unused);
  if (to_hex(net.architecture_hash()) != j.at("architecture_hash").get<std::string>()) {
    throw CheckpointError("network '" + name + "': stored architecture hash does not match its layers");
  }
  const auto params = j.at("params").get<std::vector<double>>();
  if (params.size() != net.param_count()) {
    throw CheckpointError("network '" + name + "': expected " + std::to_string(net.param_count()) +
                          " parameters, found " + std::to_string(params.size()));
  }
  std::copy(params.begin(), params.end(), net.params().begin());
  try {
    net.set_state(j.at("state").get<std::vector<double>>());
  } catch (const InvalidArgument& e) {
    throw CheckpointError("network '" + name + "': " + e.what());
  }
  net.set_mode(Mode::Infer);
  return net;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  json j;
  j["format"] = kFormat;
  j["version"] = kCheckpointVersion;
  j["kind"] = ckpt.kind;
  j["seed"] = ckpt.seed;
  j["meta"] = ckpt.meta;
  j["networks"] = json::object();
  for (const auto& [name, net] : ckpt.networks) j["networks"][name] = network_to_json(net);
  j["optimizers"] = json::object();
  for (const auto& [name, st] : ckpt.optimizers) {
    j["optimizers"][name] = {{"lr", st.config.lr},     {"beta1", st.config.beta1},
                             {"beta2", st.config.beta2}, {"eps", st.config.eps},
                             {"t", st.t},               {"m", st.m},
                             {"v", st.v}};
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out << j.dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("missing checkpoint " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw CheckpointError("unreadable checkpoint " + path.string() + ": " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat) {
      throw CheckpointError(path.string() + " is not a upcc checkpoint");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw CheckpointError(path.string() + ": unsupported checkpoint version " +
                            std::to_string(j.at("version").get<int>()));
    }
    Checkpoint ckpt;
    ckpt.kind = j.at("kind").get<std::string>();
    ckpt.seed = j.at("seed").get<std::uint64_t>();
    ckpt.meta = j.at("meta").get<std::map<std::string, std::string>>();
    for (const auto& [name, nj] : j.at("networks").items()) {
      ckpt.networks.emplace(name, network_from_json(nj, name));
    }
    for (const auto& [name, oj] : j.at("optimizers").items()) {
      AdamState st;
      st.config = {oj.at("lr").get<double>(), oj.at("beta1").get<double>(),
                   oj.at("beta2").get<double>(), oj.at("eps").get<double>()};
      st.t = oj.at("t").get<std::uint64_t>();
      st.m = oj.at("m").get<std::vector<double>>();
      st.v = oj.at("v").get<std::vector<double>>();
      ckpt.optimizers.emplace(name, std::move(st));
    }
    return ckpt;
  } catch (const json::exception& e) {
    throw CheckpointError("malformed checkpoint " + path.string() + ": " + e.what());
  }
}

void restore_into(Network& target, const Network& stored, const std::string& name) {
  if (target.architecture_hash() != stored.architecture_hash()) {
    throw CheckpointError("network '" + name + "': architecture mismatch (expected " +
                          target.architecture() + ", checkpoint has " + stored.architecture() + ")");
  }
  std::copy(stored.params().begin(), stored.params().end(), target.params().begin());
  target.set_state(stored.state());
}

}  // namespace upcc::nn
