#include "itts/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

using nlohmann::json;

namespace itts {

std::string checkpoint_to_string(const Checkpoint& ckpt) {
  json tensors = json::array();
  for (const auto& name : ckpt.params.names()) {
    const Tensor& t = ckpt.params.value(name);
    tensors.push_back(json{{"name", name}, {"shape", t.shape()}, {"values", t.data()}});
  }
  const json doc{{"format_version", ckpt.format_version},
                 {"component", ckpt.component},
                 {"seed", ckpt.seed},
                 {"config", ckpt.config},
                 {"tensors", tensors}};
  return doc.dump(1) + "\n";
}

Checkpoint checkpoint_from_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("corrupt checkpoint: ") + e.what());
  }
  Checkpoint ckpt;
  try {
    ckpt.format_version = doc.at("format_version").get<int>();
    if (ckpt.format_version != kCheckpointFormatVersion) {
      throw std::runtime_error("unsupported checkpoint format_version " + std::to_string(ckpt.format_version) +
                               " (expected " + std::to_string(kCheckpointFormatVersion) + ")");
    }
    ckpt.component = doc.at("component").get<std::string>();
    ckpt.seed = doc.at("seed").get<std::uint64_t>();
    ckpt.config = doc.at("config");
    for (const auto& t : doc.at("tensors")) {
      const auto name = t.at("name").get<std::string>();
      auto shape = t.at("shape").get<std::vector<std::size_t>>();
      auto values = t.at("values").get<std::vector<double>>();
      std::size_t expected = 1;
      for (auto d : shape) expected *= d;
      if (values.size() != expected) {
        throw std::runtime_error("corrupt checkpoint: tensor '" + name + "' has " + std::to_string(values.size()) +
                                 " values for its shape");
      }
      if (ckpt.params.contains(name)) throw std::runtime_error("corrupt checkpoint: duplicate tensor '" + name + "'");
      ckpt.params.add(name, Tensor(std::move(shape), std::move(values)));
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("corrupt checkpoint: ") + e.what());
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << checkpoint_to_string(ckpt);
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path, const std::string& expected_component) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  Checkpoint ckpt = checkpoint_from_string(buf.str());
  if (!expected_component.empty() && ckpt.component != expected_component) {
    throw std::runtime_error("checkpoint '" + path + "' holds a '" + ckpt.component + "' component, expected '" +
                             expected_component + "'");
  }
  return ckpt;
}

ParamStore select_params(const ParamStore& all, const std::string& prefix) {
  ParamStore out;
  for (const auto& name : all.names()) {
    if (name.compare(0, prefix.size(), prefix) == 0) out.add(name, all.value(name));
  }
  return out;
}

ParamStore merge_params(const ParamStore& a, const ParamStore& b) {
  ParamStore out = select_params(a, "");
  for (const auto& name : b.names()) {
    if (out.contains(name)) throw std::invalid_argument("duplicate tensor '" + name + "'");
    out.add(name, b.value(name));
  }
  return out;
}

}  // namespace itts
