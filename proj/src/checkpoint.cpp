#include "selfpaced/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace selfpaced {

namespace {
constexpr const char* kFormat = "selfpaced-mlp";
constexpr int kVersion = 1;
}  // namespace

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  nlohmann::json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["role"] = ckpt.role;
  doc["layer_sizes"] = ckpt.model.layer_sizes();
  auto& layers = doc["layers"] = nlohmann::json::array();
  for (const auto& layer : ckpt.model.layers) {
    const auto w = layer.weight.values();
    layers.push_back({{"weight", std::vector<double>(w.begin(), w.end())}, {"bias", layer.bias}});
  }
  return doc.dump(1);
}

Checkpoint checkpoint_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw CheckpointError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kFormat) throw CheckpointError("not a selfpaced-mlp checkpoint");
    const int version = doc.at("version").get<int>();
    if (version != kVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    Checkpoint ckpt;
    ckpt.role = doc.value("role", "");
    const auto sizes = doc.at("layer_sizes").get<std::vector<std::size_t>>();
    ckpt.model = Mlp::zeros(sizes);
    const auto& layers = doc.at("layers");
    if (layers.size() != ckpt.model.layers.size()) throw CheckpointError("layer count does not match layer_sizes");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto w = layers[l].at("weight").get<std::vector<double>>();
      auto b = layers[l].at("bias").get<std::vector<double>>();
      auto& dst = ckpt.model.layers[l];
      if (w.size() != dst.weight.size() || b.size() != dst.bias.size()) {
        throw CheckpointError("layer " + std::to_string(l) + " parameter count does not match layer_sizes");
      }
      dst.weight = Matrix(dst.weight.rows(), dst.weight.cols(), std::move(w));
      dst.bias = std::move(b);
    }
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path);
  if (!out) throw CheckpointError("cannot write checkpoint '" + path.string() + "'");
  out << checkpoint_to_json(ckpt) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot read checkpoint '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_json(buf.str());
}

}  // namespace selfpaced
