#include "qrul/checkpoint.hpp"

#include <fstream>

#include "json.hpp"
#include "qrul/errors.hpp"

namespace qrul::train {

using nlohmann::json;

void save_checkpoint(const std::string& path, model::SequenceModel& m, std::uint64_t seed,
                     const std::string& config_hash) {
  json j;
  j["format"] = "qrul-checkpoint-v1";
  j["kind"] = m.kind();
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  j["config"] = json::parse(m.config_json());
  json tensors = json::array();
  model::ParamSet ps;
  m.collect(ps);
  for (const auto& [name, t] : ps.items) {
    json tj;
    tj["name"] = name;
    tj["shape"] = t->shape;
    tj["values"] = t->v;
    tensors.push_back(std::move(tj));
  }
  j["tensors"] = std::move(tensors);
  std::ofstream out(path);
  if (!out) throw InputError("checkpoint: cannot write " + path);
  out << j.dump() << "\n";
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("checkpoint: cannot open " + path);
  json j = json::parse(in);
  if (j.at("format").get<std::string>() != "qrul-checkpoint-v1")
    throw InputError("checkpoint: unknown format in " + path);

  LoadedCheckpoint loaded;
  loaded.seed = j.at("seed").get<std::uint64_t>();
  loaded.config_hash = j.value("config_hash", "");
  loaded.model = model::make_model(j.at("kind").get<std::string>(), j.at("config").dump());

  model::ParamSet ps;
  loaded.model->collect(ps);
  std::size_t idx = 0;
  const json& tensors = j.at("tensors");
  if (tensors.size() != ps.items.size())
    throw InputError("checkpoint: tensor count mismatch in " + path);
  for (const auto& [name, t] : ps.items) {
    const json& tj = tensors.at(idx++);
    if (tj.at("name").get<std::string>() != name)
      throw InputError("checkpoint: tensor name mismatch: expected " + name);
    const auto values = tj.at("values").get<std::vector<double>>();
    if (values.size() != t->size())
      throw InputError("checkpoint: tensor size mismatch for " + name);
    t->v = values;
  }
  return loaded;
}

}  // namespace qrul::train
