#pragma once

#include <string>

#include <json.hpp>

#include "korra/model/json_io.hpp"

namespace support {

inline korra::model::AgentModel demo_model() {
  return korra::model::load_model_file(std::string(KORRA_MODELS_DIR) + "/joi.json");
}

inline nlohmann::json demo_json() {
  return korra::model::to_json(demo_model());
}

/// Three-category model with plain statements, small enough to reason
/// about by hand. `sizes` gives the number of interactions per category.
inline nlohmann::json tiny_json(std::vector<std::pair<std::string, double>> cats, std::vector<int> sizes,
                                bool repeatable = false) {
  nlohmann::json doc;
  doc["name"] = "tiny";
  doc["categories"] = nlohmann::json::array();
  doc["interactions"] = nlohmann::json::array();
  for (std::size_t c = 0; c < cats.size(); ++c) {
    doc["categories"].push_back({{"name", cats[c].first}, {"base_weight", cats[c].second}});
    for (int i = 0; i < sizes[c]; ++i) {
      const std::string id = cats[c].first + "_" + std::to_string(i);
      doc["interactions"].push_back({{"id", id},
                                     {"category", cats[c].first},
                                     {"kind", "statement"},
                                     {"text", "Line " + id + "."},
                                     {"repeatable", repeatable}});
    }
  }
  return doc;
}

}  // namespace support
