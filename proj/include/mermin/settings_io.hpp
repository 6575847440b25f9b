#pragma once

// Settings files:
//   {"n": 3, "pairs":  [{"a": [x, y, z], "b": [x, y, z]}, ...]}
//   {"n": 3, "planar": [{"phi": 0.0, "phi_prime": 1.57}, ...]}
// Angles are in radians.

#include <fstream>
#include <sstream>
#include <string>
#include <variant>

#include <json.hpp>

#include "mermin/bell.hpp"
#include "mermin/error.hpp"

namespace mermin {

using SettingsDocument = std::variant<MeasurementSettings, PlanarSettings>;

inline std::size_t settings_size(const SettingsDocument& doc) {
  return std::visit([](const auto& s) { return s.n(); }, doc);
}

inline MeasurementSettings as_measurement(const SettingsDocument& doc) {
  if (const auto* p = std::get_if<PlanarSettings>(&doc)) return p->to_measurement();
  return std::get<MeasurementSettings>(doc);
}

namespace detail {

inline UnitVector3 parse_vector(const nlohmann::json& v, const char* field) {
  if (!v.is_array() || v.size() != 3) {
    throw ValidationError(std::string("settings: '") + field + "' must be an array of 3 numbers");
  }
  for (const auto& c : v) {
    if (!c.is_number()) throw ValidationError(std::string("settings: '") + field + "' must hold numbers");
  }
  return UnitVector3::make(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
}

inline double parse_number(const nlohmann::json& obj, const char* field) {
  if (!obj.contains(field) || !obj[field].is_number()) {
    throw ValidationError(std::string("settings: missing numeric field '") + field + "'");
  }
  return obj[field].get<double>();
}

}  // namespace detail

inline SettingsDocument settings_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("settings: document must be a JSON object");
  if (!j.contains("n") || !j["n"].is_number_integer() || j["n"].get<long long>() < 1) {
    throw ValidationError("settings: 'n' must be a positive integer");
  }
  const auto n = j["n"].get<std::size_t>();
  const bool has_pairs = j.contains("pairs");
  const bool has_planar = j.contains("planar");
  if (has_pairs == has_planar) {
    throw ValidationError("settings: exactly one of 'pairs' or 'planar' is required");
  }
  const auto& list = has_pairs ? j["pairs"] : j["planar"];
  if (!list.is_array() || list.size() != n) {
    throw ValidationError("settings: expected " + std::to_string(n) + " entries");
  }
  if (has_pairs) {
    std::vector<SettingPair> pairs;
    for (const auto& e : list) {
      if (!e.is_object() || !e.contains("a") || !e.contains("b")) {
        throw ValidationError("settings: each pair needs 'a' and 'b'");
      }
      pairs.push_back({detail::parse_vector(e["a"], "a"), detail::parse_vector(e["b"], "b")});
    }
    return MeasurementSettings(std::move(pairs));
  }
  std::vector<PlanarAngles> angles;
  for (const auto& e : list) {
    if (!e.is_object()) throw ValidationError("settings: planar entries must be objects");
    angles.push_back({detail::parse_number(e, "phi"), detail::parse_number(e, "phi_prime")});
  }
  return PlanarSettings(std::move(angles));
}

inline nlohmann::json to_json(const MeasurementSettings& s) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : s.pairs()) {
    pairs.push_back({{"a", p.a.components()}, {"b", p.b.components()}});
  }
  return {{"n", s.n()}, {"pairs", std::move(pairs)}};
}

inline nlohmann::json to_json(const PlanarSettings& s) {
  nlohmann::json planar = nlohmann::json::array();
  for (const auto& a : s.angles()) planar.push_back({{"phi", a.phi}, {"phi_prime", a.phi_prime}});
  return {{"n", s.n()}, {"planar", std::move(planar)}};
}

inline nlohmann::json to_json(const SettingsDocument& doc) {
  return std::visit([](const auto& s) { return to_json(s); }, doc);
}

inline SettingsDocument parse_settings(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("settings: invalid JSON: ") + e.what());
  }
  return settings_from_json(j);
}

inline SettingsDocument load_settings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("settings: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_settings(buf.str());
}

}  // namespace mermin
