/**
 * Copyright 2026 The lidar_edge Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef LIDAR_EDGE_JSON_FIELDS_HPP_
#define LIDAR_EDGE_JSON_FIELDS_HPP_

#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "lidar_edge/error.hpp"
#include "lidar_edge/raster.hpp"

namespace lidar_edge {

using Json = nlohmann::ordered_json;

/**
 * Reads optional fields from one JSON object. Absent keys keep the caller's
 * default; a present key of the wrong type, or any key never asked for (see
 * finish), raises ConfigError naming the dotted path.
 */
class JsonFields {
 public:
  JsonFields(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where() + " must be a JSON object");
  }

  template <typename T>
  JsonFields& get(const std::string& key, T& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return *this;
    try {
      read(*it, out);
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(where(key) + ": wrong type");
    }
    return *this;
  }

  /// Nested object; absent means an empty object.
  JsonFields child(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    static const Json kEmpty = Json::object();
    return JsonFields(it == obj_.end() ? kEmpty : *it, where(key));
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown key " + where(it.key()));
    }
  }

  std::string where(const std::string& key = {}) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  template <typename T>
  static void read(const Json& j, T& out) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!j.is_boolean()) throw nlohmann::json::type_error::create(302, "bool", nullptr);
      out = j.get<bool>();
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!j.is_number_unsigned()) throw nlohmann::json::type_error::create(302, "uint", nullptr);
      out = j.get<T>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!j.is_number_integer()) throw nlohmann::json::type_error::create(302, "int", nullptr);
      out = j.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!j.is_number()) throw nlohmann::json::type_error::create(302, "number", nullptr);
      out = j.get<T>();
    } else if constexpr (std::is_same_v<T, Interval>) {
      if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw nlohmann::json::type_error::create(302, "interval", nullptr);
      }
      out = Interval{j[0].get<double>(), j[1].get<double>()};
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!j.is_string()) throw nlohmann::json::type_error::create(302, "string", nullptr);
      out = j.get<std::string>();
    } else {
      if (!j.is_array()) throw nlohmann::json::type_error::create(302, "array", nullptr);
      out.clear();
      for (const auto& e : j) {
        typename T::value_type v{};
        read(e, v);
        out.push_back(v);
      }
    }
  }

  const Json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

inline Json to_json(const Interval& i) { return Json::array({i.lo, i.hi}); }

}  // namespace lidar_edge

#endif  // LIDAR_EDGE_JSON_FIELDS_HPP_
