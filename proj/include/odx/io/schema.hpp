#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

namespace odx::io {

using nlohmann::json;

/// Validator for the JSON Schema subset the config schema uses: type, enum, const,
/// properties, required, additionalProperties (boolean), items, minItems, maxItems,
/// minimum, maximum, exclusiveMinimum, exclusiveMaximum, allOf, if/then/else and
/// boolean schemas. Missing properties with a `default` are filled in.
class SchemaValidator {
 public:
  explicit SchemaValidator(json schema) : schema_(std::move(schema)) {}

  /// Errors as "path: message"; fills defaults when the instance is otherwise valid.
  std::vector<std::string> validate(json& inst) const {
    std::vector<std::string> errs;
    check(schema_, inst, "$", errs, true);
    return errs;
  }

 private:
  static bool type_ok(const std::string& t, const json& v) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    if (t == "number") return v.is_number();
    if (t == "integer") {
      if (v.is_number_integer()) return true;
      if (!v.is_number_float()) return false;
      const double d = v.get<double>();
      return std::isfinite(d) && std::floor(d) == d;
    }
    return false;
  }

  static void check(const json& s, json& v, const std::string& path, std::vector<std::string>& errs, bool fill) {
    if (s.is_boolean()) {
      if (!s.get<bool>()) errs.push_back(path + ": not allowed");
      return;
    }
    if (auto it = s.find("type"); it != s.end()) {
      bool ok = false;
      if (it->is_string())
        ok = type_ok(*it, v);
      else
        for (auto& t : *it) ok = ok || type_ok(t, v);
      if (!ok) {
        errs.push_back(path + ": expected type " + it->dump());
        return;
      }
    }
    if (auto it = s.find("const"); it != s.end() && v != *it) errs.push_back(path + ": must equal " + it->dump());
    if (auto it = s.find("enum"); it != s.end()) {
      bool found = false;
      for (auto& e : *it) found = found || e == v;
      if (!found) errs.push_back(path + ": must be one of " + it->dump());
    }
    if (v.is_number()) {
      const double d = v.get<double>();
      if (auto it = s.find("minimum"); it != s.end() && d < it->get<double>()) errs.push_back(path + ": below minimum " + it->dump());
      if (auto it = s.find("maximum"); it != s.end() && d > it->get<double>()) errs.push_back(path + ": above maximum " + it->dump());
      if (auto it = s.find("exclusiveMinimum"); it != s.end() && !(d > it->get<double>()))
        errs.push_back(path + ": must exceed " + it->dump());
      if (auto it = s.find("exclusiveMaximum"); it != s.end() && !(d < it->get<double>()))
        errs.push_back(path + ": must be below " + it->dump());
    }
    if (v.is_array()) {
      if (auto it = s.find("minItems"); it != s.end() && v.size() < it->get<std::size_t>())
        errs.push_back(path + ": needs at least " + it->dump() + " items");
      if (auto it = s.find("maxItems"); it != s.end() && v.size() > it->get<std::size_t>())
        errs.push_back(path + ": allows at most " + it->dump() + " items");
      if (auto it = s.find("items"); it != s.end())
        for (std::size_t i = 0; i < v.size(); ++i) check(*it, v[i], path + "[" + std::to_string(i) + "]", errs, fill);
    }
    if (v.is_object()) {
      const json* props = s.contains("properties") ? &s["properties"] : nullptr;
      if (auto it = s.find("required"); it != s.end())
        for (auto& k : *it)
          if (!v.contains(k.get<std::string>())) errs.push_back(path + ": missing required key '" + k.get<std::string>() + "'");
      for (auto& [k, sub] : v.items()) {
        if (props && props->contains(k)) {
          check((*props)[k], sub, path + "." + k, errs, fill);
        } else if (auto it = s.find("additionalProperties"); it != s.end() && it->is_boolean() && !it->get<bool>()) {
          errs.push_back(path + ": unknown key '" + k + "'");
        }
      }
      if (fill && props)
        for (auto& [k, sub] : props->items())
          if (!v.contains(k) && sub.is_object() && sub.contains("default")) {
            v[k] = sub["default"];
            check(sub, v[k], path + "." + k, errs, fill);
          }
    }
    if (auto it = s.find("allOf"); it != s.end())
      for (auto& sub : *it) check(sub, v, path, errs, fill);
    if (auto it = s.find("if"); it != s.end()) {
      std::vector<std::string> probe;
      json copy = v;
      check(*it, copy, path, probe, false);
      const char* branch = probe.empty() ? "then" : "else";
      if (s.contains(branch)) check(s[branch], v, path, errs, fill);
    }
  }

  json schema_;
};

}  // namespace odx::io
