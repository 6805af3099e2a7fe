#pragma once

#include <initializer_list>
#include <set>
#include <string>

#include <json.hpp>

#include "splatforge/error.hpp"

namespace splatforge::util {

/// Throws Config when `obj` is not an object or has keys outside `keys`.
inline void reject_unknown(const nlohmann::json& obj, std::initializer_list<const char*> keys,
                           const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorKind::Config, where + " must be a JSON object");
  const std::set<std::string> known(keys.begin(), keys.end());
  for (const auto& item : obj.items())
    if (!known.count(item.key()))
      throw Error(ErrorKind::Config, "unknown key '" + item.key() + "' in " + where);
}

/// Leaves `out` untouched when the key is absent.
template <typename T>
void read_field(const nlohmann::json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace splatforge::util
