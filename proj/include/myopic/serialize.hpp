#pragma once

#include <initializer_list>
#include <string>

#include "json.hpp"
#include "myopic/models.hpp"

namespace myopic {

using Json = nlohmann::json;

/// Throws std::invalid_argument naming the first key of `obj` not in `allowed`.
void require_known_keys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& where);

namespace models {

Json spec_to_json(const ModelSpec& s);
/// Strict: unknown keys are an error; missing keys keep their defaults.
ModelSpec spec_from_json(const Json& j);

Kind kind_from_name(const std::string& s);
TaskKind task_from_name(const std::string& s);

}  // namespace models
}  // namespace myopic
