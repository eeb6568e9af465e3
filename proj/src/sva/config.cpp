#include "forge/sva/config.hpp"

#include <map>
#include <string>

#include "forge/error.hpp"

namespace forge::sva {

std::size_t SvaConfig::keys_per_query() const {
  std::size_t n = 0;
  for (auto m : multipliers) n += m * m;
  return n;
}

void SvaConfig::validate() const {
  if (grid_side < 1) throw InvalidArgument("sva config: grid_side must be >= 1");
  if (channels < 1) throw InvalidArgument("sva config: channels must be >= 1");
  if (depth < 1) throw InvalidArgument("sva config: depth must be >= 1");
  if (groups < 1) throw InvalidArgument("sva config: groups must be >= 1");
  if (multipliers.empty()) throw InvalidArgument("sva config: at least one encoder is required");
  for (std::size_t k = 0; k < multipliers.size(); ++k) {
    if (multipliers[k] < 1) throw InvalidArgument("sva config: encoder " + std::to_string(k) + " multiplier must be >= 1");
  }
  if (host_stride && *host_stride < 1) throw InvalidArgument("sva config: host_stride must be >= 1");
}

SvaConfig SvaConfig::for_host_insertion() const {
  SvaConfig c = *this;
  c.depth = 1;
  c.groups = 1;
  c.residual = true;
  return c;
}

SvaConfig config_from_json(const nlohmann::json& j) {
  SvaConfig c;
  c.grid_side = j.value("grid_side", c.grid_side);
  c.channels = j.value("channels", c.channels);
  c.multipliers = j.value("multipliers", c.multipliers);
  c.depth = j.value("depth", c.depth);
  c.groups = j.value("groups", c.groups);
  if (j.contains("host_stride") && !j["host_stride"].is_null()) {
    const auto& s = j["host_stride"];
    if (s.is_string()) {
      c.host_stride = host_stride_preset(s.get<std::string>());
      if (!c.host_stride) throw InvalidArgument("sva config: unknown host stride preset " + s.get<std::string>());
    } else {
      c.host_stride = s.get<std::size_t>();
    }
  }
  c.positional_encoding = j.value("positional_encoding", c.positional_encoding);
  c.global_query_augmentation = j.value("global_query_augmentation", c.global_query_augmentation);
  c.residual = j.value("residual", c.residual);
  c.validate();
  return c;
}

nlohmann::json config_to_json(const SvaConfig& c) {
  nlohmann::json j{{"grid_side", c.grid_side},
                   {"channels", c.channels},
                   {"multipliers", c.multipliers},
                   {"depth", c.depth},
                   {"groups", c.groups},
                   {"positional_encoding", c.positional_encoding},
                   {"global_query_augmentation", c.global_query_augmentation},
                   {"residual", c.residual}};
  j["host_stride"] = c.host_stride ? nlohmann::json(*c.host_stride) : nlohmann::json(nullptr);
  return j;
}

std::optional<std::size_t> host_stride_preset(const std::string& model_size) {
  static const std::map<std::string, std::size_t> presets{{"8B", 3}, {"13B", 4}, {"34B", 9}};
  auto it = presets.find(model_size);
  if (it == presets.end()) return std::nullopt;
  return it->second;
}

}  // namespace forge::sva
