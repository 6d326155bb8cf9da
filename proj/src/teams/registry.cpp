#include "naht/teams/registry.hpp"

#include <fstream>

#include <json.hpp>

#include "naht/error.hpp"
#include "naht/poam/agent.hpp"
#include "naht/teams/scripted.hpp"

namespace naht::teams {

using nlohmann::ordered_json;

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open registry manifest " + path.string());
  std::vector<ManifestEntry> out;
  try {
    const auto j = nlohmann::json::parse(in);
    if (!j.is_array()) throw ConfigError("registry manifest must be a JSON array");
    for (const auto& row : j) {
      for (const auto& [key, _] : row.items()) {
        if (key != "id" && key != "kind" && key != "seed" && key != "env" &&
            key != "checkpoint_path" && key != "tags") {
          throw ConfigError("unknown manifest key: " + key);
        }
      }
      ManifestEntry e;
      e.id = row.at("id").get<std::string>();
      e.kind = policy_kind_from_string(row.at("kind").get<std::string>());
      if (row.contains("seed") && !row["seed"].is_null()) e.seed = row["seed"].get<std::uint64_t>();
      e.env = row.value("env", "");
      e.checkpoint_path = row.value("checkpoint_path", "");
      e.tags = row.value("tags", std::vector<std::string>{});
      for (const auto& t : e.tags) {
        if (t != "train" && t != "holdout") throw ConfigError("unknown manifest tag: " + t);
      }
      out.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& err) {
    throw ConfigError("bad registry manifest " + path.string() + ": " + err.what());
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  ordered_json j = ordered_json::array();
  for (const auto& e : entries) {
    ordered_json row;
    row["id"] = e.id;
    row["kind"] = to_string(e.kind);
    row["seed"] = e.seed ? ordered_json(*e.seed) : ordered_json(nullptr);
    row["env"] = e.env;
    row["checkpoint_path"] = e.checkpoint_path;
    row["tags"] = e.tags;
    j.push_back(std::move(row));
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << j.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, path);
}

ManifestEntry manifest_entry(const PolicyHandle& h) {
  return {h.id, h.kind, h.seed, h.env, h.checkpoint_path, h.tags};
}

PolicyHandle resolve_entry(const ManifestEntry& e, const std::filesystem::path& base_dir,
                           const env::PursuitConfig& pursuit) {
  PolicyHandle h;
  const auto parts = [&] {
    std::vector<std::string> p;
    std::size_t start = 0;
    while (true) {
      const auto pos = e.id.find(':', start);
      p.push_back(e.id.substr(start, pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    return p;
  }();
  switch (e.kind) {
    case PolicyKind::kBernoulli: {
      if (parts.size() != 2 || parts[0] != "bernoulli") {
        throw ConfigError("bernoulli ids look like bernoulli:<p>, got " + e.id);
      }
      h = bernoulli_policy(std::stod(parts[1]));
      break;
    }
    case PolicyKind::kScripted: {
      if (e.id == "bitgame-asymmetric") {
        h = asymmetric_bitgame_policy();
      } else if (parts.size() >= 2 && parts.size() <= 3 && parts[0] == "scripted") {
        const double noise = parts.size() == 3 ? std::stod(parts[2]) : 0.0;
        h = scripted_pursuit_policy(convention_from_string(parts[1]), pursuit, noise);
      } else {
        throw ConfigError("unknown scripted policy id: " + e.id);
      }
      break;
    }
    case PolicyKind::kNetwork: {
      if (e.checkpoint_path.empty()) throw ConfigError("network entry without checkpoint: " + e.id);
      std::filesystem::path p = e.checkpoint_path;
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      h = poam::load_network_policy(p, e.id);
      h.checkpoint_path = e.checkpoint_path;
      break;
    }
  }
  h.id = e.id;
  h.seed = e.seed;
  if (!e.env.empty()) h.env = e.env;
  h.tags = e.tags;
  return h;
}

void Registry::add(PolicyHandle handle) {
  for (const auto& h : handles_) {
    if (h.id == handle.id) throw ConfigError("duplicate policy id: " + handle.id);
  }
  handles_.push_back(std::move(handle));
}

std::vector<PolicyHandle> Registry::with_tag(const std::string& tag) const {
  std::vector<PolicyHandle> out;
  for (const auto& h : handles_) {
    if (h.has_tag(tag)) out.push_back(h);
  }
  return out;
}

const PolicyHandle& Registry::find(const std::string& id) const {
  for (const auto& h : handles_) {
    if (h.id == id) return h;
  }
  throw ConfigError("unknown policy id: " + id);
}

Registry Registry::load(const std::filesystem::path& manifest, const env::PursuitConfig& pursuit) {
  Registry r;
  for (const auto& e : read_manifest(manifest)) {
    r.add(resolve_entry(e, manifest.parent_path(), pursuit));
  }
  return r;
}

void Registry::save(const std::filesystem::path& manifest) const {
  std::vector<ManifestEntry> entries;
  for (const auto& h : handles_) entries.push_back(manifest_entry(h));
  write_manifest(manifest, entries);
}

}  // namespace naht::teams
