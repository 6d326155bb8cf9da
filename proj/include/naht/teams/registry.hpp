#ifndef NAHT_TEAMS_REGISTRY_HPP_
#define NAHT_TEAMS_REGISTRY_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "naht/env/pursuit.hpp"
#include "naht/teams/policy.hpp"

namespace naht::teams {

/// One row of the registry manifest (a JSON array of these objects).
struct ManifestEntry {
  std::string id;
  PolicyKind kind = PolicyKind::kScripted;
  std::optional<std::uint64_t> seed;
  std::string env;
  std::string checkpoint_path;
  std::vector<std::string> tags;  // "train" and/or "holdout"
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
/// Atomic write (temporary file then rename).
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

ManifestEntry manifest_entry(const PolicyHandle& handle);

/// Rebuilds a handle from its manifest row. Scripted and Bernoulli ids are
/// parsed ("scripted:<convention>[:noise]", "bernoulli:<p>",
/// "bitgame-asymmetric"); network rows load their checkpoint, resolved
/// relative to base_dir when not absolute.
PolicyHandle resolve_entry(const ManifestEntry& entry, const std::filesystem::path& base_dir = {},
                           const env::PursuitConfig& pursuit = {});

/// Set of known policies, keyed by id.
class Registry {
 public:
  void add(PolicyHandle handle);
  const std::vector<PolicyHandle>& all() const { return handles_; }
  /// Handles carrying the tag, in insertion order.
  std::vector<PolicyHandle> with_tag(const std::string& tag) const;
  const PolicyHandle& find(const std::string& id) const;

  static Registry load(const std::filesystem::path& manifest,
                       const env::PursuitConfig& pursuit = {});
  void save(const std::filesystem::path& manifest) const;

 private:
  std::vector<PolicyHandle> handles_;
};

}  // namespace naht::teams

#endif  // NAHT_TEAMS_REGISTRY_HPP_
