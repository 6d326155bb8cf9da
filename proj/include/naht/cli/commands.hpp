#ifndef NAHT_CLI_COMMANDS_HPP_
#define NAHT_CLI_COMMANDS_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "naht/cli/config.hpp"

namespace naht::cli {

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitFingerprint = 2;
inline constexpr int kExitDiverged = 3;
inline constexpr int kExitLemma = 4;

struct LemmaRow {
  std::string quantity;
  double analytic = 0.0;
  double brute_force = 0.0;
  double abs_diff = 0.0;
};

/// Closed-form bit-game quantities next to brute-force enumeration.
std::vector<LemmaRow> lemma_table();
/// True when every |analytic - brute_force| < 1e-12 and the spread rows
/// (which must be constant curves) are below 1e-15.
bool lemma_rows_pass(const std::vector<LemmaRow>& rows);
void write_lemma_csv(std::ostream& out, const std::vector<LemmaRow>& rows);

/// Trains every configured seed into <output_dir>/seed_<s>/ (config.json,
/// metrics.csv, checkpoints/, final.ckpt) and writes <output_dir>/manifest.json.
int cmd_train(const RunConfig& config, std::ostream& log);

struct EvalRequest {
  std::string mode;  // mn, xp, ood, varyn or eddiag
  std::vector<std::string> checkpoints;
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
  int episodes = 0;  // 0 uses the config's eval_episodes
};
int cmd_eval(const RunConfig& config, const EvalRequest& request, std::ostream& log);

int cmd_lemmas(std::ostream& out);

/// "list" prints the manifest; "build" creates scripted and self-play teams
/// and writes the manifest to config.registry.
int cmd_registry(const RunConfig& config, const std::string& action, std::ostream& log);

/// Full command-line entry point.
int run_cli(int argc, char** argv);

}  // namespace naht::cli

#endif  // NAHT_CLI_COMMANDS_HPP_
