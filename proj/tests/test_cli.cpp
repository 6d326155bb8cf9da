#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "naht/cli/commands.hpp"
#include "naht/cli/config.hpp"
#include "naht/error.hpp"

using namespace naht;
using namespace naht::cli;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "naht");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(int(argv.size()), argv.data());
}

std::string tiny_config(const std::string& out, const std::string& env = "bitgame") {
  return R"({"env": {"name": ")" + env + R"("}, "variant": "poam",
  "hyper": {"buffer_episodes": 4, "epochs": 1, "minibatches": 2},
  "width": 8, "embed_dim": 4, "total_env_steps": 200, "eval_episodes": 3,
  "seeds": [1, 2], "output_dir": ")" + out + R"("})";
}

std::string message_of(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config parsing is strict") {
  const auto msg = message_of(R"({"hyper": {"entropy_ceof": 0.1}})");
  CHECK(msg.find("entropy_ceof") != std::string::npos);
  CHECK(message_of(R"({"colour": 1})").find("colour") != std::string::npos);
  CHECK(message_of(R"({"width": "wide"})").find("width") != std::string::npos);
  CHECK(message_of("{\n  \"width\": 8,\n  }").find("line 3") != std::string::npos);
  CHECK(message_of(R"({"env": {"name": "chess"}})").find("chess") != std::string::npos);
  CHECK(message_of(R"({"variant": "poam"})").empty());
}

TEST_CASE("resolved config round trips") {
  const auto c = parse_run_config(tiny_config("x", "pursuit"));
  const auto again = parse_run_config(run_config_to_json(c));
  CHECK(run_config_to_json(again) == run_config_to_json(c));
  CHECK(c.iterations() == 1);
  CHECK(parse_run_config(tiny_config("x")).iterations() == 2);
}

TEST_CASE("environment overrides") {
  auto c = parse_run_config(tiny_config("x"));
  std::map<std::string, std::string> env{{"NAHT_SEED", "5,6,7"}, {"NAHT_OUT_DIR", "elsewhere"}};
  const EnvLookup lookup = [&](const char* k) -> std::optional<std::string> {
    const auto it = env.find(k);
    if (it == env.end()) return std::nullopt;
    return it->second;
  };
  apply_env_overrides(c, lookup);
  CHECK(c.seeds == std::vector<std::uint64_t>{5, 6, 7});
  CHECK(c.output_dir == "elsewhere");
  env["NAHT_SEED"] = "5,x";
  CHECK_THROWS_AS(apply_env_overrides(c, lookup), ConfigError);
}

TEST_CASE("lemma table passes and catches a perturbed row") {
  auto rows = lemma_table();
  REQUIRE(rows.size() >= 4);
  CHECK(lemma_rows_pass(rows));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto bad = rows;
    bad[i].analytic += 1e-6;
    bad[i].abs_diff = std::abs(bad[i].analytic - bad[i].brute_force);
    CHECK_FALSE(lemma_rows_pass(bad));
  }
  std::ostringstream csv;
  write_lemma_csv(csv, rows);
  CHECK(csv.str().rfind("quantity,", 0) == 0);
  CHECK(run({"lemmas"}) == kExitOk);
}

TEST_CASE("train writes per-seed outputs and reruns identically") {
  test::TempDir d("clitrain");
  auto c = parse_run_config(tiny_config((d / "run").string()));
  std::ostringstream log;
  REQUIRE(cmd_train(c, log) == kExitOk);
  for (const char* s : {"seed_1", "seed_2"}) {
    CHECK(std::filesystem::exists(d / "run" / s / "metrics.csv"));
    CHECK(std::filesystem::exists(d / "run" / s / "final.ckpt"));
  }
  CHECK(std::filesystem::exists(d / "run" / "manifest.json"));
  const auto echoed = parse_run_config(test::read_file(d / "run" / "config.json"));
  CHECK(run_config_to_json(echoed) == run_config_to_json(c));
  const auto first = test::read_file(d / "run" / "seed_1" / "metrics.csv");
  CHECK(std::count(first.begin(), first.end(), '\n') == 3);

  c.output_dir = (d / "rerun").string();
  c.seeds = {1};
  REQUIRE(cmd_train(c, log) == kExitOk);
  CHECK(test::read_file(d / "rerun" / "seed_1" / "metrics.csv") == first);
  CHECK(test::read_file(d / "run" / "seed_2" / "metrics.csv") != first);
}

TEST_CASE("eval modes and checkpoint checks") {
  test::TempDir d("clieval");
  auto c = parse_run_config(tiny_config((d / "run").string()));
  std::ostringstream log;
  REQUIRE(cmd_train(c, log) == kExitOk);
  const auto ck1 = (d / "run" / "seed_1" / "final.ckpt").string();
  const auto ck2 = (d / "run" / "seed_2" / "final.ckpt").string();

  EvalRequest mn{"mn", {ck1}, d / "mn", 1, 4};
  std::filesystem::create_directories(d / "mn");
  CHECK(cmd_eval(c, mn, log) == kExitOk);
  const auto csv = test::read_file(d / "mn" / "mn_score.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 4);

  EvalRequest ed{"eddiag", {ck1, ck2, ck1}, d / "ed", 1, 2};
  std::filesystem::create_directories(d / "ed");
  CHECK(cmd_eval(c, ed, log) == kExitOk);
  const auto edcsv = test::read_file(d / "ed" / "ed_diag.csv");
  std::set<std::string> groups;
  std::istringstream lines(edcsv);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "checkpoint,t,target,obs_mse,act_prob");
  while (std::getline(lines, line)) groups.insert(line.substr(0, line.find(',')));
  CHECK(groups.size() == 3);

  EvalRequest missing{"mn", {(d / "nope.ckpt").string()}, d / "mn", 1, 2};
  CHECK_THROWS_AS(cmd_eval(c, missing, log), ConfigError);

  // a bit-game checkpoint refused by a pursuit config
  auto p = parse_run_config(tiny_config((d / "p").string(), "pursuit"));
  std::ostringstream why;
  CHECK(cmd_eval(p, mn, why) == kExitFingerprint);
  CHECK(why.str().find("bitgame") != std::string::npos);
  CHECK(why.str().find("pursuit") != std::string::npos);

  test::write_file(d / "cfg.json", tiny_config((d / "cli").string()));
  CHECK(run({"eval", "--config", (d / "cfg.json").string(), "--checkpoint", "/no/such.ckpt",
             "--mode", "mn"}) != kExitOk);
  CHECK(run({"train", "--config", (d / "absent.json").string()}) == kExitConfig);
}

}  // TEST_SUITE
