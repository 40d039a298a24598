// Command-line front end. Everything goes through the C interface.
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stancekit/stancekit.h"

namespace {

struct Common {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::vector<std::string> sets;
};

struct Extras {
  bool skip_indirect = false;
  bool skip_weak = false;
  std::string scheme_only;
  std::string which;
  std::string checkpoint;
  std::string policy;
  std::vector<std::size_t> sizes;
  int seeds = 0;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "run configuration (JSON)")->required();
  sub->add_option("--out", c.out, "run directory (overrides 'out')");
  sub->add_option("--seed", c.seed, "master seed (overrides 'seed')")
      ->each([&](const std::string&) { c.seed_given = true; });
  sub->add_option("--set", c.sets, "override a config key, e.g. train.weak.epochs=5");
}

std::string join_sizes(const std::vector<std::size_t>& sizes) {
  std::string s = "[";
  for (std::size_t i = 0; i < sizes.size(); ++i) s += (i ? "," : "") + std::to_string(sizes[i]);
  return s + "]";
}

int report(const char* command, int status) {
  std::fprintf(stderr, "stancekit %s: %s error: %s\n", command, sk_status_name(status), sk_last_error());
  return sk_exit_class(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot stance detection experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sk_version()));

  Common common;
  Extras extra;
  auto* gen = app.add_subcommand("generate-weak", "build the weakly labeled corpus");
  auto* train = app.add_subcommand("train", "entailment pretraining then weak fine-tuning");
  auto* eval = app.add_subcommand("evaluate", "score a checkpoint on the configured test sets");
  auto* base = app.add_subcommand("baseline", "run an unsupervised baseline");
  auto* size = app.add_subcommand("size-study", "macro-F1 as a function of weak corpus size");
  for (auto* sub : {gen, train, eval, base, size}) add_common(sub, common);

  train->add_flag("--skip-indirect", extra.skip_indirect, "skip entailment pretraining");
  train->add_flag("--skip-weak", extra.skip_weak, "skip weak fine-tuning");
  train->add_option("--scheme-only", extra.scheme_only, "train on one prompt scheme plus neutral")
      ->check(CLI::IsMember({"mask_topic", "mask_text"}));
  size->add_flag("--skip-indirect", extra.skip_indirect, "skip entailment pretraining");
  eval->add_option("--checkpoint", extra.checkpoint, "checkpoint file (default: <out>/checkpoint.bin)");
  eval->add_option("--policy", extra.policy, "override every dataset's policy")
      ->check(CLI::IsMember({"three_way", "binary_threshold", "vote"}));
  base->add_option("--which", extra.which, "random, mlm, completion or cosine");
  size->add_option("--sizes", extra.sizes, "corpus sizes")->delimiter(',');
  size->add_option("--seeds", extra.seeds, "seeds averaged per size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();

  std::vector<std::string> sets;
  if (extra.skip_indirect) sets.push_back("train.skip_indirect=true");
  if (extra.skip_weak) sets.push_back("train.skip_weak=true");
  if (!extra.scheme_only.empty()) sets.push_back("train.scheme_only=" + extra.scheme_only);
  if (!extra.checkpoint.empty())
    sets.push_back("evaluate.checkpoint=" + std::filesystem::absolute(extra.checkpoint).string());
  if (!extra.policy.empty()) sets.push_back("evaluate.policy=" + extra.policy);
  if (!extra.which.empty()) sets.push_back("baseline.which=" + extra.which);
  if (!extra.sizes.empty()) sets.push_back("size_study.sizes=" + join_sizes(extra.sizes));
  if (extra.seeds > 0) sets.push_back("size_study.seeds=" + std::to_string(extra.seeds));
  sets.insert(sets.end(), common.sets.begin(), common.sets.end());

  sk_command* cmd = nullptr;
  int status = sk_command_create(name.c_str(), &cmd);
  if (status != SK_OK) return report(name.c_str(), status);

  status = sk_command_set_config(cmd, common.config.c_str());
  if (status == SK_OK && !common.out.empty()) status = sk_command_set_out(cmd, common.out.c_str());
  if (status == SK_OK && common.seed_given) status = sk_command_set_seed(cmd, common.seed);
  for (const auto& s : sets)
    if (status == SK_OK) status = sk_command_set(cmd, s.c_str());
  if (status == SK_OK) status = sk_command_run(cmd);

  int rc = 0;
  if (status == SK_OK) {
    std::printf("%s\n", sk_command_summary(cmd));
  } else {
    rc = report(name.c_str(), status);
  }
  sk_command_destroy(cmd);
  return rc;
}
