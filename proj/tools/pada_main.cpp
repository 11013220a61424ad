// pada: command-line front end for the pruning-assisted domain adaptation
// toolkit. See README.md for the subcommands and output layout.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pada/error.hpp"
#include "pada/experiment.hpp"

namespace {

int exit_code(pada::ErrorKind kind) {
  switch (kind) {
    case pada::ErrorKind::config:
    case pada::ErrorKind::validation: return 3;
    case pada::ErrorKind::io: return 4;
    case pada::ErrorKind::bad_magic:
    case pada::ErrorKind::bad_version:
    case pada::ErrorKind::truncated:
    case pada::ErrorKind::format: return 5;
    case pada::ErrorKind::structural: return 6;
    case pada::ErrorKind::range:
    case pada::ErrorKind::empty: return 7;
    case pada::ErrorKind::divergence: return 8;
  }
  return 1;
}

// Single machine-readable line: "error: <category>: <message>".
int fail(std::string_view category, const std::string& message, int code) {
  std::string flat = message;
  for (char& c : flat) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::fprintf(stderr, "error: %.*s: %s\n", static_cast<int>(category.size()), category.data(),
               flat.c_str());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pruning-assisted domain adaptation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "pada_out";
  std::string seeds;
  bool force = false;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* opt = cmd->add_option("--config", config_path, "Experiment config (JSON)");
    if (needs_config) opt->required();
    cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--seeds", seeds, "Comma-separated seed list, overrides the config");
    cmd->add_flag("--force", force, "Overwrite existing outputs");
  };

  auto* pretrain = app.add_subcommand("pretrain", "Denoising pre-training; writes pretrained.pada");
  add_common(pretrain, true);
  auto* donor = app.add_subcommand("make-donor", "Source-domain fine-tuning; writes donor.pada");
  add_common(donor, true);
  auto* run = app.add_subcommand("run", "DFT and PADA runs over all seeds; writes table.csv/json");
  add_common(run, true);
  auto* compare = app.add_subcommand("compare-masks", "Layer-wise IOU/MMA between two .padm masks");
  std::string mask_a;
  std::string mask_b;
  compare->add_option("mask_a", mask_a, "First mask")->required();
  compare->add_option("mask_b", mask_b, "Second mask")->required();
  compare->add_option("--out", out_dir, "Output directory")->capture_default_str();
  compare->add_flag("--force", force, "Overwrite existing outputs");
  auto* report = app.add_subcommand("report", "Print the comparison table from a run directory");
  report->add_option("--out", out_dir, "Run output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    pada::CommandOptions opts;
    opts.out_dir = out_dir;
    opts.force = force;
    if (!seeds.empty()) opts.seeds = pada::parse_seed_list(seeds);

    if (*compare) {
      const auto r = pada::cmd_compare_masks(mask_a, mask_b, opts);
      std::printf("iou=%.6f mma=%.6f layers=%zu\n", r.iou, r.mma, r.layers.size());
      return 0;
    }
    if (*report) {
      std::cout << pada::cmd_report(opts);
      return 0;
    }
    const auto cfg = pada::load_experiment_config(config_path);
    if (*pretrain) {
      std::cout << pada::cmd_pretrain(cfg, opts).string() << '\n';
    } else if (*donor) {
      std::cout << pada::cmd_make_donor(cfg, opts).string() << '\n';
    } else if (*run) {
      pada::cmd_run(cfg, opts);
      std::cout << pada::cmd_report(opts);
    }
  } catch (const pada::Error& e) {
    return fail(pada::to_string(e.kind()), e.what(), exit_code(e.kind()));
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
  return 0;
}
