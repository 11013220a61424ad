#pragma once

// Experiment harness behind the `pada` command-line tool: JSON experiment
// configs, the pretrain / make-donor / run / compare-masks / report
// subcommands, and the comparison table they emit.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pada/dataset.hpp"
#include "pada/mask_metrics.hpp"
#include "pada/schedule.hpp"
#include "pada/trainer.hpp"

namespace pada {

struct StageConfig {
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  std::size_t updates = 1000;
};

struct ExperimentConfig {
  DomainShiftSpec task;
  std::vector<std::size_t> hidden{32, 32};
  Activation activation = Activation::tanh;

  StageConfig pretrain;
  double pretrain_noise_std = 0.3;
  StageConfig donor;
  StageConfig taw;
  /// `updates` is unused: target fine-tuning runs for schedule N.
  StageConfig target;

  ModelSize preset = ModelSize::large;
  std::size_t total_updates = 10000;
  std::size_t interval = 1000;
  /// Overrides the preset rates for a frequency.
  std::map<Frequency, std::vector<double>> rates;

  /// Any of "DFT", "TAG", "TAW", "CD-TAW".
  std::vector<std::string> strategies{"DFT", "TAG", "TAW", "CD-TAW"};
  std::vector<Frequency> frequencies{Frequency::once, Frequency::iterative,
                                     Frequency::dynamic_iterative};
  std::vector<std::uint64_t> seeds{1};

  std::optional<std::filesystem::path> pretrained_checkpoint;
  std::optional<std::filesystem::path> donor_checkpoint;

  /// Body architecture with a classification head over task.classes.
  ModelArch target_arch() const;
  PruneSchedule schedule_for(Frequency f) const;
  /// Throws Error(config) or Error(validation) naming the offending field.
  void validate() const;
};

/// The built-in desk-scale experiment.
ExperimentConfig default_experiment_config();

/// Every field is required except "pretrained_checkpoint",
/// "donor_checkpoint", "schedule.rates" and "task.labeled_target".
/// Unknown fields are rejected. Errors are Error(config) naming the field.
ExperimentConfig parse_experiment_config(std::string_view json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
std::string to_json(const ExperimentConfig& cfg);

struct CommandOptions {
  std::filesystem::path out_dir = "pada_out";
  bool force = false;
  /// Replaces cfg.seeds when set.
  std::optional<std::vector<std::uint64_t>> seeds;
  /// 0 reads PADA_THREADS, falling back to the hardware concurrency.
  std::size_t threads = 0;
};

/// Parses "1,2,3". Throws Error(config).
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

struct TableRow {
  std::string strategy;
  std::string frequency;  // "-" for DFT
  double mean_error = 0.0;
  std::vector<double> seed_errors;
};

struct ComparisonTable {
  std::vector<std::uint64_t> seeds;
  std::vector<TableRow> rows;

  const TableRow* find(std::string_view strategy, std::string_view frequency) const;
};

/// Columns: strategy,frequency,mean_error,seed_<s>... one per seed.
std::string table_to_csv(const ComparisonTable& table);
std::string table_to_json(const ComparisonTable& table);
ComparisonTable table_from_json(std::string_view json_text);

/// Seeds per-seed inputs the same way cmd_run does.
struct SeedInputs {
  DomainShiftTask task;
  ParameterSet pretrained;
  ParameterSet donor;
};

std::uint64_t pretrain_seed(std::uint64_t seed) noexcept;
std::uint64_t donor_seed(std::uint64_t seed) noexcept;
std::uint64_t taw_seed(std::uint64_t seed) noexcept;
std::uint64_t target_seed(std::uint64_t seed) noexcept;

ParameterSet build_pretrained(const ExperimentConfig& cfg, const DomainShiftTask& task,
                              std::uint64_t seed);
ParameterSet build_donor(const ExperimentConfig& cfg, const ParameterSet& pretrained,
                         const DomainShiftTask& task, std::uint64_t seed);

/// Writes <out>/pretrained.pada. Refuses to overwrite unless opts.force.
std::filesystem::path cmd_pretrain(const ExperimentConfig& cfg, const CommandOptions& opts);

/// Fine-tunes the pretrained checkpoint (cfg.pretrained_checkpoint, else
/// <out>/pretrained.pada) on the source labels and writes the encoder to
/// <out>/donor.pada with role finetuned_donor.
std::filesystem::path cmd_make_donor(const ExperimentConfig& cfg, const CommandOptions& opts);

/// Runs DFT and every strategy x frequency cell for every seed. Writes
///   <out>/table.csv, <out>/table.json
///   <out>/logs/<cell>_seed<s>.jsonl
///   <out>/models/<cell>_seed<s>.pada
///   <out>/masks/<cell>_seed<s>.padm   (initial masks, PADA cells)
/// where <cell> is "DFT" or "<strategy>-<frequency>".
ComparisonTable cmd_run(const ExperimentConfig& cfg, const CommandOptions& opts);

/// Writes <out>/mask_report.csv and <out>/mask_report.json.
SimilarityReport cmd_compare_masks(const std::filesystem::path& mask_a,
                                   const std::filesystem::path& mask_b,
                                   const CommandOptions& opts);

/// Human-readable rendering of <out>/table.json.
std::string cmd_report(const CommandOptions& opts);

}  // namespace pada
