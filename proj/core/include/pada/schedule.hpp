#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pada/param_store.hpp"
#include "pada/pruner.hpp"
#include "pada/strategies.hpp"
#include "pada/trainer.hpp"

namespace pada {

enum class Frequency { once, iterative, dynamic_iterative };

std::string_view to_string(Frequency f) noexcept;
/// Accepts "Once", "Iterative", "Dynamic" (or "DynamicIterative").
Frequency frequency_from_string(std::string_view name);

/// Rates r1..rk, total updates N and re-prune interval n.
struct PruneSchedule {
  Frequency freq = Frequency::once;
  std::vector<PruneRate> rates;
  std::size_t total_updates = 1;
  std::size_t interval = 1;
};

/// Throws Error(validation) with a message specific to the violated rule:
/// Once needs one rate, Iterative equal rates, Dynamic strictly decreasing
/// rates, and 1 <= n <= N.
void validate(const PruneSchedule& s);

/// Update indices at which prune events fire: 0, then n, 2n, ... for each
/// later rate while the index stays <= N.
std::vector<std::size_t> prune_event_updates(const PruneSchedule& s);

/// Named rate presets for the LARGE and BASE model settings.
enum class ModelSize { large, base };
ModelSize model_size_from_string(std::string_view name);
PruneSchedule preset_schedule(ModelSize size, Frequency freq, std::size_t total_updates,
                              std::size_t interval);

struct PruneEvent {
  std::size_t update = 0;
  double rate = 0.0;
  MaskSource source = MaskSource::in_loop;
  double sparsity_before = 0.0;
  double sparsity_after = 0.0;
  /// Mean training loss over the updates since the previous event; NaN at update 0.
  double train_loss = 0.0;
};

struct PadaRunLog {
  std::vector<PruneEvent> events;
  std::size_t total_updates = 0;
  double final_train_loss = 0.0;
  /// NaN when no evaluation set was supplied.
  double target_error = 0.0;
  double final_sparsity = 0.0;
  /// Weights zeroed at update 0 that are nonzero at the end.
  std::size_t regrown = 0;
};

/// One JSON object per line: every prune event, then a final summary line.
std::string to_jsonl(const PadaRunLog& log);

struct RunResult {
  ParameterSet model;
  PadaRunLog log;
  std::optional<Mask> initial_mask;
};

/// The PADA fine-tuning loop. Event 0 builds the strategy's initial model at
/// r1; Iterative and Dynamic schedules then alternate n updates with
/// magnitude re-pruning of the current weights at r2..rk. Training always
/// totals sched.total_updates (cfg.updates is ignored). No mask survives an
/// event, so zeroed weights keep training.
///
/// `arch` carries the classification head used on the target task.
/// Throws Error(config) when sched.rates[0] differs from spec.rate.
RunResult run_pada(const ParameterSet& pretrained, const StrategySpec& spec,
                   const PruneSchedule& sched, const LabeledSet& target_data,
                   const ModelArch& arch, const TrainConfig& cfg,
                   const LabeledSet* eval_data = nullptr);

/// Direct fine-tuning baseline: cfg.updates plain updates, no pruning.
RunResult run_dft(const ParameterSet& pretrained, const LabeledSet& target_data,
                  const ModelArch& arch, const TrainConfig& cfg,
                  const LabeledSet* eval_data = nullptr);

}  // namespace pada
