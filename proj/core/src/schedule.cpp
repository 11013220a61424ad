#include "pada/schedule.hpp"

#include <cmath>
#include <limits>

#include "json.hpp"
#include "pada/error.hpp"

namespace pada {

std::string_view to_string(Frequency f) noexcept {
  switch (f) {
    case Frequency::once: return "Once";
    case Frequency::iterative: return "Iterative";
    case Frequency::dynamic_iterative: return "Dynamic";
  }
  return "Once";
}

Frequency frequency_from_string(std::string_view name) {
  if (name == "Once") return Frequency::once;
  if (name == "Iterative") return Frequency::iterative;
  if (name == "Dynamic" || name == "DynamicIterative") return Frequency::dynamic_iterative;
  throw Error(ErrorKind::config, "unknown pruning frequency '" + std::string(name) + "'");
}

void validate(const PruneSchedule& s) {
  const auto fail = [](const std::string& msg) { throw Error(ErrorKind::validation, msg); };
  if (s.rates.empty()) fail("schedule needs at least one rate");
  if (s.total_updates == 0) fail("total updates N must be positive");
  if (s.interval == 0) fail("re-prune interval n must be positive");
  if (s.interval > s.total_updates) fail("re-prune interval n exceeds total updates N");
  switch (s.freq) {
    case Frequency::once:
      if (s.rates.size() != 1) fail("Once schedule takes exactly one rate");
      break;
    case Frequency::iterative:
      for (const auto& r : s.rates) {
        if (r != s.rates.front()) fail("Iterative schedule needs all rates equal");
      }
      break;
    case Frequency::dynamic_iterative:
      for (std::size_t i = 1; i < s.rates.size(); ++i) {
        if (!(s.rates[i].percent() < s.rates[i - 1].percent())) {
          fail("Dynamic schedule needs strictly decreasing rates");
        }
      }
      break;
  }
}

std::vector<std::size_t> prune_event_updates(const PruneSchedule& s) {
  validate(s);
  std::vector<std::size_t> out{0};
  if (s.freq == Frequency::once) return out;
  for (std::size_t u = 1; u < s.rates.size(); ++u) {
    const std::size_t at = u * s.interval;
    if (at > s.total_updates) break;
    out.push_back(at);
  }
  return out;
}

ModelSize model_size_from_string(std::string_view name) {
  if (name == "large" || name == "LARGE") return ModelSize::large;
  if (name == "base" || name == "BASE") return ModelSize::base;
  throw Error(ErrorKind::config, "unknown preset '" + std::string(name) + "'");
}

PruneSchedule preset_schedule(ModelSize size, Frequency freq, std::size_t total_updates,
                              std::size_t interval) {
  std::vector<double> rates;
  switch (freq) {
    case Frequency::once:
      rates = size == ModelSize::large ? std::vector<double>{40} : std::vector<double>{30};
      break;
    case Frequency::iterative:
      rates = {30, 30, 30};
      break;
    case Frequency::dynamic_iterative:
      rates = size == ModelSize::large ? std::vector<double>{40, 20, 10}
                                       : std::vector<double>{30, 25, 20, 10};
      break;
  }
  PruneSchedule s;
  s.freq = freq;
  for (double r : rates) s.rates.emplace_back(r);
  s.total_updates = total_updates;
  s.interval = interval;
  return s;
}

namespace {

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

std::size_t count_regrown(const ParameterSet& model, const Mask& initial) {
  std::size_t n = 0;
  for (const MaskTensor& m : initial.tensors) {
    const auto idx = model.find(m.name);
    if (!idx) continue;
    const auto& data = model[*idx].data;
    for (std::size_t e = 0; e < m.bits.size(); ++e) {
      if (m.bits[e] == 0 && data[e] != 0.0f) ++n;
    }
  }
  return n;
}

void finish(RunResult& r, const ModelArch& arch, const LabeledSet* eval_data, double last_loss,
            std::size_t updates) {
  r.model.set_role(Role::adapted);
  r.log.total_updates = updates;
  r.log.final_train_loss = last_loss;
  r.log.final_sparsity = sparsity(r.model);
  r.log.target_error = eval_data ? evaluate(arch, r.model, *eval_data)
                                 : std::numeric_limits<double>::quiet_NaN();
  if (r.initial_mask) r.log.regrown = count_regrown(r.model, *r.initial_mask);
}

}  // namespace

std::string to_jsonl(const PadaRunLog& log) {
  std::string out;
  for (const auto& e : log.events) {
    nlohmann::json j{
        {"event", "prune"},
        {"update", e.update},
        {"rate", e.rate},
        {"source", std::string(to_string(e.source))},
        {"sparsity_before", e.sparsity_before},
        {"sparsity_after", e.sparsity_after},
        {"train_loss", number_or_null(e.train_loss)},
    };
    out += j.dump();
    out += '\n';
  }
  nlohmann::json fin{
      {"event", "final"},
      {"update", log.total_updates},
      {"train_loss", number_or_null(log.final_train_loss)},
      {"target_error", number_or_null(log.target_error)},
      {"sparsity", log.final_sparsity},
      {"regrown", log.regrown},
  };
  out += fin.dump();
  out += '\n';
  return out;
}

RunResult run_pada(const ParameterSet& pretrained, const StrategySpec& spec,
                   const PruneSchedule& sched, const LabeledSet& target_data,
                   const ModelArch& arch, const TrainConfig& cfg, const LabeledSet* eval_data) {
  validate(sched);
  if (sched.rates.front() != spec.rate) {
    throw Error(ErrorKind::config, "schedule r1 (" + std::to_string(sched.rates.front().percent()) +
                                       ") differs from strategy rate (" +
                                       std::to_string(spec.rate.percent()) + ")");
  }
  if (target_data.size() == 0) throw Error(ErrorKind::empty, "target dataset is empty");

  RunResult r;
  const double before0 = sparsity(pretrained);
  InitialModel init = initial_model(pretrained, spec, &target_data);
  r.log.events.push_back({0, spec.rate.percent(), init.mask.source, before0,
                          sparsity(init.model), std::numeric_limits<double>::quiet_NaN()});
  r.initial_mask = std::move(init.mask);

  r.model = with_fresh_head(std::move(init.model), arch, cfg.seed);
  SupervisedTrainer trainer(arch, cfg, target_data);
  const std::size_t total = sched.total_updates;
  double last_loss = std::numeric_limits<double>::quiet_NaN();

  if (sched.freq == Frequency::once) {
    last_loss = trainer.run(r.model, total);
  } else {
    std::size_t updates = 0;
    std::size_t next_rate = 1;
    while (updates < total) {
      const std::size_t steps = std::min(sched.interval, total - updates);
      last_loss = trainer.run(r.model, steps);
      updates += steps;
      if (steps == sched.interval && next_rate < sched.rates.size()) {
        const PruneRate rate = sched.rates[next_rate++];
        const double before = sparsity(r.model);
        const Mask m = compute_ump_mask(r.model, rate, MaskSource::in_loop);
        r.model = apply_zeroing(std::move(r.model), m);
        r.log.events.push_back(
            {updates, rate.percent(), MaskSource::in_loop, before, sparsity(r.model), last_loss});
      }
    }
  }
  finish(r, arch, eval_data, last_loss, trainer.updates_done());
  return r;
}

RunResult run_dft(const ParameterSet& pretrained, const LabeledSet& target_data,
                  const ModelArch& arch, const TrainConfig& cfg, const LabeledSet* eval_data) {
  if (target_data.size() == 0) throw Error(ErrorKind::empty, "target dataset is empty");
  RunResult r;
  r.model = with_fresh_head(pretrained, arch, cfg.seed);
  SupervisedTrainer trainer(arch, cfg, target_data);
  const double loss = trainer.run(r.model, cfg.updates);
  finish(r, arch, eval_data, loss, trainer.updates_done());
  return r;
}

}  // namespace pada
