#include "pada/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "pada/checkpoint.hpp"
#include "pada/error.hpp"
#include "pada/file_util.hpp"
#include "pada/random.hpp"
#include "pada/strategies.hpp"
#include "text.hpp"

namespace pada {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config

ModelArch ExperimentConfig::target_arch() const {
  ModelArch a;
  a.input_dim = task.input_dim;
  a.hidden = hidden;
  a.activation = activation;
  return a.with_classification_head(task.classes);
}

PruneSchedule ExperimentConfig::schedule_for(Frequency f) const {
  PruneSchedule s = preset_schedule(preset, f, total_updates, interval);
  if (auto it = rates.find(f); it != rates.end()) {
    s.rates.clear();
    for (double r : it->second) s.rates.emplace_back(r);
  }
  return s;
}

namespace {

const std::vector<std::string> kStrategyNames{"DFT", "TAG", "TAW", "CD-TAW"};

bool wants(const ExperimentConfig& cfg, std::string_view name) {
  return std::find(cfg.strategies.begin(), cfg.strategies.end(), name) != cfg.strategies.end();
}

void validate_stage(const StageConfig& s, const std::string& name, bool needs_updates) {
  if (!(s.learning_rate > 0.0)) throw Error(ErrorKind::config, name + ".learning_rate must be positive");
  if (s.batch_size == 0) throw Error(ErrorKind::config, name + ".batch_size must be positive");
  if (needs_updates && s.updates == 0) {
    throw Error(ErrorKind::config, name + ".updates must be positive");
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  task.validate();
  target_arch().validate();
  validate_stage(pretrain, "pretrain", false);
  validate_stage(donor, "donor", false);
  validate_stage(taw, "taw", false);
  validate_stage(target, "target", false);
  if (!(pretrain_noise_std >= 0.0)) throw Error(ErrorKind::config, "pretrain.noise_std must be >= 0");
  if (strategies.empty()) throw Error(ErrorKind::config, "strategies is empty");
  std::set<std::string> seen;
  for (const auto& s : strategies) {
    if (std::find(kStrategyNames.begin(), kStrategyNames.end(), s) == kStrategyNames.end()) {
      throw Error(ErrorKind::config, "unknown strategy '" + s + "' in strategies");
    }
    if (!seen.insert(s).second) throw Error(ErrorKind::config, "duplicate strategy '" + s + "'");
  }
  const bool any_pada = std::any_of(strategies.begin(), strategies.end(),
                                    [](const std::string& s) { return s != "DFT"; });
  if (any_pada && frequencies.empty()) throw Error(ErrorKind::config, "frequencies is empty");
  for (Frequency f : frequencies) pada::validate(schedule_for(f));
  if (seeds.empty()) throw Error(ErrorKind::config, "seeds is empty");
}

ExperimentConfig default_experiment_config() {
  ExperimentConfig c;
  c.pretrain = {0.05, 32, 3000};
  c.donor = {0.05, 32, 3000};
  c.taw = {0.05, 32, 2000};
  c.target = {0.05, 32, 0};
  c.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  return c;
}

namespace {

// Strict reader over one JSON object: required/optional fields and
// rejection of unknown keys.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw Error(ErrorKind::config, "config field '" + where() + "' must be an object");
  }

  const json& required(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) throw Error(ErrorKind::config, "missing config field '" + name(key) + "'");
    return *it;
  }

  const json* optional(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  std::size_t size(const std::string& key) { return as_size(required(key), name(key)); }
  double number(const std::string& key) { return as_number(required(key), name(key)); }
  std::string string(const std::string& key) { return as_string(required(key), name(key)); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw Error(ErrorKind::config, "unknown config field '" + name(it.key()) + "'");
      }
    }
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  static std::size_t as_size(const json& v, const std::string& field) {
    if (!v.is_number_unsigned()) {
      throw Error(ErrorKind::config, "config field '" + field + "' must be a non-negative integer");
    }
    return v.get<std::size_t>();
  }
  static double as_number(const json& v, const std::string& field) {
    if (!v.is_number()) throw Error(ErrorKind::config, "config field '" + field + "' must be a number");
    return v.get<double>();
  }
  static std::string as_string(const json& v, const std::string& field) {
    if (!v.is_string()) throw Error(ErrorKind::config, "config field '" + field + "' must be a string");
    return v.get<std::string>();
  }
  static const json& as_array(const json& v, const std::string& field) {
    if (!v.is_array()) throw Error(ErrorKind::config, "config field '" + field + "' must be an array");
    return v;
  }

 private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

StageConfig parse_stage(Fields& parent, const std::string& key, bool with_updates,
                        double* noise = nullptr) {
  Fields f(parent.required(key), parent.name(key));
  StageConfig s;
  s.learning_rate = f.number("learning_rate");
  s.batch_size = f.size("batch_size");
  if (with_updates) s.updates = f.size("updates");
  if (noise) *noise = f.number("noise_std");
  f.finish();
  return s;
}

json stage_json(const StageConfig& s, bool with_updates) {
  json j{{"learning_rate", s.learning_rate}, {"batch_size", s.batch_size}};
  if (with_updates) j["updates"] = s.updates;
  return j;
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::config, std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  Fields top(root, "");

  {
    Fields t(top.required("task"), "task");
    auto& s = c.task;
    s.classes = t.size("classes");
    s.input_dim = t.size("input_dim");
    s.clusters_per_class = t.size("clusters_per_class");
    s.center_scale = t.number("center_scale");
    s.noise_std = t.number("noise_std");
    s.rotation_deg = t.number("rotation_deg");
    s.scale_min = t.number("scale_min");
    s.scale_max = t.number("scale_max");
    s.target_noise_std = t.number("target_noise_std");
    s.unlabeled_source = t.size("unlabeled_source");
    s.labeled_source = t.size("labeled_source");
    if (const json* v = t.optional("labeled_target")) {
      s.labeled_target = Fields::as_size(*v, "task.labeled_target");
    }
    s.target_eval = t.size("target_eval");
    t.finish();
  }
  {
    Fields a(top.required("arch"), "arch");
    c.hidden.clear();
    for (const json& h : Fields::as_array(a.required("hidden"), "arch.hidden")) {
      c.hidden.push_back(Fields::as_size(h, "arch.hidden"));
    }
    c.activation = activation_from_string(a.string("activation"));
    a.finish();
  }
  c.pretrain = parse_stage(top, "pretrain", true, &c.pretrain_noise_std);
  c.donor = parse_stage(top, "donor", true);
  c.taw = parse_stage(top, "taw", true);
  c.target = parse_stage(top, "target", false);
  {
    Fields s(top.required("schedule"), "schedule");
    c.preset = model_size_from_string(s.string("preset"));
    c.total_updates = s.size("total_updates");
    c.interval = s.size("interval");
    if (const json* r = s.optional("rates")) {
      Fields rf(*r, "schedule.rates");
      for (auto it = r->begin(); it != r->end(); ++it) {
        const Frequency f = frequency_from_string(it.key());
        const json& list = Fields::as_array(rf.required(it.key()), rf.name(it.key()));
        std::vector<double> rates;
        for (const json& v : list) rates.push_back(Fields::as_number(v, rf.name(it.key())));
        c.rates[f] = std::move(rates);
      }
      rf.finish();
    }
    s.finish();
  }
  c.strategies.clear();
  for (const json& v : Fields::as_array(top.required("strategies"), "strategies")) {
    c.strategies.push_back(Fields::as_string(v, "strategies"));
  }
  c.frequencies.clear();
  for (const json& v : Fields::as_array(top.required("frequencies"), "frequencies")) {
    c.frequencies.push_back(frequency_from_string(Fields::as_string(v, "frequencies")));
  }
  c.seeds.clear();
  for (const json& v : Fields::as_array(top.required("seeds"), "seeds")) {
    if (!v.is_number_unsigned()) throw Error(ErrorKind::config, "seeds must be non-negative integers");
    c.seeds.push_back(v.get<std::uint64_t>());
  }
  if (const json* p = top.optional("pretrained_checkpoint")) {
    c.pretrained_checkpoint = Fields::as_string(*p, "pretrained_checkpoint");
  }
  if (const json* p = top.optional("donor_checkpoint")) {
    c.donor_checkpoint = Fields::as_string(*p, "donor_checkpoint");
  }
  top.finish();
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return parse_experiment_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::string to_json(const ExperimentConfig& c) {
  const auto& t = c.task;
  json task{{"classes", t.classes},
            {"input_dim", t.input_dim},
            {"clusters_per_class", t.clusters_per_class},
            {"center_scale", t.center_scale},
            {"noise_std", t.noise_std},
            {"rotation_deg", t.rotation_deg},
            {"scale_min", t.scale_min},
            {"scale_max", t.scale_max},
            {"target_noise_std", t.target_noise_std},
            {"unlabeled_source", t.unlabeled_source},
            {"labeled_source", t.labeled_source},
            {"labeled_target", t.labeled_target},
            {"target_eval", t.target_eval}};
  json pretrain = stage_json(c.pretrain, true);
  pretrain["noise_std"] = c.pretrain_noise_std;
  json schedule{{"preset", c.preset == ModelSize::large ? "large" : "base"},
                {"total_updates", c.total_updates},
                {"interval", c.interval}};
  if (!c.rates.empty()) {
    json r = json::object();
    for (const auto& [f, rates] : c.rates) r[std::string(to_string(f))] = rates;
    schedule["rates"] = r;
  }
  json freqs = json::array();
  for (Frequency f : c.frequencies) freqs.push_back(std::string(to_string(f)));
  json j{{"task", task},
         {"arch", {{"hidden", c.hidden}, {"activation", std::string(to_string(c.activation))}}},
         {"pretrain", pretrain},
         {"donor", stage_json(c.donor, true)},
         {"taw", stage_json(c.taw, true)},
         {"target", stage_json(c.target, false)},
         {"schedule", schedule},
         {"strategies", c.strategies},
         {"frequencies", freqs},
         {"seeds", c.seeds}};
  if (c.pretrained_checkpoint) j["pretrained_checkpoint"] = c.pretrained_checkpoint->string();
  if (c.donor_checkpoint) j["donor_checkpoint"] = c.donor_checkpoint->string();
  return j.dump(2) + "\n";
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string_view item = text.substr(pos, comma - pos);
    std::uint64_t v = 0;
    auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc{} || end != item.data() + item.size()) {
      throw Error(ErrorKind::config, "bad seed list '" + std::string(text) + "'");
    }
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Table

const TableRow* ComparisonTable::find(std::string_view strategy, std::string_view frequency) const {
  for (const auto& r : rows) {
    if (r.strategy == strategy && r.frequency == frequency) return &r;
  }
  return nullptr;
}

std::string table_to_csv(const ComparisonTable& table) {
  std::string out = "strategy,frequency,mean_error";
  for (auto s : table.seeds) out += ",seed_" + std::to_string(s);
  out += '\n';
  for (const auto& r : table.rows) {
    out += r.strategy + ',' + r.frequency + ',' + detail::format_number(r.mean_error);
    for (double e : r.seed_errors) out += ',' + detail::format_number(e);
    out += '\n';
  }
  return out;
}

namespace {

json ordering_json(const ComparisonTable& t) {
  json out = json::object();
  const TableRow* dft = t.find("DFT", "-");
  for (const char* f : {"Once", "Iterative", "Dynamic"}) {
    const TableRow* taw = t.find("TAW", f);
    const TableRow* cd = t.find("CD-TAW", f);
    json o = json::object();
    if (cd && dft) o["cdtaw_le_dft"] = cd->mean_error <= dft->mean_error;
    if (cd && taw) o["cdtaw_lt_taw"] = cd->mean_error < taw->mean_error;
    if (taw && dft) o["taw_le_dft"] = taw->mean_error <= dft->mean_error;
    if (!o.empty()) out[f] = o;
  }
  return out;
}

}  // namespace

std::string table_to_json(const ComparisonTable& table) {
  json rows = json::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"strategy", r.strategy},
                    {"frequency", r.frequency},
                    {"mean_error", r.mean_error},
                    {"seed_errors", r.seed_errors}});
  }
  json j{{"seeds", table.seeds}, {"rows", rows}, {"ordering", ordering_json(table)}};
  return j.dump(2) + "\n";
}

ComparisonTable table_from_json(std::string_view json_text) {
  ComparisonTable t;
  try {
    const json j = json::parse(json_text);
    t.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    for (const json& r : j.at("rows")) {
      t.rows.push_back({r.at("strategy").get<std::string>(), r.at("frequency").get<std::string>(),
                        r.at("mean_error").get<double>(),
                        r.at("seed_errors").get<std::vector<double>>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::format, std::string("bad comparison table: ") + e.what());
  }
  return t;
}

// ---------------------------------------------------------------------------
// Pipeline stages

std::uint64_t pretrain_seed(std::uint64_t seed) noexcept { return derive_seed(seed, 100); }
std::uint64_t donor_seed(std::uint64_t seed) noexcept { return derive_seed(seed, 200); }
std::uint64_t taw_seed(std::uint64_t seed) noexcept { return derive_seed(seed, 300); }
std::uint64_t target_seed(std::uint64_t seed) noexcept { return derive_seed(seed, 400); }

namespace {

TrainConfig train_config(const StageConfig& s, std::size_t updates, std::uint64_t seed, LossKind loss) {
  TrainConfig t;
  t.learning_rate = s.learning_rate;
  t.batch_size = s.batch_size;
  t.updates = updates;
  t.seed = seed;
  t.loss = loss;
  return t;
}

ModelArch pretrain_arch(const ExperimentConfig& cfg) {
  return cfg.target_arch().with_reconstruction_head();
}

std::size_t resolve_threads(const CommandOptions& opts) {
  if (opts.threads > 0) return opts.threads;
  if (const char* env = std::getenv("PADA_THREADS")) {
    std::size_t v = 0;
    const std::string_view s(env);
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc{} && end == s.data() + s.size() && v > 0) return v;
    throw Error(ErrorKind::config, "PADA_THREADS must be a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t count = std::min(threads, n);
  if (count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void prepare_output(const fs::path& file, bool force) {
  if (fs::exists(file) && !force) {
    throw Error(ErrorKind::io, "'" + file.string() + "' already exists; pass --force to overwrite");
  }
  std::error_code ec;
  fs::create_directories(file.parent_path().empty() ? fs::path(".") : file.parent_path(), ec);
  if (ec) throw Error(ErrorKind::io, "cannot create directory for '" + file.string() + "'");
}

ParameterSet load_body(const fs::path& path, const ExperimentConfig& cfg, const char* what) {
  ParameterSet ps = load_checkpoint(path);
  try {
    check_body(cfg.target_arch(), ps);
  } catch (const Error& e) {
    throw Error(ErrorKind::structural, std::string("incompatible ") + what + " checkpoint '" +
                                           path.string() + "': " + e.what());
  }
  return ps;
}

std::vector<std::uint64_t> effective_seeds(const ExperimentConfig& cfg, const CommandOptions& opts) {
  auto seeds = opts.seeds ? *opts.seeds : cfg.seeds;
  if (seeds.empty()) throw Error(ErrorKind::config, "no seeds given");
  return seeds;
}

Metadata stage_metadata(std::uint64_t seed, std::size_t step, const char* stage) {
  return {{"seed", std::to_string(seed)}, {"step", std::to_string(step)}, {"stage", stage}};
}

}  // namespace

ParameterSet build_pretrained(const ExperimentConfig& cfg, const DomainShiftTask& task,
                              std::uint64_t seed) {
  const auto tc = train_config(cfg.pretrain, cfg.pretrain.updates, pretrain_seed(seed),
                               LossKind::mse_reconstruction);
  return pretrain_denoising(pretrain_arch(cfg), task.source_unlabeled, tc, cfg.pretrain_noise_std);
}

ParameterSet build_donor(const ExperimentConfig& cfg, const ParameterSet& pretrained,
                         const DomainShiftTask& task, std::uint64_t seed) {
  const auto tc = train_config(cfg.donor, cfg.donor.updates, donor_seed(seed), LossKind::cross_entropy);
  ParameterSet donor = strip_head(finetune_supervised(cfg.target_arch(), pretrained, task.source_labeled, tc));
  donor.set_role(Role::finetuned_donor);
  return donor;
}

fs::path cmd_pretrain(const ExperimentConfig& cfg, const CommandOptions& opts) {
  cfg.validate();
  const std::uint64_t seed = effective_seeds(cfg, opts).front();
  const fs::path out = opts.out_dir / "pretrained.pada";
  prepare_output(out, opts.force);
  const DomainShiftTask task = gen_domain_shift(seed, cfg.task);
  const ParameterSet ps = build_pretrained(cfg, task, seed);
  save_checkpoint(ps, out, stage_metadata(seed, cfg.pretrain.updates, "pretrain"));
  return out;
}

fs::path cmd_make_donor(const ExperimentConfig& cfg, const CommandOptions& opts) {
  cfg.validate();
  const std::uint64_t seed = effective_seeds(cfg, opts).front();
  const fs::path source = cfg.pretrained_checkpoint.value_or(opts.out_dir / "pretrained.pada");
  const ParameterSet pretrained = load_body(source, cfg, "pretrained");
  const fs::path out = opts.out_dir / "donor.pada";
  prepare_output(out, opts.force);
  const DomainShiftTask task = gen_domain_shift(seed, cfg.task);
  const ParameterSet donor = build_donor(cfg, pretrained, task, seed);
  save_checkpoint(donor, out, stage_metadata(seed, cfg.donor.updates, "make-donor"));
  return out;
}

namespace {

struct Cell {
  std::size_t seed_index;
  std::string strategy;  // "DFT" or a StrategyKind name
  std::optional<Frequency> freq;

  std::string name() const {
    return freq ? strategy + "-" + std::string(to_string(*freq)) : strategy;
  }
};

struct CellOutput {
  double error = 0.0;
  std::string log;
  std::vector<std::uint8_t> model;
  std::vector<std::uint8_t> mask;
};

CellOutput run_cell(const ExperimentConfig& cfg, const Cell& cell, std::uint64_t seed,
                    const SeedInputs& in) {
  const ModelArch arch = cfg.target_arch();
  const TrainConfig tc =
      train_config(cfg.target, cfg.total_updates, target_seed(seed), LossKind::cross_entropy);
  RunResult r;
  if (!cell.freq) {
    r = run_dft(in.pretrained, in.task.target_labeled, arch, tc, &in.task.target_eval);
  } else {
    const PruneSchedule sched = cfg.schedule_for(*cell.freq);
    StrategySpec spec;
    spec.kind = strategy_from_string(cell.strategy);
    spec.rate = sched.rates.front();
    if (spec.kind == StrategyKind::taw) {
      spec.taw = FinetuneSetup{
          arch, train_config(cfg.taw, cfg.taw.updates, taw_seed(seed), LossKind::cross_entropy)};
    } else if (spec.kind == StrategyKind::cdtaw) {
      spec.donor = in.donor;
    }
    r = run_pada(in.pretrained, spec, sched, in.task.target_labeled, arch, tc, &in.task.target_eval);
  }
  CellOutput out;
  out.error = r.log.target_error;
  out.log = to_jsonl(r.log);
  out.model = encode_checkpoint(
      r.model, {{"seed", std::to_string(seed)},
                {"step", std::to_string(r.log.total_updates)},
                {"stage", "run"},
                {"cell", cell.name()}});
  if (r.initial_mask) out.mask = encode_mask(*r.initial_mask);
  return out;
}

}  // namespace

ComparisonTable cmd_run(const ExperimentConfig& cfg, const CommandOptions& opts) {
  cfg.validate();
  const auto seeds = effective_seeds(cfg, opts);
  const std::size_t threads = resolve_threads(opts);
  const fs::path table_json = opts.out_dir / "table.json";
  prepare_output(table_json, opts.force);

  std::optional<ParameterSet> given_pretrained;
  std::optional<ParameterSet> given_donor;
  if (cfg.pretrained_checkpoint) given_pretrained = load_body(*cfg.pretrained_checkpoint, cfg, "pretrained");
  if (cfg.donor_checkpoint) given_donor = load_body(*cfg.donor_checkpoint, cfg, "donor");
  const bool need_donor = wants(cfg, "CD-TAW");

  std::vector<SeedInputs> inputs(seeds.size());
  parallel_for(seeds.size(), threads, [&](std::size_t i) {
    const std::uint64_t seed = seeds[i];
    try {
      SeedInputs& in = inputs[i];
      in.task = gen_domain_shift(seed, cfg.task);
      in.pretrained = given_pretrained ? *given_pretrained : build_pretrained(cfg, in.task, seed);
      if (need_donor) {
        in.donor = given_donor ? *given_donor : build_donor(cfg, in.pretrained, in.task, seed);
      }
    } catch (const Error& e) {
      throw Error(e.kind(), "[inputs seed " + std::to_string(seed) + "] " + e.what());
    }
  });

  std::vector<Cell> cells;
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    for (const auto& strategy : cfg.strategies) {
      if (strategy == "DFT") {
        cells.push_back({s, strategy, std::nullopt});
      } else {
        for (Frequency f : cfg.frequencies) cells.push_back({s, strategy, f});
      }
    }
  }

  std::vector<CellOutput> outputs(cells.size());
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    const Cell& cell = cells[i];
    const std::uint64_t seed = seeds[cell.seed_index];
    try {
      outputs[i] = run_cell(cfg, cell, seed, inputs[cell.seed_index]);
    } catch (const Error& e) {
      throw Error(e.kind(), "[" + cell.name() + " seed " + std::to_string(seed) + "] " + e.what());
    }
  });

  for (const char* sub : {"logs", "models", "masks", "inputs"}) {
    fs::create_directories(opts.out_dir / sub);
  }
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    const std::string tag = "seed" + std::to_string(seeds[s]);
    if (!given_pretrained) {
      save_checkpoint(inputs[s].pretrained, opts.out_dir / "inputs" / (tag + "_pretrained.pada"),
                      stage_metadata(seeds[s], cfg.pretrain.updates, "pretrain"));
    }
    if (need_donor && !given_donor) {
      save_checkpoint(inputs[s].donor, opts.out_dir / "inputs" / (tag + "_donor.pada"),
                      stage_metadata(seeds[s], cfg.donor.updates, "make-donor"));
    }
  }

  ComparisonTable table;
  table.seeds = seeds;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell& cell = cells[i];
    const std::string file = cell.name() + "_seed" + std::to_string(seeds[cell.seed_index]);
    write_file_atomic(opts.out_dir / "logs" / (file + ".jsonl"), outputs[i].log);
    write_file_atomic(opts.out_dir / "models" / (file + ".pada"), outputs[i].model);
    if (!outputs[i].mask.empty()) {
      write_file_atomic(opts.out_dir / "masks" / (file + ".padm"), outputs[i].mask);
    }
    const std::string freq = cell.freq ? std::string(to_string(*cell.freq)) : "-";
    auto it = std::find_if(table.rows.begin(), table.rows.end(), [&](const TableRow& r) {
      return r.strategy == cell.strategy && r.frequency == freq;
    });
    if (it == table.rows.end()) {
      table.rows.push_back({cell.strategy, freq, 0.0, {}});
      it = table.rows.end() - 1;
    }
    it->seed_errors.push_back(outputs[i].error);
  }
  for (auto& r : table.rows) {
    double sum = 0.0;
    for (double e : r.seed_errors) sum += e;
    r.mean_error = sum / static_cast<double>(r.seed_errors.size());
  }
  write_file_atomic(opts.out_dir / "table.csv", table_to_csv(table));
  write_file_atomic(table_json, table_to_json(table));
  return table;
}

SimilarityReport cmd_compare_masks(const fs::path& mask_a, const fs::path& mask_b,
                                   const CommandOptions& opts) {
  const Mask a = load_mask(mask_a);
  const Mask b = load_mask(mask_b);
  const SimilarityReport report = layerwise_report(a, b);
  const fs::path csv = opts.out_dir / "mask_report.csv";
  prepare_output(csv, opts.force);
  write_file_atomic(csv, report_to_csv(report));
  write_file_atomic(opts.out_dir / "mask_report.json", report_to_json(report));
  return report;
}

std::string cmd_report(const CommandOptions& opts) {
  const auto bytes = read_file_bytes(opts.out_dir / "table.json");
  const ComparisonTable t =
      table_from_json(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-8s %-10s %10s  %s\n", "strategy", "frequency", "mean_error",
                "seeds");
  out << line;
  for (const auto& r : t.rows) {
    std::snprintf(line, sizeof(line), "%-8s %-10s %10.4f ", r.strategy.c_str(), r.frequency.c_str(),
                  r.mean_error);
    out << line;
    for (double e : r.seed_errors) {
      std::snprintf(line, sizeof(line), " %.4f", e);
      out << line;
    }
    out << '\n';
  }
  const TableRow* dft = t.find("DFT", "-");
  for (const char* f : {"Once", "Iterative", "Dynamic"}) {
    const TableRow* taw = t.find("TAW", f);
    const TableRow* cd = t.find("CD-TAW", f);
    if (!dft || !taw || !cd) continue;
    const bool holds = cd->mean_error < taw->mean_error && taw->mean_error <= dft->mean_error;
    std::snprintf(line, sizeof(line), "%s: CD-TAW %.4f < TAW %.4f <= DFT %.4f : %s\n", f,
                  cd->mean_error, taw->mean_error, dft->mean_error, holds ? "yes" : "no");
    out << line;
  }
  return out.str();
}

}  // namespace pada
