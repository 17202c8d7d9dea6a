#include <fstream>
#include <set>

#include "pelu/run.hpp"

namespace pelu {

namespace {

using nlohmann::json;

/// Typed access to one JSON object; remembers which keys were read so that
/// finish() can reject the rest.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] static void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
  }

  std::string at(const std::string& key) const { return path_ + "." + key; }
  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& raw(const std::string& key) {
    if (!has(key)) fail(at(key), "missing required field");
    return j_.at(key);
  }

  double number(const std::string& key, std::optional<double> fallback = {}) {
    if (!has(key)) {
      if (!fallback) fail(at(key), "missing required field");
      return *fallback;
    }
    const json& v = j_.at(key);
    if (!v.is_number()) fail(at(key), "expected a number");
    return v.get<double>();
  }

  std::uint64_t integer(const std::string& key, std::optional<std::uint64_t> fallback = {}) {
    if (!has(key)) {
      if (!fallback) fail(at(key), "missing required field");
      return *fallback;
    }
    return as_integer(j_.at(key), at(key));
  }

  static std::uint64_t as_integer(const json& v, const std::string& path) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
      if (v.get<std::int64_t>() < 0) fail(path, "expected a non-negative integer");
      return v.get<std::uint64_t>();
    }
    fail(path, "expected a non-negative integer");
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) fail(at(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, std::optional<std::string> fallback = {}) {
    if (!has(key)) {
      if (!fallback) fail(at(key), "missing required field");
      return *fallback;
    }
    const json& v = j_.at(key);
    if (!v.is_string()) fail(at(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<std::size_t> integers(const std::string& key, std::vector<std::size_t> fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_array()) fail(at(key), "expected an array of integers");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_integer(v[i], at(key) + "[" + std::to_string(i) + "]"));
    return out;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) fail(at(key), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

ActivationKind parse_activation(const json& j, const std::string& path) {
  if (j.is_string()) {
    try {
      const ActivationType type = parse_activation_type(j.get<std::string>());
      switch (type) {
        case ActivationType::PELU: return ActivationKind::pelu();
        case ActivationType::ELU: return ActivationKind::elu();
        case ActivationType::RELU: return ActivationKind::relu();
        case ActivationType::LRELU: return ActivationKind::lrelu();
        case ActivationType::PRELU: return ActivationKind::prelu();
      }
    } catch (const std::invalid_argument& e) {
      Fields::fail(path, e.what());
    }
  }
  Fields f(j, path);
  ActivationKind kind;
  try {
    kind.type = parse_activation_type(f.string("type"));
  } catch (const std::invalid_argument& e) {
    Fields::fail(f.at("type"), e.what());
  }
  if (kind.type == ActivationType::LRELU || kind.type == ActivationType::PRELU) {
    kind.slope = f.number("slope", kind.type == ActivationType::LRELU ? 0.1 : 0.25);
    if (!(kind.slope > 0.0)) Fields::fail(f.at("slope"), "expected a positive slope");
  }
  if (kind.type == ActivationType::ELU) {
    kind.alpha = f.number("alpha", 1.0);
    if (!(kind.alpha > 0.0)) Fields::fail(f.at("alpha"), "expected a positive alpha");
  }
  f.finish();
  return kind;
}

ParamConfig parse_config_tag(const std::string& text, const std::string& path) {
  try {
    return parse_param_config(text);
  } catch (const std::invalid_argument& e) {
    Fields::fail(path, e.what());
  }
}

ArchitectureConfig parse_architecture(const json& j, const std::string& path) {
  Fields f(j, path);
  ArchitectureConfig arch;
  const std::string type = f.string("type");
  if (type == "mlp") {
    arch.type = ArchitectureType::Mlp;
    arch.widths = f.integers("widths", {});
    if (arch.widths.size() < 2) Fields::fail(f.at("widths"), "expected at least two widths");
    for (std::size_t w : arch.widths) {
      if (w == 0) Fields::fail(f.at("widths"), "widths must be positive");
    }
    arch.batchnorm = f.boolean("batchnorm", false);
  } else if (type == "smallnet-lite") {
    arch.type = ArchitectureType::SmallNetLite;
    arch.smallnet.filters = f.integers("filters", arch.smallnet.filters);
    if (arch.smallnet.filters.empty()) Fields::fail(f.at("filters"), "expected at least one filter count");
    arch.smallnet.hidden = f.integer("hidden", arch.smallnet.hidden);
    arch.smallnet.conv_dropout = f.number("conv_dropout", arch.smallnet.conv_dropout);
    arch.smallnet.fc_dropout = f.number("fc_dropout", arch.smallnet.fc_dropout);
    for (const char* key : {"conv_dropout", "fc_dropout"}) {
      const double rate = std::string(key) == "conv_dropout" ? arch.smallnet.conv_dropout : arch.smallnet.fc_dropout;
      if (!(rate >= 0.0 && rate < 1.0)) Fields::fail(f.at(key), "expected a rate in [0, 1)");
    }
  } else {
    Fields::fail(f.at("type"), "expected \"mlp\" or \"smallnet-lite\"");
  }
  f.finish();
  return arch;
}

SgdConfig parse_optimizer(const json& j, const std::string& path) {
  Fields f(j, path);
  SgdConfig cfg;
  cfg.learning_rate = f.number("learning_rate", cfg.learning_rate);
  cfg.momentum = f.number("momentum", cfg.momentum);
  cfg.weight_decay = f.number("weight_decay", cfg.weight_decay);
  cfg.decay_on_activation_params = f.boolean("decay_on_activation_params", true);
  if (!(cfg.learning_rate > 0.0)) Fields::fail(f.at("learning_rate"), "expected a positive number");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) Fields::fail(f.at("momentum"), "expected a number in [0, 1)");
  if (!(cfg.weight_decay >= 0.0)) Fields::fail(f.at("weight_decay"), "expected a non-negative number");
  f.finish();
  return cfg;
}

std::vector<ScheduleEntry> parse_schedule(const json& j, const std::string& path) {
  if (!j.is_array()) Fields::fail(path, "expected an array of {epoch, learning_rate, weight_decay}");
  std::vector<ScheduleEntry> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string item = path + "[" + std::to_string(i) + "]";
    Fields f(j[i], item);
    ScheduleEntry entry{f.integer("epoch"), f.number("learning_rate"), f.number("weight_decay")};
    f.finish();
    if (out.empty() && entry.epoch != 1) Fields::fail(item + ".epoch", "schedule must start at epoch 1");
    if (!out.empty() && entry.epoch <= out.back().epoch) {
      Fields::fail(item + ".epoch", "schedule epochs must be strictly increasing");
    }
    if (!(entry.learning_rate > 0.0)) Fields::fail(item + ".learning_rate", "expected a positive number");
    if (!(entry.weight_decay >= 0.0)) Fields::fail(item + ".weight_decay", "expected a non-negative number");
    out.push_back(entry);
  }
  return out;
}

DatasetConfig parse_dataset(const json& j, const std::string& path) {
  Fields f(j, path);
  DatasetConfig ds;
  const std::string type = f.string("type");
  if (type == "blobs") {
    ds.type = DatasetType::Blobs;
    ds.n_per_class = f.integer("n_per_class", ds.n_per_class);
    ds.test_n_per_class = f.integer("test_n_per_class", ds.test_n_per_class);
    ds.num_classes = f.integer("num_classes", ds.num_classes);
    ds.dim = f.integer("dim", ds.dim);
    ds.spread = f.number("spread", ds.spread);
    for (const char* key : {"n_per_class", "test_n_per_class", "num_classes", "dim"}) {
      const std::string k = key;
      const std::size_t v = k == "n_per_class" ? ds.n_per_class
                            : k == "test_n_per_class" ? ds.test_n_per_class
                            : k == "num_classes" ? ds.num_classes
                                                 : ds.dim;
      if (v == 0) Fields::fail(f.at(k), "expected a positive integer");
    }
    if (!(ds.spread >= 0.0)) Fields::fail(f.at("spread"), "expected a non-negative number");
  } else if (type == "idx") {
    ds.type = DatasetType::Idx;
    ds.train_images = f.string("train_images");
    ds.train_labels = f.string("train_labels");
    const bool has_images = f.has("test_images"), has_labels = f.has("test_labels");
    if (has_images != has_labels) Fields::fail(path, "test_images and test_labels must be given together");
    if (has_images) {
      ds.test_images = f.string("test_images");
      ds.test_labels = f.string("test_labels");
    }
    ds.mean_subtraction = f.boolean("mean_subtraction", true);
  } else {
    Fields::fail(f.at("type"), "expected \"blobs\" or \"idx\"");
  }
  const std::string augment = f.string("augment", "none");
  if (augment == "none") ds.augment = Augment::None;
  else if (augment == "hflip") ds.augment = Augment::HFlip;
  else Fields::fail(f.at("augment"), "expected \"none\" or \"hflip\"");
  f.finish();
  return ds;
}

}  // namespace

std::pair<double, double> RunConfig::regime(std::size_t epoch) const {
  std::pair<double, double> out{optimizer.learning_rate, optimizer.weight_decay};
  for (const auto& entry : schedule) {
    if (entry.epoch <= epoch) out = {entry.learning_rate, entry.weight_decay};
  }
  return out;
}

RunConfig parse_run_config(const json& j, const std::string& path) {
  Fields f(j, path);
  RunConfig cfg;
  if (f.has("architecture")) cfg.architecture = parse_architecture(f.raw("architecture"), f.at("architecture"));
  if (f.has("activation")) cfg.activation = parse_activation(f.raw("activation"), f.at("activation"));
  cfg.param_config = parse_config_tag(f.string("param_config", "a_invb"), f.at("param_config"));
  if (f.has("optimizer")) cfg.optimizer = parse_optimizer(f.raw("optimizer"), f.at("optimizer"));
  if (f.has("schedule")) cfg.schedule = parse_schedule(f.raw("schedule"), f.at("schedule"));
  cfg.epochs = f.integer("epochs", cfg.epochs);
  cfg.batch_size = f.integer("batch_size", cfg.batch_size);
  if (cfg.batch_size == 0) Fields::fail(f.at("batch_size"), "expected a positive integer");
  cfg.seed = f.integer("seed", cfg.seed);
  if (f.has("dataset")) cfg.dataset = parse_dataset(f.raw("dataset"), f.at("dataset"));
  cfg.log_every = f.integer("log_every", cfg.log_every);
  cfg.output_dir = f.string("output_dir", cfg.output_dir.string());
  f.finish();
  return cfg;
}

namespace {

json read_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(file.string() + ": cannot open config file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(file.string() + ": invalid JSON: " + e.what());
  }
}

void resolve_paths(DatasetConfig& ds, const std::filesystem::path& base) {
  for (auto* p : {&ds.train_images, &ds.train_labels, &ds.test_images, &ds.test_labels}) {
    if (!p->empty() && p->is_relative()) *p = base / *p;
  }
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& file) {
  RunConfig cfg = parse_run_config(read_json(file));
  resolve_paths(cfg.dataset, file.parent_path());
  return cfg;
}

json to_json(const RunConfig& cfg) {
  json arch;
  if (cfg.architecture.type == ArchitectureType::Mlp) {
    arch = {{"type", "mlp"}, {"widths", cfg.architecture.widths}, {"batchnorm", cfg.architecture.batchnorm}};
  } else {
    const auto& s = cfg.architecture.smallnet;
    arch = {{"type", "smallnet-lite"},
            {"filters", s.filters},
            {"hidden", s.hidden},
            {"conv_dropout", s.conv_dropout},
            {"fc_dropout", s.fc_dropout}};
  }
  json act{{"type", std::string(to_string(cfg.activation.type))}};
  if (cfg.activation.type == ActivationType::LRELU || cfg.activation.type == ActivationType::PRELU) {
    act["slope"] = cfg.activation.slope;
  }
  if (cfg.activation.type == ActivationType::ELU) act["alpha"] = cfg.activation.alpha;
  json schedule = json::array();
  for (const auto& e : cfg.schedule) {
    schedule.push_back({{"epoch", e.epoch}, {"learning_rate", e.learning_rate}, {"weight_decay", e.weight_decay}});
  }
  json ds;
  const auto& d = cfg.dataset;
  if (d.type == DatasetType::Blobs) {
    ds = {{"type", "blobs"},
          {"n_per_class", d.n_per_class},
          {"test_n_per_class", d.test_n_per_class},
          {"num_classes", d.num_classes},
          {"dim", d.dim},
          {"spread", d.spread}};
  } else {
    ds = {{"type", "idx"},
          {"train_images", d.train_images.string()},
          {"train_labels", d.train_labels.string()},
          {"mean_subtraction", d.mean_subtraction}};
    if (!d.test_images.empty()) {
      ds["test_images"] = d.test_images.string();
      ds["test_labels"] = d.test_labels.string();
    }
  }
  ds["augment"] = d.augment == Augment::HFlip ? "hflip" : "none";
  return {{"architecture", arch},
          {"activation", act},
          {"param_config", std::string(to_string(cfg.param_config))},
          {"optimizer",
           {{"learning_rate", cfg.optimizer.learning_rate},
            {"momentum", cfg.optimizer.momentum},
            {"weight_decay", cfg.optimizer.weight_decay},
            {"decay_on_activation_params", cfg.optimizer.decay_on_activation_params}}},
          {"schedule", schedule},
          {"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"seed", cfg.seed},
          {"dataset", ds},
          {"log_every", cfg.log_every},
          {"output_dir", cfg.output_dir.string()}};
}

SweepConfig parse_sweep_config(const json& j) {
  Fields f(j, "config");
  SweepConfig cfg;
  cfg.base = parse_run_config(f.raw("base"), f.at("base"));
  cfg.seeds = f.integer("seeds", 1);
  if (cfg.seeds == 0) Fields::fail(f.at("seeds"), "expected at least one seed");
  if (cfg.base.epochs == 0) Fields::fail(f.at("base") + ".epochs", "sweeps need at least one epoch");
  cfg.output_dir = f.string("output_dir", cfg.output_dir.string());

  std::vector<ActivationKind> activations;
  if (f.has("activations")) {
    const json& list = f.raw("activations");
    if (!list.is_array() || list.empty()) Fields::fail(f.at("activations"), "expected a non-empty array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      activations.push_back(parse_activation(list[i], f.at("activations") + "[" + std::to_string(i) + "]"));
    }
  }
  std::vector<ParamConfig> configs;
  if (f.has("param_configs")) {
    const json& list = f.raw("param_configs");
    if (!list.is_array() || list.empty()) Fields::fail(f.at("param_configs"), "expected a non-empty array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string item = f.at("param_configs") + "[" + std::to_string(i) + "]";
      if (!list[i].is_string()) Fields::fail(item, "expected a string");
      configs.push_back(parse_config_tag(list[i].get<std::string>(), item));
    }
  }
  f.finish();

  if (activations.empty()) activations.push_back(configs.empty() ? cfg.base.activation : ActivationKind::pelu());
  if (configs.empty()) configs.push_back(cfg.base.param_config);
  for (const auto& act : activations) {
    if (act.type == ActivationType::PELU) {
      for (ParamConfig pc : configs) {
        cfg.variants.push_back({"pelu(" + std::string(to_string(pc)) + ")", act, pc});
      }
    } else {
      cfg.variants.push_back({std::string(to_string(act.type)), act, cfg.base.param_config});
    }
  }
  return cfg;
}

SweepConfig load_sweep_config(const std::filesystem::path& file) {
  SweepConfig cfg = parse_sweep_config(read_json(file));
  resolve_paths(cfg.base.dataset, file.parent_path());
  return cfg;
}

}  // namespace pelu
