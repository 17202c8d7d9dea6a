#include <cmath>
#include <fstream>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "csv.hpp"
#include "pelu/run.hpp"

namespace pelu {

namespace {

// Independent streams derived from the run seed.
enum Stream : std::uint64_t { kInit = 1, kShuffle = 2, kNoise = 3, kTrainData = 10, kTestData = 11 };

}  // namespace

Datasets load_datasets(const RunConfig& cfg) {
  const Rng root(cfg.seed);
  const auto& d = cfg.dataset;
  if (d.type == DatasetType::Blobs) {
    return {gen_blobs(root.fork(kTrainData).seed(), d.n_per_class, d.num_classes, d.dim, d.spread),
            gen_blobs(root.fork(kTestData).seed(), d.test_n_per_class, d.num_classes, d.dim, d.spread)};
  }
  Datasets out{load_idx(d.train_images, d.train_labels), std::nullopt};
  if (!d.test_images.empty()) out.test = load_idx(d.test_images, d.test_labels);
  if (d.mean_subtraction) {
    // Train-split statistics only.
    const Tensord mean = pixel_mean(out.train);
    subtract_mean(out.train, mean);
    if (out.test) subtract_mean(*out.test, mean);
  }
  if (out.test) {
    if (out.test->sample_shape() != out.train.sample_shape()) {
      throw ConfigError("config.dataset: train and test images differ in shape");
    }
    out.test->num_classes = out.train.num_classes = std::max(out.train.num_classes, out.test->num_classes);
  }
  return out;
}

Network build_network(const RunConfig& cfg, const Dataset& train, Rng& rng) {
  const auto& arch = cfg.architecture;
  if (arch.type == ArchitectureType::Mlp) {
    if (train.inputs.rank() != 2 || arch.widths.front() != train.sample_size()) {
      throw ConfigError("config.architecture.widths: first width " + std::to_string(arch.widths.front()) +
                        " does not match the " + std::to_string(train.sample_size()) + " input features");
    }
    if (arch.widths.back() != train.num_classes) {
      throw ConfigError("config.architecture.widths: last width " + std::to_string(arch.widths.back()) +
                        " does not match the " + std::to_string(train.num_classes) + " classes");
    }
    return make_mlp(arch.widths, cfg.activation, cfg.param_config, rng, arch.batchnorm);
  }
  if (train.inputs.rank() != 4) {
    throw ConfigError("config.architecture: smallnet-lite needs an image dataset");
  }
  SmallNetSpec spec = arch.smallnet;
  spec.channels = train.inputs.dim(1);
  spec.height = train.inputs.dim(2);
  spec.width = train.inputs.dim(3);
  spec.classes = train.num_classes;
  if ((spec.height >> spec.filters.size()) == 0 || (spec.width >> spec.filters.size()) == 0) {
    throw ConfigError("config.architecture.filters: too many pooling stages for " + std::to_string(spec.height) +
                      "x" + std::to_string(spec.width) + " inputs");
  }
  return make_smallnet_lite(spec, cfg.activation, cfg.param_config, rng);
}

std::pair<double, double> evaluate(Network& net, const Dataset& ds, std::size_t chunk) {
  std::size_t wrong = 0;
  double loss = 0.0;
  std::vector<std::size_t> indices;
  for (std::size_t start = 0; start < ds.size(); start += chunk) {
    indices.clear();
    for (std::size_t i = start; i < std::min(ds.size(), start + chunk); ++i) indices.push_back(i);
    const Batch batch = gather(ds, indices);
    const Tensord logits = net.forward(batch.inputs, Mode::Eval);
    loss += softmax_xent(logits, batch.labels).loss * double(indices.size());
    const auto predicted = predict(logits);
    for (std::size_t i = 0; i < predicted.size(); ++i) wrong += predicted[i] != batch.labels[i];
  }
  return {100.0 * double(wrong) / double(ds.size()), loss / double(ds.size())};
}

RunResult train(const RunConfig& cfg, std::ostream* log) {
  const Datasets data = load_datasets(cfg);
  data.train.validate();
  const Rng root(cfg.seed);
  Rng init_rng = root.fork(kInit);
  Rng shuffle_rng = root.fork(kShuffle);

  RunResult result;
  result.net = build_network(cfg, data.train, init_rng);
  result.net.reseed_noise(root.fork(kNoise).seed());
  Network& net = result.net;

  std::size_t iteration = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto [lr, wd] = cfg.regime(epoch);
    SgdConfig sgd = cfg.optimizer;
    sgd.learning_rate = lr;
    sgd.weight_decay = wd;

    double loss_sum = 0.0;
    std::size_t seen = 0;
    auto stream = batches(data.train, cfg.batch_size, shuffle_rng, cfg.dataset.augment);
    while (auto batch = stream.next()) {
      double loss = 0.0;
      try {
        const Tensord logits = net.forward(batch->inputs, Mode::Train);
        auto xent = softmax_xent(logits, batch->labels);
        loss = xent.loss;
        if (!result.first_loss) result.first_loss = loss;
        sgd_step(net.backward(xent.grad), sgd);
      } catch (const NumericalError& e) {
        throw NumericalError(fmt::format("non-finite value at epoch {} iteration {} (lr {}, wd {}): {}", epoch,
                                         iteration + 1, lr, wd, e.what()));
      }
      ++iteration;
      loss_sum += loss * double(batch->labels.size());
      seen += batch->labels.size();
      if (cfg.log_every > 0 && iteration % cfg.log_every == 0) {
        const auto layers = net.pelu_layers();
        for (std::size_t l = 0; l < layers.size(); ++l) {
          const auto [a, b] = effective_params(layers[l]->pelu_params());
          result.progression.push_back({iteration, l, a, b, a / b, a, loss});
        }
      }
    }

    EpochMetrics m{epoch, loss_sum / double(seen), 0.0, std::nan(""), lr, wd};
    m.train_err_pct = evaluate(net, data.train).first;
    if (data.test) m.test_err_pct = evaluate(net, *data.test).first;
    if (log) {
      fmt::print(*log, "epoch {:4d}  loss {:.6f}  train err {:6.2f}%  test err {:6.2f}%\n", m.epoch, m.train_loss,
                 m.train_err_pct, m.test_err_pct);
    }
    result.epochs.push_back(m);
  }

  if (result.epochs.empty()) {
    const auto [err, loss] = evaluate(net, data.train);
    result.final_train_err_pct = err;
    result.final_train_loss = loss;
    result.final_test_err_pct = data.test ? evaluate(net, *data.test).first : std::nan("");
  } else {
    result.final_train_err_pct = result.epochs.back().train_err_pct;
    result.final_train_loss = result.epochs.back().train_loss;
    result.final_test_err_pct = result.epochs.back().test_err_pct;
  }
  return result;
}

void write_metrics_csv(const std::filesystem::path& file, const std::vector<EpochMetrics>& rows) {
  csv::Writer w(file, {"epoch", "train_loss", "train_err_pct", "test_err_pct", "lr", "wd"});
  for (const auto& r : rows) w.row(r.epoch, r.train_loss, r.train_err_pct, r.test_err_pct, r.lr, r.wd);
}

void write_progression_csv(const std::filesystem::path& file, const std::vector<ProgressionRecord>& rows) {
  csv::Writer w(file, {"iteration", "layer_index", "a_eff", "b_eff", "slope", "neg_saturation", "train_loss"});
  for (const auto& r : rows) w.row(r.iteration, r.layer_index, r.a_eff, r.b_eff, r.slope, r.neg_saturation, r.train_loss);
}

void write_model(const std::filesystem::path& file, const RunConfig& cfg, Network& net) {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& p : net.parameters()) params[p.name] = std::vector<double>(p.value.begin(), p.value.end());
  const nlohmann::json model{{"config", to_json(cfg)}, {"layers", net.describe()}, {"parameters", params}};
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << model.dump(2) << '\n';
}

int cmd_train(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err,
              const std::optional<std::filesystem::path>& output_dir) {
  try {
    RunConfig cfg = load_run_config(config_path);
    if (output_dir) cfg.output_dir = *output_dir;
    std::filesystem::create_directories(cfg.output_dir);
    RunResult result = train(cfg, &out);
    write_metrics_csv(cfg.output_dir / "metrics.csv", result.epochs);
    write_progression_csv(cfg.output_dir / "progression.csv", result.progression);
    write_model(cfg.output_dir / "model.json", cfg, result.net);
    fmt::print(out, "final train err {:.2f}%  test err {:.2f}%  -> {}\n", result.final_train_err_pct,
               result.final_test_err_pct, cfg.output_dir.string());
    return kExitOk;
  } catch (const NumericalError& e) {
    fmt::print(err, "numerical failure: {}\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitUsage;
  }
}

}  // namespace pelu
