// Experiment orchestration: the sequential no-replay training loop,
// matrix evaluation, run persistence and plot-data emission.

#include "clasr/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "clasr/adam.hpp"
#include "clasr/continual.hpp"
#include "clasr/decode.hpp"
#include "clasr/errors.hpp"
#include "clasr/rng.hpp"

namespace clasr {

namespace {

using nlohmann::json;

void write_atomic(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw InputError("cannot open for writing: " + tmp.string());
    os << text;
    if (!os) throw InputError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_below(i));
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

}  // namespace

int AccessAudit::foreign_accesses(const std::vector<int>& expected_task_by_position) const {
  int foreign = 0;
  for (const auto& [key, count] : train_accesses) {
    const auto& [position, task_id] = key;
    const std::size_t idx = static_cast<std::size_t>(position - 1);
    if (idx >= expected_task_by_position.size() ||
        expected_task_by_position[idx] != task_id) {
      foreign += static_cast<int>(count);
    }
  }
  return foreign;
}

std::vector<MatrixCell> evaluate_matrix_row(const HybridModel& model,
                                            const std::vector<TaskDataset>& datasets,
                                            int k, int rnnt_max_symbols, bool clip_wer) {
  CLASR_CHECK(k >= 1 && k <= static_cast<int>(datasets.size()),
              "evaluate_matrix_row: k outside the curriculum");
  std::vector<MatrixCell> row;
  row.reserve(static_cast<std::size_t>(k));
  for (int i = 1; i <= k; ++i) {
    const TaskDataset& ds = datasets[static_cast<std::size_t>(i - 1)];
    CLASR_CHECK(!ds.test.empty(), "evaluate_matrix_row: empty test split");

    std::vector<std::vector<int>> refs_clean, refs_noisy;
    std::vector<std::vector<int>> rnnt_clean, rnnt_noisy, ctc_clean, ctc_noisy;
    for (const Utterance& utt : ds.test) {
      const Tensor enc = encode(model, utt.features);
      Hypothesis hc = ctc_greedy_decode(ctc_log_probs(model, enc), ModelConfig::blank_id);
      Hypothesis hr = rnnt_greedy_decode(model, enc, rnnt_max_symbols);
      if (utt.noisy) {
        refs_noisy.push_back(utt.targets);
        ctc_noisy.push_back(std::move(hc.symbols));
        rnnt_noisy.push_back(std::move(hr.symbols));
      } else {
        refs_clean.push_back(utt.targets);
        ctc_clean.push_back(std::move(hc.symbols));
        rnnt_clean.push_back(std::move(hr.symbols));
      }
    }
    CLASR_CHECK(!refs_clean.empty() && !refs_noisy.empty(),
                "evaluate_matrix_row: need both clean and noisy test halves");
    MatrixCell cell;
    cell.wer_rnnt_clean = wer(refs_clean, rnnt_clean, clip_wer);
    cell.wer_rnnt_noisy = wer(refs_noisy, rnnt_noisy, clip_wer);
    cell.wer_ctc_clean = wer(refs_clean, ctc_clean, clip_wer);
    cell.wer_ctc_noisy = wer(refs_noisy, ctc_noisy, clip_wer);
    row.push_back(cell);
  }
  return row;
}

RunRecord run_experiment_seeded(const ExperimentConfig& config, std::uint64_t seed,
                                AccessAudit* audit, RunArtifacts* artifacts) {
  config.validate();

  std::vector<TaskDataset> datasets =
      build_task_stream(config.data, config.num_tasks, seed);
  // The curriculum is the generation order unless a permutation is given.
  if (!config.task_permutation.empty()) {
    std::vector<TaskDataset> ordered;
    ordered.reserve(datasets.size());
    for (int t : config.task_permutation) {
      ordered.push_back(std::move(datasets[static_cast<std::size_t>(t - 1)]));
    }
    datasets = std::move(ordered);
  }

  HybridModel model = init_model(config.model, seed);
  CLState state;
  state.method = config.method;
  state.hyper = config.hyper;

  BaseLossOptions loss_opts;
  loss_opts.w_ctc = config.w_ctc;

  RunRecord record;
  record.seed = seed;
  record.config = config;
  record.matrix = ResultsMatrix(config.num_tasks);

  auto touch = [&](int position, const Utterance& utt) -> const Utterance& {
    if (audit != nullptr) ++audit->train_accesses[{position, utt.task_id}];
    return utt;
  };

  for (int k = 1; k <= config.num_tasks; ++k) {
    const TaskDataset& task = datasets[static_cast<std::size_t>(k - 1)];
    const auto started = std::chrono::steady_clock::now();

    TaskTrainStats stats;
    stats.task_position = k;
    stats.task_id = task.task_id;

    // Fresh optimizer per task; only the parameters carry over.
    AdamState adam(model.params, AdamConfig{.lr = config.learning_rate});
    const std::size_t n_train = task.train.size();
    std::vector<Utterance> batch;
    for (int epoch = 1; epoch <= config.epochs_per_task; ++epoch) {
      Rng shuffle_rng = Rng::stream(seed, "shuffle",
                                    {static_cast<std::uint64_t>(k),
                                     static_cast<std::uint64_t>(epoch)});
      const std::vector<std::size_t> order = shuffled_indices(n_train, shuffle_rng);
      double loss_sum = 0.0;
      std::size_t num_batches = 0;
      for (std::size_t start = 0; start < n_train;
           start += static_cast<std::size_t>(config.batch_size)) {
        const std::size_t n =
            std::min(n_train - start, static_cast<std::size_t>(config.batch_size));
        batch.clear();
        for (std::size_t b = 0; b < n; ++b) {
          batch.push_back(touch(k, task.train[order[start + b]]));
        }
        TotalLossResult loss = total_loss(config.method, model, batch, state, loss_opts);
        adam.step(model.params, loss.grads);
        loss_sum += loss.value;
        ++num_batches;
      }
      stats.epoch_mean_loss.push_back(loss_sum / static_cast<double>(num_batches));
    }

    // The strategy update reads the current task's data only.
    for (const Utterance& utt : task.train) touch(k, utt);
    end_of_task_update(config.method, model, task.train, state, loss_opts,
                       config.batch_size);

    const std::vector<MatrixCell> row =
        evaluate_matrix_row(model, datasets, k, config.rnnt_max_symbols, config.clip_wer);
    for (int i = 1; i <= k; ++i) {
      record.matrix.set(k, i, row[static_cast<std::size_t>(i - 1)]);
    }

    stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    record.per_task.push_back(std::move(stats));
  }
  record.complete = true;
  if (artifacts != nullptr) {
    artifacts->model = std::move(model);
    artifacts->state = std::move(state);
  }
  return record;
}

RunRecord run_experiment(const ExperimentConfig& config, AccessAudit* audit) {
  return run_experiment_seeded(config, config.global_seed, audit);
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["global_seed"] = c.global_seed;
  j["num_tasks"] = c.num_tasks;
  j["epochs_per_task"] = c.epochs_per_task;
  j["method"] = method_name(c.method);
  j["lambda_ewc"] = c.hyper.lambda_ewc;
  j["gamma"] = c.hyper.gamma;
  j["lambda_mas"] = c.hyper.lambda_mas;
  j["alpha_ctx"] = c.hyper.alpha_ctx;
  j["alpha_kd"] = c.hyper.alpha_kd;
  j["distill_kind"] = c.hyper.distill_kind == DistillKind::kl ? "kl" : "mse";
  j["feat_dim"] = c.model.feat_dim;
  j["hidden_dim"] = c.model.hidden_dim;
  j["vocab_size"] = c.model.vocab_size;
  j["conv_kernel"] = c.model.conv_kernel;
  j["u_min"] = c.data.u_min;
  j["u_max"] = c.data.u_max;
  j["d_min"] = c.data.d_min;
  j["d_max"] = c.data.d_max;
  j["base_sigma"] = c.data.base_sigma;
  j["noise_sigma"] = c.data.noise_sigma;
  j["train_clean"] = c.data.train_clean;
  j["train_noisy"] = c.data.train_noisy;
  j["val_clean"] = c.data.val_clean;
  j["val_noisy"] = c.data.val_noisy;
  j["test_clean"] = c.data.test_clean;
  j["test_noisy"] = c.data.test_noisy;
  j["difficulty"] = c.data.difficulty;
  j["w_ctc"] = c.w_ctc;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["rnnt_max_symbols"] = c.rnnt_max_symbols;
  j["clip_wer"] = c.clip_wer;
  j["output_dir"] = c.output_dir;
  j["task_permutation"] = c.task_permutation;
  j["seeds"] = c.seeds;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  c.global_seed = j.at("global_seed").get<std::uint64_t>();
  c.num_tasks = j.at("num_tasks").get<int>();
  c.epochs_per_task = j.at("epochs_per_task").get<int>();
  c.method = parse_method(j.at("method").get<std::string>());
  c.hyper.lambda_ewc = j.at("lambda_ewc").get<double>();
  c.hyper.gamma = j.at("gamma").get<double>();
  c.hyper.lambda_mas = j.at("lambda_mas").get<double>();
  c.hyper.alpha_ctx = j.at("alpha_ctx").get<double>();
  c.hyper.alpha_kd = j.at("alpha_kd").get<double>();
  c.hyper.distill_kind =
      j.at("distill_kind").get<std::string>() == "mse" ? DistillKind::mse : DistillKind::kl;
  c.model.feat_dim = j.at("feat_dim").get<int>();
  c.model.hidden_dim = j.at("hidden_dim").get<int>();
  c.model.vocab_size = j.at("vocab_size").get<int>();
  c.model.conv_kernel = j.at("conv_kernel").get<int>();
  c.data.feat_dim = c.model.feat_dim;
  c.data.num_symbols = c.model.vocab_size - 1;
  c.data.u_min = j.at("u_min").get<int>();
  c.data.u_max = j.at("u_max").get<int>();
  c.data.d_min = j.at("d_min").get<int>();
  c.data.d_max = j.at("d_max").get<int>();
  c.data.base_sigma = j.at("base_sigma").get<double>();
  c.data.noise_sigma = j.at("noise_sigma").get<double>();
  c.data.train_clean = j.at("train_clean").get<int>();
  c.data.train_noisy = j.at("train_noisy").get<int>();
  c.data.val_clean = j.at("val_clean").get<int>();
  c.data.val_noisy = j.at("val_noisy").get<int>();
  c.data.test_clean = j.at("test_clean").get<int>();
  c.data.test_noisy = j.at("test_noisy").get<int>();
  c.data.difficulty = j.at("difficulty").get<std::vector<double>>();
  c.w_ctc = j.at("w_ctc").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.rnnt_max_symbols = j.at("rnnt_max_symbols").get<int>();
  c.clip_wer = j.at("clip_wer").get<bool>();
  c.output_dir = j.at("output_dir").get<std::string>();
  c.task_permutation = j.at("task_permutation").get<std::vector<int>>();
  c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  return c;
}

}  // namespace

void save_run_record(const RunRecord& record, const std::filesystem::path& path) {
  json j;
  j["version"] = record.version;
  j["complete"] = record.complete;
  j["seed"] = record.seed;
  j["config"] = config_to_json(record.config);
  j["per_task"] = json::array();
  for (const auto& s : record.per_task) {
    json t;
    t["position"] = s.task_position;
    t["task_id"] = s.task_id;
    t["epoch_mean_loss"] = s.epoch_mean_loss;
    t["wall_seconds"] = s.wall_seconds;
    j["per_task"].push_back(std::move(t));
  }
  const int K = record.matrix.num_tasks();
  j["matrix"] = json::array();
  for (int k = 1; k <= K; ++k) {
    for (int i = 1; i <= k; ++i) {
      if (!record.matrix.has(k, i)) continue;
      const MatrixCell& cell = record.matrix.get(k, i);
      json m;
      m["k"] = k;
      m["i"] = i;
      m["rnnt_clean"] = cell.wer_rnnt_clean;
      m["rnnt_noisy"] = cell.wer_rnnt_noisy;
      m["ctc_clean"] = cell.wer_ctc_clean;
      m["ctc_noisy"] = cell.wer_ctc_noisy;
      j["matrix"].push_back(std::move(m));
    }
  }
  // Derived series, for toolless inspection of a single run file.
  j["avg_wer"] = json::array();
  j["bwt"] = json::array();
  if (record.complete) {
    for (int k = 1; k <= K; ++k) {
      json a;
      a["k"] = k;
      for (Channel c : kAllChannels) a[channel_name(c)] = avg_wer(record.matrix, k, c);
      j["avg_wer"].push_back(std::move(a));
      if (k >= 2) {
        json b;
        b["k"] = k;
        for (Channel c : kAllChannels) b[channel_name(c)] = bwt(record.matrix, k, c);
        j["bwt"].push_back(std::move(b));
      }
    }
  }
  write_atomic(path, j.dump(2) + "\n");
}

RunRecord load_run_record(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open run record: " + path.string());
  json j = json::parse(is, nullptr, false);
  if (j.is_discarded()) throw InputError("malformed run record: " + path.string());

  RunRecord record;
  record.version = j.at("version").get<std::string>();
  record.complete = j.at("complete").get<bool>();
  record.seed = j.at("seed").get<std::uint64_t>();
  record.config = config_from_json(j.at("config"));
  for (const json& t : j.at("per_task")) {
    TaskTrainStats s;
    s.task_position = t.at("position").get<int>();
    s.task_id = t.at("task_id").get<int>();
    s.epoch_mean_loss = t.at("epoch_mean_loss").get<std::vector<double>>();
    s.wall_seconds = t.at("wall_seconds").get<double>();
    record.per_task.push_back(std::move(s));
  }
  record.matrix = ResultsMatrix(record.config.num_tasks);
  for (const json& m : j.at("matrix")) {
    MatrixCell cell;
    cell.wer_rnnt_clean = m.at("rnnt_clean").get<double>();
    cell.wer_rnnt_noisy = m.at("rnnt_noisy").get<double>();
    cell.wer_ctc_clean = m.at("ctc_clean").get<double>();
    cell.wer_ctc_noisy = m.at("ctc_noisy").get<double>();
    record.matrix.set(m.at("k").get<int>(), m.at("i").get<int>(), cell);
  }
  return record;
}

// ---------------------------------------------------------------------------
// Plot data

namespace {

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void check_shared_k(const std::vector<RunRecord>& records) {
  for (const RunRecord& r : records) {
    if (r.config.num_tasks != records.front().config.num_tasks) {
      throw InputError("emit_plot_data: records disagree on the number of tasks");
    }
  }
}

}  // namespace

void emit_plot_data(const std::vector<RunRecord>& records,
                    const std::filesystem::path& path) {
  check_shared_k(records);
  std::ostringstream os;
  os << "method,epochs,seed,k,i_or_null,channel,metric,value\n";
  for (const RunRecord& r : records) {
    const std::string method = method_name(r.config.method);
    const int epochs = r.config.epochs_per_task;
    const int K = r.matrix.num_tasks();
    for (int k = 1; k <= K; ++k) {
      for (int i = 1; i <= k; ++i) {
        for (Channel c : kAllChannels) {
          os << method << ',' << epochs << ',' << r.seed << ',' << k << ',' << i << ','
             << channel_name(c) << ",wer," << format_value(r.matrix.get(k, i).get(c))
             << '\n';
        }
      }
    }
    for (int k = 1; k <= K; ++k) {
      for (Channel c : kAllChannels) {
        os << method << ',' << epochs << ',' << r.seed << ',' << k << ",,"
           << channel_name(c) << ",avg_wer," << format_value(avg_wer(r.matrix, k, c))
           << '\n';
      }
    }
    for (int k = 2; k <= K; ++k) {
      for (Channel c : kAllChannels) {
        os << method << ',' << epochs << ',' << r.seed << ',' << k << ",,"
           << channel_name(c) << ",bwt," << format_value(bwt(r.matrix, k, c)) << '\n';
      }
    }
  }
  write_atomic(path, os.str());
}

void emit_aggregate_data(const std::vector<RunRecord>& records,
                         const std::filesystem::path& path) {
  check_shared_k(records);
  // (method, epochs, k, i_or_null, channel, metric) -> values across seeds.
  std::map<std::tuple<std::string, int, int, int, std::string, std::string>,
           std::vector<double>>
      groups;
  for (const RunRecord& r : records) {
    const std::string method = method_name(r.config.method);
    const int epochs = r.config.epochs_per_task;
    const int K = r.matrix.num_tasks();
    for (int k = 1; k <= K; ++k) {
      for (int i = 1; i <= k; ++i) {
        for (Channel c : kAllChannels) {
          groups[{method, epochs, k, i, channel_name(c), "wer"}].push_back(
              r.matrix.get(k, i).get(c));
        }
      }
      for (Channel c : kAllChannels) {
        groups[{method, epochs, k, -1, channel_name(c), "avg_wer"}].push_back(
            avg_wer(r.matrix, k, c));
        if (k >= 2) {
          groups[{method, epochs, k, -1, channel_name(c), "bwt"}].push_back(
              bwt(r.matrix, k, c));
        }
      }
    }
  }
  std::ostringstream os;
  os << "method,epochs,k,i_or_null,channel,metric,mean,min,max,n\n";
  for (const auto& [key, values] : groups) {
    const auto& [method, epochs, k, i, channel, metric] = key;
    double sum = 0.0, lo = values.front(), hi = values.front();
    for (double v : values) {
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    os << method << ',' << epochs << ',' << k << ',';
    if (i >= 0) os << i;
    os << ',' << channel << ',' << metric << ',' << format_value(sum / values.size())
       << ',' << format_value(lo) << ',' << format_value(hi) << ',' << values.size()
       << '\n';
  }
  write_atomic(path, os.str());
}

}  // namespace clasr
