#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "clasr/cli.hpp"
#include "clasr/config.hpp"
#include "clasr/errors.hpp"
#include "clasr/harness.hpp"
#include "clasr/rng.hpp"

using namespace clasr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    const auto tick = std::chrono::steady_clock::now().time_since_epoch().count();
    path = fs::temp_directory_path() /
           ("clasr_harness_" + std::to_string(Rng(static_cast<std::uint64_t>(tick)).next_u64()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Desk-scale-but-fast config used throughout this suite.
ExperimentConfig fast_config() {
  ExperimentConfig c;
  c.global_seed = 5;
  c.num_tasks = 2;
  c.epochs_per_task = 1;
  c.model.feat_dim = 4;
  c.model.hidden_dim = 6;
  c.model.vocab_size = 6;
  c.data.feat_dim = 4;
  c.data.num_symbols = 5;
  c.data.u_min = 2;
  c.data.u_max = 4;
  c.data.train_clean = 8;
  c.data.train_noisy = 4;
  c.data.val_clean = 2;
  c.data.val_noisy = 2;
  c.data.test_clean = 4;
  c.data.test_noisy = 4;
  c.learning_rate = 3e-3;
  c.batch_size = 4;
  return c;
}

std::string config_text_of(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "global_seed = " << c.global_seed << "\n";
  os << "num_tasks = " << c.num_tasks << "\n";
  os << "epochs_per_task = " << c.epochs_per_task << "\n";
  os << "method = \"" << method_name(c.method) << "\"\n";
  os << "feat_dim = " << c.model.feat_dim << "\n";
  os << "hidden_dim = " << c.model.hidden_dim << "\n";
  os << "vocab_size = " << c.model.vocab_size << "\n";
  os << "u_min = " << c.data.u_min << "\n";
  os << "u_max = " << c.data.u_max << "\n";
  os << "train_clean = " << c.data.train_clean << "\n";
  os << "train_noisy = " << c.data.train_noisy << "\n";
  os << "val_clean = " << c.data.val_clean << "\n";
  os << "val_noisy = " << c.data.val_noisy << "\n";
  os << "test_clean = " << c.data.test_clean << "\n";
  os << "test_noisy = " << c.data.test_noisy << "\n";
  os << "learning_rate = " << c.learning_rate << "\n";
  os << "batch_size = " << c.batch_size << "\n";
  return os.str();
}

}  // namespace

TEST_CASE("config parsing accepts the documented keys") {
  const std::string text =
      "# experiment\n"
      "global_seed = 7\n"
      "num_tasks = 3\n"
      "method = \"lwf\"  # distillation\n"
      "alpha_kd = 0.5\n"
      "seeds = [1, 2, 3]\n"
      "difficulty = [1.0, 1.0, 0.5]\n"
      "task_permutation = [2, 1, 3]\n";
  ExperimentConfig c = parse_config_text(text);
  CHECK(c.global_seed == 7);
  CHECK(c.num_tasks == 3);
  CHECK(c.method == CLMethod::lwf);
  CHECK(c.hyper.alpha_kd == 0.5);
  CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(c.task_permutation == std::vector<int>{2, 1, 3});
}

TEST_CASE("config parsing rejects mistakes loudly") {
  CHECK_THROWS_AS(parse_config_text("lr = 0.1\n"), ConfigError);  // unknown key
  CHECK_THROWS_AS(parse_config_text("num_tasks 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("num_tasks = 12\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("method = \"sgd\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("alpha_kd = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("epochs_per_task = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("task_permutation = [1, 1]\nnum_tasks = 2\n"),
                  ConfigError);
  CHECK_THROWS_AS(load_config_file("/nonexistent/config.txt"), ConfigError);

  // Model vocabulary and the symbol inventory must stay in lock step.
  ExperimentConfig inconsistent;
  inconsistent.model.vocab_size = 9;
  CHECK_THROWS_AS(inconsistent.validate(), ConfigError);
}

TEST_CASE("run_experiment populates the full lower triangle") {
  ExperimentConfig c = fast_config();
  c.num_tasks = 3;
  RunRecord record = run_experiment(c);
  CHECK(record.complete);
  CHECK(record.per_task.size() == 3);
  for (int k = 1; k <= 3; ++k) {
    for (int i = 1; i <= k; ++i) CHECK(record.matrix.has(k, i));
    CHECK(record.per_task[static_cast<std::size_t>(k - 1)].epoch_mean_loss.size() == 1);
  }
}

TEST_CASE("identical runs are bitwise identical") {
  const ExperimentConfig c = fast_config();
  RunRecord a = run_experiment(c);
  RunRecord b = run_experiment(c);
  CHECK(a.matrix == b.matrix);
  for (std::size_t k = 0; k < a.per_task.size(); ++k) {
    CHECK(a.per_task[k].epoch_mean_loss == b.per_task[k].epoch_mean_loss);
  }
}

TEST_CASE("no-replay audit sees only the current task") {
  ExperimentConfig c = fast_config();
  c.num_tasks = 3;
  AccessAudit audit;
  RunRecord record = run_experiment(c, &audit);
  CHECK(record.complete);
  CHECK_FALSE(audit.train_accesses.empty());
  CHECK(audit.foreign_accesses({1, 2, 3}) == 0);
}

TEST_CASE("task permutation reorders the curriculum") {
  ExperimentConfig c = fast_config();
  c.task_permutation = {2, 1};
  RunRecord record = run_experiment(c);
  CHECK(record.per_task[0].task_id == 2);
  CHECK(record.per_task[1].task_id == 1);

  AccessAudit audit;
  run_experiment(c, &audit);
  CHECK(audit.foreign_accesses({2, 1}) == 0);
}

TEST_CASE("evaluate_matrix_row demands populated test splits") {
  ExperimentConfig c = fast_config();
  std::vector<TaskDataset> datasets =
      build_task_stream(c.data, c.num_tasks, c.global_seed);
  HybridModel model = init_model(c.model, c.global_seed);

  const auto row = evaluate_matrix_row(model, datasets, 1, c.rnnt_max_symbols);
  CHECK(row.size() == 1);  // k = 1 -> a single cell
  CHECK(row[0].wer_ctc_clean >= 0.0);

  datasets[0].test.clear();
  CHECK_THROWS_AS(evaluate_matrix_row(model, datasets, 1, c.rnnt_max_symbols),
                  ContractViolation);
  CHECK_THROWS_AS(evaluate_matrix_row(model, datasets, 5, c.rnnt_max_symbols),
                  ContractViolation);  // k beyond the curriculum
}

TEST_CASE("run records round-trip through JSON") {
  TempDir tmp;
  ExperimentConfig c = fast_config();
  c.method = CLMethod::ewc;
  RunRecord record = run_experiment(c);
  const fs::path file = tmp.path / "run.json";
  save_run_record(record, file);
  RunRecord loaded = load_run_record(file);
  CHECK(loaded.matrix == record.matrix);  // doubles survive exactly
  CHECK(loaded.seed == record.seed);
  CHECK(loaded.config.method == CLMethod::ewc);
  CHECK(loaded.config.num_tasks == record.config.num_tasks);
  CHECK(loaded.version == record.version);
}

TEST_CASE("plot CSV has the documented schema and row count") {
  TempDir tmp;
  RunRecord record = run_experiment(fast_config());  // K = 2
  const fs::path csv = tmp.path / "plot.csv";
  emit_plot_data({record}, csv);

  std::ifstream is(csv);
  std::string header;
  std::getline(is, header);
  CHECK(header == "method,epochs,seed,k,i_or_null,channel,metric,value");
  int rows = 0;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty()) ++rows;
  }
  // 3 wer cells x 4 channels + 2 avg_wer x 4 + 1 bwt x 4.
  CHECK(rows == 24);
}

TEST_CASE("plot CSV values re-parse to the exact doubles") {
  TempDir tmp;
  RunRecord record = run_experiment(fast_config());
  const fs::path csv = tmp.path / "plot.csv";
  emit_plot_data({record}, csv);

  std::ifstream is(csv);
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto last_comma = line.rfind(',');
    const double value = std::stod(line.substr(last_comma + 1));
    std::istringstream fields(line);
    std::string method, epochs, seed, k, i_or_null, channel, metric;
    std::getline(fields, method, ',');
    std::getline(fields, epochs, ',');
    std::getline(fields, seed, ',');
    std::getline(fields, k, ',');
    std::getline(fields, i_or_null, ',');
    std::getline(fields, channel, ',');
    std::getline(fields, metric, ',');
    Channel ch = Channel::rnnt_clean;
    for (Channel cand : kAllChannels) {
      if (channel_name(cand) == channel) ch = cand;
    }
    if (metric == "wer") {
      CHECK(value == record.matrix.get(std::stoi(k), std::stoi(i_or_null)).get(ch));
    } else if (metric == "avg_wer") {
      CHECK(value == avg_wer(record.matrix, std::stoi(k), ch));
    } else {
      CHECK(value == bwt(record.matrix, std::stoi(k), ch));
    }
  }
}

TEST_CASE("emit_plot_data rejects mixed-K records and handles empty input") {
  TempDir tmp;
  ExperimentConfig c2 = fast_config();
  ExperimentConfig c3 = fast_config();
  c3.num_tasks = 3;
  RunRecord a = run_experiment(c2);
  RunRecord b = run_experiment(c3);
  CHECK_THROWS_AS(emit_plot_data({a, b}, tmp.path / "bad.csv"), InputError);

  emit_plot_data({}, tmp.path / "empty.csv");
  std::ifstream is(tmp.path / "empty.csv");
  std::string header, rest;
  std::getline(is, header);
  CHECK(header == "method,epochs,seed,k,i_or_null,channel,metric,value");
  CHECK_FALSE(std::getline(is, rest));
}

TEST_CASE("cli run, report and gen-data round trip") {
  TempDir tmp;
  ExperimentConfig c = fast_config();
  const fs::path config_file = tmp.path / "exp.conf";
  const fs::path out_dir = tmp.path / "runs";
  {
    std::ofstream os(config_file);
    os << config_text_of(c);
    os << "output_dir = \"" << out_dir.string() << "\"\n";
    os << "seeds = [3, 4]\n";
  }

  const std::string cfg_arg = config_file.string();
  {
    const char* argv[] = {"clasr", "run", "--config", cfg_arg.c_str()};
    CHECK(cli_main(4, argv) == 0);
  }
  CHECK(fs::exists(out_dir / "run_naive_e1_s3.json"));
  CHECK(fs::exists(out_dir / "run_naive_e1_s4.json"));
  CHECK(fs::exists(out_dir / "run_naive_e1_s3.params.bin"));
  CHECK(fs::exists(out_dir / "run_naive_e1_s3.clstate.bin"));

  const fs::path csv = tmp.path / "report.csv";
  const fs::path agg = tmp.path / "agg.csv";
  {
    const std::string in = out_dir.string(), out = csv.string(), ag = agg.string();
    const char* argv[] = {"clasr",        "report",     "--in", in.c_str(),
                          "--out",        out.c_str(),  "--aggregate", ag.c_str()};
    CHECK(cli_main(8, argv) == 0);
  }
  CHECK(fs::exists(csv));
  CHECK(fs::exists(agg));

  const fs::path data_dir = tmp.path / "data";
  {
    const std::string out = data_dir.string();
    const char* argv[] = {"clasr", "gen-data", "--config", cfg_arg.c_str(), "--out",
                          out.c_str()};
    CHECK(cli_main(6, argv) == 0);
  }
  CHECK(fs::exists(data_dir / "task_1.jsonl"));
  CHECK(fs::exists(data_dir / "task_2.jsonl"));
}

TEST_CASE("cli run flags override the config file") {
  TempDir tmp;
  ExperimentConfig c = fast_config();
  const fs::path config_file = tmp.path / "exp.conf";
  const fs::path out_dir = tmp.path / "runs";
  {
    std::ofstream os(config_file);
    os << config_text_of(c);
    os << "output_dir = \"" << out_dir.string() << "\"\n";
    os << "seeds = [3, 4]\n";  // superseded by --seed
  }
  const std::string cfg_arg = config_file.string();
  const char* argv[] = {"clasr",    "run",   "--config", cfg_arg.c_str(), "--seed", "9",
                        "--method", "ewc",   "--epochs", "2"};
  CHECK(cli_main(10, argv) == 0);
  CHECK(fs::exists(out_dir / "run_ewc_e2_s9.json"));

  RunRecord record = load_run_record(out_dir / "run_ewc_e2_s9.json");
  CHECK(record.config.method == CLMethod::ewc);
  CHECK(record.config.epochs_per_task == 2);
  CHECK(record.seed == 9);
}

TEST_CASE("aggregate CSV keeps min <= mean <= max per group") {
  TempDir tmp;
  ExperimentConfig c = fast_config();
  std::vector<RunRecord> records;
  for (std::uint64_t seed : {std::uint64_t{1}, std::uint64_t{2}}) {
    records.push_back(run_experiment_seeded(c, seed));
  }
  const fs::path agg = tmp.path / "agg.csv";
  emit_aggregate_data(records, agg);

  std::ifstream is(agg);
  std::string line;
  std::getline(is, line);
  CHECK(line == "method,epochs,k,i_or_null,channel,metric,mean,min,max,n");
  int rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    ++rows;
    std::istringstream fields(line);
    std::string tok;
    for (int skip = 0; skip < 6; ++skip) std::getline(fields, tok, ',');
    std::string mean_s, min_s, max_s, n_s;
    std::getline(fields, mean_s, ',');
    std::getline(fields, min_s, ',');
    std::getline(fields, max_s, ',');
    std::getline(fields, n_s, ',');
    const double mean = std::stod(mean_s), lo = std::stod(min_s), hi = std::stod(max_s);
    CHECK(lo <= mean);
    CHECK(mean <= hi);
    CHECK(n_s == "2");
  }
  // 3 wer cells + 2 avg_wer + 1 bwt, times 4 channels, seed-collapsed.
  CHECK(rows == 24);
}

TEST_CASE("cli exit codes distinguish config from runtime failures") {
  {
    const char* argv[] = {"clasr", "run", "--config", "/nonexistent/exp.conf"};
    CHECK(cli_main(4, argv) == 1);
  }
  {
    const char* argv[] = {"clasr", "definitely-not-a-command"};
    CHECK(cli_main(2, argv) == 1);
  }
  {
    TempDir tmp;
    const std::string in = (tmp.path / "empty").string();
    fs::create_directories(in);
    const std::string out = (tmp.path / "out.csv").string();
    const char* argv[] = {"clasr", "report", "--in", in.c_str(), "--out", out.c_str()};
    CHECK(cli_main(6, argv) == 2);  // no records -> runtime failure
  }
}

TEST_CASE("a failed checkpoint write leaves the record flagged incomplete") {
  TempDir tmp;
  ExperimentConfig c = fast_config();
  const fs::path config_file = tmp.path / "exp.conf";
  const fs::path out_dir = tmp.path / "runs";
  {
    std::ofstream os(config_file);
    os << config_text_of(c);
    os << "output_dir = \"" << out_dir.string() << "\"\n";
  }
  // Squat on the checkpoint path so the parameter write must fail.
  fs::create_directories(out_dir / "run_naive_e1_s5.params.bin");

  const std::string cfg_arg = config_file.string();
  const char* argv[] = {"clasr", "run", "--config", cfg_arg.c_str()};
  CHECK(cli_main(4, argv) == 2);

  RunRecord record = load_run_record(out_dir / "run_naive_e1_s5.json");
  CHECK_FALSE(record.complete);
}

TEST_CASE("sweep writes the cartesian product") {
  TempDir tmp;
  ExperimentConfig c = fast_config();
  c.num_tasks = 2;
  const fs::path config_file = tmp.path / "exp.conf";
  const fs::path out_dir = tmp.path / "sweep";
  {
    std::ofstream os(config_file);
    os << config_text_of(c);
    os << "output_dir = \"" << out_dir.string() << "\"\n";
  }
  const std::string cfg_arg = config_file.string();
  const char* argv[] = {"clasr",     "sweep",      "--config", cfg_arg.c_str(),
                        "--methods", "naive,ewc",  "--epochs", "1,2",
                        "--seeds",   "1,2",        "--jobs",   "2"};
  CHECK(cli_main(12, argv) == 0);

  int count = 0;
  for (const auto& entry : fs::directory_iterator(out_dir)) {
    if (entry.path().extension() == ".json") ++count;
  }
  CHECK(count == 8);  // 2 methods x 2 epochs x 2 seeds
  CHECK(fs::exists(out_dir / "run_ewc_e2_s1.json"));
}

TEST_CASE("output root environment variable re-roots relative dirs") {
  TempDir tmp;
  ExperimentConfig c = fast_config();
  c.output_dir = "nested/runs";
  setenv("CLASR_OUTPUT_ROOT", tmp.path.c_str(), 1);
  const fs::path resolved = resolve_output_dir(c);
  unsetenv("CLASR_OUTPUT_ROOT");
  CHECK(resolved == tmp.path / "nested/runs");

  c.output_dir = "/absolute/stays";
  setenv("CLASR_OUTPUT_ROOT", tmp.path.c_str(), 1);
  const fs::path absolute = resolve_output_dir(c);
  unsetenv("CLASR_OUTPUT_ROOT");
  CHECK(absolute == fs::path("/absolute/stays"));
}
