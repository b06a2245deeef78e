// CLI front end: run / sweep / report / gen-data.

#include "clasr/cli.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "clasr/checkpoint.hpp"
#include "clasr/config.hpp"
#include "clasr/errors.hpp"
#include "clasr/harness.hpp"

namespace clasr {

namespace {

namespace fs = std::filesystem;

std::string run_stem(const ExperimentConfig& config, std::uint64_t seed) {
  std::ostringstream os;
  os << "run_" << method_name(config.method) << "_e" << config.epochs_per_task
     << "_s" << seed;
  return os.str();
}

std::vector<std::uint64_t> run_seeds(const ExperimentConfig& config) {
  if (!config.seeds.empty()) return config.seeds;
  return {config.global_seed};
}

void persist_run(const ExperimentConfig& config, std::uint64_t seed,
                 const fs::path& out_dir) {
  RunArtifacts artifacts;
  RunRecord record = run_experiment_seeded(config, seed, nullptr, &artifacts);
  const fs::path record_path = out_dir / (run_stem(config, seed) + ".json");
  try {
    save_run_record(record, record_path);
    save_params(artifacts.model.params, out_dir / (run_stem(config, seed) + ".params.bin"));
    save_cl_state(artifacts.state, out_dir / (run_stem(config, seed) + ".clstate.bin"));
  } catch (...) {
    // Flag what we can before aborting the run.
    record.complete = false;
    try {
      save_run_record(record, record_path);
    } catch (...) {
    }
    throw;
  }
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            std::optional<std::string> method, std::optional<int> epochs) {
  ExperimentConfig config = load_config_file(config_path);
  if (method) config.method = parse_method(*method);
  if (epochs) config.epochs_per_task = *epochs;
  if (seed) {
    config.global_seed = *seed;
    config.seeds.clear();
  }
  config.validate();

  const fs::path out_dir = resolve_output_dir(config);
  fs::create_directories(out_dir);
  for (std::uint64_t s : run_seeds(config)) {
    persist_run(config, s, out_dir);
    std::cout << "wrote " << (out_dir / (run_stem(config, s) + ".json")).string() << "\n";
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::vector<std::string>& methods,
              const std::vector<int>& epochs, const std::vector<std::uint64_t>& seeds,
              int jobs) {
  ExperimentConfig base = load_config_file(config_path);
  if (methods.empty() || epochs.empty() || seeds.empty()) {
    throw ConfigError("sweep needs --methods, --epochs and --seeds");
  }
  if (jobs < 1) throw ConfigError("--jobs must be >= 1");

  struct Combo {
    ExperimentConfig config;
    std::uint64_t seed;
  };
  std::vector<Combo> combos;
  for (const std::string& m : methods) {
    for (int e : epochs) {
      for (std::uint64_t s : seeds) {
        ExperimentConfig c = base;
        c.method = parse_method(m);
        c.epochs_per_task = e;
        c.global_seed = s;
        c.seeds.clear();
        c.validate();
        combos.push_back({std::move(c), s});
      }
    }
  }

  const fs::path out_dir = resolve_output_dir(base);
  fs::create_directories(out_dir);

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= combos.size()) return;
      persist_run(combos[i].config, combos[i].seed, out_dir);
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::future<void>> futures;
    for (int j = 0; j < jobs; ++j) futures.push_back(std::async(std::launch::async, worker));
    for (auto& f : futures) f.get();  // rethrows the first failure
  }
  std::cout << "wrote " << combos.size() << " runs to " << out_dir.string() << "\n";
  return 0;
}

int cmd_report(const std::string& in_dir, const std::string& out_csv,
               const std::string& aggregate_csv) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(in_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError("report: no run records in " + in_dir);

  std::vector<RunRecord> records;
  records.reserve(files.size());
  for (const fs::path& f : files) records.push_back(load_run_record(f));
  emit_plot_data(records, out_csv);
  std::cout << "wrote " << out_csv << " (" << records.size() << " runs)\n";
  if (!aggregate_csv.empty()) {
    emit_aggregate_data(records, aggregate_csv);
    std::cout << "wrote " << aggregate_csv << "\n";
  }
  return 0;
}

int cmd_gen_data(const std::string& config_path, const std::string& out_dir) {
  ExperimentConfig config = load_config_file(config_path);
  fs::create_directories(out_dir);
  const std::vector<TaskDataset> tasks =
      build_task_stream(config.data, config.num_tasks, config.global_seed);
  for (const TaskDataset& task : tasks) {
    const fs::path path = fs::path(out_dir) / ("task_" + std::to_string(task.task_id) + ".jsonl");
    save_task_dataset(task, path);
    std::cout << "wrote " << path.string() << "\n";
  }
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Continual-learning testbed for hybrid CTC/transducer models"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run one experiment per configured seed");
  std::string run_config;
  run->add_option("--config", run_config, "Experiment config file")->required();
  std::optional<std::uint64_t> run_seed;
  run->add_option("--seed", run_seed, "Override seed (single run)");
  std::optional<std::string> run_method;
  run->add_option("--method", run_method, "Override method: naive|ewc|mas|lwf");
  std::optional<int> run_epochs;
  run->add_option("--epochs", run_epochs, "Override epochs per task");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Cartesian sweep over methods x epochs x seeds");
  std::string sweep_config;
  sweep->add_option("--config", sweep_config, "Experiment config file")->required();
  std::vector<std::string> sweep_methods;
  sweep->add_option("--methods", sweep_methods, "Comma-separated methods")
      ->required()
      ->delimiter(',');
  std::vector<int> sweep_epochs;
  sweep->add_option("--epochs", sweep_epochs, "Comma-separated epoch budgets")
      ->required()
      ->delimiter(',');
  std::vector<std::uint64_t> sweep_seeds;
  sweep->add_option("--seeds", sweep_seeds, "Comma-separated seeds")
      ->required()
      ->delimiter(',');
  int sweep_jobs = 1;
  sweep->add_option("--jobs", sweep_jobs, "Concurrent runs");

  // report
  auto* report = app.add_subcommand("report", "Collect run records into a plot CSV");
  std::string report_in, report_out, report_aggregate;
  report->add_option("--in", report_in, "Directory of run records")->required();
  report->add_option("--out", report_out, "Output CSV path")->required();
  report->add_option("--aggregate", report_aggregate, "Optional mean/min/max CSV");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Dump the synthetic task datasets");
  std::string gen_config, gen_out;
  gen->add_option("--config", gen_config, "Experiment config file")->required();
  gen->add_option("--out", gen_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
    if (run->parsed()) return cmd_run(run_config, run_seed, run_method, run_epochs);
    if (sweep->parsed()) {
      return cmd_sweep(sweep_config, sweep_methods, sweep_epochs, sweep_seeds, sweep_jobs);
    }
    if (report->parsed()) return cmd_report(report_in, report_out, report_aggregate);
    if (gen->parsed()) return cmd_gen_data(gen_config, gen_out);
    throw ConfigError("no subcommand given");
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace clasr
