#include "clasr/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "clasr/errors.hpp"

namespace clasr {

void ExperimentConfig::validate() const {
  if (num_tasks < 1 || num_tasks > 9) throw ConfigError("num_tasks must be in [1, 9]");
  if (epochs_per_task < 1) throw ConfigError("epochs_per_task must be >= 1");
  if (w_ctc < 0.0 || w_ctc > 1.0) throw ConfigError("w_ctc must be in [0, 1]");
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (rnnt_max_symbols < 1) throw ConfigError("rnnt_max_symbols must be >= 1");
  hyper.validate();
  model.validate();
  data.validate();
  if (model.vocab_size != data.num_symbols + 1) {
    throw ConfigError("vocab_size must equal num_symbols + 1 (blank)");
  }
  if (!task_permutation.empty()) {
    if (static_cast<int>(task_permutation.size()) != num_tasks) {
      throw ConfigError("task_permutation must list every task exactly once");
    }
    std::vector<bool> seen(static_cast<std::size_t>(num_tasks), false);
    for (int t : task_permutation) {
      if (t < 1 || t > num_tasks || seen[static_cast<std::size_t>(t - 1)]) {
        throw ConfigError("task_permutation must be a permutation of 1..num_tasks");
      }
      seen[static_cast<std::size_t>(t - 1)] = true;
    }
  }
}

namespace {

using nlohmann::json;

double as_double(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config key '" + key + "' must be a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& key) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    throw ConfigError("config key '" + key + "' must be an integer");
  }
  return v.get<int>();
}

std::string as_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("config key '" + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string raw = trim(line.substr(eq + 1));
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": value for '" + key +
                        "' is not a JSON scalar");
    }

    if (key == "global_seed") {
      if (!value.is_number_integer() && !value.is_number_unsigned()) {
        throw ConfigError("global_seed must be an integer");
      }
      cfg.global_seed = value.get<std::uint64_t>();
    } else if (key == "num_tasks") {
      cfg.num_tasks = as_int(value, key);
    } else if (key == "epochs_per_task") {
      cfg.epochs_per_task = as_int(value, key);
    } else if (key == "method") {
      cfg.method = parse_method(as_string(value, key));
    } else if (key == "lambda_ewc") {
      cfg.hyper.lambda_ewc = as_double(value, key);
    } else if (key == "gamma") {
      cfg.hyper.gamma = as_double(value, key);
    } else if (key == "lambda_mas") {
      cfg.hyper.lambda_mas = as_double(value, key);
    } else if (key == "alpha_ctx") {
      cfg.hyper.alpha_ctx = as_double(value, key);
    } else if (key == "alpha_kd") {
      cfg.hyper.alpha_kd = as_double(value, key);
    } else if (key == "distill_kind") {
      const std::string kind = as_string(value, key);
      if (kind == "kl") {
        cfg.hyper.distill_kind = DistillKind::kl;
      } else if (kind == "mse") {
        cfg.hyper.distill_kind = DistillKind::mse;
      } else {
        throw ConfigError("distill_kind must be 'kl' or 'mse'");
      }
    } else if (key == "feat_dim") {
      cfg.model.feat_dim = as_int(value, key);
      cfg.data.feat_dim = cfg.model.feat_dim;
    } else if (key == "hidden_dim") {
      cfg.model.hidden_dim = as_int(value, key);
    } else if (key == "vocab_size") {
      cfg.model.vocab_size = as_int(value, key);
      cfg.data.num_symbols = cfg.model.vocab_size - 1;
    } else if (key == "conv_kernel") {
      cfg.model.conv_kernel = as_int(value, key);
    } else if (key == "u_min") {
      cfg.data.u_min = as_int(value, key);
    } else if (key == "u_max") {
      cfg.data.u_max = as_int(value, key);
    } else if (key == "d_min") {
      cfg.data.d_min = as_int(value, key);
    } else if (key == "d_max") {
      cfg.data.d_max = as_int(value, key);
    } else if (key == "base_sigma") {
      cfg.data.base_sigma = as_double(value, key);
    } else if (key == "noise_sigma") {
      cfg.data.noise_sigma = as_double(value, key);
    } else if (key == "train_clean") {
      cfg.data.train_clean = as_int(value, key);
    } else if (key == "train_noisy") {
      cfg.data.train_noisy = as_int(value, key);
    } else if (key == "val_clean") {
      cfg.data.val_clean = as_int(value, key);
    } else if (key == "val_noisy") {
      cfg.data.val_noisy = as_int(value, key);
    } else if (key == "test_clean") {
      cfg.data.test_clean = as_int(value, key);
    } else if (key == "test_noisy") {
      cfg.data.test_noisy = as_int(value, key);
    } else if (key == "difficulty") {
      if (!value.is_array()) throw ConfigError("difficulty must be a JSON array");
      cfg.data.difficulty = value.get<std::vector<double>>();
    } else if (key == "w_ctc") {
      cfg.w_ctc = as_double(value, key);
    } else if (key == "learning_rate") {
      cfg.learning_rate = as_double(value, key);
    } else if (key == "batch_size") {
      cfg.batch_size = as_int(value, key);
    } else if (key == "rnnt_max_symbols") {
      cfg.rnnt_max_symbols = as_int(value, key);
    } else if (key == "clip_wer") {
      if (!value.is_boolean()) throw ConfigError("clip_wer must be true or false");
      cfg.clip_wer = value.get<bool>();
    } else if (key == "output_dir") {
      cfg.output_dir = as_string(value, key);
    } else if (key == "task_permutation") {
      if (!value.is_array()) throw ConfigError("task_permutation must be a JSON array");
      cfg.task_permutation = value.get<std::vector<int>>();
    } else if (key == "seeds") {
      if (!value.is_array()) throw ConfigError("seeds must be a JSON array");
      cfg.seeds = value.get<std::vector<std::uint64_t>>();
    } else {
      // Silently ignoring a typo would silently change the science.
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str());
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& config) {
  std::filesystem::path dir = config.output_dir;
  if (const char* root = std::getenv("CLASR_OUTPUT_ROOT"); root != nullptr && dir.is_relative()) {
    dir = std::filesystem::path(root) / dir;
  }
  return dir;
}

}  // namespace clasr
