#include "clasr/synth.hpp"

#include <cmath>
#include <string>

#include "clasr/errors.hpp"

namespace clasr {

void SynthConfig::validate() const {
  if (feat_dim < 1 || num_symbols < 1) throw ConfigError("synth: need feat_dim, num_symbols >= 1");
  if (u_min < 1 || u_max < u_min) throw ConfigError("synth: bad utterance length range");
  if (d_min < 1 || d_max < d_min) throw ConfigError("synth: bad frames-per-symbol range");
  if (base_sigma < 0.0 || noise_sigma < 0.0) throw ConfigError("synth: sigmas must be >= 0");
  if (train_clean < 1 || train_noisy < 0 || val_clean < 0 || val_noisy < 0 ||
      test_clean < 1 || test_noisy < 1) {
    throw ConfigError("synth: split sizes must be positive where evaluated");
  }
  for (double d : difficulty) {
    if (d <= 0.0) throw ConfigError("synth: difficulty multipliers must be > 0");
  }
}

namespace {

std::vector<double> stationary_distribution(const Tensor& transition) {
  const std::size_t n = transition.dim(0);
  std::vector<double> pi(n, 1.0 / static_cast<double>(n)), next(n);
  // Positive rows make the chain ergodic; power iteration converges fast.
  for (int iter = 0; iter < 200; ++iter) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += pi[i] * transition.at(i, j);
      next[j] = acc;
    }
    double delta = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      delta = std::max(delta, std::fabs(next[j] - pi[j]));
      pi[j] = next[j];
    }
    if (delta < 1e-15) break;
  }
  return pi;
}

std::size_t draw_categorical(std::span<const double> probs, Rng& rng) {
  const double u = rng.uniform01();
  double cum = 0.0;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return i;
  }
  return probs.size() - 1;
}

}  // namespace

LanguageSpec make_language(int task_id, std::uint64_t global_seed,
                           const SynthConfig& config) {
  CLASR_CHECK(task_id >= 1, "task ids start at 1");
  config.validate();
  const std::size_t S = static_cast<std::size_t>(config.num_symbols);
  const std::size_t F = static_cast<std::size_t>(config.feat_dim);

  LanguageSpec spec;
  spec.task_id = task_id;
  spec.config = config;
  spec.sigma_scale = 1.0;
  const std::size_t di = static_cast<std::size_t>(task_id - 1);
  if (di < config.difficulty.size()) spec.sigma_scale = config.difficulty[di];

  Rng rng = Rng::stream(global_seed, "lang", {static_cast<std::uint64_t>(task_id)});
  spec.prototypes = Tensor({S, F});
  for (double& v : spec.prototypes.data()) v = rng.normal();

  spec.transition = Tensor({S, S});
  for (std::size_t i = 0; i < S; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < S; ++j) {
      const double w = 0.05 + rng.uniform01();  // bounded away from zero
      spec.transition.at(i, j) = w;
      row_sum += w;
    }
    for (std::size_t j = 0; j < S; ++j) spec.transition.at(i, j) /= row_sum;
  }
  spec.stationary = stationary_distribution(spec.transition);
  return spec;
}

Utterance sample_utterance(const LanguageSpec& spec, bool noisy, Rng& rng) {
  const auto& cfg = spec.config;
  const std::size_t F = static_cast<std::size_t>(cfg.feat_dim);
  const double jitter = cfg.base_sigma * spec.sigma_scale;
  const double extra = noisy ? cfg.noise_sigma * spec.sigma_scale : 0.0;

  const int U = rng.uniform_int(cfg.u_min, cfg.u_max);
  const std::size_t S = spec.transition.dim(1);
  std::vector<std::size_t> symbols(static_cast<std::size_t>(U));
  symbols[0] = draw_categorical(spec.stationary, rng);
  for (std::size_t u = 1; u < symbols.size(); ++u) {
    auto row = spec.transition.data().subspan(symbols[u - 1] * S, S);
    symbols[u] = draw_categorical(row, rng);
  }

  std::vector<int> durations(symbols.size());
  std::size_t total = 0;
  for (std::size_t u = 0; u < symbols.size(); ++u) {
    int d = rng.uniform_int(cfg.d_min, cfg.d_max);
    // One inserted frame keeps CTC feasible across adjacent repeats.
    if (u > 0 && symbols[u] == symbols[u - 1]) ++d;
    durations[u] = d;
    total += static_cast<std::size_t>(d);
  }

  Utterance utt;
  utt.noisy = noisy;
  utt.task_id = spec.task_id;
  utt.features = Tensor({total, F});
  utt.targets.reserve(symbols.size());
  std::size_t t = 0;
  for (std::size_t u = 0; u < symbols.size(); ++u) {
    utt.targets.push_back(static_cast<int>(symbols[u]) + 1);  // 0 stays blank
    for (int d = 0; d < durations[u]; ++d, ++t) {
      for (std::size_t f = 0; f < F; ++f) {
        // Both deviates are always drawn so clean and noisy sampling
        // consume the stream identically.
        const double e1 = rng.normal();
        const double e2 = rng.normal();
        utt.features.at(t, f) = spec.prototypes.at(symbols[u], f) + jitter * e1 + extra * e2;
      }
    }
  }
  return utt;
}

std::vector<TaskDataset> build_task_stream(const SynthConfig& config, int num_tasks,
                                           std::uint64_t global_seed) {
  CLASR_CHECK(num_tasks >= 1, "need at least one task");
  config.validate();

  std::vector<TaskDataset> tasks;
  tasks.reserve(static_cast<std::size_t>(num_tasks));
  for (int task_id = 1; task_id <= num_tasks; ++task_id) {
    LanguageSpec spec = make_language(task_id, global_seed, config);
    TaskDataset ds;
    ds.task_id = task_id;

    struct SplitPlan {
      const char* name;
      int clean, noisy;
      std::vector<Utterance>* out;
    };
    const SplitPlan plans[] = {
        {"train", config.train_clean, config.train_noisy, &ds.train},
        {"val", config.val_clean, config.val_noisy, &ds.val},
        {"test", config.test_clean, config.test_noisy, &ds.test},
    };
    std::uint64_t split_idx = 0;
    for (const auto& plan : plans) {
      Rng rng = Rng::stream(global_seed, "data",
                            {static_cast<std::uint64_t>(task_id), split_idx++});
      for (int i = 0; i < plan.clean; ++i) plan.out->push_back(sample_utterance(spec, false, rng));
      for (int i = 0; i < plan.noisy; ++i) plan.out->push_back(sample_utterance(spec, true, rng));
    }
    tasks.push_back(std::move(ds));
  }
  return tasks;
}

}  // namespace clasr
