#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "drhmc/diagnostics.hpp"
#include "drhmc/models/funnel.hpp"
#include "drhmc/models/lgssm.hpp"
#include "drhmc/models/stock_watson.hpp"
#include "drhmc/models/sv.hpp"
#include "drhmc/samplers/hmc.hpp"
#include "drhmc/samplers/rmhmc.hpp"
#include "drhmc/samplers/sshmc.hpp"
#include "drhmc/transform.hpp"

// Config-driven experiment runner: builds a model, runs multiple chains in
// a worker pool, summarizes, and emits draws.csv / summary.json /
// table.csv. Runs are deterministic given the seed, including adaptation
// and the chain dispatch order.

namespace drhmc {

inline constexpr int kSummarySchemaVersion = 1;

enum class ModelKind { kFunnel, kLgssm1, kLgssm2, kLgssm3, kSv, kStockWatson };
enum class Method { kDrhmc, kPriorStd, kDirect, kRmhmc, kSshmc };

inline const char* to_string(ModelKind m) {
  switch (m) {
    case ModelKind::kFunnel: return "funnel";
    case ModelKind::kLgssm1: return "lgssm1";
    case ModelKind::kLgssm2: return "lgssm2";
    case ModelKind::kLgssm3: return "lgssm3";
    case ModelKind::kSv: return "sv";
    case ModelKind::kStockWatson: return "stock-watson";
  }
  return "?";
}

inline const char* to_string(Method m) {
  switch (m) {
    case Method::kDrhmc: return "drhmc";
    case Method::kPriorStd: return "prior-std";
    case Method::kDirect: return "direct";
    case Method::kRmhmc: return "rmhmc";
    case Method::kSshmc: return "sshmc";
  }
  return "?";
}

inline std::optional<ModelKind> parse_model(const std::string& s) {
  if (s == "funnel") return ModelKind::kFunnel;
  if (s == "lgssm1") return ModelKind::kLgssm1;
  if (s == "lgssm2") return ModelKind::kLgssm2;
  if (s == "lgssm3") return ModelKind::kLgssm3;
  if (s == "sv") return ModelKind::kSv;
  if (s == "stock-watson") return ModelKind::kStockWatson;
  return std::nullopt;
}

inline std::optional<Method> parse_method(const std::string& s) {
  if (s == "drhmc") return Method::kDrhmc;
  if (s == "prior-std") return Method::kPriorStd;
  if (s == "direct") return Method::kDirect;
  if (s == "rmhmc") return Method::kRmhmc;
  if (s == "sshmc") return Method::kSshmc;
  return std::nullopt;
}

inline std::optional<models::HStrategy> parse_h(const std::string& s) {
  using models::HStrategy;
  if (s == "zero") return HStrategy::kZero;
  if (s == "fixed") return HStrategy::kFixedData;
  if (s == "mean") return HStrategy::kConditionalMean;
  if (s == "custom") return HStrategy::kModelCustom;
  return std::nullopt;
}

struct ExperimentConfig {
  ModelKind model = ModelKind::kFunnel;
  Method method = Method::kDrhmc;
  models::HStrategy h = models::HStrategy::kConditionalMean;
  int chains = 4;
  int warmup = 1000;
  int iters = 1000;
  std::uint64_t seed = 1;
  std::uint64_t data_seed = 1234;
  std::string data_csv;  // empty: simulate
  int sim_t = 100;
  int dataset = 1;       // lgssm regime: 1 low, 2 high signal-to-noise
  double funnel_y = 0.5;
  std::string out_dir;   // empty: no files written
  int threads = 0;       // 0: one per chain
  PathLength path{};
  double target_accept = 0.8;
  double max_divergence_rate = 0.5;
  bool adapt_mass = false;
  double step_size = 0.0;  // <= 0: auto (0.1 for rmhmc)
};

struct MultiChainOutput {
  std::vector<ChainDraws> chains;
  std::vector<std::string> names;
  double cpu_seconds = 0.0;  // summed sampling-phase seconds over chains
  bool aborted = false;
  int divergences = 0;
  int total_transitions = 0;
};

struct ExperimentResult {
  MultiChainOutput output;
  std::vector<diag::CoordinateSummary> original;  // per coordinate
  std::vector<diag::CoordinateSummary> modified;
  double divergence_rate = 0.0;
};

namespace detail {

inline void append_shortest(std::string& buf, double v) {
  char tmp[32];
  const auto res = std::to_chars(tmp, tmp + sizeof(tmp), v);
  buf.append(tmp, res.ptr);
}

template <class MakeChain>
MultiChainOutput run_pool(int n_chains, int threads, MakeChain&& make_chain) {
  MultiChainOutput out;
  out.chains.resize(static_cast<std::size_t>(n_chains));
  const int workers =
      threads <= 0 ? n_chains : std::min(threads, n_chains);
  std::vector<std::exception_ptr> errors(
      static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int c = w; c < n_chains; c += workers)
          out.chains[static_cast<std::size_t>(c)] = make_chain(c);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (const auto& c : out.chains) {
    out.cpu_seconds += c.seconds;
    out.divergences += c.divergences;
    out.total_transitions += static_cast<int>(c.diags.size());
    out.aborted = out.aborted || c.aborted;
  }
  return out;
}

template <class Model>
MultiChainOutput run_model_chains(const Model& model, Method method,
                                  const ExperimentConfig& cfg) {
  HmcConfig hmc;
  hmc.warmup = cfg.warmup;
  hmc.iters = cfg.iters;
  hmc.path = cfg.path;
  hmc.target_accept = cfg.target_accept;
  hmc.max_divergence_rate = cfg.max_divergence_rate;
  hmc.adapt_mass = cfg.adapt_mass;
  hmc.init_step_size = cfg.step_size;

  MultiChainOutput out;
  switch (method) {
    case Method::kDrhmc:
      out = run_pool(cfg.chains, cfg.threads, [&](int c) {
        ModifiedTarget<Model> target(model);
        return run_chain(target, hmc, cfg.seed, c);
      });
      out.names = model.coordinate_names();
      return out;
    case Method::kDirect:
      out = run_pool(cfg.chains, cfg.threads, [&](int c) {
        DirectTarget<Model> target(model);
        return run_chain(target, hmc, cfg.seed, c);
      });
      out.names = model.coordinate_names();
      return out;
    case Method::kPriorStd:
      if constexpr (std::is_same_v<Model, models::LgssmModel>) {
        out = run_pool(cfg.chains, cfg.threads, [&](int c) {
          models::LgssmPriorStdTarget target(model);
          return run_chain(target, hmc, cfg.seed, c);
        });
        out.names = model.coordinate_names();
        return out;
      } else if constexpr (std::is_same_v<Model, models::SvModel>) {
        out = run_pool(cfg.chains, cfg.threads, [&](int c) {
          models::SvPriorStdTarget target(model);
          return run_chain(target, hmc, cfg.seed, c);
        });
        out.names = model.coordinate_names();
        return out;
      } else {
        throw InvalidArgument(
            "prior standardisation requires a stationary latent block; not "
            "available for this model");
      }
    case Method::kRmhmc: {
      HmcConfig rm = hmc;
      if (rm.init_step_size <= 0.0) rm.init_step_size = 0.1;
      if (cfg.path.min_steps == PathLength{}.min_steps &&
          cfg.path.max_steps == PathLength{}.max_steps)
        rm.path = PathLength{30, 50};
      out = run_pool(cfg.chains, cfg.threads, [&](int c) {
        RmhmcSampler<Model> sampler(model);
        return sampler.run_chain(rm, cfg.seed, c);
      });
      out.names = model.coordinate_names();
      return out;
    }
    case Method::kSshmc: {
      SshmcConfig ss;
      ss.warmup = cfg.warmup;
      ss.iters = cfg.iters;
      ss.max_divergence_rate = cfg.max_divergence_rate;
      out = run_pool(cfg.chains, cfg.threads, [&](int c) {
        SshmcSampler<Model> sampler(model);
        return sampler.run_chain(ss, cfg.seed, c);
      });
      out.names = model.coordinate_names();
      return out;
    }
  }
  throw InvalidArgument("unknown method");
}

inline std::vector<std::vector<double>> coordinate_chains(
    const MultiChainOutput& out, int coord, bool modified) {
  std::vector<std::vector<double>> chains;
  for (const auto& c : out.chains) {
    std::vector<double> draws;
    draws.reserve(static_cast<std::size_t>(c.rows()));
    for (int i = 0; i < c.rows(); ++i)
      draws.push_back(modified ? c.modified_row(i)[coord]
                               : c.original_row(i)[coord]);
    chains.push_back(std::move(draws));
  }
  return chains;
}

}  // namespace detail

// LGSSM regime parameters: true lambda = -log(0.15^2) in both data sets;
// true tau = -log(0.15^2) (set 1) or -log(0.005^2) (set 2); omega = 2.2.
inline models::LgssmData lgssm_regime_data(const ExperimentConfig& cfg) {
  const double lambda = -std::log(0.15 * 0.15);
  const double tau = cfg.dataset == 2 ? -std::log(0.005 * 0.005)
                                      : -std::log(0.15 * 0.15);
  if (!cfg.data_csv.empty()) {
    models::LgssmData data;
    data.y = models::load_series(cfg.data_csv);
    data.t = static_cast<int>(data.y.size());
    data.true_lambda = lambda;
    data.true_tau = tau;
    data.omega = 2.2;
    data.mu = 0.0;
    return data;
  }
  return models::simulate_lgssm(cfg.sim_t, lambda, tau, 2.2, 0.0,
                                cfg.data_seed);
}

using AnyModel = std::variant<models::FunnelModel, models::LgssmModel,
                              models::SvModel, models::StockWatsonModel>;

inline AnyModel build_model(const ExperimentConfig& cfg) {
  switch (cfg.model) {
    case ModelKind::kFunnel:
      return models::FunnelModel(cfg.funnel_y, cfg.h);
    case ModelKind::kLgssm1:
      return models::LgssmModel(1, lgssm_regime_data(cfg), cfg.h);
    case ModelKind::kLgssm2:
      return models::LgssmModel(2, lgssm_regime_data(cfg), cfg.h);
    case ModelKind::kLgssm3:
      return models::LgssmModel(3, lgssm_regime_data(cfg), cfg.h);
    case ModelKind::kSv: {
      std::vector<double> y =
          cfg.data_csv.empty()
              ? models::simulate_sv(cfg.sim_t, -std::log(0.15 * 0.15), 2.2,
                                    0.0, cfg.data_seed)
              : models::load_series(cfg.data_csv);
      return models::SvModel(std::move(y), cfg.h);
    }
    case ModelKind::kStockWatson: {
      if (!cfg.data_csv.empty()) {
        models::StockWatsonData data;
        data.y = models::load_series(cfg.data_csv);
        data.t = static_cast<int>(data.y.size());
        data.true_lambda = std::log(10.0);
        return models::StockWatsonModel(std::move(data));
      }
      return models::StockWatsonModel(models::simulate_stock_watson(
          cfg.sim_t, std::log(10.0), cfg.data_seed));
    }
  }
  throw InvalidArgument("unknown model");
}

inline MultiChainOutput run_chains(const ExperimentConfig& cfg) {
  const AnyModel model = build_model(cfg);
  return std::visit(
      [&](const auto& m) {
        return detail::run_model_chains(m, cfg.method, cfg);
      },
      model);
}

inline void write_draws_csv(const std::string& path,
                            const MultiChainOutput& out) {
  std::string buf;
  buf += "chain,iter";
  for (const auto& n : out.names) buf += "," + n;
  for (const auto& n : out.names) buf += ",mod_" + n;
  buf += "\n";
  for (std::size_t c = 0; c < out.chains.size(); ++c) {
    const auto& chain = out.chains[c];
    for (int i = 0; i < chain.rows(); ++i) {
      buf += std::to_string(c);
      buf += ',';
      buf += std::to_string(i);
      for (double v : chain.original_row(i)) {
        buf += ',';
        detail::append_shortest(buf, v);
      }
      for (double v : chain.modified_row(i)) {
        buf += ',';
        detail::append_shortest(buf, v);
      }
      buf += '\n';
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot write " + path);
  f << buf;
}

inline nlohmann::json config_json(const ExperimentConfig& cfg) {
  return nlohmann::json{
      {"model", to_string(cfg.model)},
      {"method", to_string(cfg.method)},
      {"h", models::to_string(cfg.h)},
      {"chains", cfg.chains},
      {"warmup", cfg.warmup},
      {"iters", cfg.iters},
      {"seed", cfg.seed},
      {"data_seed", cfg.data_seed},
      {"data", cfg.data_csv.empty() ? "simulate" : cfg.data_csv},
      {"sim_t", cfg.sim_t},
      {"dataset", cfg.dataset},
      {"threads", cfg.threads},
  };
}

inline nlohmann::json summary_entry(const std::string& name,
                                    const diag::CoordinateSummary& s) {
  nlohmann::json j{{"name", name}, {"mean", s.mean}, {"sd", s.sd}};
  if (s.degenerate) {
    j["n_eff"] = nullptr;
    j["mcse"] = 0.0;
    j["degenerate"] = true;
  } else {
    j["n_eff"] = s.n_eff;
    j["mcse"] = s.mcse;
  }
  return j;
}

inline ExperimentResult summarize_output(MultiChainOutput output) {
  ExperimentResult result;
  const int d = output.chains.empty() ? 0 : output.chains.front().dim;
  for (int k = 0; k < d; ++k) {
    result.original.push_back(
        diag::summarize(detail::coordinate_chains(output, k, false)));
    result.modified.push_back(
        diag::summarize(detail::coordinate_chains(output, k, true)));
  }
  result.divergence_rate =
      output.total_transitions > 0
          ? static_cast<double>(output.divergences) / output.total_transitions
          : 0.0;
  result.output = std::move(output);
  return result;
}

// Runs one experiment; writes draws.csv and summary.json when out_dir is
// set. Byte-identical draws.csv for identical configs.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult result = summarize_output(run_chains(cfg));
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    write_draws_csv(cfg.out_dir + "/draws.csv", result.output);
    nlohmann::json summary;
    summary["schema_version"] = kSummarySchemaVersion;
    summary["config"] = config_json(cfg);
    summary["aborted"] = result.output.aborted;
    summary["cpu_seconds"] = result.output.cpu_seconds;
    summary["divergences"] = result.output.divergences;
    summary["divergence_rate"] = result.divergence_rate;
    auto coords = nlohmann::json::array();
    auto mods = nlohmann::json::array();
    for (std::size_t k = 0; k < result.original.size(); ++k) {
      coords.push_back(summary_entry(result.output.names[k], result.original[k]));
      mods.push_back(
          summary_entry("mod_" + result.output.names[k], result.modified[k]));
    }
    summary["coordinates"] = coords;
    summary["modified_coordinates"] = mods;
    std::ofstream f(cfg.out_dir + "/summary.json", std::ios::binary);
    if (!f) throw InvalidArgument("cannot write summary.json");
    f << summary.dump(2) << "\n";
  }
  return result;
}

// Coordinate-group label: scalar parameters keep their name, vector blocks
// group under the prefix before the index suffix.
inline std::string group_of(const std::string& name) {
  const auto dot = name.find('.');
  return dot == std::string::npos ? name : name.substr(0, dot);
}

struct ComparisonRow {
  std::string method;
  std::map<std::string, double> group_min_neff;
  double min_neff = 0.0;
  double cpu_seconds = 0.0;
  double min_neff_per_second = 0.0;
};

// Runs each config (they must share model and data settings) and tabulates
// per-group minimum effective sample sizes and rates.
inline std::vector<ComparisonRow> compare_methods(
    std::span<const ExperimentConfig> configs,
    const std::string& table_path = "") {
  if (configs.empty()) throw InvalidArgument("compare_methods: no configs");
  for (const auto& cfg : configs) {
    if (cfg.model != configs.front().model ||
        cfg.data_seed != configs.front().data_seed ||
        cfg.data_csv != configs.front().data_csv ||
        cfg.sim_t != configs.front().sim_t ||
        cfg.dataset != configs.front().dataset)
      throw InvalidArgument("compare_methods: configs must share model and data");
  }
  std::vector<ComparisonRow> rows;
  for (const auto& cfg : configs) {
    ExperimentConfig run_cfg = cfg;
    run_cfg.out_dir.clear();
    const ExperimentResult res = run_experiment(run_cfg);
    ComparisonRow row;
    row.method = to_string(cfg.method);
    if (cfg.method == Method::kDrhmc)
      row.method += std::string("/h=") + models::to_string(cfg.h);
    row.min_neff = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < res.original.size(); ++k) {
      const auto& s = res.original[k];
      const double neff = s.degenerate ? 0.0 : s.n_eff;
      const std::string g = group_of(res.output.names[k]);
      auto it = row.group_min_neff.find(g);
      if (it == row.group_min_neff.end())
        row.group_min_neff.emplace(g, neff);
      else
        it->second = std::min(it->second, neff);
      row.min_neff = std::min(row.min_neff, neff);
    }
    row.cpu_seconds = res.output.cpu_seconds;
    row.min_neff_per_second =
        row.cpu_seconds > 0.0 ? row.min_neff / row.cpu_seconds : 0.0;
    rows.push_back(std::move(row));
  }
  if (!table_path.empty()) {
    std::string buf = "method";
    for (const auto& [g, v] : rows.front().group_min_neff) buf += ",neff_" + g;
    buf += ",neff_min,cpu_seconds,neff_min_per_second\n";
    for (const auto& row : rows) {
      buf += row.method;
      for (const auto& [g, v] : row.group_min_neff) {
        buf += ',';
        detail::append_shortest(buf, v);
      }
      buf += ',';
      detail::append_shortest(buf, row.min_neff);
      buf += ',';
      detail::append_shortest(buf, row.cpu_seconds);
      buf += ',';
      detail::append_shortest(buf, row.min_neff_per_second);
      buf += '\n';
    }
    std::ofstream f(table_path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot write " + table_path);
    f << buf;
  }
  return rows;
}

}  // namespace drhmc
