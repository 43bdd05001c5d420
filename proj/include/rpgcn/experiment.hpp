#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "rpgcn/dataset.hpp"
#include "rpgcn/error.hpp"
#include "rpgcn/gcn.hpp"
#include "rpgcn/graph.hpp"
#include "rpgcn/spectral.hpp"

namespace rpgcn {

struct DatasetSpec {
  std::string preset = "ring238";  // one of preset_names(), ignored when csv_path is set
  std::string csv_path;
  std::string label_column = "label";
  bool standardize = false;
};

enum class BuilderKind { RpForest, Knn, Heat, SelfTuning };

struct BuilderSpec {
  BuilderKind kind = BuilderKind::RpForest;
  std::size_t trees = 10;
  std::size_t max_leaf_size = 20;
  SplitRule split_rule = SplitRule::Quantile;
  std::size_t k = 10;
  double sigma = 1.0;
  std::size_t self_tuning_k = 7;

  std::string name() const {
    switch (kind) {
      case BuilderKind::RpForest: return "rpforest";
      case BuilderKind::Knn: return "knn";
      case BuilderKind::Heat: return "heat";
      case BuilderKind::SelfTuning: return "selftuning";
    }
    return "?";
  }
};

inline BuilderKind parse_builder_kind(const std::string& s) {
  if (s == "rpforest") return BuilderKind::RpForest;
  if (s == "knn") return BuilderKind::Knn;
  if (s == "heat") return BuilderKind::Heat;
  if (s == "selftuning") return BuilderKind::SelfTuning;
  throw Error(ErrorKind::InvalidArgument, "unknown builder '" + s + "'");
}

struct SplitSpec {
  std::size_t train_per_class = 10;
  std::size_t val_per_class = 20;
  std::size_t train = 0;  // absolute counts override the per-class ones when > 0
  std::size_t val = 0;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  std::vector<BuilderSpec> builders{BuilderSpec{BuilderKind::RpForest}, BuilderSpec{BuilderKind::Knn}};
  SplitSpec split;
  GcnHyperparams gcn;
  std::uint64_t seed = 0;
  std::size_t seeds = 10;
  std::vector<std::size_t> sweep_trees{1, 2, 3, 4, 5, 6, 7, 8, 9, 10,
                                       11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
  std::vector<double> extra_percents{0, 25, 50, 75, 100};
  std::optional<double> extra_edge_weight;  // defaults to 1/T

  // Execution settings; not part of the config hash.
  unsigned jobs = 1;
  std::string out_dir;
  bool timing = false;
  bool force = false;
};

inline std::string join_numbers(const auto& values) {
  std::string s;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) s += ',';
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(values[k])>>) {
      s += format_double(values[k]);
    } else {
      s += std::to_string(values[k]);
    }
  }
  return s;
}

/// Canonical key = value rendering of every setting that affects results.
inline std::string canonical_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "[dataset]\n";
  if (c.dataset.csv_path.empty()) {
    out << "name = " << c.dataset.preset << '\n';
  } else {
    out << "csv = " << c.dataset.csv_path << "\nlabel_col = " << c.dataset.label_column << '\n';
  }
  out << "standardize = " << (c.dataset.standardize ? "true" : "false") << '\n';
  out << "\n[builders]\nlist = ";
  for (std::size_t k = 0; k < c.builders.size(); ++k) out << (k ? "," : "") << c.builders[k].name();
  out << '\n';
  for (const auto& b : c.builders) {
    out << "\n[" << b.name() << "]\n";
    switch (b.kind) {
      case BuilderKind::RpForest:
        out << "trees = " << b.trees << "\nmax_leaf_size = " << b.max_leaf_size
            << "\nsplit_rule = " << to_string(b.split_rule) << '\n';
        break;
      case BuilderKind::Knn: out << "k = " << b.k << '\n'; break;
      case BuilderKind::Heat: out << "sigma = " << format_double(b.sigma) << '\n'; break;
      case BuilderKind::SelfTuning: out << "k = " << b.self_tuning_k << '\n'; break;
    }
  }
  out << "\n[split]\ntrain_per_class = " << c.split.train_per_class
      << "\nval_per_class = " << c.split.val_per_class << "\ntrain = " << c.split.train
      << "\nval = " << c.split.val << '\n';
  out << "\n[gcn]\nhidden = " << c.gcn.hidden << "\nlearning_rate = " << format_double(c.gcn.learning_rate)
      << "\nweight_decay = " << format_double(c.gcn.weight_decay) << "\nepochs = " << c.gcn.max_epochs
      << "\npatience = " << c.gcn.patience << "\ndropout = " << format_double(c.gcn.dropout) << '\n';
  out << "\n[run]\nseed = " << c.seed << "\nseeds = " << c.seeds << '\n';
  out << "\n[sweep]\ntrees = " << join_numbers(c.sweep_trees) << '\n';
  out << "\n[extra_edges]\npercents = " << join_numbers(c.extra_percents) << '\n';
  if (c.extra_edge_weight) out << "weight = " << format_double(*c.extra_edge_weight) << '\n';
  return out.str();
}

/// 64-bit FNV-1a of the canonical config, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_config(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct RunRecord {
  std::string dataset;
  std::string builder;
  std::uint64_t seed = 0;
  double test_accuracy = 0.0;
  double total_weight = 0.0;
  std::size_t edge_count = 0;
  double build_ms = 0.0;
  double train_ms = 0.0;
};

struct AggregateRow {
  std::string dataset;
  std::string builder;
  std::size_t runs = 0;
  double mean_accuracy = 0.0;
  double sd_accuracy = 0.0;
  double mean_total_weight = 0.0;
  double sd_total_weight = 0.0;
  double mean_edge_count = 0.0;
};

struct ExperimentResult {
  std::string config_hash;
  std::vector<RunRecord> records;  // ordered by (dataset, builder, seed)
  std::vector<AggregateRow> aggregates;

  const AggregateRow& aggregate(const std::string& builder) const {
    for (const auto& a : aggregates)
      if (a.builder == builder) return a;
    throw Error(ErrorKind::InvalidArgument, "no aggregate for builder '" + builder + "'");
  }
};

namespace detail {

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Sample standard deviation; 0 for fewer than two values.
inline double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& records) {
  std::vector<AggregateRow> rows;
  std::size_t start = 0;
  while (start < records.size()) {
    std::size_t end = start;
    std::vector<double> acc;
    std::vector<double> weight;
    std::vector<double> edges;
    while (end < records.size() && records[end].dataset == records[start].dataset &&
           records[end].builder == records[start].builder) {
      acc.push_back(records[end].test_accuracy);
      weight.push_back(records[end].total_weight);
      edges.push_back(static_cast<double>(records[end].edge_count));
      ++end;
    }
    rows.push_back({records[start].dataset, records[start].builder, end - start, mean_of(acc),
                    sample_sd(acc), mean_of(weight), sample_sd(weight), mean_of(edges)});
    start = end;
  }
  return rows;
}

/// Runs task(i) for i in [0, count) on `jobs` threads. Exceptions are
/// rethrown for the lowest failing index, so errors are deterministic too.
inline void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

template <typename Fn>
double time_ms(Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

enum SeedStream : std::uint64_t { kDataStream = 1, kSplitStream, kGraphStream, kGcnStream, kExtraStream };

}  // namespace detail

/// Dataset for one seed: generated presets are re-drawn per seed, CSVs are fixed.
inline Dataset materialize_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  Dataset ds = spec.csv_path.empty()
                   ? make_preset(spec.preset, derive_seed(seed, detail::kDataStream))
                   : load_csv(spec.csv_path, spec.label_column);
  if (spec.standardize) standardize(ds);
  validate(ds);
  return ds;
}

inline SplitMasks make_split(const ExperimentConfig& cfg, const Dataset& ds, std::uint64_t seed) {
  const auto c = static_cast<std::size_t>(ds.num_classes());
  const std::size_t n_train = cfg.split.train > 0 ? cfg.split.train : cfg.split.train_per_class * c;
  const std::size_t n_val = cfg.split.val > 0 ? cfg.split.val : cfg.split.val_per_class * c;
  return split_masks(ds.size(), n_train, n_val, ds.labels, derive_seed(seed, detail::kSplitStream));
}

inline WeightedGraph build_graph(const BuilderSpec& b, const Matrix& x, std::uint64_t seed) {
  switch (b.kind) {
    case BuilderKind::RpForest: {
      ForestOptions opts;
      opts.trees = b.trees;
      opts.tree.max_leaf_size = b.max_leaf_size;
      opts.tree.split_rule = b.split_rule;
      return build_rpforest_graph(x, derive_seed(seed, detail::kGraphStream), opts);
    }
    case BuilderKind::Knn: return build_knn_graph(x, b.k);
    case BuilderKind::Heat: return build_heat_kernel_graph(x, b.sigma);
    case BuilderKind::SelfTuning: return build_self_tuning_graph(x, b.self_tuning_k);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown builder");
}

inline std::vector<std::uint64_t> seed_list(const ExperimentConfig& cfg) {
  if (cfg.seeds == 0) throw Error(ErrorKind::InvalidArgument, "at least one seed is required");
  std::vector<std::uint64_t> seeds(cfg.seeds);
  for (std::size_t s = 0; s < cfg.seeds; ++s) seeds[s] = cfg.seed + s;
  return seeds;
}

namespace detail {

struct SeedContext {
  Dataset data;
  SplitMasks masks;
};

inline std::vector<SeedContext> prepare_seeds(const ExperimentConfig& cfg,
                                              const std::vector<std::uint64_t>& seeds) {
  std::vector<SeedContext> out;
  out.reserve(seeds.size());
  std::optional<Dataset> fixed;
  if (!cfg.dataset.csv_path.empty()) fixed = materialize_dataset(cfg.dataset, 0);
  for (auto seed : seeds) {
    Dataset ds = fixed ? *fixed : materialize_dataset(cfg.dataset, seed);
    auto masks = make_split(cfg, ds, seed);
    out.push_back({std::move(ds), std::move(masks)});
  }
  return out;
}

inline RunRecord train_on_graph(const ExperimentConfig& cfg, const SeedContext& ctx,
                                const WeightedGraph& g, std::uint64_t seed, std::string builder,
                                double build_ms) {
  GcnHyperparams hp = cfg.gcn;
  hp.seed = derive_seed(seed, kGcnStream);
  RunRecord rec{ctx.data.name, std::move(builder), seed, 0.0, total_weight(g), g.edge_count(), build_ms, 0.0};
  rec.train_ms = time_ms([&] {
    const auto a_hat = normalize_adjacency(g);
    const auto result = train({ctx.data.x, ctx.data.labels, ctx.masks.train, ctx.masks.val, ctx.masks.test},
                              a_hat, hp);
    rec.test_accuracy = result.report.test_accuracy;
  });
  return rec;
}

inline std::string context(const std::string& dataset, const std::string& builder, std::uint64_t seed) {
  return "[dataset=" + dataset + " builder=" + builder + " seed=" + std::to_string(seed) + "] ";
}

}  // namespace detail

/// Trains a GCN on every configured graph for every seed.
inline ExperimentResult run_compare(const ExperimentConfig& cfg) {
  if (cfg.builders.empty()) throw Error(ErrorKind::InvalidArgument, "no graph builders configured");
  const auto seeds = seed_list(cfg);
  const auto contexts = detail::prepare_seeds(cfg, seeds);
  const std::size_t nb = cfg.builders.size();
  std::vector<RunRecord> records(nb * seeds.size());
  // Row order: builder-major, then seed.
  detail::parallel_for(records.size(), cfg.jobs, [&](std::size_t cell) {
    const auto& b = cfg.builders[cell / seeds.size()];
    const std::size_t s = cell % seeds.size();
    const auto& ctx = contexts[s];
    try {
      WeightedGraph g;
      const double build_ms = detail::time_ms([&] { g = build_graph(b, ctx.data.x, seeds[s]); });
      records[cell] = detail::train_on_graph(cfg, ctx, g, seeds[s], b.name(), build_ms);
    } catch (const Error& e) {
      throw Error(e.kind(), detail::context(ctx.data.name, b.name(), seeds[s]) + e.what());
    }
  });
  return {config_hash(cfg), records, detail::aggregate(records)};
}

inline std::string extra_builder_name(double percent) {
  return "rpforest+extra" + format_double(percent);
}

/// rpForest graph per seed, densified with a growing share of complement edges.
inline ExperimentResult run_extra_edges(const ExperimentConfig& cfg) {
  const BuilderSpec* forest = nullptr;
  for (const auto& b : cfg.builders)
    if (b.kind == BuilderKind::RpForest) forest = &b;
  BuilderSpec default_forest;
  if (!forest) forest = &default_forest;
  if (cfg.extra_percents.empty()) throw Error(ErrorKind::InvalidArgument, "no extra-edge percents");
  for (double p : cfg.extra_percents) {
    if (!(p >= 0.0 && p <= 100.0)) throw Error(ErrorKind::InvalidArgument, "percent outside [0, 100]");
  }
  const double weight = cfg.extra_edge_weight.value_or(1.0 / static_cast<double>(forest->trees));

  const auto seeds = seed_list(cfg);
  const auto contexts = detail::prepare_seeds(cfg, seeds);
  std::vector<WeightedGraph> base(seeds.size());
  std::vector<double> base_ms(seeds.size());
  detail::parallel_for(seeds.size(), cfg.jobs, [&](std::size_t s) {
    base_ms[s] = detail::time_ms([&] { base[s] = build_graph(*forest, contexts[s].data.x, seeds[s]); });
  });

  const std::size_t np = cfg.extra_percents.size();
  std::vector<RunRecord> records(np * seeds.size());
  detail::parallel_for(records.size(), cfg.jobs, [&](std::size_t cell) {
    const std::size_t pi = cell / seeds.size();
    const std::size_t s = cell % seeds.size();
    const double percent = cfg.extra_percents[pi];
    const auto name = extra_builder_name(percent);
    try {
      WeightedGraph g;
      const double extra_ms = detail::time_ms([&] {
        g = add_complement_edges(base[s], percent, weight,
                                 derive_seed(seeds[s], detail::kExtraStream * 1000 + pi));
      });
      records[cell] = detail::train_on_graph(cfg, contexts[s], g, seeds[s], name, base_ms[s] + extra_ms);
    } catch (const Error& e) {
      throw Error(e.kind(), detail::context(contexts[s].data.name, name, seeds[s]) + e.what());
    }
  });
  return {config_hash(cfg), records, detail::aggregate(records)};
}

struct SweepResult {
  std::string config_hash;
  std::vector<SweepCurve> curves;  // one per seed
  std::vector<Elbow> elbows;
};

/// Connectivity sweep over nested forests, one curve per seed.
inline SweepResult run_sweep(const ExperimentConfig& cfg) {
  if (cfg.sweep_trees.size() < 3) {
    throw Error(ErrorKind::InvalidArgument, "a sweep needs at least 3 tree counts to locate an elbow");
  }
  BuilderSpec forest;
  for (const auto& b : cfg.builders)
    if (b.kind == BuilderKind::RpForest) forest = b;
  RpTreeOptions opts;
  opts.max_leaf_size = forest.max_leaf_size;
  opts.split_rule = forest.split_rule;

  const auto seeds = seed_list(cfg);
  SweepResult out{config_hash(cfg), std::vector<SweepCurve>(seeds.size()), std::vector<Elbow>(seeds.size())};
  detail::parallel_for(seeds.size(), cfg.jobs, [&](std::size_t s) {
    const Dataset ds = materialize_dataset(cfg.dataset, seeds[s]);
    out.curves[s] = sweep_trees(ds.x, cfg.sweep_trees, opts, derive_seed(seeds[s], detail::kGraphStream), ds.name);
    out.curves[s].seed = seeds[s];
    out.elbows[s] = detect_elbow(out.curves[s]);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Output files. Every file starts with a "# config_hash=<hex>" line.

inline constexpr const char* kResultHeader =
    "dataset,builder,seed,test_accuracy,total_weight,edge_count,build_ms,train_ms";

inline void write_results_csv(std::ostream& out, const ExperimentResult& r, bool timing) {
  out << "# config_hash=" << r.config_hash << '\n' << kResultHeader << '\n';
  for (const auto& rec : r.records) {
    out << rec.dataset << ',' << rec.builder << ',' << rec.seed << ',' << format_double(rec.test_accuracy)
        << ',' << format_double(rec.total_weight) << ',' << rec.edge_count << ',';
    if (timing) {
      out << format_double(std::round(rec.build_ms * 1000.0) / 1000.0) << ','
          << format_double(std::round(rec.train_ms * 1000.0) / 1000.0) << '\n';
    } else {
      out << "NA,NA\n";
    }
  }
}

inline void write_summary_csv(std::ostream& out, const ExperimentResult& r) {
  out << "# config_hash=" << r.config_hash << '\n'
      << "dataset,builder,runs,mean_test_accuracy,sd_test_accuracy,mean_total_weight,"
         "sd_total_weight,mean_total_weight_doubled,mean_edge_count\n";
  for (const auto& a : r.aggregates) {
    out << a.dataset << ',' << a.builder << ',' << a.runs << ',' << format_double(a.mean_accuracy) << ','
        << format_double(a.sd_accuracy) << ',' << format_double(a.mean_total_weight) << ','
        << format_double(a.sd_total_weight) << ',' << format_double(2.0 * a.mean_total_weight) << ','
        << format_double(a.mean_edge_count) << '\n';
  }
}

inline void write_timings_csv(std::ostream& out, const ExperimentResult& r) {
  out << "# config_hash=" << r.config_hash << '\n' << "dataset,builder,seed,build_ms,train_ms\n";
  for (const auto& rec : r.records) {
    out << rec.dataset << ',' << rec.builder << ',' << rec.seed << ',' << format_double(rec.build_ms) << ','
        << format_double(rec.train_ms) << '\n';
  }
}

inline void write_sweep_csv(std::ostream& out, const SweepCurve& curve, const std::string& hash) {
  out << "# config_hash=" << hash << '\n' << "T,std_v0,components\n";
  for (const auto& p : curve.points) {
    out << p.trees << ',' << format_double(p.std_v0) << ',' << p.components << '\n';
  }
}

/// Creates `dir` and claims it for `hash`. A directory already claimed by a
/// different config is refused unless `force` is set.
inline void prepare_output_dir(const std::string& dir, const std::string& hash, bool force) {
  namespace fs = std::filesystem;
  if (dir.empty()) throw Error(ErrorKind::InvalidArgument, "no output directory given");
  fs::create_directories(dir);
  const fs::path stamp = fs::path(dir) / "config_hash";
  if (fs::exists(stamp) && !force) {
    std::ifstream in(stamp);
    std::string existing;
    std::getline(in, existing);
    if (existing != hash) {
      throw Error(ErrorKind::InvalidArgument, "output directory '" + dir + "' holds results for config " +
                                                  existing + ", not " + hash + " (use --force)");
    }
  }
  std::ofstream(stamp) << hash << '\n';
}

inline void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  fn(out);
}

inline void save_experiment(const ExperimentConfig& cfg, const ExperimentResult& r) {
  namespace fs = std::filesystem;
  prepare_output_dir(cfg.out_dir, r.config_hash, cfg.force);
  const fs::path dir(cfg.out_dir);
  write_file(dir / "config.ini", [&](std::ostream& o) {
    o << "# config_hash=" << r.config_hash << '\n' << canonical_config(cfg);
  });
  write_file(dir / "results.csv", [&](std::ostream& o) { write_results_csv(o, r, cfg.timing); });
  write_file(dir / "summary.csv", [&](std::ostream& o) { write_summary_csv(o, r); });
  write_file(dir / "timings.csv", [&](std::ostream& o) { write_timings_csv(o, r); });
}

inline void save_sweep(const ExperimentConfig& cfg, const SweepResult& r) {
  namespace fs = std::filesystem;
  prepare_output_dir(cfg.out_dir, r.config_hash, cfg.force);
  const fs::path dir(cfg.out_dir);
  write_file(dir / "config.ini", [&](std::ostream& o) {
    o << "# config_hash=" << r.config_hash << '\n' << canonical_config(cfg);
  });
  for (const auto& curve : r.curves) {
    write_file(dir / ("sweep_seed" + std::to_string(curve.seed) + ".csv"),
               [&](std::ostream& o) { write_sweep_csv(o, curve, r.config_hash); });
  }
  write_file(dir / "elbows.csv", [&](std::ostream& o) {
    o << "# config_hash=" << r.config_hash << '\n' << "seed,elbow_T,no_connect\n";
    for (std::size_t s = 0; s < r.curves.size(); ++s) {
      o << r.curves[s].seed << ',' << r.elbows[s].trees << ',' << (r.elbows[s].no_connect ? 1 : 0) << '\n';
    }
  });
}

}  // namespace rpgcn
