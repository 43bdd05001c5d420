// Command-line experiment runner: sweep, compare, extra-edges, plot.

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rpgcn/rpgcn.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> seeds;
  std::optional<std::size_t> k;
  std::optional<std::size_t> trees;
  std::optional<std::size_t> max_leaf_size;
  std::optional<std::string> label_col;
  std::optional<std::string> out;
  std::optional<double> extra_edge_weight;
  std::optional<std::string> split_rule;
  bool standardize = false;
  std::optional<std::string> dataset;
  std::optional<std::string> csv;
  std::optional<std::string> builders;
  std::optional<std::string> percents;
  std::optional<std::string> t_values;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> train_per_class;
  std::optional<std::size_t> val_per_class;
  std::optional<unsigned> jobs;
  bool force = false;
  bool timing = false;
};

void add_run_options(CLI::App& cmd, Overrides& o) {
  cmd.add_option("--config", o.config_path, "INI experiment config");
  cmd.add_option("--seed", o.seed, "First seed");
  cmd.add_option("--seeds", o.seeds, "Number of consecutive seeds");
  cmd.add_option("--k", o.k, "k for the k-nn graph");
  cmd.add_option("--trees", o.trees, "Number of trees T in the rpForest");
  cmd.add_option("--max-leaf-size", o.max_leaf_size, "rpTree leaf capacity");
  cmd.add_option("--label-col", o.label_col, "Label column of the CSV dataset");
  cmd.add_option("--out", o.out, "Output directory")->required();
  cmd.add_option("--extra-edge-weight", o.extra_edge_weight, "Weight of added complement edges");
  cmd.add_option("--split-rule", o.split_rule, "rpTree split rule")
      ->check(CLI::IsMember({"quantile", "range", "median"}));
  cmd.add_flag("--standardize", o.standardize, "z-score features");
  cmd.add_option("--dataset", o.dataset, "Generated dataset preset")
      ->check(CLI::IsMember(rpgcn::preset_names()));
  cmd.add_option("--csv", o.csv, "CSV dataset path");
  cmd.add_option("--builders", o.builders, "Comma list of rpforest,knn,heat,selftuning");
  cmd.add_option("--percents", o.percents, "Comma list of extra-edge percentages");
  cmd.add_option("--t-values", o.t_values, "Tree counts for the sweep, e.g. 1-20");
  cmd.add_option("--epochs", o.epochs, "Maximum GCN training epochs");
  cmd.add_option("--train-per-class", o.train_per_class, "Labeled nodes per class");
  cmd.add_option("--val-per-class", o.val_per_class, "Validation nodes per class");
  cmd.add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  cmd.add_flag("--force", o.force, "Overwrite results of a different config");
  cmd.add_flag("--timing", o.timing, "Write wall times into results.csv");
}

rpgcn::ExperimentConfig resolve(const Overrides& o) {
  rpgcn::ExperimentConfig cfg;
  if (!o.config_path.empty()) cfg = rpgcn::load_config(o.config_path, cfg);
  if (o.dataset) {
    cfg.dataset.preset = *o.dataset;
    cfg.dataset.csv_path.clear();
  }
  if (o.csv) cfg.dataset.csv_path = *o.csv;
  if (o.label_col) cfg.dataset.label_column = *o.label_col;
  if (o.standardize) cfg.dataset.standardize = true;
  if (o.builders) {
    std::vector<rpgcn::BuilderSpec> list;
    for (const auto& name : rpgcn::detail::split_list(*o.builders)) {
      const auto kind = rpgcn::parse_builder_kind(name);
      rpgcn::BuilderSpec spec{kind};
      for (const auto& existing : cfg.builders)
        if (existing.kind == kind) spec = existing;
      list.push_back(spec);
    }
    cfg.builders = list;
  }
  for (auto& b : cfg.builders) {
    if (o.k) b.k = *o.k;
    if (o.trees) b.trees = *o.trees;
    if (o.max_leaf_size) b.max_leaf_size = *o.max_leaf_size;
    if (o.split_rule) b.split_rule = rpgcn::parse_split_rule(*o.split_rule);
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.seeds) cfg.seeds = *o.seeds;
  if (o.extra_edge_weight) cfg.extra_edge_weight = *o.extra_edge_weight;
  if (o.percents) cfg.extra_percents = rpgcn::parse_double_list(*o.percents);
  if (o.t_values) cfg.sweep_trees = rpgcn::parse_count_list(*o.t_values);
  if (o.epochs) cfg.gcn.max_epochs = *o.epochs;
  if (o.train_per_class) cfg.split.train_per_class = *o.train_per_class;
  if (o.val_per_class) cfg.split.val_per_class = *o.val_per_class;
  cfg.out_dir = *o.out;
  if (o.jobs) cfg.jobs = *o.jobs;
  cfg.force = o.force;
  cfg.timing = o.timing;
  return cfg;
}

void print_summary(const rpgcn::ExperimentResult& r) {
  for (const auto& a : r.aggregates) {
    std::cout << a.dataset << '\t' << a.builder << "\tacc " << a.mean_accuracy << " ± " << a.sd_accuracy
              << "\ttotal_weight " << a.mean_total_weight << "\tedges " << a.mean_edge_count << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph construction with random projection forests for GCN node classification"};
  app.require_subcommand(1);

  Overrides sweep_o;
  Overrides compare_o;
  Overrides extra_o;
  auto* sweep = app.add_subcommand("sweep", "Connectivity of nested rpForest graphs versus T");
  auto* compare = app.add_subcommand("compare", "GCN test accuracy for each graph builder");
  auto* extra = app.add_subcommand("extra-edges", "rpForest graph plus a share of complement edges");
  add_run_options(*sweep, sweep_o);
  add_run_options(*compare, compare_o);
  add_run_options(*extra, extra_o);

  std::vector<std::string> plot_inputs;
  std::string plot_out;
  auto* plot = app.add_subcommand("plot", "Render result or sweep CSVs as SVG");
  plot->add_option("csv", plot_inputs, "CSV files")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", plot_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sweep) {
      const auto cfg = resolve(sweep_o);
      const auto result = rpgcn::run_sweep(cfg);
      rpgcn::save_sweep(cfg, result);
      for (std::size_t s = 0; s < result.curves.size(); ++s) {
        std::cout << "seed " << result.curves[s].seed << ": elbow at T=" << result.elbows[s].trees
                  << (result.elbows[s].no_connect ? " (graph never connected)" : "") << '\n';
      }
    } else if (*compare) {
      const auto cfg = resolve(compare_o);
      const auto result = rpgcn::run_compare(cfg);
      rpgcn::save_experiment(cfg, result);
      print_summary(result);
    } else if (*extra) {
      const auto cfg = resolve(extra_o);
      const auto result = rpgcn::run_extra_edges(cfg);
      rpgcn::save_experiment(cfg, result);
      print_summary(result);
    } else if (*plot) {
      for (const auto& path : rpgcn::emit_plots(plot_inputs, plot_out)) std::cout << path.string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
