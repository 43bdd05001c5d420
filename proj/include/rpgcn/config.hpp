#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <sstream>
#include <string>
#include <vector>

#include "rpgcn/error.hpp"
#include "rpgcn/experiment.hpp"

namespace rpgcn {

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

template <typename T>
T parse_number(const std::string& s, const std::string& key) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::Parse, "config key '" + key + "': cannot parse '" + s + "'");
  }
  return v;
}

inline bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw Error(ErrorKind::Parse, "config key '" + key + "': expected true/false, got '" + s + "'");
}

}  // namespace detail

/// Parses "1,2,5" or "1-20" (inclusive) or a mix such as "1-10,15,20".
inline std::vector<std::size_t> parse_count_list(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& item : detail::split_list(s)) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      out.push_back(detail::parse_number<std::size_t>(item, "list"));
      continue;
    }
    const auto lo = detail::parse_number<std::size_t>(item.substr(0, dash), "list");
    const auto hi = detail::parse_number<std::size_t>(item.substr(dash + 1), "list");
    if (hi < lo) throw Error(ErrorKind::Parse, "descending range '" + item + "'");
    for (auto v = lo; v <= hi; ++v) out.push_back(v);
  }
  return out;
}

inline std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : detail::split_list(s)) out.push_back(detail::parse_number<double>(item, "list"));
  return out;
}

/// Applies INI sections on top of `cfg`. Unknown sections or keys are errors.
inline void apply_config(ExperimentConfig& cfg, const boost::property_tree::ptree& tree) {
  BuilderSpec rp;
  BuilderSpec knn{BuilderKind::Knn};
  BuilderSpec heat{BuilderKind::Heat};
  BuilderSpec st{BuilderKind::SelfTuning};
  for (const auto& b : cfg.builders) {
    switch (b.kind) {
      case BuilderKind::RpForest: rp = b; break;
      case BuilderKind::Knn: knn = b; break;
      case BuilderKind::Heat: heat = b; break;
      case BuilderKind::SelfTuning: st = b; break;
    }
  }
  std::vector<std::string> builder_list;
  for (const auto& b : cfg.builders) builder_list.push_back(b.name());

  for (const auto& [section, body] : tree) {
    for (const auto& [key, node] : body) {
      const std::string value = node.get_value<std::string>();
      const std::string full = section + "." + key;
      auto as_size = [&] { return detail::parse_number<std::size_t>(value, full); };
      auto as_double = [&] { return detail::parse_number<double>(value, full); };

      if (full == "dataset.name") cfg.dataset.preset = value;
      else if (full == "dataset.csv") cfg.dataset.csv_path = value;
      else if (full == "dataset.label_col") cfg.dataset.label_column = value;
      else if (full == "dataset.standardize") cfg.dataset.standardize = detail::parse_bool(value, full);
      else if (full == "builders.list") builder_list = detail::split_list(value);
      else if (full == "rpforest.trees") rp.trees = as_size();
      else if (full == "rpforest.max_leaf_size") rp.max_leaf_size = as_size();
      else if (full == "rpforest.split_rule") rp.split_rule = parse_split_rule(value);
      else if (full == "knn.k") knn.k = as_size();
      else if (full == "heat.sigma") heat.sigma = as_double();
      else if (full == "selftuning.k") st.self_tuning_k = as_size();
      else if (full == "split.train_per_class") cfg.split.train_per_class = as_size();
      else if (full == "split.val_per_class") cfg.split.val_per_class = as_size();
      else if (full == "split.train") cfg.split.train = as_size();
      else if (full == "split.val") cfg.split.val = as_size();
      else if (full == "gcn.hidden") cfg.gcn.hidden = as_size();
      else if (full == "gcn.learning_rate") cfg.gcn.learning_rate = as_double();
      else if (full == "gcn.weight_decay") cfg.gcn.weight_decay = as_double();
      else if (full == "gcn.epochs") cfg.gcn.max_epochs = as_size();
      else if (full == "gcn.patience") cfg.gcn.patience = as_size();
      else if (full == "gcn.dropout") cfg.gcn.dropout = as_double();
      else if (full == "run.seed") cfg.seed = detail::parse_number<std::uint64_t>(value, full);
      else if (full == "run.seeds") cfg.seeds = as_size();
      else if (full == "run.jobs") cfg.jobs = static_cast<unsigned>(as_size());
      else if (full == "sweep.trees") cfg.sweep_trees = parse_count_list(value);
      else if (full == "extra_edges.percents") cfg.extra_percents = parse_double_list(value);
      else if (full == "extra_edges.weight") cfg.extra_edge_weight = as_double();
      else throw Error(ErrorKind::Parse, "unknown config key '" + full + "'");
    }
  }

  cfg.builders.clear();
  for (const auto& name : builder_list) {
    switch (parse_builder_kind(name)) {
      case BuilderKind::RpForest: cfg.builders.push_back(rp); break;
      case BuilderKind::Knn: cfg.builders.push_back(knn); break;
      case BuilderKind::Heat: cfg.builders.push_back(heat); break;
      case BuilderKind::SelfTuning: cfg.builders.push_back(st); break;
    }
  }
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig cfg = {}) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorKind::Parse, e.what());
  }
  apply_config(cfg, tree);
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& text, ExperimentConfig cfg = {}) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorKind::Parse, e.what());
  }
  apply_config(cfg, tree);
  return cfg;
}

}  // namespace rpgcn
