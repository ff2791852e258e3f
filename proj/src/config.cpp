#include "zerograds/config.hpp"

#include <fstream>
#include <functional>
#include <map>

#include <boost/algorithm/string/trim.hpp>
#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace zg {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::string current;
  auto flush = [&] {
    boost::algorithm::trim(current);
    if (!current.empty()) items.push_back(current);
    current.clear();
  };
  for (char c : text) {
    if (c == ',') {
      flush();
    } else {
      current += c;
    }
  }
  flush();
  return items;
}

namespace {

using Setter = std::function<void(BenchmarkConfig&, const std::string&)>;

template <typename T>
T as(const std::string& key, const std::string& value) {
  try {
    return boost::lexical_cast<T>(value);
  } catch (const boost::bad_lexical_cast&) {
    throw Error(ErrorKind::kInvalidArgument,
                "invalid argument: cannot parse '" + value + "' for " + key);
  }
}

bool as_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw Error(ErrorKind::kInvalidArgument,
              "invalid argument: expected true/false for " + key + ", got '" + value + "'");
}

// "auto" resets an optional to its task-dependent default.
template <typename T>
std::optional<T> as_optional(const std::string& key, const std::string& value) {
  if (value == "auto") return std::nullopt;
  return as<T>(key, value);
}

#define ZG_FIELD(key, expr) {key, [](BenchmarkConfig& c, const std::string& v) { expr; }}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      ZG_FIELD("run.task", c.tasks = split_list(v)),
      ZG_FIELD("run.method", c.methods = split_list(v)),
      ZG_FIELD("run.budget", c.budget_evals = as<std::int64_t>("run.budget", v)),
      ZG_FIELD("run.seed", c.base_seed = as<std::uint64_t>("run.seed", v)),
      ZG_FIELD("run.log_every", c.run.log_every = as<int>("run.log_every", v)),
      ZG_FIELD("bench.runs", c.runs = as<int>("bench.runs", v)),
      ZG_FIELD("bench.jobs", c.jobs = as<int>("bench.jobs", v)),
      ZG_FIELD("bench.format", c.format = v),
      ZG_FIELD("bench.output", c.output = v),
      ZG_FIELD("sampler.sigma_outer",
               c.run.sigma_outer = as_optional<double>("sampler.sigma_outer", v)),
      ZG_FIELD("sampler.sigma_inner_ratio",
               c.run.sigma_inner_ratio = as<double>("sampler.sigma_inner_ratio", v)),
      ZG_FIELD("sampler.batch_size",
               c.run.batch_size = as_optional<int>("sampler.batch_size", v)),
      ZG_FIELD("surrogate.kind", c.run.zerograds.surrogate.kind = parse_surrogate_kind(v)),
      ZG_FIELD("surrogate.hidden",
               {
                 std::vector<int> sizes;
                 for (const auto& item : split_list(v)) {
                   sizes.push_back(as<int>("surrogate.hidden", item));
                 }
                 c.run.zerograds.surrogate.hidden = sizes;
               }),
      ZG_FIELD("surrogate.activation",
               c.run.zerograds.surrogate.activation = parse_activation(v)),
      ZG_FIELD("surrogate.head", c.run.zerograds.surrogate.head = parse_output_head(v)),
      ZG_FIELD("surrogate.quadratic_init_scale",
               c.run.zerograds.surrogate.quadratic_init_scale =
                   as<double>("surrogate.quadratic_init_scale", v)),
      ZG_FIELD("zerograds.lr_surrogate",
               c.run.zerograds.lr_surrogate = as<double>("zerograds.lr_surrogate", v)),
      ZG_FIELD("zerograds.lr_param",
               c.run.zerograds.lr_param = as<double>("zerograds.lr_param", v)),
      ZG_FIELD("zerograds.lr_param_final",
               c.run.zerograds.lr_param_final = as<double>("zerograds.lr_param_final", v)),
      ZG_FIELD("zerograds.k_inner", c.run.zerograds.k_inner = as<int>("zerograds.k_inner", v)),
      ZG_FIELD("zerograds.warmup", c.run.zerograds.warmup = as<int>("zerograds.warmup", v)),
      ZG_FIELD("zerograds.locality",
               {
                 if (v == "importance") {
                   c.run.zerograds.locality = LocalitySampling::kImportance;
                 } else if (v == "uniform") {
                   c.run.zerograds.locality = LocalitySampling::kUniform;
                 } else {
                   throw Error(ErrorKind::kUnknownName, "unknown locality '" + v + "'");
                 }
               }),
      ZG_FIELD("zerograds.normalize_output",
               c.run.zerograds.normalize_output = as_bool("zerograds.normalize_output", v)),
      ZG_FIELD("spsa.c_frac", c.run.spsa.c_frac = as<double>("spsa.c_frac", v)),
      ZG_FIELD("spsa.lr", c.run.spsa.lr = as<double>("spsa.lr", v)),
      ZG_FIELD("fd.eps_frac", c.run.fd.eps_frac = as<double>("fd.eps_frac", v)),
      ZG_FIELD("fd.lr", c.run.fd.lr = as<double>("fd.lr", v)),
      ZG_FIELD("fr22.sigma", c.run.fr22.sigma = as_optional<double>("fr22.sigma", v)),
      ZG_FIELD("fr22.lr", c.run.fr22.lr = as<double>("fr22.lr", v)),
      ZG_FIELD("sa.t0", c.run.sa.t0 = as_optional<double>("sa.t0", v)),
      ZG_FIELD("sa.alpha", c.run.sa.alpha = as<double>("sa.alpha", v)),
      ZG_FIELD("sa.sigma_prop_frac",
               c.run.sa.sigma_prop_frac = as<double>("sa.sigma_prop_frac", v)),
      ZG_FIELD("ga.population", c.run.ga.population = as<int>("ga.population", v)),
      ZG_FIELD("ga.sigma_mut_frac", c.run.ga.sigma_mut_frac = as<double>("ga.sigma_mut_frac", v)),
      ZG_FIELD("ga.mutation_rate",
               c.run.ga.mutation_rate = as_optional<double>("ga.mutation_rate", v)),
      ZG_FIELD("ga.crossover_rate", c.run.ga.crossover_rate = as<double>("ga.crossover_rate", v)),
      ZG_FIELD("ga.tournament", c.run.ga.tournament = as<int>("ga.tournament", v)),
  };
  return table;
}

#undef ZG_FIELD

}  // namespace

void apply_config_stream(std::istream& in, BenchmarkConfig& cfg) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorKind::kInvalidArgument, std::string("invalid argument: config: ") + e.what());
  }
  const auto& table = setters();
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "invalid argument: config key '" + section + "' is outside any [section]");
    }
    for (const auto& [key, node] : body) {
      const std::string full = section + "." + key;
      const auto it = table.find(full);
      if (it == table.end()) {
        throw Error(ErrorKind::kUnknownName, "unknown config key '" + full + "'");
      }
      std::string value = node.data();
      boost::algorithm::trim(value);
      it->second(cfg, value);
    }
  }
}

void apply_config_file(const std::string& path, BenchmarkConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "io: cannot open config " + path);
  apply_config_stream(in, cfg);
}

}  // namespace zg
