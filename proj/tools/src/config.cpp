#include "config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "fincon/error.hpp"
#include "toml.hpp"

namespace fincon::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void check_keys(const json& table, const std::string& where, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : table.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ValidationError("unknown key '" + key + "' in " + where);
    }
  }
}

const json* find(const json& table, const std::string& key) {
  const auto it = table.find(key);
  return it == table.end() ? nullptr : &*it;
}

const json& require_table(const json& v, const std::string& where) {
  if (!v.is_object()) throw ValidationError(where + " must be a table");
  return v;
}

std::string get_string(const json& v, const std::string& where) {
  if (!v.is_string()) throw ValidationError(where + " must be a string");
  return v.get<std::string>();
}

std::int64_t get_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ValidationError(where + " must be an integer");
  return v.get<std::int64_t>();
}

double get_double(const json& v, const std::string& where) {
  if (!v.is_number()) throw ValidationError(where + " must be a number");
  return v.get<double>();
}

bool get_bool(const json& v, const std::string& where) {
  if (!v.is_boolean()) throw ValidationError(where + " must be true or false");
  return v.get<bool>();
}

YearMonth get_date(const json& v, const std::string& where) {
  const std::string s = get_string(v, where);
  try {
    return YearMonth::parse(s);
  } catch (const Error& e) {
    throw ValidationError(where + ": " + e.what());
  }
}

std::vector<std::string> get_strings(const json& v, const std::string& where) {
  if (!v.is_array()) throw ValidationError(where + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& e : v) out.push_back(get_string(e, where));
  return out;
}

fs::path get_path(const json& v, const std::string& where, const fs::path& base) {
  fs::path p = get_string(v, where);
  return p.is_absolute() ? p : base / p;
}

void set_int(const json& t, const char* key, const std::string& where, int& dst) {
  if (const json* v = find(t, key)) dst = static_cast<int>(get_int(*v, where + "." + key));
}

void set_double(const json& t, const char* key, const std::string& where, double& dst) {
  if (const json* v = find(t, key)) dst = get_double(*v, where + "." + key);
}

std::vector<DatePeriod> default_periods() {
  return {{"pre_gfc", {2007, 1}, {2008, 8}},
          {"gfc", {2008, 9}, {2009, 6}},
          {"esdc", {2010, 4}, {2012, 7}},
          {"post_esdc", {2012, 8}, {2022, 5}}};
}

void read_pvar(const json& t, PvarConfig& c, RunConfig& run) {
  const std::string w = "[pvar]";
  check_keys(t, w,
             {"lags", "components", "draws", "burn_in", "factors", "a0", "a1", "b0", "b1", "c0", "d0", "d1",
              "theta", "intensity_step", "fast_draws", "fast_burn_in"});
  set_int(t, "lags", w, c.lags);
  set_int(t, "components", w, c.components);
  set_int(t, "draws", w, c.draws);
  set_int(t, "burn_in", w, c.burn_in);
  set_int(t, "factors", w, c.factors);
  set_double(t, "a0", w, c.a0);
  set_double(t, "a1", w, c.a1);
  set_double(t, "b0", w, c.b0);
  set_double(t, "b1", w, c.b1);
  set_double(t, "c0", w, c.c0);
  set_double(t, "d0", w, c.d0);
  set_double(t, "d1", w, c.d1);
  set_double(t, "theta", w, c.theta);
  set_double(t, "intensity_step", w, c.intensity_step);
  set_int(t, "fast_draws", w, run.fast_draws);
  set_int(t, "fast_burn_in", w, run.fast_burn_in);
}

void read_fsv(const json& t, FsvPriors& p) {
  const std::string w = "[fsv]";
  check_keys(t, w,
             {"loading_shape", "row_shape", "row_rate", "mean_mean", "mean_var", "sigma2_shape", "sigma2_rate",
              "rho_a", "rho_b"});
  set_double(t, "loading_shape", w, p.loading_shape);
  set_double(t, "row_shape", w, p.row_shape);
  set_double(t, "row_rate", w, p.row_rate);
  set_double(t, "mean_mean", w, p.mean_mean);
  set_double(t, "mean_var", w, p.mean_var);
  set_double(t, "sigma2_shape", w, p.sigma2_shape);
  set_double(t, "sigma2_rate", w, p.sigma2_rate);
  set_double(t, "rho_a", w, p.rho_a);
  set_double(t, "rho_b", w, p.rho_b);
}

}  // namespace

const DatePeriod& RunConfig::period(std::string_view name) const {
  for (const auto& p : periods) {
    if (p.name == name) return p;
  }
  throw ValidationError("unknown period '" + std::string(name) + "'");
}

PvarConfig RunConfig::effective_pvar() const {
  PvarConfig c = pvar;
  if (fast) {
    c.draws = fast_draws;
    c.burn_in = fast_burn_in;
  }
  return c;
}

void RunConfig::validate() const {
  effective_pvar().validate();
  if (horizons.empty()) throw ValidationError("horizons must be nonempty");
  std::set<int> seen_h;
  for (int h : horizons) {
    if (h < 1) throw ValidationError("horizons must be positive, got " + std::to_string(h));
    if (!seen_h.insert(h).second) throw ValidationError("duplicate horizon " + std::to_string(h));
  }
  if (min_train < 10) throw ValidationError("min_train must be at least 10");
  if (jobs < 1) throw ValidationError("jobs must be at least 1");
  if (clusters < 1) throw ValidationError("[blockmodel].clusters must be at least 1");
  if (restarts < 1) throw ValidationError("[blockmodel].restarts must be at least 1");
  if (block_horizon < 1) throw ValidationError("[blockmodel].horizon must be positive");
  std::set<std::string> names;
  for (const auto& p : periods) {
    if (p.end < p.start) throw ValidationError("period '" + p.name + "' ends before it starts");
    if (!names.insert(p.name).second) throw ValidationError("duplicate period '" + p.name + "'");
  }
  if (markets.empty()) throw ValidationError("config defines no [markets.<name>] tables");
  for (const auto& m : markets) {
    if (!fs::is_regular_file(m.path)) {
      throw ValidationError("market '" + m.name + "': file not found: " + m.path.string());
    }
    if (m.weights && !fs::is_regular_file(*m.weights)) {
      throw ValidationError("market '" + m.name + "': weights file not found: " + m.weights->string());
    }
    if (m.holdout_end && *m.holdout_end < m.holdout_start) {
      throw ValidationError("market '" + m.name + "': holdout_end precedes holdout_start");
    }
    for (const auto& p : m.periods) {
      if (!names.count(p)) throw ValidationError("market '" + m.name + "' references unknown period '" + p + "'");
    }
  }
  for (const auto& c : chow_lin) {
    for (const auto& f : {c.annual, c.indicator}) {
      if (!fs::is_regular_file(f)) throw ValidationError("chow_lin '" + c.name + "': file not found: " + f.string());
    }
  }
  if (taylor) {
    if (!fs::is_regular_file(taylor->macro)) {
      throw ValidationError("[taylor]: macro file not found: " + taylor->macro.string());
    }
    if (taylor->end < taylor->start) throw ValidationError("[taylor]: end precedes start");
    for (const auto& name : taylor->merge) {
      const bool known = std::any_of(chow_lin.begin(), chow_lin.end(), [&](const auto& c) { return c.name == name; });
      if (!known) throw ValidationError("[taylor].merge references unknown chow_lin entry '" + name + "'");
    }
  }
  for (const auto& [model, files] : forecast_eval.models) {
    if (model == "pvar") throw ValidationError("[forecast_eval.models]: 'pvar' is reserved for the model's own forecasts");
    for (const auto& [market, file] : files) {
      if (!fs::is_regular_file(file)) {
        throw ValidationError("forecast model '" + model + "': file not found: " + file.string());
      }
    }
  }
}

RunConfig parse_run_config(std::string_view text, const fs::path& base_dir) {
  const json root = parse_toml(text);
  check_keys(root, "top level",
             {"seed", "output_dir", "fast", "jobs", "horizons", "min_train", "pvar", "fsv", "posterior", "periods",
              "blockmodel", "markets", "chow_lin", "taylor", "forecast_eval"});
  RunConfig c;
  c.output_dir = base_dir / "output";
  if (const json* v = find(root, "seed")) {
    const std::int64_t s = get_int(*v, "seed");
    if (s < 0) throw ValidationError("seed must be nonnegative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (const json* v = find(root, "output_dir")) c.output_dir = get_path(*v, "output_dir", base_dir);
  if (const json* v = find(root, "fast")) c.fast = get_bool(*v, "fast");
  if (const json* v = find(root, "jobs")) c.jobs = static_cast<unsigned>(std::max<std::int64_t>(0, get_int(*v, "jobs")));
  if (const json* v = find(root, "min_train")) c.min_train = get_int(*v, "min_train");
  if (const json* v = find(root, "horizons")) {
    if (!v->is_array()) throw ValidationError("horizons must be an array of integers");
    c.horizons.clear();
    for (const auto& h : *v) c.horizons.push_back(static_cast<int>(get_int(h, "horizons")));
  }
  if (const json* v = find(root, "pvar")) read_pvar(require_table(*v, "[pvar]"), c.pvar, c);
  if (const json* v = find(root, "fsv")) read_fsv(require_table(*v, "[fsv]"), c.pvar.fsv);
  if (const json* v = find(root, "posterior")) {
    check_keys(require_table(*v, "[posterior]"), "[posterior]", {"dump"});
    if (const json* d = find(*v, "dump")) c.dump_posterior = get_bool(*d, "[posterior].dump");
  }

  if (const json* v = find(root, "periods")) {
    for (const auto& [name, range] : require_table(*v, "[periods]").items()) {
      const std::string w = "[periods]." + name;
      if (!range.is_array() || range.size() != 2) throw ValidationError(w + " must be [\"start\", \"end\"]");
      c.periods.push_back({name, get_date(range[0], w), get_date(range[1], w)});
    }
  } else {
    c.periods = default_periods();
  }

  if (const json* v = find(root, "blockmodel")) {
    const json& t = require_table(*v, "[blockmodel]");
    check_keys(t, "[blockmodel]", {"clusters", "restarts", "horizon"});
    set_int(t, "clusters", "[blockmodel]", c.clusters);
    set_int(t, "restarts", "[blockmodel]", c.restarts);
    set_int(t, "horizon", "[blockmodel]", c.block_horizon);
  }

  if (const json* v = find(root, "markets")) {
    for (const auto& [name, table] : require_table(*v, "[markets]").items()) {
      const std::string w = "[markets." + name + "]";
      const json& t = require_table(table, w);
      check_keys(t, w, {"path", "holdout_start", "holdout_end", "periods", "weights"});
      if (name.empty() || !std::all_of(name.begin(), name.end(), [](char ch) {
            return (ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9') || ch == '_';
          })) {
        throw ValidationError(w + ": market names use lowercase letters, digits and '_'");
      }
      MarketConfig m;
      m.name = name;
      const json* path = find(t, "path");
      if (!path) throw ValidationError(w + " is missing 'path'");
      m.path = get_path(*path, w + ".path", base_dir);
      const json* hs = find(t, "holdout_start");
      if (!hs) throw ValidationError(w + " is missing 'holdout_start'");
      m.holdout_start = get_date(*hs, w + ".holdout_start");
      if (const json* he = find(t, "holdout_end")) m.holdout_end = get_date(*he, w + ".holdout_end");
      if (const json* wt = find(t, "weights")) m.weights = get_path(*wt, w + ".weights", base_dir);
      if (const json* p = find(t, "periods")) {
        m.periods = get_strings(*p, w + ".periods");
      } else {
        const bool target2 = name == "t2";
        for (const auto& p : c.periods) {
          if (!target2 || p.name == "esdc" || p.name == "post_esdc") m.periods.push_back(p.name);
        }
      }
      c.markets.push_back(std::move(m));
    }
  }

  if (const json* v = find(root, "chow_lin")) {
    for (const auto& [name, table] : require_table(*v, "[chow_lin]").items()) {
      const std::string w = "[chow_lin." + name + "]";
      const json& t = require_table(table, w);
      check_keys(t, w, {"annual", "indicator"});
      const json* a = find(t, "annual");
      const json* i = find(t, "indicator");
      if (!a || !i) throw ValidationError(w + " needs 'annual' and 'indicator'");
      c.chow_lin.push_back({name, get_path(*a, w + ".annual", base_dir), get_path(*i, w + ".indicator", base_dir)});
    }
  }

  if (const json* v = find(root, "taylor")) {
    const json& t = require_table(*v, "[taylor]");
    check_keys(t, "[taylor]", {"macro", "start", "end", "merge"});
    TaylorConfig tc;
    const json* macro = find(t, "macro");
    if (!macro) throw ValidationError("[taylor] is missing 'macro'");
    tc.macro = get_path(*macro, "[taylor].macro", base_dir);
    if (const json* s = find(t, "start")) tc.start = get_date(*s, "[taylor].start");
    if (const json* e = find(t, "end")) tc.end = get_date(*e, "[taylor].end");
    if (const json* m = find(t, "merge")) tc.merge = get_strings(*m, "[taylor].merge");
    c.taylor = std::move(tc);
  }

  if (const json* v = find(root, "forecast_eval")) {
    const json& t = require_table(*v, "[forecast_eval]");
    check_keys(t, "[forecast_eval]", {"benchmark", "models"});
    if (const json* b = find(t, "benchmark")) c.forecast_eval.benchmark = get_string(*b, "[forecast_eval].benchmark");
    if (const json* models = find(t, "models")) {
      for (const auto& [model, files] : require_table(*models, "[forecast_eval.models]").items()) {
        const std::string w = "[forecast_eval.models]." + model;
        for (const auto& [market, file] : require_table(files, w).items()) {
          c.forecast_eval.models[model][market] = get_path(file, w + "." + market, base_dir);
        }
      }
    }
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_run_config(ss.str(), path.parent_path().empty() ? fs::path(".") : path.parent_path());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace fincon::cli
