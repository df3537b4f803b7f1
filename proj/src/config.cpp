#include "pfode/config.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "pfode/errors.hpp"

namespace pfode {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("line " + std::to_string(line) + ": " + msg);
}

bool valid_name(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

}  // namespace

const ConfigDocument::Entry* ConfigDocument::Section::find(const std::string& key) const {
  for (const auto& [k, e] : entries)
    if (k == key) return &e;
  return nullptr;
}

const ConfigDocument::Section* ConfigDocument::find(const std::string& name) const {
  for (const auto& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}

ConfigDocument ConfigDocument::parse(const std::string& text) {
  ConfigDocument doc;
  doc.sections.push_back({"", 0, {}});
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(line, "unterminated section header");
      const std::string name = trim(s.substr(1, s.size() - 2));
      if (!valid_name(name)) fail(line, "invalid section name '" + name + "'");
      if (doc.find(name)) fail(line, "duplicate section [" + name + "]");
      doc.sections.push_back({name, line, {}});
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (!valid_name(key)) fail(line, "invalid key '" + key + "'");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (value.empty()) fail(line, "empty value for '" + key + "'");
    Section& sec = doc.sections.back();
    if (sec.find(key)) fail(line, "duplicate key '" + key + "'");
    sec.entries.push_back({key, {value, line}});
  }
  return doc;
}

std::string ConfigDocument::serialize() const {
  std::ostringstream out;
  bool first = true;
  for (const auto& s : sections) {
    if (s.name.empty() && s.entries.empty()) continue;
    if (!s.name.empty()) {
      if (!first) out << '\n';
      out << '[' << s.name << "]\n";
    }
    for (const auto& [k, e] : s.entries) out << k << " = " << e.value << '\n';
    first = false;
  }
  return out.str();
}

bool ConfigDocument::equivalent(const ConfigDocument& other) const {
  using Flat = std::set<std::pair<std::string, std::pair<std::string, std::string>>>;
  const auto flatten = [](const ConfigDocument& d) {
    Flat f;
    std::set<std::string> names;
    for (const auto& s : d.sections) {
      if (!s.name.empty()) names.insert(s.name);
      for (const auto& [k, e] : s.entries) f.insert({s.name, {k, e.value}});
    }
    return std::make_pair(f, names);
  };
  return flatten(*this) == flatten(other);
}

const char* experiment_name(Experiment e) {
  switch (e) {
    case Experiment::quadratic: return "quadratic";
    case Experiment::gaussian_sanity: return "gaussian_sanity";
    case Experiment::heat: return "heat";
  }
  return "?";
}

namespace {

// Typed access to one section; remembers which keys were read so that
// leftovers can be reported as unknown.
class SectionReader {
 public:
  SectionReader(const ConfigDocument::Section* s, std::string name)
      : section_(s), name_(std::move(name)) {}

  bool present() const { return section_ != nullptr; }
  int line() const { return section_ ? section_->line : 0; }

  const ConfigDocument::Entry* get(const std::string& key) {
    if (!section_) return nullptr;
    const auto* e = section_->find(key);
    if (e) used_.insert(key);
    return e;
  }

  void real(const std::string& key, double& out) {
    if (const auto* e = get(key)) out = to_real(*e, key);
  }
  void count(const std::string& key, std::size_t& out) {
    if (const auto* e = get(key)) out = static_cast<std::size_t>(to_u64(e->value, e->line, key));
  }
  void u64(const std::string& key, std::uint64_t& out) {
    if (const auto* e = get(key)) out = to_u64(e->value, e->line, key);
  }
  void text(const std::string& key, std::string& out) {
    if (const auto* e = get(key)) out = e->value;
  }
  void flag(const std::string& key, bool& out) {
    if (const auto* e = get(key)) {
      if (e->value == "true") out = true;
      else if (e->value == "false") out = false;
      else fail(e->line, "'" + key + "' must be true or false");
    }
  }
  void list(const std::string& key, std::vector<std::string>& out) {
    if (const auto* e = get(key)) {
      out.clear();
      std::istringstream in(e->value);
      std::string item;
      while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) fail(e->line, "empty item in list '" + key + "'");
        out.push_back(item);
      }
      if (out.empty()) fail(e->line, "'" + key + "' must not be empty");
    }
  }
  void count_list(const std::string& key, std::vector<std::size_t>& out) {
    std::vector<std::string> items;
    if (const auto* e = section_ ? section_->find(key) : nullptr) {
      list(key, items);
      out.clear();
      for (const auto& s : items) out.push_back(static_cast<std::size_t>(to_u64(s, e->line, key)));
    }
  }

  void finish() const {
    if (!section_) return;
    for (const auto& [k, e] : section_->entries) {
      if (!used_.count(k)) {
        fail(e.line, "unknown key '" + k + "'" + (name_.empty() ? "" : " in [" + name_ + "]"));
      }
    }
  }

  [[noreturn]] void error(const std::string& key, const std::string& msg) const {
    const auto* e = section_ ? section_->find(key) : nullptr;
    fail(e ? e->line : line(), msg);
  }

 private:
  static double to_real(const ConfigDocument::Entry& e, const std::string& key) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(e.value.c_str(), &end);
    if (end != e.value.c_str() + e.value.size() || errno == ERANGE || !std::isfinite(v)) {
      fail(e.line, "'" + key + "' expects a finite number, got '" + e.value + "'");
    }
    return v;
  }
  static std::uint64_t to_u64(const std::string& s, int line, const std::string& key) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      fail(line, "'" + key + "' expects a nonnegative integer, got '" + s + "'");
    }
    return v;
  }

  const ConfigDocument::Section* section_;
  std::string name_;
  std::set<std::string> used_;
};

}  // namespace

RunConfig RunConfig::from_document(const ConfigDocument& doc) {
  static const std::set<std::string> known{"",         "basis",   "data",     "schedule",
                                           "sampler",  "metrics", "training", "heat"};
  for (const auto& s : doc.sections) {
    if (!known.count(s.name)) fail(s.line, "unknown section [" + s.name + "]");
  }
  RunConfig cfg;

  SectionReader top(doc.find(""), "");
  const auto* exp = top.get("experiment");
  if (!exp) fail(1, "missing top-level key 'experiment'");
  if (exp->value == "quadratic") cfg.experiment = Experiment::quadratic;
  else if (exp->value == "gaussian_sanity") cfg.experiment = Experiment::gaussian_sanity;
  else if (exp->value == "heat") cfg.experiment = Experiment::heat;
  else fail(exp->line, "unknown experiment '" + exp->value + "'");
  top.text("output_dir", cfg.output_dir);
  top.finish();

  SectionReader basis(doc.find("basis"), "basis");
  if (basis.present()) {
    BasisConfig b;
    basis.text("kind", b.kind);
    if (b.kind != "rbf" && b.kind != "bessel") basis.error("kind", "basis kind must be rbf or bessel");
    basis.count("points", b.points);
    basis.real("lower", b.lower);
    basis.real("upper", b.upper);
    basis.real("gain", b.rbf.gain);
    basis.real("length", b.rbf.len);
    basis.real("scale", b.bessel.scale);
    basis.real("power", b.bessel.power);
    basis.count("truncation", b.truncation);
    basis.finish();
    if (!(b.upper > b.lower)) fail(basis.line(), "[basis] needs upper > lower");
    if (b.points < 2) fail(basis.line(), "[basis] points must be >= 2");
    if (b.truncation < 1) fail(basis.line(), "[basis] truncation must be >= 1");
    try {
      b.rbf.validate();
      b.bessel.validate();
    } catch (const Error& e) {
      fail(basis.line(), std::string("[basis] ") + e.what());
    }
    cfg.basis = b;
  } else if (cfg.experiment != Experiment::heat) {
    fail(1, "missing [basis] section (required for experiment '" +
                std::string(experiment_name(cfg.experiment)) + "')");
  }

  SectionReader data(doc.find("data"), "data");
  data.real("noise_variance", cfg.data.noise_variance);
  data.real("mean_scale", cfg.data.mean_scale);
  data.real("variance_ratio", cfg.data.variance_ratio);
  data.finish();
  if (cfg.data.noise_variance < 0.0) data.error("noise_variance", "noise_variance must be >= 0");
  if (cfg.data.variance_ratio < 0.0) data.error("variance_ratio", "variance_ratio must be >= 0");

  SectionReader sched(doc.find("schedule"), "schedule");
  sched.real("logsnr_max", cfg.schedule.logsnr_max);
  sched.real("logsnr_min", cfg.schedule.logsnr_min);
  sched.finish();
  if (!(cfg.schedule.logsnr_max > cfg.schedule.logsnr_min)) {
    fail(sched.line(), "[schedule] needs logsnr_max > logsnr_min");
  }

  SectionReader samp(doc.find("sampler"), "sampler");
  samp.count_list("nfe", cfg.sampler.nfe);
  std::vector<std::string> methods;
  samp.list("methods", methods);
  if (!methods.empty()) {
    cfg.sampler.methods.clear();
    for (const auto& m : methods) {
      try {
        cfg.sampler.methods.push_back(parse_method(m));
      } catch (const Error&) {
        samp.error("methods", "unknown method '" + m + "'");
      }
    }
  }
  samp.count("count", cfg.sampler.count);
  samp.u64("seed", cfg.sampler.seed);
  samp.real("t_eps", cfg.sampler.t_eps);
  samp.text("score", cfg.sampler.score);
  samp.finish();
  if (cfg.sampler.nfe.empty()) samp.error("nfe", "[sampler] nfe list must not be empty");
  for (std::size_t n : cfg.sampler.nfe)
    if (n < 1) samp.error("nfe", "[sampler] every nfe must be >= 1");
  if (!(cfg.sampler.t_eps > 0.0 && cfg.sampler.t_eps < 1.0)) {
    samp.error("t_eps", "[sampler] t_eps must be in (0, 1)");
  }
  if (cfg.sampler.score != "oracle" && cfg.sampler.score != "learned") {
    samp.error("score", "[sampler] score must be oracle or learned");
  }

  SectionReader met(doc.find("metrics"), "metrics");
  met.list("list", cfg.metrics.metrics);
  met.count("projections", cfg.metrics.projections);
  met.count("reference_count", cfg.metrics.reference_count);
  met.count("power_samples", cfg.metrics.power_samples);
  met.real("level", cfg.metrics.test.level);
  met.count("permutations", cfg.metrics.test.permutations);
  met.count("trials", cfg.metrics.test.trials);
  met.count("fpca_components", cfg.metrics.test.fpca_components);
  met.u64("seed", cfg.metrics.test.seed);
  met.finish();
  for (const auto& m : cfg.metrics.metrics) {
    if (m != "sw" && m != "power") met.error("list", "unknown metric '" + m + "'");
  }
  try {
    cfg.metrics.test.validate();
  } catch (const Error& e) {
    fail(met.line(), std::string("[metrics] ") + e.what());
  }
  if (cfg.metrics.projections < 1) met.error("projections", "[metrics] projections must be >= 1");
  if (cfg.metrics.power_samples < 2) met.error("power_samples", "[metrics] power_samples must be >= 2");

  SectionReader train(doc.find("training"), "training");
  train.count("samples_per_bin", cfg.training.samples_per_bin);
  train.count("bins", cfg.training.bins);
  train.real("ridge", cfg.training.ridge);
  train.real("t_min", cfg.training.t_min);
  train.flag("antithetic", cfg.training.antithetic);
  train.u64("seed", cfg.training.seed);
  train.finish();
  try {
    cfg.training.validate();
  } catch (const Error& e) {
    fail(train.line(), std::string("[training] ") + e.what());
  }

  SectionReader heat(doc.find("heat"), "heat");
  if (heat.present()) {
    HeatConfig h;
    heat.real("beta", h.beta);
    heat.real("t_end", h.t_end);
    const bool has_dt = heat.get("dt") != nullptr;
    heat.real("dt", h.dt);
    std::string bc = "dirichlet";
    heat.text("bc", bc);
    if (bc == "dirichlet") h.bc = BoundaryCondition::dirichlet;
    else if (bc == "neumann") h.bc = BoundaryCondition::neumann;
    else heat.error("bc", "[heat] bc must be dirichlet or neumann");
    heat.count("grid_points", h.grid_points);
    heat.count("frames", h.frames);
    heat.count("spatial_modes", h.spatial_modes);
    heat.count("structure_modes", h.structure_modes);
    heat.real("prior_scale", h.prior_scale);
    heat.real("prior_power", h.prior_power);
    heat.real("structure_variance", h.structure_variance);
    heat.count("samples", h.samples);
    heat.flag("self_test", h.self_test);
    heat.count("self_test_terms", h.self_test_terms);
    heat.finish();
    if (!has_dt) fail(heat.line(), "[heat] missing required key 'dt'");
    if (!(h.beta > 0.0)) heat.error("beta", "[heat] beta must be > 0");
    if (!(h.t_end > 0.0)) heat.error("t_end", "[heat] t_end must be > 0");
    if (!(h.dt > 0.0)) heat.error("dt", "[heat] dt must be > 0");
    if (h.grid_points < 4) heat.error("grid_points", "[heat] grid_points must be >= 4");
    if (h.frames < 2) heat.error("frames", "[heat] frames must be >= 2");
    if (h.spatial_modes < 1 || h.spatial_modes + 2 > h.grid_points) {
      heat.error("spatial_modes", "[heat] spatial_modes must be in [1, grid_points - 2]");
    }
    if (h.structure_modes > h.spatial_modes) {
      heat.error("structure_modes", "[heat] structure_modes must not exceed spatial_modes");
    }
    if (!(h.prior_scale > 0.0) || !(h.prior_power > 0.0)) {
      fail(heat.line(), "[heat] prior_scale and prior_power must be > 0");
    }
    if (h.samples < 1) heat.error("samples", "[heat] samples must be >= 1");
    cfg.heat = h;
  } else if (cfg.experiment == Experiment::heat) {
    fail(1, "missing [heat] section (required for experiment 'heat')");
  }
  return cfg;
}

RunConfig RunConfig::parse(const std::string& text) {
  return from_document(ConfigDocument::parse(text));
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

}  // namespace pfode
