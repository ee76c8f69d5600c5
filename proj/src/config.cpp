#include "nls/config.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <string>

#include "nls/check.hpp"

namespace nls {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::invalid_argument("config: " + path + ": " + what);
}

void check_keys(const json& obj, const std::string& path,
                const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (allowed.find(it.key()) == allowed.end())
      fail(path + "." + it.key(), "unknown key");
}

double get_num(const json& obj, const std::string& path, const std::string& key,
               double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  return v.get<double>();
}

int get_int(const json& obj, const std::string& path, const std::string& key,
            int fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
  return v.get<int>();
}

bool get_bool(const json& obj, const std::string& path, const std::string& key,
              bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) fail(path + "." + key, "expected a boolean");
  return v.get<bool>();
}

std::string get_str(const json& obj, const std::string& path,
                    const std::string& key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

void expect(bool cond, const std::string& path, const std::string& what) {
  if (!cond) fail(path, what);
}

ProbeSpec parse_probe(const json& obj, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  const std::string kind = get_str(obj, path, "kind", "");
  ProbeSpec probe;
  if (kind == "weighted") {
    check_keys(obj, path, {"kind", "sigma"});
    probe.kind = ProbeSpec::Kind::Weighted;
    probe.sigma = get_num(obj, path, "sigma", probe.sigma);
    expect(std::isfinite(probe.sigma) && probe.sigma > 0.0, path + ".sigma",
           "must be positive");
  } else if (kind == "lp" || kind == "lp-pair") {
    check_keys(obj, path, {"kind", "p"});
    probe.kind = kind == "lp" ? ProbeSpec::Kind::Lp : ProbeSpec::Kind::LpPair;
    probe.p = get_num(obj, path, "p", probe.p);
    expect(std::isfinite(probe.p) && probe.p > 1.0, path + ".p",
           "must exceed 1");
  } else {
    fail(path + ".kind", "must be one of weighted, lp, lp-pair");
  }
  return probe;
}

json probe_to_json(const ProbeSpec& probe) {
  json j;
  switch (probe.kind) {
    case ProbeSpec::Kind::Weighted:
      j["kind"] = "weighted";
      j["sigma"] = probe.sigma;
      break;
    case ProbeSpec::Kind::Lp:
      j["kind"] = "lp";
      j["p"] = probe.p;
      break;
    case ProbeSpec::Kind::LpPair:
      j["kind"] = "lp-pair";
      j["p"] = probe.p;
      break;
  }
  return j;
}

bool near_multiple(double value, double unit) {
  const double q = value / unit;
  return std::abs(q - std::lround(q)) <= 1e-9 * std::max(1.0, std::abs(q)) &&
         std::lround(q) >= 1;
}

void validate(const ExperimentConfig& c) {
  expect(c.grid_n >= 16 && c.grid_n <= 4096 && c.grid_n % 2 == 0, "grid.n",
         "must be even and within [16, 4096]");
  expect(std::isfinite(c.grid_length) && c.grid_length > 0.0, "grid.length",
         "must be positive");

  expect(c.potential_kind == "gaussian-well" ||
             c.potential_kind == "compact-bump" || c.potential_kind == "zero",
         "potential.kind", "must be one of gaussian-well, compact-bump, zero");
  expect(std::isfinite(c.potential_depth) && c.potential_depth >= 0.0,
         "potential.depth", "must be nonnegative");
  expect(std::isfinite(c.potential_width) && c.potential_width > 0.0,
         "potential.width", "must be positive");

  if (c.nonlinearity_terms.empty()) {
    expect(c.nonlinearity_name == "cubic" ||
               c.nonlinearity_name == "supercritical" ||
               c.nonlinearity_name == "subcritical" ||
               c.nonlinearity_name == "cubic-subcritical-mix" ||
               c.nonlinearity_name == "zero",
           "nonlinearity.name", "not a built-in");
  } else {
    expect(!c.nonlinearity_name.empty(), "nonlinearity.name", "must be set");
    for (const PowerTerm& t : c.nonlinearity_terms) {
      expect(std::isfinite(t.coupling) && t.coupling != 0.0,
             "nonlinearity.terms.coupling", "must be finite and nonzero");
      expect(std::isfinite(t.alpha) && t.alpha > 0.5,
             "nonlinearity.terms.alpha", "must exceed 1/2");
    }
  }

  expect(std::isfinite(c.a_min) && std::isfinite(c.a_max) && 0.0 < c.a_min &&
             c.a_min < c.a_max,
         "branch", "needs 0 < a_min < a_max");
  expect(std::isfinite(c.ratio) && c.ratio > 1.0, "branch.ratio",
         "must exceed 1");

  expect(std::isfinite(c.a0) && c.a0 >= 0.0 && c.a0 <= c.a_max, "run.a0",
         "must lie in [0, a_max]");
  expect(std::isfinite(c.radiation_amplitude) && c.radiation_amplitude >= 0.0,
         "run.radiation_amplitude", "must be nonnegative");
  expect(std::isfinite(c.radiation_width) && c.radiation_width > 0.0,
         "run.radiation_width", "must be positive");
  expect(std::isfinite(c.radiation_band) && c.radiation_band > 0.0,
         "run.radiation_band", "must be positive");
  expect(std::isfinite(c.time) && c.time > 0.0, "run.time", "must be positive");
  expect(std::isfinite(c.dt) && c.dt > 0.0, "run.dt", "must be positive");
  expect(std::isfinite(c.sample_dt) && c.sample_dt > 0.0, "run.sample_dt",
         "must be positive");
  expect(near_multiple(c.sample_dt, c.dt), "run.sample_dt",
         "must be an integer multiple of dt");
  expect(near_multiple(c.time, c.sample_dt), "run.time",
         "must be an integer multiple of sample_dt");
  expect(std::isfinite(c.phi_max) && c.phi_max >= 0.0, "run.phi_max",
         "must be nonnegative");
  expect(c.snapshot_stride >= 0, "run.snapshot_stride", "must be nonnegative");

  expect(std::isfinite(c.absorber.strength) && c.absorber.strength >= 0.0,
         "absorber.strength", "must be nonnegative");
  expect(std::isfinite(c.absorber.start_fraction) &&
             c.absorber.start_fraction > 0.0 && c.absorber.start_fraction < 1.0,
         "absorber.start_fraction", "must lie in (0, 1)");
  expect(std::isfinite(c.absorber.power) && c.absorber.power >= 1.0,
         "absorber.power", "must be at least 1");

  expect(c.ensemble >= 1, "packets.ensemble", "must be at least 1");
  expect(std::isfinite(c.cadence) && c.cadence > 0.0, "packets.cadence",
         "must be positive");
  expect(std::isfinite(c.carrier_min) && std::isfinite(c.carrier_max) &&
             0.0 < c.carrier_min && c.carrier_min <= c.carrier_max,
         "packets", "needs 0 < carrier_min <= carrier_max");
  expect(std::isfinite(c.packet_width) && c.packet_width > 0.0,
         "packets.width", "must be positive");

  expect(std::isfinite(c.fit_t_min) && c.fit_t_min > 0.0, "fit.t_min",
         "must be positive");
  expect(std::isfinite(c.fit_t_max) &&
             (c.fit_t_max == 0.0 || c.fit_t_max > c.fit_t_min),
         "fit.t_max", "must be 0 or exceed t_min");
  expect(std::isfinite(c.tolerance) && c.tolerance > 0.0, "fit.tolerance",
         "must be positive");
  expect(std::isfinite(c.p0) && c.p0 > 2.0, "fit.p0", "must exceed 2");
  expect(std::isfinite(c.q0) && (c.q0 == 0.0 || c.q0 > 2.0), "fit.q0",
         "must exceed 2, or be 0 to derive it from the nonlinearity");

  expect(!c.output_dir.empty(), "output_dir", "must be nonempty");
}

}  // namespace

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return a.grid_n == b.grid_n && a.grid_length == b.grid_length &&
         a.potential_kind == b.potential_kind &&
         a.potential_depth == b.potential_depth &&
         a.potential_width == b.potential_width &&
         a.nonlinearity_name == b.nonlinearity_name &&
         a.nonlinearity_terms == b.nonlinearity_terms && a.a_min == b.a_min &&
         a.a_max == b.a_max && a.ratio == b.ratio && a.a0 == b.a0 &&
         a.radiation_amplitude == b.radiation_amplitude &&
         a.radiation_width == b.radiation_width &&
         a.radiation_band == b.radiation_band && a.time == b.time &&
         a.dt == b.dt && a.sample_dt == b.sample_dt && a.phi_max == b.phi_max &&
         a.snapshot_stride == b.snapshot_stride && a.probes == b.probes &&
         a.absorber.enabled == b.absorber.enabled &&
         a.absorber.strength == b.absorber.strength &&
         a.absorber.start_fraction == b.absorber.start_fraction &&
         a.absorber.power == b.absorber.power && a.ensemble == b.ensemble &&
         a.cadence == b.cadence && a.carrier_min == b.carrier_min &&
         a.carrier_max == b.carrier_max && a.packet_width == b.packet_width &&
         a.fit_t_min == b.fit_t_min && a.fit_t_max == b.fit_t_max &&
         a.tolerance == b.tolerance && a.p0 == b.p0 && a.q0 == b.q0 &&
         a.output_dir == b.output_dir && a.seed == b.seed;
}

ExperimentConfig parse_config(const std::string& text) {
  json root = json::parse(text, nullptr, false);
  if (root.is_discarded()) fail("$", "not valid JSON");
  check_keys(root, "$",
             {"grid", "potential", "nonlinearity", "branch", "run", "absorber",
              "packets", "fit", "output_dir", "seed"});

  ExperimentConfig c;

  if (root.contains("grid")) {
    const json& g = root.at("grid");
    check_keys(g, "grid", {"n", "length"});
    c.grid_n = get_int(g, "grid", "n", c.grid_n);
    c.grid_length = get_num(g, "grid", "length", c.grid_length);
  }

  if (root.contains("potential")) {
    const json& p = root.at("potential");
    check_keys(p, "potential", {"kind", "depth", "width"});
    c.potential_kind = get_str(p, "potential", "kind", c.potential_kind);
    c.potential_depth = get_num(p, "potential", "depth", c.potential_depth);
    c.potential_width = get_num(p, "potential", "width", c.potential_width);
  }

  if (root.contains("nonlinearity")) {
    const json& n = root.at("nonlinearity");
    if (n.is_string()) {
      c.nonlinearity_name = n.get<std::string>();
      c.nonlinearity_terms.clear();
    } else if (n.is_object()) {
      check_keys(n, "nonlinearity", {"name", "terms"});
      c.nonlinearity_name = get_str(n, "nonlinearity", "name", "");
      c.nonlinearity_terms.clear();
      if (n.contains("terms")) {
        const json& terms = n.at("terms");
        if (!terms.is_array()) fail("nonlinearity.terms", "expected an array");
        for (std::size_t i = 0; i < terms.size(); ++i) {
          const std::string path =
              "nonlinearity.terms[" + std::to_string(i) + "]";
          check_keys(terms.at(i), path, {"coupling", "alpha"});
          PowerTerm t;
          t.coupling = get_num(terms.at(i), path, "coupling", 0.0);
          t.alpha = get_num(terms.at(i), path, "alpha", 0.0);
          c.nonlinearity_terms.push_back(t);
        }
      }
    } else {
      fail("nonlinearity", "expected a name or an object");
    }
  }

  if (root.contains("branch")) {
    const json& b = root.at("branch");
    check_keys(b, "branch", {"a_min", "a_max", "ratio"});
    c.a_min = get_num(b, "branch", "a_min", c.a_min);
    c.a_max = get_num(b, "branch", "a_max", c.a_max);
    c.ratio = get_num(b, "branch", "ratio", c.ratio);
  }

  if (root.contains("run")) {
    const json& r = root.at("run");
    check_keys(r, "run",
               {"a0", "radiation_amplitude", "radiation_width",
                "radiation_band", "time", "dt",
                "sample_dt", "phi_max", "snapshot_stride", "probes"});
    c.a0 = get_num(r, "run", "a0", c.a0);
    c.radiation_amplitude =
        get_num(r, "run", "radiation_amplitude", c.radiation_amplitude);
    c.radiation_width = get_num(r, "run", "radiation_width", c.radiation_width);
    c.radiation_band = get_num(r, "run", "radiation_band", c.radiation_band);
    c.time = get_num(r, "run", "time", c.time);
    c.dt = get_num(r, "run", "dt", c.dt);
    c.sample_dt = get_num(r, "run", "sample_dt", c.sample_dt);
    c.phi_max = get_num(r, "run", "phi_max", c.phi_max);
    c.snapshot_stride = get_int(r, "run", "snapshot_stride", c.snapshot_stride);
    if (r.contains("probes")) {
      const json& probes = r.at("probes");
      if (!probes.is_array()) fail("run.probes", "expected an array");
      c.probes.clear();
      for (std::size_t i = 0; i < probes.size(); ++i)
        c.probes.push_back(parse_probe(
            probes.at(i), "run.probes[" + std::to_string(i) + "]"));
    }
  }

  if (root.contains("absorber")) {
    const json& a = root.at("absorber");
    check_keys(a, "absorber", {"enabled", "strength", "start_fraction", "power"});
    c.absorber.enabled = get_bool(a, "absorber", "enabled", c.absorber.enabled);
    c.absorber.strength = get_num(a, "absorber", "strength", c.absorber.strength);
    c.absorber.start_fraction =
        get_num(a, "absorber", "start_fraction", c.absorber.start_fraction);
    c.absorber.power = get_num(a, "absorber", "power", c.absorber.power);
  }

  if (root.contains("packets")) {
    const json& p = root.at("packets");
    check_keys(p, "packets",
               {"ensemble", "cadence", "carrier_min", "carrier_max", "width"});
    c.ensemble = get_int(p, "packets", "ensemble", c.ensemble);
    c.cadence = get_num(p, "packets", "cadence", c.cadence);
    c.carrier_min = get_num(p, "packets", "carrier_min", c.carrier_min);
    c.carrier_max = get_num(p, "packets", "carrier_max", c.carrier_max);
    c.packet_width = get_num(p, "packets", "width", c.packet_width);
  }

  if (root.contains("fit")) {
    const json& f = root.at("fit");
    check_keys(f, "fit", {"t_min", "t_max", "tolerance", "p0", "q0"});
    c.fit_t_min = get_num(f, "fit", "t_min", c.fit_t_min);
    c.fit_t_max = get_num(f, "fit", "t_max", c.fit_t_max);
    c.tolerance = get_num(f, "fit", "tolerance", c.tolerance);
    c.p0 = get_num(f, "fit", "p0", c.p0);
    c.q0 = get_num(f, "fit", "q0", c.q0);
  }

  c.output_dir = get_str(root, "$", "output_dir", c.output_dir);
  if (root.contains("seed")) {
    const json& s = root.at("seed");
    if (!s.is_number_integer() || s.is_number_float() ||
        (s.is_number_integer() && !s.is_number_unsigned() &&
         s.get<long long>() < 0))
      fail("seed", "expected a nonnegative integer");
    c.seed = s.get<std::uint64_t>();
  }

  validate(c);
  return c;
}

std::string serialize_config(const ExperimentConfig& c) {
  json root;
  root["grid"] = {{"n", c.grid_n}, {"length", c.grid_length}};
  root["potential"] = {{"kind", c.potential_kind},
                       {"depth", c.potential_depth},
                       {"width", c.potential_width}};
  if (c.nonlinearity_terms.empty()) {
    root["nonlinearity"] = c.nonlinearity_name;
  } else {
    json terms = json::array();
    for (const PowerTerm& t : c.nonlinearity_terms)
      terms.push_back({{"coupling", t.coupling}, {"alpha", t.alpha}});
    root["nonlinearity"] = {{"name", c.nonlinearity_name}, {"terms", terms}};
  }
  root["branch"] = {{"a_min", c.a_min}, {"a_max", c.a_max}, {"ratio", c.ratio}};
  json probes = json::array();
  for (const ProbeSpec& probe : c.probes) probes.push_back(probe_to_json(probe));
  root["run"] = {{"a0", c.a0},
                 {"radiation_amplitude", c.radiation_amplitude},
                 {"radiation_width", c.radiation_width},
                 {"radiation_band", c.radiation_band},
                 {"time", c.time},
                 {"dt", c.dt},
                 {"sample_dt", c.sample_dt},
                 {"phi_max", c.phi_max},
                 {"snapshot_stride", c.snapshot_stride},
                 {"probes", probes}};
  root["absorber"] = {{"enabled", c.absorber.enabled},
                      {"strength", c.absorber.strength},
                      {"start_fraction", c.absorber.start_fraction},
                      {"power", c.absorber.power}};
  root["packets"] = {{"ensemble", c.ensemble},
                     {"cadence", c.cadence},
                     {"carrier_min", c.carrier_min},
                     {"carrier_max", c.carrier_max},
                     {"width", c.packet_width}};
  root["fit"] = {{"t_min", c.fit_t_min},
                 {"t_max", c.fit_t_max},
                 {"tolerance", c.tolerance},
                 {"p0", c.p0},
                 {"q0", c.q0}};
  root["output_dir"] = c.output_dir;
  root["seed"] = c.seed;
  return root.dump(2) + "\n";
}

ExperimentConfig load_config_file(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  require(fp != nullptr, "config: cannot open " + path);
  std::string text;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, fp)) > 0) text.append(buf, got);
  std::fclose(fp);
  return parse_config(text);
}

NonlinearitySpec resolve_nonlinearity(const ExperimentConfig& cfg) {
  if (!cfg.nonlinearity_terms.empty())
    return sum_of_powers(cfg.nonlinearity_terms, cfg.nonlinearity_name);
  if (cfg.nonlinearity_name == "zero") return zero_nonlinearity();
  return builtin_nonlinearity(cfg.nonlinearity_name);
}

}  // namespace nls
