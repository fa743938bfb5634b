#include "selrad_cli/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "selrad/errors.hpp"
#include "selrad_cli/locator.hpp"

namespace selrad::cli {

using json = nlohmann::json;

namespace {

class Context {
 public:
  Context(std::string source, const Locator& loc) : source_(std::move(source)), loc_(loc) {}

  [[noreturn]] void fail(const std::string& pointer, const std::string& msg) const {
    std::ostringstream os;
    os << source_ << ": " << loc_.where(pointer) << ": " << (pointer.empty() ? "/" : pointer) << ": " << msg;
    throw ConfigError(os.str());
  }

 private:
  std::string source_;
  const Locator& loc_;
};

class Section {
 public:
  Section(const json* obj, std::string pointer, const Context& ctx, std::set<std::string> allowed)
      : obj_(obj), pointer_(std::move(pointer)), ctx_(ctx), allowed_(std::move(allowed)) {
    if (obj_ && !obj_->is_object()) ctx_.fail(pointer_, "expected an object");
    if (!obj_) return;
    for (const auto& [key, value] : obj_->items()) {
      if (!allowed_.count(key)) ctx_.fail(at(key), "unknown key \"" + key + "\"");
    }
  }

  std::string at(const std::string& key) const { return pointer_ + "/" + pointer_token(key); }
  const std::string& pointer() const { return pointer_; }
  [[noreturn]] void fail(const std::string& key, const std::string& msg) const { ctx_.fail(at(key), msg); }

  const json* find(const std::string& key) const {
    if (!obj_) return nullptr;
    auto it = obj_->find(key);
    if (it == obj_->end() || it->is_null()) return nullptr;
    return &*it;
  }

  std::optional<double> number(const std::string& key) const {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_number()) fail(key, "expected a number");
    const double x = v->get<double>();
    if (!std::isfinite(x)) fail(key, "must be finite");
    return x;
  }

  double number(const std::string& key, double def) const { return number(key).value_or(def); }

  std::optional<std::int64_t> integer(const std::string& key) const {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_number_integer()) fail(key, "expected an integer");
    if (v->is_number_unsigned() && v->get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
      fail(key, "integer out of range");
    }
    return v->get<std::int64_t>();
  }

  std::optional<std::uint64_t> unsigned_integer(const std::string& key) const {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<std::int64_t>() < 0)) {
      fail(key, "expected a non-negative integer");
    }
    return v->get<std::uint64_t>();
  }

  std::optional<bool> boolean(const std::string& key) const {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_boolean()) fail(key, "expected true or false");
    return v->get<bool>();
  }

  std::optional<std::string> string(const std::string& key) const {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) fail(key, "expected a string");
    return v->get<std::string>();
  }

  std::optional<std::vector<double>> numbers(const std::string& key, std::size_t exact = 0) const {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_array()) fail(key, "expected an array of numbers");
    if (exact && v->size() != exact) fail(key, "expected exactly " + std::to_string(exact) + " numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < v->size(); ++k) {
      const json& e = (*v)[k];
      if (!e.is_number() || !std::isfinite(e.get<double>())) {
        ctx_.fail(at(key) + "/" + std::to_string(k), "expected a finite number");
      }
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::optional<std::vector<std::int64_t>> integers(const std::string& key) const {
    const json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_array()) fail(key, "expected an array of integers");
    std::vector<std::int64_t> out;
    for (std::size_t k = 0; k < v->size(); ++k) {
      const json& e = (*v)[k];
      if (!e.is_number_integer()) ctx_.fail(at(key) + "/" + std::to_string(k), "expected an integer");
      out.push_back(e.get<std::int64_t>());
    }
    return out;
  }

  Section child(const std::string& key, std::set<std::string> allowed) const {
    return Section(find(key), at(key), ctx_, std::move(allowed));
  }

 private:
  const json* obj_;
  std::string pointer_;
  const Context& ctx_;
  std::set<std::string> allowed_;
};

Vec3 to_vec3(const std::vector<double>& v) { return Vec3(v[0], v[1], v[2]); }

void apply_override(json& doc, Locator& loc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("--set " + assignment + ": expected key.path=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);

  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }

  json* node = &doc;
  std::string pointer;
  std::stringstream ss(path);
  std::string token;
  std::vector<std::string> tokens;
  while (std::getline(ss, token, '.')) tokens.push_back(token);
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const std::string& t = tokens[k];
    if (t.empty()) throw ConfigError("--set " + assignment + ": empty path component");
    pointer += "/" + pointer_token(t);
    json* next = nullptr;
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoul(t, &used);
        if (used != t.size()) throw std::invalid_argument(t);
      } catch (const std::exception&) {
        throw ConfigError("--set " + assignment + ": \"" + t + "\" is not an array index");
      }
      if (idx >= node->size()) throw ConfigError("--set " + assignment + ": index " + t + " out of range");
      next = &(*node)[idx];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) throw ConfigError("--set " + assignment + ": cannot descend into a scalar");
      next = &(*node)[t];
    }
    node = next;
  }
  *node = value;
  loc.mark_override(pointer, assignment);
}

ProtocolKind parse_kind(const Section& s, const std::string& v) {
  if (v == "ss") return ProtocolKind::SteadyState;
  if (v == "tds") return ProtocolKind::TimedDicke;
  if (v == "pulse") return ProtocolKind::Pulse;
  s.fail("kind", "expected \"ss\", \"tds\" or \"pulse\"");
}

const char* kind_name(ProtocolKind k) {
  switch (k) {
    case ProtocolKind::SteadyState: return "ss";
    case ProtocolKind::TimedDicke: return "tds";
    case ProtocolKind::Pulse: return "pulse";
  }
  return "ss";
}

ExperimentConfig build(const json& doc, const Context& ctx) {
  ExperimentConfig c;
  const Section root(&doc, "", ctx, {"physics", "cloud", "protocols", "time", "ensemble", "sweep", "fit", "output"});

  // --- physics
  const Section ph = root.child("physics", {"gamma0", "k0", "n_eff", "kappa", "delta_a", "delta_c", "dipole", "g0",
                                            "c1", "c1_weighting", "calibration_probes", "coupling_decay_length",
                                            "z_ref"});
  PhysicalParams& p = c.physics;
  p.gamma0 = ph.number("gamma0", p.gamma0);
  if (!(p.gamma0 > 0)) ph.fail("gamma0", "must be > 0");
  p.k0 = ph.number("k0", p.k0);
  if (!(p.k0 > 0)) ph.fail("k0", "must be > 0");
  p.n_eff = ph.number("n_eff", p.n_eff);
  if (!(p.n_eff >= 1)) ph.fail("n_eff", "must be >= 1");
  p.kappa = ph.number("kappa", p.kappa);
  if (!(p.kappa > 0)) ph.fail("kappa", "must be > 0");
  p.delta_a = ph.number("delta_a", p.delta_a);
  p.delta_c = ph.number("delta_c", p.delta_c);

  if (const json* d = ph.find("dipole")) {
    if (d->is_string()) {
      c.dipole_name = d->get<std::string>();
      try {
        p.dipole = dipole_preset(c.dipole_name);
      } catch (const ParameterError& e) {
        ph.fail("dipole", e.what());
      }
    } else if (d->is_array() && d->size() == 3) {
      c.dipole_name.clear();
      for (std::size_t k = 0; k < 3; ++k) {
        const json& e = (*d)[k];
        const std::string ep = ph.at("dipole") + "/" + std::to_string(k);
        if (e.is_number()) {
          p.dipole(static_cast<Eigen::Index>(k)) = Complex(e.get<double>(), 0.0);
        } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
          p.dipole(static_cast<Eigen::Index>(k)) = Complex(e[0].get<double>(), e[1].get<double>());
        } else {
          ctx.fail(ep, "expected a number or a [re, im] pair");
        }
      }
      if (std::abs(p.dipole.norm() - 1.0) > 1e-12) ph.fail("dipole", "must have unit norm (within 1e-12)");
    } else {
      ph.fail("dipole", "expected a preset name or an array of three components");
    }
  } else {
    p.dipole = dipole_preset(c.dipole_name);
  }

  const auto g0 = ph.number("g0");
  c.c1_target = ph.number("c1");
  if (g0 && c.c1_target) ph.fail("c1", "give either g0 or c1, not both");
  if (g0) {
    if (!(*g0 >= 0)) ph.fail("g0", "must be >= 0");
    p.g0 = *g0;
  }
  if (c.c1_target && !(*c.c1_target >= 0)) ph.fail("c1", "must be >= 0");
  if (auto w = ph.string("c1_weighting")) {
    if (*w == "density") {
      c.c1_weighting = C1Weighting::Density;
    } else if (*w == "coupling") {
      c.c1_weighting = C1Weighting::Coupling;
    } else {
      ph.fail("c1_weighting", "expected \"density\" or \"coupling\"");
    }
  }
  if (auto n = ph.integer("calibration_probes")) {
    if (*n < 1) ph.fail("calibration_probes", "must be >= 1");
    c.calibration_probes = static_cast<std::size_t>(*n);
  }

  const double lambda = 2.0 * kPi / p.k0;
  c.decay_length_lambda = ph.number("coupling_decay_length");
  if (c.decay_length_lambda) {
    if (!(*c.decay_length_lambda > 0)) ph.fail("coupling_decay_length", "must be > 0");
    p.coupling_decay_length = *c.decay_length_lambda * lambda;
  } else {
    if (!(p.n_eff > 1)) ph.fail("n_eff", "must be > 1 unless coupling_decay_length is given");
    p.coupling_decay_length = evanescent_decay_length(p.k0, p.n_eff);
  }

  // --- cloud
  const Section cl = root.child("cloud", {"rms_sizes", "center", "n_atoms", "min_separation", "surface_z"});
  CloudSpec& cloud = c.cloud;
  if (auto v = cl.numbers("rms_sizes", 3)) {
    cloud.rms_sizes = to_vec3(*v);
    if (!(cloud.rms_sizes.minCoeff() > 0)) cl.fail("rms_sizes", "all rms sizes must be > 0");
  }
  if (auto v = cl.numbers("center", 3)) cloud.center = to_vec3(*v);
  if (auto n = cl.integer("n_atoms")) {
    if (*n < 1 || *n > 100000) cl.fail("n_atoms", "must be in [1, 100000]");
    cloud.n_atoms = static_cast<int>(*n);
  }
  cloud.min_separation = cl.number("min_separation", cloud.min_separation);
  if (!(cloud.min_separation >= 0)) cl.fail("min_separation", "must be >= 0");
  {
    // surface_z: absent keeps the default plane, null disables it.
    bool present = false;
    bool is_null = false;
    if (auto it = doc.find("cloud"); it != doc.end() && it->is_object()) {
      if (auto sz = it->find("surface_z"); sz != it->end()) {
        present = true;
        is_null = sz->is_null();
      }
    }
    if (present && is_null) {
      cloud.surface_z.reset();
    } else if (present) {
      cloud.surface_z = cl.number("surface_z");
    }
  }
  try {
    cloud.validate();
  } catch (const ParameterError& e) {
    cl.fail("center", e.what());
  }

  c.z_ref_lambda = ph.number("z_ref");
  p.z_ref = c.z_ref_lambda.value_or(cloud.center.z()) * lambda;

  try {
    c.warnings = p.validate();
  } catch (const ParameterError& e) {
    ctx.fail("/physics", e.what());
  }

  // --- protocols
  if (const json* pr = root.find("protocols")) {
    if (!pr->is_array() || pr->empty()) ctx.fail("/protocols", "expected a non-empty array of protocols");
    std::set<std::string> names;
    for (std::size_t k = 0; k < pr->size(); ++k) {
      const Section ps(&(*pr)[k], "/protocols/" + std::to_string(k), ctx,
                       {"kind", "shape", "fwhm", "duration", "amplitude", "label"});
      Protocol proto;
      const auto kind = ps.string("kind");
      if (!kind) ps.fail("kind", "missing protocol kind");
      proto.kind = parse_kind(ps, *kind);
      if (auto sh = ps.string("shape")) {
        if (*sh == "gaussian") {
          proto.shape = PulseShape::Gaussian;
        } else if (*sh == "square") {
          proto.shape = PulseShape::Square;
        } else {
          ps.fail("shape", "expected \"gaussian\" or \"square\"");
        }
      }
      proto.fwhm = ps.number("fwhm", proto.fwhm);
      if (!(proto.fwhm > 0)) ps.fail("fwhm", "must be > 0");
      proto.duration = ps.number("duration", proto.duration);
      if (!(proto.duration > 0)) ps.fail("duration", "must be > 0");
      proto.amplitude = ps.number("amplitude", proto.amplitude);
      if (!(proto.amplitude > 0)) ps.fail("amplitude", "must be > 0");
      proto.label = ps.string("label").value_or("");
      if (!proto.label.empty() && proto.label.find_first_of("/\\,\n\"") != std::string::npos) {
        ps.fail("label", "must not contain path separators, commas or quotes");
      }
      if (!names.insert(proto.name()).second) {
        ps.fail(proto.label.empty() ? "kind" : "label", "duplicate protocol name \"" + proto.name() + "\"");
      }
      c.protocols.push_back(proto);
    }
  } else {
    Protocol ss, tds;
    tds.kind = ProtocolKind::TimedDicke;
    c.protocols = {ss, tds};
  }

  // --- time
  const Section tm = root.child("time", {"t_end", "points"});
  c.t_end = tm.number("t_end", c.t_end);
  if (!(c.t_end > 0)) tm.fail("t_end", "must be > 0");
  if (auto n = tm.integer("points")) {
    if (*n < 2 || *n > 10000000) tm.fail("points", "must be in [2, 1e7]");
    c.time_points = static_cast<std::size_t>(*n);
  }

  // --- ensemble
  const Section en = root.child("ensemble", {"n_configs", "seed", "hist_bins", "hist_lo", "hist_hi", "max_failed_fraction"});
  if (auto n = en.integer("n_configs")) {
    if (*n < 1) en.fail("n_configs", "must be >= 1");
    c.ensemble.n_configs = static_cast<std::size_t>(*n);
  }
  if (auto s = en.unsigned_integer("seed")) c.ensemble.master_seed = *s;
  if (auto n = en.integer("hist_bins")) {
    if (*n < 1 || *n > 100000) en.fail("hist_bins", "must be in [1, 100000]");
    c.ensemble.hist_bins = static_cast<std::size_t>(*n);
  }
  c.ensemble.hist_lo = en.number("hist_lo", c.ensemble.hist_lo);
  if (!(c.ensemble.hist_lo > 0)) en.fail("hist_lo", "must be > 0");
  c.ensemble.hist_hi = en.number("hist_hi", c.ensemble.hist_hi);
  if (!(c.ensemble.hist_hi > c.ensemble.hist_lo)) en.fail("hist_hi", "must exceed hist_lo");
  c.ensemble.max_failed_fraction = en.number("max_failed_fraction", c.ensemble.max_failed_fraction);
  if (!(c.ensemble.max_failed_fraction >= 0 && c.ensemble.max_failed_fraction <= 1)) {
    en.fail("max_failed_fraction", "must be in [0, 1]");
  }

  // --- sweep
  const Section sw = root.child("sweep", {"n_values", "c1_values"});
  if (auto v = sw.integers("n_values")) {
    for (std::size_t k = 0; k < v->size(); ++k) {
      if ((*v)[k] < 1 || (*v)[k] > 100000) ctx.fail(sw.at("n_values") + "/" + std::to_string(k), "must be in [1, 100000]");
      c.sweep_n.push_back(static_cast<int>((*v)[k]));
    }
  }
  if (auto v = sw.numbers("c1_values")) {
    for (std::size_t k = 0; k < v->size(); ++k) {
      if (!((*v)[k] >= 0)) ctx.fail(sw.at("c1_values") + "/" + std::to_string(k), "must be >= 0");
    }
    c.sweep_c1 = *v;
  }

  // --- fit
  const Section ft = root.child("fit", {"window", "skip_first_sample"});
  if (auto w = ft.numbers("window", 2)) {
    if (!((*w)[0] >= 0 && (*w)[1] > (*w)[0])) ft.fail("window", "expected [t_start, t_end] with 0 <= t_start < t_end");
    c.fit_window = {(*w)[0], (*w)[1]};
  }
  c.fit_skip_first_sample = ft.boolean("skip_first_sample").value_or(c.fit_skip_first_sample);

  // --- output
  const Section out = root.child("output", {"prefix", "per_config_traces"});
  c.output_prefix = out.string("prefix").value_or(c.output_prefix);
  if (c.output_prefix.empty() || c.output_prefix.find_first_of("/\\") != std::string::npos) {
    out.fail("prefix", "must be a non-empty file name prefix without path separators");
  }
  if (auto n = out.integer("per_config_traces")) {
    if (*n < 0) out.fail("per_config_traces", "must be >= 0");
    c.per_config_traces = static_cast<std::size_t>(*n);
  }
  return c;
}

}  // namespace

std::vector<double> ExperimentConfig::time_grid() const { return linear_time_grid(t_end, time_points); }

ExperimentConfig load_config(const std::string& text, const std::vector<std::string>& overrides,
                             const std::string& source_name) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::ostringstream os;
    os << source_name << ": line " << line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0) << ": malformed JSON: "
       << e.what();
    throw ConfigError(os.str());
  }
  if (!doc.is_object()) throw ConfigError(source_name + ": line 1: /: top level must be an object");
  Locator loc(text);
  for (const std::string& o : overrides) apply_override(doc, loc, o);
  const Context ctx(source_name, loc);
  return build(doc, ctx);
}

ExperimentConfig load_config_file(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_config(ss.str(), overrides, path);
}

nlohmann::ordered_json resolved_json(const ExperimentConfig& c) {
  using oj = nlohmann::ordered_json;
  const PhysicalParams& p = c.physics;
  oj physics;
  physics["gamma0"] = p.gamma0;
  physics["k0"] = p.k0;
  physics["n_eff"] = p.n_eff;
  physics["kappa"] = p.kappa;
  physics["delta_a"] = p.delta_a;
  physics["delta_c"] = p.delta_c;
  if (!c.dipole_name.empty()) {
    physics["dipole"] = c.dipole_name;
  } else {
    oj d = oj::array();
    for (Eigen::Index k = 0; k < 3; ++k) d.push_back(oj::array({p.dipole(k).real(), p.dipole(k).imag()}));
    physics["dipole"] = d;
  }
  if (c.c1_target) {
    physics["c1"] = *c.c1_target;
  } else {
    physics["g0"] = p.g0;
  }
  physics["c1_weighting"] = c.c1_weighting == C1Weighting::Density ? "density" : "coupling";
  physics["calibration_probes"] = c.calibration_probes;
  physics["coupling_decay_length"] = c.decay_length_lambda ? oj(*c.decay_length_lambda) : oj(nullptr);
  physics["z_ref"] = c.z_ref_lambda ? oj(*c.z_ref_lambda) : oj(nullptr);

  oj cloud;
  const CloudSpec& cs = c.cloud;
  cloud["rms_sizes"] = {cs.rms_sizes.x(), cs.rms_sizes.y(), cs.rms_sizes.z()};
  cloud["center"] = {cs.center.x(), cs.center.y(), cs.center.z()};
  cloud["n_atoms"] = cs.n_atoms;
  cloud["min_separation"] = cs.min_separation;
  cloud["surface_z"] = cs.surface_z ? oj(*cs.surface_z) : oj(nullptr);

  oj protocols = oj::array();
  for (const Protocol& pr : c.protocols) {
    oj j;
    j["kind"] = kind_name(pr.kind);
    j["shape"] = pr.shape == PulseShape::Gaussian ? "gaussian" : "square";
    j["fwhm"] = pr.fwhm;
    j["duration"] = pr.duration;
    j["amplitude"] = pr.amplitude;
    j["label"] = pr.label;
    protocols.push_back(j);
  }

  oj doc;
  doc["physics"] = physics;
  doc["cloud"] = cloud;
  doc["protocols"] = protocols;
  doc["time"] = {{"t_end", c.t_end}, {"points", c.time_points}};
  doc["ensemble"] = {{"n_configs", c.ensemble.n_configs},
                     {"seed", c.ensemble.master_seed},
                     {"hist_bins", c.ensemble.hist_bins},
                     {"hist_lo", c.ensemble.hist_lo},
                     {"hist_hi", c.ensemble.hist_hi},
                     {"max_failed_fraction", c.ensemble.max_failed_fraction}};
  doc["sweep"] = {{"n_values", c.sweep_n}, {"c1_values", c.sweep_c1}};
  doc["fit"] = {{"window", {c.fit_window.t_start, c.fit_window.t_end}}, {"skip_first_sample", c.fit_skip_first_sample}};
  doc["output"] = {{"prefix", c.output_prefix}, {"per_config_traces", c.per_config_traces}};
  return doc;
}

}  // namespace selrad::cli
