#include "cavqed/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cavqed/error.hpp"
#include "cavqed/fit.hpp"
#include "cavqed/io.hpp"
#include "cavqed/metrics.hpp"
#include "cavqed/spectrum.hpp"
#include "cavqed/tmm.hpp"

namespace cavqed {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void allow_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) throw SchemaError(std::string(where) + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw SchemaError("unknown key '" + k + "' in " + std::string(where));
    }
  }
}

double number_at(const json& j, std::string_view key, std::string_view where) {
  const auto it = j.find(key);
  if (it == j.end()) throw SchemaError("missing '" + std::string(key) + "' in " + std::string(where));
  if (!it->is_number()) throw SchemaError("'" + std::string(key) + "' in " + std::string(where) + " must be a number");
  return it->get<double>();
}

double number_or(const json& j, std::string_view key, double fallback, std::string_view where) {
  return j.contains(key) ? number_at(j, key, where) : fallback;
}

int int_or(const json& j, std::string_view key, int fallback, std::string_view where) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(std::string(key));
  if (!v.is_number_integer()) throw SchemaError("'" + std::string(key) + "' in " + std::string(where) + " must be an integer");
  return v.get<int>();
}

std::string string_or(const json& j, std::string_view key, std::string fallback, std::string_view where) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(std::string(key));
  if (!v.is_string()) throw SchemaError("'" + std::string(key) + "' in " + std::string(where) + " must be a string");
  return v.get<std::string>();
}

// Real number or [re, im] pair.
cplx complex_or(const json& j, std::string_view key, cplx fallback, std::string_view where) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(std::string(key));
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    return {v[0].get<double>(), v[1].get<double>()};
  }
  throw SchemaError("'" + std::string(key) + "' in " + std::string(where) + " must be a number or [re, im]");
}

const json& block(const json& root, std::string_view key) {
  static const json empty = json::object();
  const auto it = root.find(key);
  return it == root.end() ? empty : *it;
}

SystemParams parse_system(const json& j) {
  allow_keys(j, "system",
             {"preset", "kappa_h", "kappa_v", "delta_h", "delta_v", "delta_1", "delta_2", "g_h", "g_v",
              "gamma_1", "gamma_2", "gamma_d1", "gamma_d2", "eta_h", "eta_v", "omega_ref"});
  const std::string preset = string_or(j, "preset", "device1", "system");
  SystemParams p;
  if (preset == "device1") {
    p = SystemParams::device1();
  } else if (preset == "power-series") {
    p = power_series_defaults();
  } else if (preset != "none") {
    throw SchemaError("system.preset must be device1, power-series or none");
  }
  ParamMap m = to_param_map(p, ScalingParams{});
  for (const auto& name : full_spectrum_parameters()) {
    if (j.contains(name)) m[name] = number_at(j, name, "system");
  }
  m["omega_ref"] = number_or(j, "omega_ref", p.omega_ref, "system");
  p = system_from_map(m);
  p.validate();
  return p;
}

ScalingParams parse_scaling(const json& j) {
  allow_keys(j, "scaling", {"a_h", "a_v", "a_0"});
  ScalingParams s;
  s.a_h = number_or(j, "a_h", s.a_h, "scaling");
  s.a_v = number_or(j, "a_v", s.a_v, "scaling");
  s.a_0 = number_or(j, "a_0", s.a_0, "scaling");
  s.validate();
  return s;
}

struct ModelSetup {
  int n_max = 3;
  TransmissionOptions transmission;
};

ModelSetup parse_model(const json& j) {
  allow_keys(j, "model", {"n_max", "dot_energy", "dephasing", "route"});
  ModelSetup m;
  m.n_max = int_or(j, "n_max", 3, "model");
  if (m.n_max < 1) throw SchemaError("model.n_max must be >= 1");
  const std::string energy = string_or(j, "dot_energy", "excited-projector", "model");
  if (energy == "excited-projector") m.transmission.model.dot_energy = DotEnergyTerm::ExcitedProjector;
  else if (energy == "as-printed") m.transmission.model.dot_energy = DotEnergyTerm::AsPrinted;
  else throw SchemaError("model.dot_energy must be excited-projector or as-printed");
  const std::string deph = string_or(j, "dephasing", "linewidth", "model");
  if (deph == "linewidth") m.transmission.model.dephasing = DephasingJump::Linewidth;
  else if (deph == "as-printed") m.transmission.model.dephasing = DephasingJump::AsPrinted;
  else throw SchemaError("model.dephasing must be linewidth or as-printed");
  const std::string route = string_or(j, "route", "factorized", "model");
  if (route == "factorized") m.transmission.route = SolverRoute::Factorized;
  else if (route == "joint") m.transmission.route = SolverRoute::Joint;
  else throw SchemaError("model.route must be factorized or joint");
  return m;
}

// {"values": [...]}, {"center", "span", "points"} (span is the full width)
// or {"start", "stop", "points"}.
std::vector<double> parse_grid(const json& j, std::string_view where) {
  if (!j.is_object()) throw SchemaError(std::string(where) + " must be an object");
  if (j.contains("values")) {
    allow_keys(j, where, {"values"});
    const auto& v = j.at("values");
    if (!v.is_array() || v.empty()) throw SchemaError(std::string(where) + ".values must be a nonempty array");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw SchemaError(std::string(where) + ".values must hold numbers");
      out.push_back(e.get<double>());
    }
    require_monotonic(out, std::string(where).c_str());
    return out;
  }
  const int points = int_or(j, "points", 401, where);
  if (points < 2) throw SchemaError(std::string(where) + ".points must be >= 2");
  if (j.contains("center")) {
    allow_keys(j, where, {"center", "span", "points"});
    const double span = number_at(j, "span", where);
    if (!(span > 0.0)) throw SchemaError(std::string(where) + ".span must be > 0");
    return symmetric_grid(number_at(j, "center", where), 0.5 * span, points);
  }
  allow_keys(j, where, {"start", "stop", "points"});
  return linear_grid(number_at(j, "start", where), number_at(j, "stop", where), points);
}

LayerStack parse_stack(const json& j, std::string_view where) {
  if (!j.is_object()) throw SchemaError(std::string(where) + " must be an object");
  if (j.contains("dbr")) {
    allow_keys(j, where, {"dbr"});
    const json& d = j.at("dbr");
    const std::string w = std::string(where) + ".dbr";
    allow_keys(d, w, {"n_h", "n_l", "lambda0", "pairs", "ambient_n", "substrate_n"});
    return quarter_wave_dbr(number_at(d, "n_h", w), number_at(d, "n_l", w), number_at(d, "lambda0", w),
                            number_at(d, "pairs", w), complex_or(d, "ambient_n", 1.0, w),
                            complex_or(d, "substrate_n", 1.0, w));
  }
  allow_keys(j, where, {"ambient_n", "substrate_n", "layers"});
  LayerStack s;
  s.ambient_n = complex_or(j, "ambient_n", 1.0, where);
  s.substrate_n = complex_or(j, "substrate_n", 1.0, where);
  if (j.contains("layers")) {
    const auto& layers = j.at("layers");
    if (!layers.is_array()) throw SchemaError(std::string(where) + ".layers must be an array");
    for (const auto& l : layers) {
      const std::string w = std::string(where) + ".layers[]";
      allow_keys(l, w, {"n", "thickness"});
      s.layers.push_back({complex_or(l, "n", 1.0, w), number_at(l, "thickness", w)});
    }
  }
  s.validate();
  return s;
}

CavityTemplate parse_cavity(const json& j) {
  CavityTemplate c = default_cavity_template();
  if (j.is_string()) {
    if (j.get<std::string>() != "default") throw SchemaError("tmm.cavity must be \"default\" or an object");
    return c;
  }
  allow_keys(j, "tmm.cavity", {"top", "bottom", "active_thickness", "active_n"});
  if (j.contains("top")) c.top = parse_stack(j.at("top"), "tmm.cavity.top");
  if (j.contains("bottom")) c.bottom = parse_stack(j.at("bottom"), "tmm.cavity.bottom");
  c.active_thickness = number_or(j, "active_thickness", c.active_thickness, "tmm.cavity");
  c.active_n = complex_or(j, "active_n", c.active_n, "tmm.cavity");
  return c;
}

FitOptions parse_fit_options(const json& j) {
  allow_keys(j, "fit.options",
             {"max_iterations", "relative_step", "absolute_step", "cost_tolerance", "step_tolerance"});
  FitOptions o;
  o.max_iterations = int_or(j, "max_iterations", o.max_iterations, "fit.options");
  o.relative_step = number_or(j, "relative_step", o.relative_step, "fit.options");
  o.absolute_step = number_or(j, "absolute_step", o.absolute_step, "fit.options");
  o.cost_tolerance = number_or(j, "cost_tolerance", o.cost_tolerance, "fit.options");
  o.step_tolerance = number_or(j, "step_tolerance", o.step_tolerance, "fit.options");
  if (o.max_iterations < 0 || !(o.relative_step > 0.0) || !(o.absolute_step > 0.0)) {
    throw SchemaError("fit.options out of range");
  }
  return o;
}

struct Context {
  json config;
  fs::path base;
  fs::path output_dir;
  std::string digest;
  std::ostream* out;
  std::ostream* err;

  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
  }

  std::string output(const std::string& name) const {
    std::error_code ec;
    fs::create_directories(output_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + output_dir.string() + "'");
    return (output_dir / name).string();
  }

  Spectrum read(const std::string& p) const {
    std::vector<std::string> warnings;
    Spectrum s = read_spectrum_csv(resolve(p).string(), &warnings);
    for (const auto& w : warnings) *err << "warning: " << p << ": " << w << '\n';
    return s;
  }

  std::vector<std::string> inputs() const {
    const json& io = block(config, "io");
    std::vector<std::string> out;
    if (io.contains("input")) {
      if (!io.at("input").is_string()) throw SchemaError("io.input must be a string");
      out.push_back(io.at("input").get<std::string>());
    }
    if (io.contains("inputs")) {
      const auto& arr = io.at("inputs");
      if (!arr.is_array()) throw SchemaError("io.inputs must be an array of paths");
      for (const auto& e : arr) {
        if (!e.is_string()) throw SchemaError("io.inputs must be an array of paths");
        out.push_back(e.get<std::string>());
      }
    }
    return out;
  }
};

std::string axis_units(AxisKind axis) {
  return axis == AxisKind::Wavelength ? "nm" : "GHz";
}

void emit_summary(const Context& ctx, std::string_view mode, const std::vector<std::string>& outputs,
                  ojson extra = ojson::object()) {
  ojson s;
  s["mode"] = mode;
  s["outputs"] = outputs;
  for (auto& [k, v] : extra.items()) s[k] = v;
  s["config_digest"] = ctx.digest;
  *ctx.out << s.dump() << '\n';
}

int run_simulate(const Context& ctx) {
  const SystemParams p = parse_system(block(ctx.config, "system"));
  const ScalingParams s = parse_scaling(block(ctx.config, "scaling"));
  const ModelSetup m = parse_model(block(ctx.config, "model"));
  if (!ctx.config.contains("grid")) throw SchemaError("simulate mode needs a 'grid' block");
  const std::vector<double> grid = parse_grid(ctx.config.at("grid"), "grid");
  const Spectrum spec = transmission_scan(make_space(m.n_max, m.n_max), p, s, grid, m.transmission);
  const std::string path = ctx.output("spectrum.csv");
  write_spectrum_csv(path,
                     {"simulate", "frequency-offset",
                      "x = laser detuning in GHz (/2pi) from omega_ref = " + format_number(p.omega_ref) +
                          " GHz; y = A_H <a^dag a> + A_V <b^dag b> + A_0"},
                     spec);
  emit_summary(ctx, "simulate", {path});
  return kExitOk;
}

void write_best_fit(const std::string& path, const Spectrum& data, const FitResult& r) {
  std::vector<double> model(r.best_fit.data(), r.best_fit.data() + r.best_fit.size());
  const std::string u = axis_units(data.axis());
  write_csv(path, {"fit", std::string(to_string(data.axis())), "x in " + u + "; y = data; best_fit = model"},
            {"x", "y", "best_fit"}, {data.x(), data.y(), model});
}

int run_fit(const Context& ctx) {
  const json& f = block(ctx.config, "fit");
  allow_keys(f, "fit", {"protocol", "model", "free", "fixed", "start", "a_h", "abscissa_origin", "options"});
  const std::string protocol = string_or(f, "protocol", "generic", "fit");
  ProtocolSetup setup;
  const ModelSetup m = parse_model(block(ctx.config, "model"));
  setup.n_max = m.n_max;
  setup.model = m.transmission.model;
  if (f.contains("options")) setup.fit = parse_fit_options(f.at("options"));

  const std::vector<std::string> inputs = ctx.inputs();
  if (inputs.empty()) throw SchemaError("fit mode needs io.input or io.inputs");
  std::vector<Spectrum> data;
  for (const auto& p : inputs) data.push_back(ctx.read(p));

  std::vector<FitResult> results;
  std::optional<DoubletFit> doublet;
  if (protocol == "generic") {
    if (data.size() != 1) throw SchemaError("generic fits take exactly one input");
    FitProblem problem;
    problem.model = string_or(f, "model", "", "fit");
    if (!f.contains("free") || !f.at("free").is_array()) throw SchemaError("fit.free must be an array");
    for (const auto& e : f.at("free")) {
      allow_keys(e, "fit.free[]", {"name", "initial", "lo", "hi"});
      FreeParameter fp;
      fp.name = string_or(e, "name", "", "fit.free[]");
      fp.initial = number_at(e, "initial", "fit.free[]");
      fp.lo = number_or(e, "lo", fp.lo, "fit.free[]");
      fp.hi = number_or(e, "hi", fp.hi, "fit.free[]");
      problem.free.push_back(fp);
    }
    if (f.contains("fixed")) {
      const json& fx = f.at("fixed");
      if (!fx.is_object()) throw SchemaError("fit.fixed must be an object");
      for (const auto& [k, v] : fx.items()) {
        if (!v.is_number()) throw SchemaError("fit.fixed values must be numbers");
        problem.fixed[k] = v.get<double>();
      }
    }
    problem.data = data.front();
    const ModelRegistry registry = make_registry(setup.n_max, setup.model);
    results.push_back(least_squares(problem, setup.fit, registry));
  } else if (protocol == "full-spectrum") {
    if (data.size() != 1) throw SchemaError("full-spectrum fits take exactly one input");
    FullSpectrumStart start;
    if (f.contains("start")) {
      const json& s = f.at("start");
      allow_keys(s, "fit.start", {"g_h", "g_v", "gamma_d1", "gamma_d2", "a_h", "a_v", "a_0"});
      auto set = [&](const char* k, std::optional<double>& slot) {
        if (s.contains(k)) slot = number_at(s, k, "fit.start");
      };
      set("g_h", start.g_h);
      set("g_v", start.g_v);
      set("gamma_d1", start.gamma_d1);
      set("gamma_d2", start.gamma_d2);
      set("a_h", start.a_h);
      set("a_v", start.a_v);
      set("a_0", start.a_0);
    }
    results.push_back(fit_full_spectrum(data.front(), parse_system(block(ctx.config, "system")), start, setup));
  } else if (protocol == "power-series") {
    json sys = block(ctx.config, "system");
    if (!sys.contains("preset")) sys["preset"] = "power-series";
    results = fit_power_series(data, parse_system(sys), number_at(f, "a_h", "fit"), setup);
  } else if (protocol == "detuning-series") {
    results = fit_detuning_series(data, parse_system(block(ctx.config, "system")),
                                  parse_scaling(block(ctx.config, "scaling")), setup);
  } else if (protocol == "lorentzian") {
    if (data.size() != 1) throw SchemaError("lorentzian fits take exactly one input");
    results.push_back(fit_lorentzian(data.front(), {}, setup.fit));
  } else if (protocol == "lorentzian-doublet") {
    if (data.size() != 1) throw SchemaError("doublet fits take exactly one input");
    double origin = 0.0;
    if (f.contains("abscissa_origin")) {
      origin = number_at(f, "abscissa_origin", "fit");
    } else if (data.front().axis() == AxisKind::FrequencyOffset) {
      origin = parse_system(block(ctx.config, "system")).omega_ref;
    }
    doublet = fit_lorentzian_doublet(data.front(), origin, setup.fit);
    results.push_back(doublet->fit);
  } else {
    throw SchemaError("unknown fit.protocol '" + protocol + "'");
  }

  std::vector<std::string> outputs;
  ojson converged = ojson::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const std::string suffix = results.size() == 1 ? "" : "_" + std::to_string(i);
    const std::string json_path = ctx.output("fit_result" + suffix + ".json");
    const std::string csv_path = ctx.output("best_fit" + suffix + ".csv");
    write_results(results[i], json_path, ctx.digest);
    write_best_fit(csv_path, data.size() == results.size() ? data[i] : data.front(), results[i]);
    outputs.push_back(json_path);
    outputs.push_back(csv_path);
    converged.push_back(results[i].converged);
  }
  ojson extra;
  extra["converged"] = converged;
  if (doublet) {
    extra["q1"] = std::stod(format_number(doublet->q1));
    extra["q2"] = std::stod(format_number(doublet->q2));
    extra["degenerate"] = doublet->degenerate;
  }
  emit_summary(ctx, "fit", outputs, extra);
  return kExitOk;
}

int run_tmm(const Context& ctx) {
  const json& t = block(ctx.config, "tmm");
  allow_keys(t, "tmm", {"lambda_grid", "stopband_threshold", "cavity", "gap_grid", "floor_fraction", "field"});
  if (!t.contains("lambda_grid")) throw SchemaError("tmm mode needs tmm.lambda_grid");
  const std::vector<double> lambda = parse_grid(t.at("lambda_grid"), "tmm.lambda_grid");
  std::vector<std::string> outputs;
  ojson extra = ojson::object();

  std::optional<LayerStack> stack;
  if (ctx.config.contains("stack")) stack = parse_stack(ctx.config.at("stack"), "stack");
  std::optional<CavityTemplate> cavity;
  if (t.contains("cavity")) cavity = parse_cavity(t.at("cavity"));
  if (!stack && !cavity) throw SchemaError("tmm mode needs a 'stack' or tmm.cavity");

  if (stack) {
    const Spectrum T = transmission_spectrum(*stack, lambda);
    const Spectrum R = reflection_spectrum(*stack, lambda);
    const std::string path = ctx.output("spectrum.csv");
    write_csv(path, {"tmm", "wavelength", "x = wavelength in nm; y = transmittance T; R = reflectance"},
              {"x", "y", "R"}, {T.x(), T.y(), R.y()});
    outputs.push_back(path);
    if (t.contains("stopband_threshold")) {
      const Stopband sb = stopband(T, number_at(t, "stopband_threshold", "tmm"));
      extra["stopband"] = {{"center", std::stod(format_number(sb.center))},
                           {"width", std::stod(format_number(sb.width))}};
    }
  }
  if (cavity && t.contains("gap_grid")) {
    const std::vector<double> gaps = parse_grid(t.at("gap_grid"), "tmm.gap_grid");
    const auto rows = resonance_map(*cavity, gaps, lambda, number_or(t, "floor_fraction", 0.05, "tmm"));
    std::vector<double> g, w;
    for (const auto& row : rows) {
      for (double l : row.wavelengths) {
        g.push_back(row.gap);
        w.push_back(l);
      }
    }
    const std::string path = ctx.output("resonance_map.csv");
    write_csv(path, {"tmm", "wavelength", "gap = air gap in nm; wavelength = resonance wavelength in nm"},
              {"gap", "wavelength"}, {g, w});
    outputs.push_back(path);
  }
  if (t.contains("field")) {
    const json& fj = t.at("field");
    allow_keys(fj, "tmm.field", {"wavelength", "samples_per_layer", "gap"});
    LayerStack target;
    if (fj.contains("gap")) {
      if (!cavity) throw SchemaError("tmm.field.gap needs tmm.cavity");
      target = cavity->with_gap(number_at(fj, "gap", "tmm.field"));
    } else if (stack) {
      target = *stack;
    } else {
      throw SchemaError("tmm.field needs a 'stack' or a gap");
    }
    const FieldProfile fp = field_profile(target, number_at(fj, "wavelength", "tmm.field"),
                                          int_or(fj, "samples_per_layer", 20, "tmm.field"));
    const std::string path = ctx.output("field_profile.csv");
    write_csv(path, {"tmm", "wavelength", "z = depth in nm from the ambient interface; intensity = |E|^2 for unit incident amplitude"},
              {"z", "intensity"}, {fp.z, fp.intensity});
    outputs.push_back(path);
  }
  emit_summary(ctx, "tmm", outputs, extra);
  return kExitOk;
}

int run_derive(const Context& ctx) {
  const json& d = block(ctx.config, "derive");
  allow_keys(d, "derive",
             {"g", "kappa", "gamma", "gamma_d", "gamma_total", "nu0", "lambda_q", "lambda_q1",
              "optical_length_um", "spectrum", "dip_window", "threshold"});
  ojson r = ojson::object();
  auto put = [&](const char* k, double v) { r[k] = std::stod(format_number(v)); };
  std::optional<double> gamma_total;
  if (d.contains("gamma_total")) {
    gamma_total = number_at(d, "gamma_total", "derive");
  } else if (d.contains("gamma")) {
    gamma_total = total_decay(number_at(d, "gamma", "derive"), number_or(d, "gamma_d", 0.0, "derive"));
    put("total_decay", *gamma_total);
  }
  if (d.contains("g") && d.contains("kappa") && gamma_total) {
    put("cooperativity", cooperativity(number_at(d, "g", "derive"), number_at(d, "kappa", "derive"), *gamma_total));
  }
  if (d.contains("nu0") && d.contains("kappa")) {
    put("q_factor", quality_factor(number_at(d, "nu0", "derive"), number_at(d, "kappa", "derive")));
  }
  std::optional<double> length;
  if (d.contains("lambda_q") && d.contains("lambda_q1")) {
    length = fsr_length_bound(number_at(d, "lambda_q", "derive"), number_at(d, "lambda_q1", "derive"));
    put("nl_max", *length);
  }
  if (d.contains("optical_length_um")) length = number_at(d, "optical_length_um", "derive");
  if (length && d.contains("kappa")) {
    put("finesse", finesse(fsr_from_length(*length), number_at(d, "kappa", "derive")));
  }
  if (d.contains("spectrum")) {
    const auto& w = d.contains("dip_window") ? d.at("dip_window") : json();
    if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number()) {
      throw SchemaError("derive.dip_window must be [lo, hi]");
    }
    if (!d.at("spectrum").is_string()) throw SchemaError("derive.spectrum must be a path");
    const Spectrum s = ctx.read(d.at("spectrum").get<std::string>());
    const DipContrast c = dip_contrast(s, w[0].get<double>(), w[1].get<double>());
    put("dip_contrast", c.contrast);
    r["coupled"] = is_coupled(c.contrast, number_or(d, "threshold", kCoupledContrastThreshold, "derive"));
  }
  if (r.empty()) throw SchemaError("derive block yields no metrics");
  *ctx.out << r.dump() << '\n';
  return kExitOk;
}

void report(std::ostream& err, const char* type, const std::string& message, int code) {
  ojson e;
  e["error"] = {{"type", type}, {"message", message}, {"exit_code", code}};
  err << e.dump() << '\n';
}

}  // namespace

std::string config_digest(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what());
  }
  return sha256_hex(j.dump());
}

int run(const std::string& config_path, const std::optional<std::string>& mode_override,
        std::ostream& out, std::ostream& err) {
  try {
    Context ctx;
    ctx.out = &out;
    ctx.err = &err;
    std::ifstream in(config_path);
    if (!in) throw IoError("cannot open config '" + config_path + "'");
    try {
      ctx.config = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("config is not valid JSON: ") + e.what());
    }
    allow_keys(ctx.config, "config", {"mode", "system", "scaling", "model", "grid", "stack", "tmm", "fit", "io", "derive"});
    if (mode_override) ctx.config["mode"] = *mode_override;
    const std::string mode = string_or(ctx.config, "mode", "", "config");
    ctx.digest = sha256_hex(ctx.config.dump());
    ctx.base = fs::path(config_path).parent_path();
    const json& io = block(ctx.config, "io");
    allow_keys(io, "io", {"input", "inputs", "output_dir"});
    ctx.output_dir = ctx.resolve(string_or(io, "output_dir", ".", "io"));

    if (mode == "simulate") return run_simulate(ctx);
    if (mode == "fit") return run_fit(ctx);
    if (mode == "tmm") return run_tmm(ctx);
    if (mode == "derive") return run_derive(ctx);
    throw SchemaError("mode must be one of simulate, fit, tmm, derive");
  } catch (const SchemaError& e) {
    report(err, "schema", e.what(), kExitSchema);
    return kExitSchema;
  } catch (const ParseError& e) {
    report(err, "parse", e.what(), kExitSchema);
    return kExitSchema;
  } catch (const InvalidArgument& e) {
    report(err, "invalid-argument", e.what(), kExitSchema);
    return kExitSchema;
  } catch (const json::exception& e) {
    report(err, "schema", e.what(), kExitSchema);
    return kExitSchema;
  } catch (const IoError& e) {
    report(err, "io", e.what(), kExitIo);
    return kExitIo;
  } catch (const NumericalError& e) {
    report(err, "numerical", e.what(), kExitNumerical);
    return kExitNumerical;
  } catch (const std::exception& e) {
    report(err, "numerical", e.what(), kExitNumerical);
    return kExitNumerical;
  }
}

}  // namespace cavqed
