#include "cavqed/fit.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <mutex>
#include <numeric>
#include <set>

#include "cavqed/error.hpp"

namespace cavqed {

namespace {

// Memoizes branch photon-number scans keyed on the exact branch parameters
// and grid. Safe for concurrent use.
class BranchScanCache {
 public:
  BranchScanCache(int n_max, ModelOptions opts) : n_max_(n_max), opts_(opts) {}

  std::vector<double> get(const BranchParams& b, const std::vector<double>& grid) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      for (const Entry& e : entries_) {
        if (same(e.b, b) && e.grid == grid) return e.n;
      }
    }
    std::vector<double> n;
    if (b.eta == 0.0) {
      n.assign(grid.size(), 0.0);  // undriven: vacuum
    } else {
      n = branch_photon_numbers(n_max_, b, grid, opts_);
    }
    std::lock_guard<std::mutex> lock(mu_);
    entries_.push_front({b, grid, n});
    if (entries_.size() > kCapacity) entries_.pop_back();
    return n;
  }

 private:
  struct Entry {
    BranchParams b;
    std::vector<double> grid;
    std::vector<double> n;
  };
  static constexpr std::size_t kCapacity = 24;

  static bool same(const BranchParams& a, const BranchParams& b) {
    return a.kappa == b.kappa && a.delta_c == b.delta_c && a.g == b.g && a.gamma == b.gamma &&
           a.gamma_d == b.gamma_d && a.delta_e == b.delta_e && a.eta == b.eta;
  }

  int n_max_;
  ModelOptions opts_;
  std::mutex mu_;
  std::deque<Entry> entries_;
};

double get(const ParamMap& m, std::string_view name) {
  auto it = m.find(name);
  if (it == m.end()) throw InvalidArgument("missing parameter '" + std::string(name) + "'");
  return it->second;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Model lorentzian_model() {
  Model m;
  m.name = "lorentzian";
  m.parameters = {"center", "fwhm", "amplitude", "offset"};
  m.evaluate = [](const std::vector<double>& x, const ParamMap& p) {
    const double c = get(p, "center"), w = get(p, "fwhm"), a = get(p, "amplitude"),
                 o = get(p, "offset");
    Eigen::VectorXd y(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
      y(static_cast<Eigen::Index>(i)) = lorentzian(x[i], c, w, a) + o;
    }
    return y;
  };
  return m;
}

Model doublet_model() {
  Model m;
  m.name = "lorentzian-doublet";
  m.parameters = {"center1", "fwhm1", "amplitude1", "center2", "fwhm2", "amplitude2", "offset"};
  m.evaluate = [](const std::vector<double>& x, const ParamMap& p) {
    const double c1 = get(p, "center1"), w1 = get(p, "fwhm1"), a1 = get(p, "amplitude1");
    const double c2 = get(p, "center2"), w2 = get(p, "fwhm2"), a2 = get(p, "amplitude2");
    const double o = get(p, "offset");
    Eigen::VectorXd y(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
      y(static_cast<Eigen::Index>(i)) =
          lorentzian(x[i], c1, w1, a1) + lorentzian(x[i], c2, w2, a2) + o;
    }
    return y;
  };
  return m;
}

Model full_spectrum_model(int n_max, const ModelOptions& opts) {
  auto cache_h = std::make_shared<BranchScanCache>(n_max, opts);
  auto cache_v = std::make_shared<BranchScanCache>(n_max, opts);
  Model m;
  m.name = "full-spectrum";
  m.parameters = full_spectrum_parameters();
  m.evaluate = [cache_h, cache_v](const std::vector<double>& x, const ParamMap& pm) {
    const SystemParams p = system_from_map(pm);
    const ScalingParams s = scaling_from_map(pm);
    p.validate();
    s.validate();
    Eigen::VectorXd y = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(x.size()), s.a_0);
    if (s.a_h != 0.0) y += s.a_h * to_vector(cache_h->get(branch_params(p, Mode::H), x));
    if (s.a_v != 0.0) y += s.a_v * to_vector(cache_v->get(branch_params(p, Mode::V), x));
    return y;
  };
  return m;
}

Model single_mode_model(int n_max, const ModelOptions& opts) {
  auto cache = std::make_shared<BranchScanCache>(n_max, opts);
  Model m;
  m.name = "single-mode-spectrum";
  m.parameters = single_mode_parameters();
  m.evaluate = [cache](const std::vector<double>& x, const ParamMap& pm) {
    BranchParams b;
    b.kappa = get(pm, "kappa_h");
    b.delta_c = get(pm, "delta_h");
    b.delta_e = get(pm, "delta_1");
    b.g = get(pm, "g_h");
    b.gamma = get(pm, "gamma_1");
    b.gamma_d = get(pm, "gamma_d1");
    b.eta = get(pm, "eta_h");
    const double a_h = get(pm, "a_h"), a_0 = get(pm, "a_0");
    if (!(a_h >= 0.0)) throw InvalidArgument("a_h must be >= 0");
    Eigen::VectorXd y = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(x.size()), a_0);
    if (a_h != 0.0) y += a_h * to_vector(cache->get(b, x));
    return y;
  };
  return m;
}

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

// Half-maximum width around index `peak`; falls back to a quarter of the span.
double half_max_width(const std::vector<double>& x, const std::vector<double>& y, std::size_t peak,
                      double base) {
  const double half = base + 0.5 * (y[peak] - base);
  std::size_t l = peak, r = peak;
  while (l > 0 && y[l] > half) --l;
  while (r + 1 < y.size() && y[r] > half) ++r;
  const double w = std::abs(x[r] - x[l]);
  if (w > 0.0 && (y[l] <= half || y[r] <= half)) return w;
  return 0.25 * std::abs(x.back() - x.front());
}

}  // namespace

double lorentzian(double x, double center, double fwhm, double amplitude) {
  const double hw = 0.5 * fwhm;
  const double dx = x - center;
  return amplitude * hw * hw / (dx * dx + hw * hw);
}

const std::vector<std::string>& full_spectrum_parameters() {
  static const std::vector<std::string> names = {
      "kappa_h", "kappa_v", "delta_h", "delta_v",  "delta_1",  "delta_2", "g_h", "g_v", "gamma_1",
      "gamma_2", "gamma_d1", "gamma_d2", "eta_h", "eta_v", "a_h", "a_v", "a_0"};
  return names;
}

const std::vector<std::string>& single_mode_parameters() {
  static const std::vector<std::string> names = {"kappa_h", "delta_h", "delta_1", "g_h", "gamma_1",
                                                 "gamma_d1", "eta_h", "a_h", "a_0"};
  return names;
}

ParamMap to_param_map(const SystemParams& p, const ScalingParams& s) {
  return {{"kappa_h", p.kappa_h}, {"kappa_v", p.kappa_v},   {"delta_h", p.delta_h},
          {"delta_v", p.delta_v}, {"delta_1", p.delta_1},   {"delta_2", p.delta_2},
          {"g_h", p.g_h},         {"g_v", p.g_v},           {"gamma_1", p.gamma_1},
          {"gamma_2", p.gamma_2}, {"gamma_d1", p.gamma_d1}, {"gamma_d2", p.gamma_d2},
          {"eta_h", p.eta_h},     {"eta_v", p.eta_v},       {"a_h", s.a_h},
          {"a_v", s.a_v},         {"a_0", s.a_0}};
}

SystemParams system_from_map(const ParamMap& m) {
  SystemParams p;
  p.kappa_h = get(m, "kappa_h");
  p.kappa_v = get(m, "kappa_v");
  p.delta_h = get(m, "delta_h");
  p.delta_v = get(m, "delta_v");
  p.delta_1 = get(m, "delta_1");
  p.delta_2 = get(m, "delta_2");
  p.g_h = get(m, "g_h");
  p.g_v = get(m, "g_v");
  p.gamma_1 = get(m, "gamma_1");
  p.gamma_2 = get(m, "gamma_2");
  p.gamma_d1 = get(m, "gamma_d1");
  p.gamma_d2 = get(m, "gamma_d2");
  p.eta_h = get(m, "eta_h");
  p.eta_v = get(m, "eta_v");
  if (auto it = m.find("omega_ref"); it != m.end()) p.omega_ref = it->second;
  return p;
}

ScalingParams scaling_from_map(const ParamMap& m) {
  return {get(m, "a_h"), get(m, "a_v"), get(m, "a_0")};
}

void ModelRegistry::add(Model model) {
  if (model.name.empty() || !model.evaluate) throw InvalidArgument("model needs a name and evaluator");
  std::string key = model.name;
  models_.insert_or_assign(std::move(key), std::move(model));
}

const Model& ModelRegistry::find(std::string_view name) const {
  auto it = models_.find(name);
  if (it == models_.end()) throw InvalidArgument("unknown model '" + std::string(name) + "'");
  return it->second;
}

bool ModelRegistry::contains(std::string_view name) const { return models_.find(name) != models_.end(); }

std::vector<std::string> ModelRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : models_) out.push_back(k);
  return out;
}

ModelRegistry make_registry(int n_max, const ModelOptions& opts) {
  if (n_max < 1) throw InvalidArgument("Fock cutoff must be >= 1");
  ModelRegistry r;
  r.add(lorentzian_model());
  r.add(doublet_model());
  r.add(full_spectrum_model(n_max, opts));
  r.add(single_mode_model(n_max, opts));
  return r;
}

const ModelRegistry& default_registry() {
  static const ModelRegistry r = make_registry();
  return r;
}

void FitProblem::validate(const Model& m) const {
  if (data.empty()) throw InvalidArgument("fit data is empty");
  std::set<std::string, std::less<>> seen;
  for (const auto& f : free) {
    if (!seen.insert(f.name).second) throw InvalidArgument("parameter '" + f.name + "' listed twice");
    if (fixed.count(f.name)) throw InvalidArgument("parameter '" + f.name + "' is both free and fixed");
    if (!(f.lo < f.hi)) throw InvalidArgument("bounds of '" + f.name + "' need lo < hi");
    if (!std::isfinite(f.initial) || f.initial < f.lo || f.initial > f.hi) {
      throw InvalidArgument("initial value of '" + f.name + "' is outside its bounds");
    }
  }
  for (const auto& [k, v] : fixed) seen.insert(k);
  for (const auto& name : m.parameters) {
    if (!seen.count(name)) throw InvalidArgument("model parameter '" + name + "' is neither free nor fixed");
  }
  for (const auto& name : seen) {
    if (std::find(m.parameters.begin(), m.parameters.end(), name) == m.parameters.end()) {
      throw InvalidArgument("'" + name + "' is not a parameter of model '" + m.name + "'");
    }
  }
}

double FitResult::value(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return values[i];
  if (auto it = fixed.find(name); it != fixed.end()) return it->second;
  throw InvalidArgument("no parameter '" + std::string(name) + "' in fit result");
}

double FitResult::sigma(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return sigmas[i];
  throw InvalidArgument("no free parameter '" + std::string(name) + "' in fit result");
}

double FitResult::correlation(std::size_t i, std::size_t j) const {
  const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
  const double d = std::sqrt(covariance(ii, ii) * covariance(jj, jj));
  return d > 0.0 ? covariance(ii, jj) / d : 0.0;
}

double FitResult::max_abs_correlation() const {
  double m = 0.0;
  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t j = i + 1; j < names.size(); ++j) m = std::max(m, std::abs(correlation(i, j)));
  return m;
}

ParamMap FitResult::all_values() const {
  ParamMap out = fixed;
  for (std::size_t i = 0; i < names.size(); ++i) out[names[i]] = values[i];
  return out;
}

FitResult least_squares(const FitProblem& problem, const FitOptions& options,
                        const ModelRegistry& registry) {
  const Model& model = registry.find(problem.model);
  problem.validate(model);

  const std::vector<double>& xs = problem.data.x();
  const Eigen::VectorXd y = to_vector(problem.data.y());
  const auto n_data = y.size();
  const auto n_free = static_cast<Eigen::Index>(problem.free.size());

  ParamMap params = problem.fixed;
  Eigen::VectorXd lo(n_free), hi(n_free), theta(n_free);
  for (Eigen::Index i = 0; i < n_free; ++i) {
    const auto& f = problem.free[static_cast<std::size_t>(i)];
    lo(i) = f.lo;
    hi(i) = f.hi;
    theta(i) = f.initial;
  }

  auto evaluate = [&](const Eigen::VectorXd& t) -> Eigen::VectorXd {
    for (Eigen::Index i = 0; i < n_free; ++i) params[problem.free[static_cast<std::size_t>(i)].name] = t(i);
    Eigen::VectorXd f = model.evaluate(xs, params);
    if (f.size() != n_data) throw NumericalError("model returned the wrong number of points");
    return f;
  };

  auto jacobian = [&](const Eigen::VectorXd& t, const Eigen::VectorXd& f0) {
    Eigen::MatrixXd jac(n_data, n_free);
    for (Eigen::Index i = 0; i < n_free; ++i) {
      const double step = std::max(options.relative_step * std::abs(t(i)), options.absolute_step);
      Eigen::VectorXd tp = t, tm = t;
      const bool up_ok = t(i) + step <= hi(i);
      const bool down_ok = t(i) - step >= lo(i);
      if (up_ok && down_ok) {
        tp(i) += step;
        tm(i) -= step;
        jac.col(i) = (evaluate(tp) - evaluate(tm)) / (2.0 * step);
      } else if (up_ok) {
        tp(i) += step;
        jac.col(i) = (evaluate(tp) - f0) / step;
      } else {
        tm(i) -= step;
        jac.col(i) = (f0 - evaluate(tm)) / step;
      }
    }
    return jac;
  };

  FitResult result;
  result.fixed = problem.fixed;
  for (const auto& f : problem.free) result.names.push_back(f.name);

  Eigen::VectorXd f = evaluate(theta);
  Eigen::VectorXd r = f - y;
  double cost = r.squaredNorm();
  if (!std::isfinite(cost)) throw NumericalError("model is not finite at the initial parameters");
  result.cost_history.push_back(cost);
  const double cost_floor = 1e-28 * std::max(y.squaredNorm(), 1e-300);

  if (n_free == 0) {
    result.converged = true;
  } else {
    double lambda = 1e-3;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
      if (cost <= cost_floor) {
        result.converged = true;
        break;
      }
      const Eigen::MatrixXd jac = jacobian(theta, f);
      const Eigen::MatrixXd jtj = jac.transpose() * jac;
      const Eigen::VectorXd grad = jac.transpose() * r;
      Eigen::VectorXd scale = jtj.diagonal();
      const double max_diag = scale.maxCoeff();
      for (Eigen::Index i = 0; i < n_free; ++i) {
        if (!(scale(i) > 1e-300)) scale(i) = max_diag > 0.0 ? 1e-12 * max_diag : 1.0;
      }

      bool accepted = false;
      bool stalled = false;
      Eigen::VectorXd step;
      while (!accepted) {
        Eigen::MatrixXd damped = jtj;
        damped.diagonal() += lambda * scale;
        const Eigen::VectorXd delta = damped.ldlt().solve(-grad);
        Eigen::VectorXd trial = theta + delta;
        for (Eigen::Index i = 0; i < n_free; ++i) trial(i) = clamp(trial(i), lo(i), hi(i));
        step = trial - theta;
        if (step.norm() == 0.0 || !delta.allFinite()) {
          stalled = true;
          break;
        }
        Eigen::VectorXd f_trial;
        double cost_trial = INFINITY;
        try {
          f_trial = evaluate(trial);
          cost_trial = (f_trial - y).squaredNorm();
        } catch (const InvalidArgument&) {
          // Trial left the model's domain; treat as a rejected step.
        }
        if (std::isfinite(cost_trial) && cost_trial < cost) {
          const double decrease = (cost - cost_trial) / cost;
          theta = trial;
          f = std::move(f_trial);
          r = f - y;
          cost = cost_trial;
          result.cost_history.push_back(cost);
          lambda = std::max(lambda / 10.0, 1e-15);
          accepted = true;
          ++result.iterations;
          if (decrease < options.cost_tolerance ||
              step.norm() < options.step_tolerance * (theta.norm() + options.step_tolerance)) {
            result.converged = true;
          }
        } else {
          lambda *= 10.0;
          if (lambda > 1e16) {
            stalled = true;
            break;
          }
        }
      }
      if (stalled) {
        // No downhill step exists at any damping: a (possibly bound-
        // constrained) minimum to working precision.
        result.converged = true;
        break;
      }
      if (result.converged) break;
    }
  }

  result.values.assign(theta.data(), theta.data() + n_free);
  result.residual_norm = std::sqrt(cost);
  const auto dof = std::max<Eigen::Index>(n_data - n_free, 1);
  result.reduced_chi2 = cost / static_cast<double>(dof);
  result.best_fit = f;
  result.covariance = Eigen::MatrixXd::Zero(n_free, n_free);
  result.sigmas.assign(static_cast<std::size_t>(n_free), 0.0);

  if (n_free > 0) {
    const Eigen::MatrixXd jac = jacobian(theta, f);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    // Pseudo-inverse on the diagonally scaled normal matrix so parameters
    // with very different magnitudes do not read as rank deficiency.
    Eigen::VectorXd dscale(n_free);
    for (Eigen::Index i = 0; i < n_free; ++i) {
      dscale(i) = jtj(i, i) > 0.0 ? 1.0 / std::sqrt(jtj(i, i)) : 0.0;
      if (jtj(i, i) <= 0.0) result.singular = true;
    }
    const Eigen::MatrixXd scaled = dscale.asDiagonal() * jtj * dscale.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scaled);
    const Eigen::VectorXd ev = es.eigenvalues();
    const double tol = 1e-12 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
    Eigen::VectorXd inv(n_free);
    for (Eigen::Index i = 0; i < n_free; ++i) {
      if (ev(i) > tol) {
        inv(i) = 1.0 / ev(i);
      } else {
        inv(i) = 0.0;
        result.singular = true;
      }
    }
    const Eigen::MatrixXd pinv = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
    Eigen::MatrixXd cov = result.reduced_chi2 * (dscale.asDiagonal() * pinv * dscale.asDiagonal());
    cov = 0.5 * (cov + cov.transpose()).eval();
    result.covariance = cov;
    for (Eigen::Index i = 0; i < n_free; ++i) {
      result.sigmas[static_cast<std::size_t>(i)] = std::sqrt(std::max(cov(i, i), 0.0));
    }
  }
  return result;
}

// --- Protocols -------------------------------------------------------------

namespace {

double spectrum_min(const Spectrum& s) { return *std::min_element(s.y().begin(), s.y().end()); }
double spectrum_max(const Spectrum& s) { return *std::max_element(s.y().begin(), s.y().end()); }

// Largest sample within `half_width` of `center`, or the global max.
double local_max(const Spectrum& s, double center, double half_width) {
  double m = -INFINITY;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (std::abs(s.x()[i] - center) <= half_width) m = std::max(m, s.y()[i]);
  return std::isfinite(m) ? m : spectrum_max(s);
}

double bare_peak_photons(double eta, double kappa) { return 4.0 * eta * eta / (kappa * kappa); }

ParamMap single_mode_fixed(const SystemParams& p) {
  return {{"kappa_h", p.kappa_h}, {"delta_h", p.delta_h},   {"delta_1", p.delta_1},
          {"g_h", p.g_h},         {"gamma_1", p.gamma_1},   {"gamma_d1", p.gamma_d1},
          {"eta_h", p.eta_h}};
}

}  // namespace

FitResult fit_full_spectrum(const Spectrum& data, const SystemParams& fixed,
                            const FullSpectrumStart& start, const ProtocolSetup& setup) {
  if (data.empty()) throw InvalidArgument("fit data is empty");
  SystemParams p = fixed;
  p.delta_1 = p.delta_h;
  p.delta_2 = p.delta_v;
  p.validate();
  if (!(p.eta_h > 0.0) || !(p.eta_v > 0.0) || !(p.kappa_h > 0.0) || !(p.kappa_v > 0.0)) {
    throw InvalidArgument("full-spectrum fit needs kappa and eta > 0 on both modes");
  }

  const double a0 = start.a_0.value_or(spectrum_min(data));
  const double peak_h = local_max(data, p.delta_h, 0.5 * p.kappa_h) - a0;
  const double peak_v = local_max(data, p.delta_v, 0.5 * p.kappa_v) - a0;
  const double ah = start.a_h.value_or(std::max(peak_h, 0.0) / bare_peak_photons(p.eta_h, p.kappa_h));
  const double av = start.a_v.value_or(std::max(peak_v, 0.0) / bare_peak_photons(p.eta_v, p.kappa_v));
  const double inf = std::numeric_limits<double>::infinity();
  const double g_mid = 0.5 * kCouplingUpperBound, d_mid = 0.5 * kDephasingUpperBound;

  FitProblem problem;
  problem.model = "full-spectrum";
  problem.data = data;
  problem.free = {
      {"g_h", start.g_h.value_or(g_mid), 0.0, kCouplingUpperBound},
      {"g_v", start.g_v.value_or(g_mid), 0.0, kCouplingUpperBound},
      {"gamma_d1", start.gamma_d1.value_or(d_mid), 0.0, kDephasingUpperBound},
      {"gamma_d2", start.gamma_d2.value_or(d_mid), 0.0, kDephasingUpperBound},
      {"a_h", ah, 0.0, inf},
      {"a_v", av, 0.0, inf},
      {"a_0", a0, -inf, inf},
  };
  ParamMap all = to_param_map(p, ScalingParams{});
  for (const auto& f : problem.free) all.erase(f.name);
  problem.fixed = all;
  const ModelRegistry registry = make_registry(setup.n_max, setup.model);
  return least_squares(problem, setup.fit, registry);
}

SystemParams power_series_defaults() {
  SystemParams p = SystemParams::device1();
  p.g_h = 1.39;
  p.gamma_d1 = 0.04;
  return p;
}

std::vector<FitResult> fit_power_series(const std::vector<Spectrum>& data_set,
                                        const SystemParams& fixed, double a_h,
                                        const ProtocolSetup& setup) {
  fixed.validate();
  if (!(a_h > 0.0)) throw InvalidArgument("power-series fit needs a_h > 0");
  const ModelRegistry registry = make_registry(setup.n_max, setup.model);
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<FitResult> out;
  for (const Spectrum& data : data_set) {
    if (data.empty()) throw InvalidArgument("fit data is empty");
    const double a0 = spectrum_min(data);
    const double height = std::max(spectrum_max(data) - a0, 0.0);
    const double eta0 = std::max(0.5 * fixed.kappa_h * std::sqrt(height / a_h), 1e-6);
    FitProblem problem;
    problem.model = "single-mode-spectrum";
    problem.data = data;
    problem.free = {{"eta_h", eta0, 0.0, inf}, {"a_0", a0, -inf, inf}};
    problem.fixed = single_mode_fixed(fixed);
    problem.fixed.erase("eta_h");
    problem.fixed["a_h"] = a_h;
    out.push_back(least_squares(problem, setup.fit, registry));
  }
  return out;
}

std::vector<FitResult> fit_detuning_series(const std::vector<Spectrum>& data_set,
                                           const SystemParams& fixed, const ScalingParams& scaling,
                                           const ProtocolSetup& setup) {
  fixed.validate();
  scaling.validate();
  const ModelRegistry registry = make_registry(setup.n_max, setup.model);
  std::vector<FitResult> out;
  for (const Spectrum& data : data_set) {
    if (data.size() < 2) throw InvalidArgument("detuning fit needs at least two samples");
    // Intensity-weighted centroid as the starting cavity position.
    const double base = spectrum_min(data);
    double wsum = 0.0, xsum = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double w = data.y()[i] - base;
      wsum += w;
      xsum += w * data.x()[i];
    }
    const double xlo = std::min(data.x().front(), data.x().back());
    const double xhi = std::max(data.x().front(), data.x().back());
    const double start = wsum > 0.0 ? clamp(xsum / wsum, xlo, xhi) : 0.5 * (xlo + xhi);
    FitProblem problem;
    problem.model = "single-mode-spectrum";
    problem.data = data;
    problem.free = {{"delta_h", start, xlo, xhi}};
    problem.fixed = single_mode_fixed(fixed);
    problem.fixed.erase("delta_h");
    problem.fixed["a_h"] = scaling.a_h;
    problem.fixed["a_0"] = scaling.a_0;
    out.push_back(least_squares(problem, setup.fit, registry));
  }
  return out;
}

FitResult fit_lorentzian(const Spectrum& data, const std::vector<bool>& mask,
                         const FitOptions& options) {
  if (!mask.empty() && mask.size() != data.size()) throw InvalidArgument("mask size mismatch");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (mask.empty() || mask[i]) {
      xs.push_back(data.x()[i]);
      ys.push_back(data.y()[i]);
    }
  }
  if (xs.size() < 5) throw InvalidArgument("Lorentzian fit needs at least 5 samples");
  const Spectrum sub(xs, ys, data.axis());
  const auto peak = static_cast<std::size_t>(std::max_element(ys.begin(), ys.end()) - ys.begin());
  const double base = *std::min_element(ys.begin(), ys.end());
  const double span = std::abs(xs.back() - xs.front());
  const double inf = std::numeric_limits<double>::infinity();

  FitProblem problem;
  problem.model = "lorentzian";
  problem.data = sub;
  problem.free = {{"center", xs[peak], -inf, inf},
                  {"fwhm", half_max_width(xs, ys, peak, base), 1e-12 * span, inf},
                  {"amplitude", ys[peak] - base, 0.0, inf},
                  {"offset", base, -inf, inf}};
  return least_squares(problem, options);
}

DoubletFit fit_lorentzian_doublet(const Spectrum& data, double abscissa_origin,
                                  const FitOptions& options) {
  if (data.size() < 8) throw InvalidArgument("doublet fit needs at least 8 samples");
  const auto& xs = data.x();
  const auto& ys = data.y();
  const double base = spectrum_min(data);
  const double span = std::abs(xs.back() - xs.front());
  const double inf = std::numeric_limits<double>::infinity();

  // Two most prominent local maxima; fall back to the residual of a single
  // Lorentzian fit when the data show only one.
  std::vector<std::size_t> peaks;
  for (std::size_t i = 1; i + 1 < ys.size(); ++i) {
    if (ys[i] > ys[i - 1] && ys[i] >= ys[i + 1]) peaks.push_back(i);
  }
  std::sort(peaks.begin(), peaks.end(), [&](auto a, auto b) { return ys[a] > ys[b]; });

  double c1, w1, a1, c2, w2, a2;
  if (peaks.size() >= 2) {
    const std::size_t p1 = peaks[0], p2 = peaks[1];
    c1 = xs[p1];
    a1 = ys[p1] - base;
    w1 = std::min(half_max_width(xs, ys, p1, base), 0.5 * std::abs(xs[p2] - xs[p1]));
    c2 = xs[p2];
    a2 = ys[p2] - base;
    w2 = std::min(half_max_width(xs, ys, p2, base), 0.5 * std::abs(xs[p2] - xs[p1]));
  } else {
    const FitResult single = fit_lorentzian(data, {}, options);
    c1 = single.value("center");
    w1 = single.value("fwhm");
    a1 = single.value("amplitude");
    std::size_t worst = 0;
    double worst_r = -INFINITY;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      const double ri = ys[i] - single.best_fit(static_cast<Eigen::Index>(i));
      if (ri > worst_r) {
        worst_r = ri;
        worst = i;
      }
    }
    c2 = xs[worst];
    w2 = w1;
    a2 = std::max(worst_r, 0.0);
  }

  FitProblem problem;
  problem.model = "lorentzian-doublet";
  problem.data = data;
  const double wmin = 1e-12 * span;
  problem.free = {{"center1", c1, -inf, inf},       {"fwhm1", std::max(w1, 2 * wmin), wmin, inf},
                  {"amplitude1", std::max(a1, 0.0), 0.0, inf}, {"center2", c2, -inf, inf},
                  {"fwhm2", std::max(w2, 2 * wmin), wmin, inf}, {"amplitude2", std::max(a2, 0.0), 0.0, inf},
                  {"offset", base, -inf, inf}};

  DoubletFit out;
  out.fit = least_squares(problem, options);
  // Report the lower-frequency peak first.
  if (out.fit.value("center2") < out.fit.value("center1")) {
    const std::vector<std::size_t> perm = {3, 4, 5, 0, 1, 2, 6};
    FitResult swapped = out.fit;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      swapped.values[i] = out.fit.values[perm[i]];
      swapped.sigmas[i] = out.fit.sigmas[perm[i]];
      for (std::size_t j = 0; j < perm.size(); ++j) {
        swapped.covariance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            out.fit.covariance(static_cast<Eigen::Index>(perm[i]), static_cast<Eigen::Index>(perm[j]));
      }
    }
    out.fit = std::move(swapped);
  }
  const double center1 = out.fit.value("center1"), center2 = out.fit.value("center2");
  const double fwhm1 = out.fit.value("fwhm1"), fwhm2 = out.fit.value("fwhm2");
  out.q1 = (abscissa_origin + center1) / fwhm1;
  out.q2 = (abscissa_origin + center2) / fwhm2;
  out.degenerate = out.fit.max_abs_correlation() > 0.99;
  return out;
}

}  // namespace cavqed
