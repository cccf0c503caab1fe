#include "peierls/cli_io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

namespace peierls::io {

using nlohmann::json;

namespace {

const std::map<Experiment, std::string> kNames = {
    {Experiment::Bands, "bands"},   {Experiment::Geometry, "geometry"}, {Experiment::Butterfly, "butterfly"},
    {Experiment::Egorov, "egorov"}, {Experiment::Flow, "flow"},         {Experiment::Propagate, "propagate"},
};

const std::map<Experiment, std::set<std::string>> kTolerances = {
    {Experiment::Bands, {"min_gap"}},
    {Experiment::Geometry, {"chern_integrality", "gauge_invariance", "zak_quantization"}},
    {Experiment::Butterfly, {"symmetry"}},
    {Experiment::Egorov, {"ratio_min", "ratio_max", "slope_min"}},
    {Experiment::Flow, {"slope_min", "energy_drift"}},
    {Experiment::Propagate, {"slope_min", "averaged_slope_min"}},
};

bool is_sweep(Experiment e) { return e == Experiment::Egorov || e == Experiment::Flow || e == Experiment::Propagate; }

// Typed field access that records every violation instead of stopping at the first.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

  void fail(const std::string& path, const std::string& msg) { errors_.push_back(path + ": " + msg); }

  bool object(const json& j, const std::string& path) {
    if (j.is_object()) return true;
    fail(path, "expected an object");
    return false;
  }

  void allow(const json& j, const std::string& path, const std::set<std::string>& keys) {
    for (const auto& [k, v] : j.items())
      if (!keys.count(k)) fail(join(path, k), "unknown key");
  }

  template <typename T>
  bool get(const json& j, const std::string& path, const std::string& key, T& out, bool required = false) {
    if (!j.contains(key)) {
      if (required) fail(join(path, key), "missing required key");
      return false;
    }
    const json& v = j.at(key);
    if (!convert(v, out)) {
      fail(join(path, key), "wrong type");
      return false;
    }
    return true;
  }

  static std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

 private:
  static bool convert(const json& v, Real& out) {
    if (!v.is_number()) return false;
    out = v.get<Real>();
    return true;
  }
  static bool convert(const json& v, int& out) {
    if (!v.is_number_integer()) return false;
    out = v.get<int>();
    return true;
  }
  static bool convert(const json& v, std::uint64_t& out) {
    if (!v.is_number_unsigned()) return false;
    out = v.get<std::uint64_t>();
    return true;
  }
  static bool convert(const json& v, bool& out) {
    if (!v.is_boolean()) return false;
    out = v.get<bool>();
    return true;
  }
  static bool convert(const json& v, std::string& out) {
    if (!v.is_string()) return false;
    out = v.get<std::string>();
    return true;
  }
  template <typename T>
  static bool convert(const json& v, std::vector<T>& out) {
    if (!v.is_array()) return false;
    std::vector<T> tmp(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
      if (!convert(v[i], tmp[i])) return false;
    out = std::move(tmp);
    return true;
  }

  std::vector<std::string>& errors_;
};

int potential_dim(const PotentialSpec& p) {
  if (p.preset == "zero") return p.dim;
  if (p.preset == "mathieu") return 1;
  if (p.preset == "mathieu2d" || p.preset == "broken_inversion") return 2;
  return static_cast<int>(p.basis.size());
}

void parse_potential(Reader& r, const json& j, PotentialSpec& p) {
  const std::string path = "potential";
  if (!r.object(j, path)) return;
  r.allow(j, path, {"preset", "dim", "v", "w", "theta", "basis", "coefficients"});
  r.get(j, path, "preset", p.preset, true);
  r.get(j, path, "dim", p.dim);
  r.get(j, path, "v", p.v);
  r.get(j, path, "w", p.w);
  r.get(j, path, "theta", p.theta);
  r.get(j, path, "basis", p.basis);
  if (j.contains("coefficients")) {
    const json& c = j.at("coefficients");
    if (!c.is_array()) {
      r.fail("potential.coefficients", "expected an array");
    } else {
      p.coefficients.clear();
      for (std::size_t i = 0; i < c.size(); ++i) {
        const std::string cp = "potential.coefficients[" + std::to_string(i) + "]";
        if (!r.object(c[i], cp)) continue;
        r.allow(c[i], cp, {"m", "re", "im"});
        Coefficient co;
        r.get(c[i], cp, "m", co.m, true);
        r.get(c[i], cp, "re", co.re);
        r.get(c[i], cp, "im", co.im);
        p.coefficients.push_back(co);
      }
    }
  }
  static const std::set<std::string> presets = {"zero", "mathieu", "mathieu2d", "broken_inversion", "custom"};
  if (!presets.count(p.preset)) {
    r.fail("potential.preset", "unknown preset '" + p.preset + "'");
    return;
  }
  if (p.preset == "zero" && (p.dim < 1 || p.dim > 3)) r.fail("potential.dim", "must be 1, 2 or 3");
  if (p.preset == "custom") {
    const int d = static_cast<int>(p.basis.size());
    if (d < 1 || d > 3) r.fail("potential.basis", "needs 1 to 3 lattice vectors");
    for (const auto& row : p.basis)
      if (static_cast<int>(row.size()) != d) r.fail("potential.basis", "must be square");
    for (std::size_t i = 0; i < p.coefficients.size(); ++i)
      if (static_cast<int>(p.coefficients[i].m.size()) != d)
        r.fail("potential.coefficients[" + std::to_string(i) + "].m", "length must equal the dimension");
  }
}

void parse_field(Reader& r, const json& j, FieldSpec& f) {
  const std::string path = "field";
  if (!r.object(j, path)) return;
  r.allow(j, path, {"b", "lambda", "gauge", "force", "amplitude", "period"});
  r.get(j, path, "b", f.b);
  r.get(j, path, "lambda", f.lambda);
  r.get(j, path, "gauge", f.gauge);
  r.get(j, path, "force", f.force);
  r.get(j, path, "amplitude", f.amplitude);
  r.get(j, path, "period", f.period);
  if (f.gauge != "symmetric" && f.gauge != "landau") r.fail("field.gauge", "must be 'symmetric' or 'landau'");
  if (!(f.period > 0)) r.fail("field.period", "must be positive");
}

void parse_numerics(Reader& r, const json& j, NumericsSpec& n) {
  const std::string path = "numerics";
  if (!r.object(j, path)) return;
  r.allow(j, path,
          {"cutoff", "kgrid", "bands", "band", "eps", "dt", "t_final", "theta_points", "q_max", "chern", "k_samples",
           "points", "k0", "width"});
  r.get(j, path, "cutoff", n.cutoff);
  r.get(j, path, "kgrid", n.kgrid);
  r.get(j, path, "bands", n.bands);
  r.get(j, path, "band", n.band);
  r.get(j, path, "eps", n.eps);
  r.get(j, path, "dt", n.dt);
  r.get(j, path, "t_final", n.t_final);
  r.get(j, path, "theta_points", n.theta_points);
  r.get(j, path, "q_max", n.q_max);
  r.get(j, path, "chern", n.chern);
  r.get(j, path, "k_samples", n.k_samples);
  r.get(j, path, "points", n.points);
  r.get(j, path, "k0", n.k0);
  r.get(j, path, "width", n.width);
  if (n.cutoff < 0) r.fail("numerics.cutoff", "must be non-negative");
  for (int s : n.kgrid)
    if (s < 1) r.fail("numerics.kgrid", "entries must be positive");
  if (n.bands < 1) r.fail("numerics.bands", "must be positive");
  if (n.band < 0 || n.band >= n.bands) r.fail("numerics.band", "must lie in [0, bands)");
  if (!(n.dt > 0)) r.fail("numerics.dt", "must be positive");
  if (!(n.t_final >= 0)) r.fail("numerics.t_final", "must be non-negative");
  if (n.theta_points < 1) r.fail("numerics.theta_points", "must be positive");
  if (n.q_max < 1 || n.q_max > 2000) r.fail("numerics.q_max", "must lie in [1, 2000]");
  if (n.k_samples != 0 && n.k_samples < 2) r.fail("numerics.k_samples", "must be 0 (automatic) or at least 2");
  if (n.points < 1) r.fail("numerics.points", "must be positive");
  if (!(n.width > 0)) r.fail("numerics.width", "must be positive");
  for (Real e : n.eps)
    if (!(e > 0)) r.fail("numerics.eps", "entries must be positive");
}

std::string fmt17(Real x) {
  if (std::isnan(x)) return {};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Real seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0).count();
}

void add_check(RunReport& rep, const RunConfig& cfg, const std::string& name, Real value, const std::string& rel) {
  const auto it = cfg.tolerances.find(name);
  if (it == cfg.tolerances.end()) return;
  const Real tol = it->second;
  const bool pass = rel == "<=" ? value <= tol : value >= tol;
  rep.checks.push_back({name, value, tol, rel, pass});
}

// Checks that hold by construction and are always reported.
void add_structural(RunReport& rep, const std::string& name, Real violations) {
  rep.checks.push_back({name, violations, 0, "<=", violations <= 0});
}

KGrid config_kgrid(const RunConfig& cfg, const Lattice& lat, int fallback) {
  std::vector<int> shape = cfg.numerics.kgrid;
  if (shape.empty()) shape.assign(static_cast<std::size_t>(lat.dim), fallback);
  if (static_cast<int>(shape.size()) != lat.dim)
    throw Error(ErrorKind::Config, "numerics.kgrid: length must equal the lattice dimension");
  return make_kgrid(lat, shape);
}

std::vector<Real> local_slopes(const std::vector<Real>& eps, const std::vector<Real>& err) {
  std::vector<Real> s(eps.size(), std::numeric_limits<Real>::quiet_NaN());
  for (std::size_t i = 1; i < eps.size(); ++i) s[i] = std::log(err[i - 1] / err[i]) / std::log(eps[i - 1] / eps[i]);
  return s;
}

std::vector<std::string> axis_names(const std::string& stem, int d, const std::string& unit) {
  std::vector<std::string> out;
  for (int l = 1; l <= d; ++l) out.push_back(stem + "_" + std::to_string(l) + " " + unit);
  return out;
}

const std::string kEnergyUnit = "[hbar^2/(m a^2)]";
const std::string kMomentumUnit = "[1/a]";

void run_bands(const RunConfig& cfg, RunReport& rep) {
  const FourierPotential pot = build_potential(cfg.potential);
  const int d = pot.lattice.dim;
  const BandStructure bs =
      solve_bands(pot, config_kgrid(cfg, pot.lattice, 64), cfg.numerics.cutoff, cfg.numerics.bands);
  Table t{"bands", axis_names("k", d, kMomentumUnit), {}};
  for (int b = 0; b < bs.band_count(); ++b) t.header.push_back("E_" + std::to_string(b) + " " + kEnergyUnit);
  for (std::size_t i = 0; i < bs.kgrid.size(); ++i) {
    const VectorX k = bs.kgrid.point(i);
    std::vector<Real> row(k.data(), k.data() + k.size());
    for (int b = 0; b < bs.band_count(); ++b) row.push_back(bs.energies(b, static_cast<Eigen::Index>(i)));
    t.rows.push_back(row);
  }
  json bands = json::array();
  for (int b = 0; b < bs.band_count(); ++b)
    bands.push_back({{"index", b}, {"min", bs.energies.row(b).minCoeff()}, {"max", bs.energies.row(b).maxCoeff()}});
  const GapReport gap = check_gap(bs, cfg.numerics.band, cfg.numerics.band);
  rep.results = {{"bands", bands}, {"k_points", bs.kgrid.size()}, {"gap", gap.value}};
  add_check(rep, cfg, "min_gap", gap.value, ">=");
  Table plot = t;
  plot.name = "bands";
  rep.plots.push_back(std::move(plot));
  rep.tables.push_back(std::move(t));
}

void run_geometry(const RunConfig& cfg, RunReport& rep) {
  const FourierPotential pot = build_potential(cfg.potential);
  const int d = pot.lattice.dim;
  const int band = cfg.numerics.band;
  const BandStructure bs = solve_bands(pot, config_kgrid(cfg, pot.lattice, d == 1 ? 128 : 32), cfg.numerics.cutoff,
                                       std::max(cfg.numerics.bands, band + 2));
  const BlochFamily family = make_family(bs);
  const GeometricTensors geom = band_geometry(family, band);

  // gauge invariance under seeded random re-phasing of the eigenvectors
  BlochFamily shuffled = family;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<Real> u(-pi, pi);
  for (auto& s : shuffled.states)
    for (Eigen::Index c = 0; c < s.cols(); ++c) s.col(c) *= std::exp(I * u(rng));
  const GeometricTensors other = band_geometry(shuffled, band);
  Real dev = 0;
  for (std::size_t i = 0; i < bs.kgrid.size(); ++i) {
    dev = std::max(dev, (geom.curvature.values[i] - other.curvature.values[i]).cwiseAbs().maxCoeff());
    dev = std::max(dev, (geom.rw_tensor.values[i] - other.rw_tensor.values[i]).cwiseAbs().maxCoeff());
  }
  const GaugeFrame f1 = fix_gauge(family, band), f2 = fix_gauge(shuffled, band);
  for (int axis = 0; axis < d; ++axis)
    dev = std::max(dev, std::abs(std::remainder(wilson_loop_phase(f1, axis) - wilson_loop_phase(f2, axis), two_pi)));

  rep.results = {{"band", band}, {"gauge_invariance", dev}, {"k_points", bs.kgrid.size()}};
  add_check(rep, cfg, "gauge_invariance", dev, "<=");
  if (d == 1) {
    const Real zak = wilson_loop_phase(f1, 0);
    const Real q = std::min(std::abs(std::remainder(zak, two_pi)), std::abs(std::remainder(zak - pi, two_pi)));
    rep.results["zak_phase"] = zak;
    rep.results["zak_quantization"] = q;
    add_check(rep, cfg, "zak_quantization", q, "<=");
  }
  if (geom.curvature.chern) {
    const Real c = *geom.curvature.chern;
    const Real defect = std::abs(c - std::round(c));
    rep.results["chern"] = c;
    rep.results["chern_integrality"] = defect;
    add_check(rep, cfg, "chern_integrality", defect, "<=");
  }

  Table t{"geometry", axis_names("k", d, kMomentumUnit), {}};
  t.header.push_back("E " + kEnergyUnit);
  for (const auto& n : axis_names("A", d, "[a]")) t.header.push_back(n);
  for (int l = 0; l < d; ++l)
    for (int j = l + 1; j < d; ++j) t.header.push_back("Omega_" + std::to_string(l + 1) + std::to_string(j + 1) + " [a^2]");
  for (int l = 0; l < d; ++l)
    for (int j = 0; j < d; ++j) t.header.push_back("M_" + std::to_string(l + 1) + std::to_string(j + 1) + " [hbar^2/m]");
  for (std::size_t i = 0; i < bs.kgrid.size(); ++i) {
    const VectorX k = bs.kgrid.point(i);
    std::vector<Real> row(k.data(), k.data() + k.size());
    row.push_back(bs.energies(band, static_cast<Eigen::Index>(i)));
    for (int l = 0; l < d; ++l) row.push_back(geom.connection.values(l, static_cast<Eigen::Index>(i)));
    for (int l = 0; l < d; ++l)
      for (int j = l + 1; j < d; ++j) row.push_back(geom.curvature.values[i](l, j));
    for (int l = 0; l < d; ++l)
      for (int j = 0; j < d; ++j) row.push_back(geom.rw_tensor.values[i](l, j));
    t.rows.push_back(row);
  }
  rep.tables.push_back(std::move(t));
}

void run_butterfly(const RunConfig& cfg, RunReport& rep) {
  const ButterflyData data = butterfly(cfg.numerics.q_max, cfg.numerics.theta_points, cfg.numerics.chern);
  const Real nan = std::numeric_limits<Real>::quiet_NaN();
  Table t{"butterfly", {"alpha", "band_index", "E_min " + kEnergyUnit, "E_max " + kEnergyUnit, "chern"}, {}};
  Table seg{"butterfly_segments", {"alpha", "E_min", "E_max"}, {}};
  int count_bad = 0, chern_bad = 0;
  Real sym_e = 0, sym_alpha = 0;
  const std::size_t n = data.entries.size();
  for (std::size_t i = 0; i < n; ++i) {
    const FluxSpectrum& s = data.entries[i];
    const auto q = static_cast<std::size_t>(s.flux.q);
    if (s.bands.size() != q) ++count_bad;
    int sum = 0;
    bool complete = !s.chern.empty();
    for (std::size_t b = 0; b < s.bands.size(); ++b) {
      const Real c = (b < s.chern.size() && s.chern[b]) ? static_cast<Real>(*s.chern[b]) : nan;
      if (std::isnan(c)) complete = false;
      else sum += *s.chern[b];
      t.rows.push_back({s.flux.alpha(), static_cast<Real>(b), s.bands[b].lower, s.bands[b].upper, c});
      seg.rows.push_back({s.flux.alpha(), s.bands[b].lower, s.bands[b].upper});
      const SubbandInterval& opp = s.bands[s.bands.size() - 1 - b];
      sym_e = std::max({sym_e, std::abs(s.bands[b].lower + opp.upper), std::abs(s.bands[b].upper + opp.lower)});
      const FluxSpectrum& mirror = data.entries[n - 1 - i];
      if (mirror.bands.size() == s.bands.size())
        sym_alpha = std::max({sym_alpha, std::abs(s.bands[b].lower - mirror.bands[b].lower),
                              std::abs(s.bands[b].upper - mirror.bands[b].upper)});
    }
    if (complete && sum != 0) ++chern_bad;
  }
  rep.results = {{"fluxes", n}, {"q_max", cfg.numerics.q_max}, {"subband_count_violations", count_bad},
                 {"chern_sum_violations", chern_bad}, {"energy_symmetry", sym_e}, {"alpha_symmetry", sym_alpha}};
  add_structural(rep, "subband_count", count_bad);
  add_structural(rep, "chern_sum", chern_bad);
  add_check(rep, cfg, "symmetry", std::max(sym_e, sym_alpha), "<=");
  rep.tables.push_back(std::move(t));
  rep.plots.push_back(std::move(seg));
}

void add_sweep_checks(const RunConfig& cfg, RunReport& rep, const std::vector<Real>& eps, const std::vector<Real>& err,
                      const std::string& prefix) {
  const Real slope = loglog_slope(eps, err);
  rep.results[prefix + "slope"] = slope;
  add_check(rep, cfg, prefix + "slope_min", slope, ">=");
}

void run_egorov(const RunConfig& cfg, RunReport& rep) {
  const FourierPotential pot = build_potential(cfg.potential);
  const int d = pot.lattice.dim;
  const auto& num = cfg.numerics;
  const BandStructure bs = solve_bands(pot, config_kgrid(cfg, pot.lattice, d == 1 ? 64 : 32), num.cutoff,
                                       std::max(num.bands, num.band + 1));
  const TrigInterp energy(bs.kgrid, bs.energies.row(num.band).transpose());
  const FieldSpec& fs = cfg.field;
  for (Real f : fs.force)
    if (f != 0) throw Error(ErrorKind::Config, "field.force: the Egorov experiment needs a periodic potential");
  std::vector<Real> err;
  if (d == 1) {
    if (fs.b != 0) throw Error(ErrorKind::Config, "field.b: no magnetic field in one dimension");
    const Real period = fs.period, amp = fs.amplitude;
    const PhaseFunction h = [&](const VectorX& k, const VectorX& r) {
      return energy(k) + amp * std::cos(two_pi * r(0) / period);
    };
    const PhaseFunction f = [period](const VectorX& k, const VectorX& r) {
      return std::sin(k(0)) * std::cos(two_pi * r(0) / period) + 0.3 * std::cos(2 * k(0));
    };
    for (Real e : num.eps) err.push_back(egorov_error_torus(f, h, e, period, num.t_final, {num.k_samples, num.dt}));
    rep.results["observable"] = "sin(k) cos(2 pi r / period) + 0.3 cos(2k)";
  } else if (d == 2) {
    if (fs.b == 0) throw Error(ErrorKind::Config, "field.b: the two-dimensional experiment needs a constant field");
    if (num.k_samples == 0) throw Error(ErrorKind::Config, "numerics.k_samples: automatic sampling is one-dimensional only");
    const auto f = [](const VectorX& k) { return std::cos(k(0)) + 0.5 * std::sin(k(1)) + 0.2 * std::cos(k(0) + k(1)); };
    const auto e = [&](const VectorX& k) { return energy(k); };
    for (Real x : num.eps)
      err.push_back(egorov_error_constant_field(f, e, fs.b, fs.lambda, x, num.t_final, 3, {num.k_samples, num.dt}));
    rep.results["observable"] = "cos(k1) + 0.5 sin(k2) + 0.2 cos(k1 + k2)";
  } else {
    throw Error(ErrorKind::Config, "potential: the Egorov experiment supports one or two dimensions");
  }
  const std::vector<Real> slopes = local_slopes(num.eps, err);
  Table t{"egorov", {"eps", "error", "slope"}, {}};
  for (std::size_t i = 0; i < err.size(); ++i) t.rows.push_back({num.eps[i], err[i], slopes[i]});
  rep.results["eps"] = num.eps;
  rep.results["error"] = err;
  json ratios = json::array();
  Real rmin = std::numeric_limits<Real>::infinity(), rmax = -rmin;
  for (std::size_t i = 1; i < err.size(); ++i)
    if (std::abs(num.eps[i] - 0.5 * num.eps[i - 1]) < 1e-12 * num.eps[i - 1]) {
      const Real r = err[i - 1] / err[i];
      ratios.push_back(r);
      rmin = std::min(rmin, r);
      rmax = std::max(rmax, r);
    }
  rep.results["halving_ratios"] = ratios;
  if (!ratios.empty()) {
    add_check(rep, cfg, "ratio_min", rmin, ">=");
    add_check(rep, cfg, "ratio_max", rmax, "<=");
  }
  add_sweep_checks(cfg, rep, num.eps, err, "");
  Table plot{"egorov", {"eps", "error"}, {}};
  for (std::size_t i = 0; i < err.size(); ++i) plot.rows.push_back({num.eps[i], err[i]});
  rep.tables.push_back(std::move(t));
  rep.plots.push_back(std::move(plot));
}

void run_flow(const RunConfig& cfg, RunReport& rep) {
  const FourierPotential pot = build_potential(cfg.potential);
  const int d = pot.lattice.dim;
  const auto& num = cfg.numerics;
  const BandStructure bs = solve_bands(pot, config_kgrid(cfg, pot.lattice, d == 1 ? 63 : 31), num.cutoff,
                                       std::max(num.bands, num.band + 2));
  const BandModel model = band_model(bs, num.band);
  const PhasePoint x0{VectorX::Constant(d, num.k0), VectorX::Zero(d)};
  const FlowComparison cmp = compare_flows(x0, model, build_field(cfg.field, d, num.eps.front()), num.eps, num.t_final, num.dt);

  const EMFieldConfig field = build_field(cfg.field, d, num.eps.back());
  const PhaseFunction hsc = semiclassical_h(model, field);
  const Trajectory tr = integrate(x0, corrected_flow(hsc, field, model), hsc, num.t_final, num.dt);
  rep.results = {{"eps", cmp.eps}, {"distance", cmp.distance}, {"slope", cmp.slope}, {"energy_drift", tr.energy_drift}};
  add_check(rep, cfg, "slope_min", cmp.slope, ">=");
  add_check(rep, cfg, "energy_drift", tr.energy_drift, "<=");

  Table t{"flow_comparison", {"eps", "distance"}, {}};
  for (std::size_t i = 0; i < cmp.eps.size(); ++i) t.rows.push_back({cmp.eps[i], cmp.distance[i]});
  Table traj{"trajectory", {"t"}, {}};
  for (const auto& n : axis_names("k", d, kMomentumUnit)) traj.header.push_back(n);
  for (const auto& n : axis_names("r", d, "[macroscopic]")) traj.header.push_back(n);
  traj.header.push_back("h_sc " + kEnergyUnit);
  const std::size_t stride = std::max<std::size_t>(1, tr.times.size() / 1000);
  for (std::size_t i = 0; i < tr.times.size(); i += stride) {
    std::vector<Real> row{tr.times[i]};
    for (int l = 0; l < d; ++l) row.push_back(tr.states[i].k(l));
    for (int l = 0; l < d; ++l) row.push_back(tr.states[i].r(l));
    row.push_back(tr.energy[i]);
    traj.rows.push_back(row);
  }
  rep.tables.push_back(std::move(t));
  rep.tables.push_back(std::move(traj));
}

void run_propagate(const RunConfig& cfg, RunReport& rep) {
  const auto& num = cfg.numerics;
  SemiclassicalSetup s;
  s.potential = build_potential(cfg.potential);
  if (s.potential.lattice.dim != 1) throw Error(ErrorKind::Config, "potential: the packet experiment is one-dimensional");
  s.band = num.band;
  s.cutoff = num.cutoff;
  s.points = num.points;
  s.force = cfg.field.force.empty() ? 0 : cfg.field.force[0];
  s.k0 = num.k0;
  s.t_final = num.t_final;
  s.width = num.width;
  std::vector<SemiclassicalReport> reps(num.eps.size());
  for (std::size_t i = 0; i < num.eps.size(); ++i) reps[i] = semiclassical_limit_check(s, num.eps[i]);
  Table t{"propagate", {"eps", "cells", "error", "averaged_error", "leakage", "edge_weight"}, {}};
  Table packet{"packet", {"eps", "t", "mean_shift [macroscopic]"}, {}};
  std::vector<Real> err, avg;
  json per = json::array();
  for (const auto& r : reps) {
    t.rows.push_back({r.eps, static_cast<Real>(r.cells), r.error, r.averaged_error, r.leakage, r.edge_weight});
    for (std::size_t j = 0; j < r.times.size(); ++j) packet.rows.push_back({r.eps, r.times[j], r.mean_shift[j]});
    err.push_back(r.error);
    avg.push_back(r.averaged_error);
    per.push_back({{"eps", r.eps}, {"cells", r.cells}, {"error", r.error}, {"averaged_error", r.averaged_error},
                   {"leakage", r.leakage}, {"norm_defect", r.norm_defect}});
  }
  rep.results["runs"] = per;
  add_sweep_checks(cfg, rep, num.eps, err, "");
  add_sweep_checks(cfg, rep, num.eps, avg, "averaged_");
  rep.tables.push_back(std::move(t));
  rep.tables.push_back(std::move(packet));
}

}  // namespace

std::string to_string(Experiment e) { return kNames.at(e); }

std::optional<Experiment> experiment_from_string(const std::string& s) {
  for (const auto& [k, v] : kNames)
    if (v == s) return k;
  return std::nullopt;
}

ParseResult parse_config(const std::string& text) {
  ParseResult out;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    out.errors.push_back(std::string("<root>: malformed JSON: ") + e.what());
    return out;
  }
  Reader r(out.errors);
  if (!r.object(j, "<root>")) return out;
  r.allow(j, "", {"experiment", "potential", "field", "numerics", "tolerances", "output", "seed"});
  RunConfig c;
  std::string name;
  if (r.get(j, "", "experiment", name, true)) {
    if (auto e = experiment_from_string(name)) c.experiment = *e;
    else r.fail("experiment", "unknown experiment '" + name + "'");
  }
  if (j.contains("potential")) parse_potential(r, j.at("potential"), c.potential);
  else if (c.experiment != Experiment::Butterfly) r.fail("potential", "missing required key");
  if (j.contains("field")) parse_field(r, j.at("field"), c.field);
  if (j.contains("numerics")) parse_numerics(r, j.at("numerics"), c.numerics);
  if (j.contains("output") && r.object(j.at("output"), "output")) {
    r.allow(j.at("output"), "output", {"dir"});
    r.get(j.at("output"), "output", "dir", c.out_dir);
  }
  r.get(j, "", "seed", c.seed);
  if (j.contains("tolerances") && r.object(j.at("tolerances"), "tolerances")) {
    const auto known = kTolerances.find(c.experiment);
    for (const auto& [k, v] : j.at("tolerances").items()) {
      const std::string path = "tolerances." + k;
      if (known == kTolerances.end() || !known->second.count(k)) {
        r.fail(path, "unknown tolerance for this experiment");
        continue;
      }
      if (!v.is_number()) {
        r.fail(path, "wrong type");
        continue;
      }
      const Real x = v.get<Real>();
      if (!(x > 0)) r.fail(path, "must be positive");
      c.tolerances[k] = x;
    }
  }
  if (is_sweep(c.experiment)) {
    if (!j.contains("numerics") || !j.at("numerics").contains("eps")) {
      r.fail("numerics.eps", "missing required key");
    } else {
      if (c.numerics.eps.size() < 2) r.fail("numerics.eps", "a sweep needs at least two values");
      for (std::size_t i = 1; i < c.numerics.eps.size(); ++i)
        if (!(c.numerics.eps[i] < c.numerics.eps[i - 1])) {
          r.fail("numerics.eps", "must be strictly decreasing");
          break;
        }
    }
  }
  if (j.contains("potential") && j.at("potential").is_object()) {
    const int d = potential_dim(c.potential);
    if (!c.field.force.empty() && static_cast<int>(c.field.force.size()) != d)
      r.fail("field.force", "length must equal the lattice dimension");
    if (!c.numerics.kgrid.empty() && static_cast<int>(c.numerics.kgrid.size()) != d)
      r.fail("numerics.kgrid", "length must equal the lattice dimension");
  }
  if (out.errors.empty()) out.config = c;
  return out;
}

json serialize_config(const RunConfig& c) {
  json coeffs = json::array();
  for (const auto& co : c.potential.coefficients) coeffs.push_back({{"m", co.m}, {"re", co.re}, {"im", co.im}});
  const auto& p = c.potential;
  const auto& f = c.field;
  const auto& n = c.numerics;
  return {
      {"experiment", to_string(c.experiment)},
      {"potential",
       {{"preset", p.preset}, {"dim", p.dim}, {"v", p.v}, {"w", p.w}, {"theta", p.theta}, {"basis", p.basis},
        {"coefficients", coeffs}}},
      {"field",
       {{"b", f.b}, {"lambda", f.lambda}, {"gauge", f.gauge}, {"force", f.force}, {"amplitude", f.amplitude},
        {"period", f.period}}},
      {"numerics",
       {{"cutoff", n.cutoff}, {"kgrid", n.kgrid}, {"bands", n.bands}, {"band", n.band}, {"eps", n.eps}, {"dt", n.dt},
        {"t_final", n.t_final}, {"theta_points", n.theta_points}, {"q_max", n.q_max}, {"chern", n.chern},
        {"k_samples", n.k_samples}, {"points", n.points}, {"k0", n.k0}, {"width", n.width}}},
      {"tolerances", c.tolerances},
      {"output", {{"dir", c.out_dir}}},
      {"seed", c.seed},
  };
}

FourierPotential build_potential(const PotentialSpec& spec) {
  FourierPotential pot;
  if (spec.preset == "zero") pot = zero_potential(cubic_lattice(spec.dim));
  else if (spec.preset == "mathieu") pot = mathieu_potential(spec.v);
  else if (spec.preset == "mathieu2d") pot = mathieu2d_potential(spec.v);
  else if (spec.preset == "broken_inversion") pot = broken_inversion_potential(spec.v, spec.w, spec.theta);
  else if (spec.preset == "custom") {
    const int d = static_cast<int>(spec.basis.size());
    MatrixX basis(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) basis(j, i) = spec.basis[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    pot.lattice = make_lattice(basis);
    for (const auto& c : spec.coefficients) pot.coefficients[c.m] += Complex(c.re, c.im);
    pot.check_hermitian();
  } else {
    throw Error(ErrorKind::Config, "potential.preset: unknown preset '" + spec.preset + "'");
  }
  return pot;
}

EMFieldConfig build_field(const FieldSpec& spec, int dim, Real eps) {
  EMFieldConfig f;
  if (dim == 2 && spec.b != 0)
    f = constant_field(spec.b, eps, spec.lambda,
                       spec.gauge == "landau" ? ConstantGauge::Landau : ConstantGauge::Symmetric);
  else if (spec.b != 0)
    throw Error(ErrorKind::Config, "field.b: a constant field needs a two-dimensional lattice");
  else
    f = zero_field(dim, eps, spec.lambda);
  VectorX force = VectorX::Zero(dim);
  for (std::size_t i = 0; i < spec.force.size() && static_cast<int>(i) < dim; ++i)
    force(static_cast<Eigen::Index>(i)) = spec.force[i];
  const Real amp = spec.amplitude, period = spec.period;
  f.phi = [force, amp, period](const VectorX& r) { return force.dot(r) + amp * std::cos(two_pi * r(0) / period); };
  return f;
}

bool RunReport::passed() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

RunReport run(const RunConfig& config) {
  RunReport rep;
  rep.config = serialize_config(config);
  rep.results = json::object();
  const auto t0 = std::chrono::steady_clock::now();
  switch (config.experiment) {
    case Experiment::Bands: run_bands(config, rep); break;
    case Experiment::Geometry: run_geometry(config, rep); break;
    case Experiment::Butterfly: run_butterfly(config, rep); break;
    case Experiment::Egorov: run_egorov(config, rep); break;
    case Experiment::Flow: run_flow(config, rep); break;
    case Experiment::Propagate: run_propagate(config, rep); break;
  }
  rep.timing["total_seconds"] = seconds_since(t0);
  return rep;
}

std::string format_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.header.size(); ++i) out += (i ? "," : "") + t.header[i];
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + fmt17(row[i]);
    out += "\n";
  }
  return out;
}

std::string format_plot(const Table& t) {
  std::string out = "#";
  for (const auto& h : t.header) out += " " + h;
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? " " : "") + (std::isnan(row[i]) ? "nan" : fmt17(row[i]));
    out += "\n";
  }
  return out;
}

std::vector<std::filesystem::path> write_outputs(const RunReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& name, const std::string& text) {
    const auto path = dir / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(ErrorKind::Config, "cannot write " + path.string());
    os << text;
    written.push_back(path);
  };
  json checks = json::array();
  for (const auto& c : report.checks)
    checks.push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"relation", c.relation},
                      {"pass", c.pass}});
  json files = json::array();
  for (const auto& t : report.tables) files.push_back(t.name + ".csv");
  for (const auto& t : report.plots) files.push_back(t.name + ".dat");
  const json doc = {{"config", report.config}, {"results", report.results}, {"checks", checks},
                    {"passed", report.passed()}, {"files", files}};
  put("report.json", doc.dump(2) + "\n");
  put("timing.json", json(report.timing).dump(2) + "\n");
  for (const auto& t : report.tables) put(t.name + ".csv", format_csv(t));
  for (const auto& t : report.plots) put(t.name + ".dat", format_plot(t));
  return written;
}

}  // namespace peierls::io
