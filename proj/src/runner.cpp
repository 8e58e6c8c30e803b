#include "fraclab/runner.hpp"

#include "fraclab/entangle.hpp"
#include "fraclab/forward.hpp"
#include "fraclab/heat_rep.hpp"
#include "fraclab/observability.hpp"
#include "fraclab/recover.hpp"
#include "fraclab/wave_local.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace fraclab {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "fraclab 0.1.0";

// ---- schema ----------------------------------------------------------------

void require_keys(const json& j, const std::string& path,
                  const std::set<std::string>& allowed) {
  if (!j.is_object()) throw SchemaError(path + ": expected an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key))
      throw SchemaError(path + "." + key + ": unknown key");
}

}  // namespace

void validate_config(const json& config) {
  require_keys(config, "config",
               {"manifold", "observation", "alpha", "potential", "seed",
                "sources", "trace_grid", "tolerances", "entangle", "gauge",
                "wave", "pipeline", "recover"});
  if (!config.contains("manifold"))
    throw SchemaError("config.manifold: required");
  require_keys(config.at("manifold"), "config.manifold",
               {"builder", "sides", "conductance", "n", "ring", "limb", "path",
                "perturb"});
  if (config.at("manifold").contains("perturb"))
    require_keys(config.at("manifold").at("perturb"), "config.manifold.perturb",
                 {"seed", "amplitude"});
  if (config.contains("observation"))
    require_keys(config.at("observation"), "config.observation",
                 {"type", "indices", "center", "radius", "centers", "axis",
                  "width"});
  if (config.contains("potential"))
    require_keys(config.at("potential"), "config.potential",
                 {"profile", "value", "center", "radius", "height", "off_O",
                  "values"});
  if (config.contains("trace_grid"))
    require_keys(config.at("trace_grid"), "config.trace_grid", {"dt", "n"});
  if (config.contains("tolerances"))
    require_keys(config.at("tolerances"), "config.tolerances",
                 {"solver_residual", "kernel_orthogonality", "eig_rel_err",
                  "principal_angle", "moment_witness", "ucp_threshold",
                  "dedup", "rank", "noise_floor", "coverage_tau",
                  "potential_rel_err", "cert", "gauge"});
  if (config.contains("entangle"))
    require_keys(config.at("entangle"), "config.entangle",
                 {"alphas", "coeffs", "enlarge_hops", "shift_alpha", "shift_k",
                  "support_seed", "homotopy_steps"});
  if (config.contains("gauge"))
    require_keys(config.at("gauge"), "config.gauge",
                 {"permutation", "swap_limbs"});
  if (config.contains("wave"))
    require_keys(config.at("wave"), "config.wave",
                 {"p_center", "q_center", "ball_radius", "hops"});
  if (config.contains("recover"))
    require_keys(config.at("recover"), "config.recover", {"max_modes"});
}

json resolve_config(const json& config, const RunOptions& opt) {
  validate_config(config);
  json r = config;
  if (!r.contains("alpha")) r["alpha"] = 0.5;
  if (!r.contains("seed")) r["seed"] = 20240901;
  if (opt.seed_override) r["seed"] = *opt.seed_override;
  if (!r.contains("sources")) r["sources"] = 40;
  if (!r.contains("potential")) r["potential"] = {{"profile", "zero"}};
  if (!r.contains("observation"))
    r["observation"] = {{"type", "axis_band"}, {"axis", 0}, {"width", -1}};
  if (!r.contains("trace_grid"))
    r["trace_grid"] = {{"dt", 0.2}, {"n", 240}};
  json tol = r.contains("tolerances") ? r["tolerances"] : json::object();
  auto def = [&tol](const char* k, double v) {
    if (!tol.contains(k)) tol[k] = v;
  };
  def("solver_residual", 1e-9);
  def("kernel_orthogonality", 1e-10);
  def("eig_rel_err", 1e-6);
  def("principal_angle", 1e-6);
  def("moment_witness", 1e-6);
  def("ucp_threshold", 1e-8);
  def("dedup", 1e-4);
  def("rank", 1e-7);
  def("noise_floor", 1e-10);
  def("coverage_tau", 1e-8);
  def("potential_rel_err", 1e-6);
  def("cert", 1e-8);
  def("gauge", 1e-6);
  r["tolerances"] = tol;
  return r;
}

DiscreteManifold manifold_from_config(const json& resolved) {
  const json& mj = resolved.at("manifold");
  const std::string builder = mj.at("builder").get<std::string>();
  const double cond = mj.contains("conductance")
                          ? mj.at("conductance").get<double>()
                          : 1.0;
  DiscreteManifold m;
  if (builder == "flat_torus") {
    m = build_flat_torus(mj.at("sides").get<std::vector<int>>(), cond);
  } else if (builder == "cycle") {
    m = build_cycle(mj.at("n").get<int>(), cond);
  } else if (builder == "twin_limb") {
    m = build_twin_limb(mj.at("ring").get<int>(), mj.at("limb").get<int>(),
                        cond);
  } else if (builder == "file") {
    std::ifstream is(mj.at("path").get<std::string>());
    if (!is)
      throw SchemaError("config.manifold.path: cannot open " +
                        mj.at("path").get<std::string>());
    m = load_manifold(is);
  } else {
    throw SchemaError("config.manifold.builder: unknown builder " + builder);
  }
  if (mj.contains("perturb")) {
    const json& p = mj.at("perturb");
    m = perturb_metric(m, p.at("seed").get<std::uint64_t>(),
                       p.at("amplitude").get<double>());
  }
  return m;
}

namespace {

std::vector<int> torus_axis_band(const json& mj, int axis, int width) {
  const auto sides = mj.at("sides").get<std::vector<int>>();
  int n = 1;
  for (int s : sides) n *= s;
  std::vector<int> stride(sides.size(), 1);
  for (size_t d = 1; d < sides.size(); ++d)
    stride[d] = stride[d - 1] * sides[d - 1];
  if (width < 0) return {};  // sentinel: whole manifold
  std::vector<int> out;
  for (int v = 0; v < n; ++v)
    if ((v / stride[axis]) % sides[axis] < width) out.push_back(v);
  return out;
}

}  // namespace

ObservationSet observation_from_config(const json& resolved,
                                       const DiscreteManifold& m) {
  const json& oj = resolved.at("observation");
  const std::string type = oj.at("type").get<std::string>();
  if (type == "indices")
    return ObservationSet(oj.at("indices").get<std::vector<int>>());
  if (type == "ball")
    return ball(m, oj.at("center").get<int>(), oj.at("radius").get<double>());
  if (type == "balls") {
    std::vector<int> acc;
    for (int c : oj.at("centers").get<std::vector<int>>()) {
      auto b = ball(m, c, oj.at("radius").get<double>());
      acc.insert(acc.end(), b.vertex_indices.begin(), b.vertex_indices.end());
    }
    return ObservationSet(acc);
  }
  if (type == "axis_band") {
    const int width = oj.at("width").get<int>();
    auto idx = torus_axis_band(resolved.at("manifold"),
                               oj.at("axis").get<int>(), width);
    if (idx.empty()) {
      idx.resize(m.n_vertices);
      for (int v = 0; v < m.n_vertices; ++v) idx[v] = v;
      idx.pop_back();  // keep the complement nonempty
    }
    return ObservationSet(idx);
  }
  throw SchemaError("config.observation.type: unknown type " + type);
}

Potential potential_from_config(const json& resolved,
                                const DiscreteManifold& m,
                                const ObservationSet& O) {
  const json& pj = resolved.at("potential");
  const std::string profile = pj.at("profile").get<std::string>();
  Potential V = Potential::zero(m.n_vertices);
  if (profile == "zero") {
    // nothing
  } else if (profile == "constant") {
    V.values.setConstant(pj.at("value").get<double>());
  } else if (profile == "bump") {
    const int center = pj.at("center").get<int>();
    const double radius = pj.at("radius").get<double>();
    const double height = pj.at("height").get<double>();
    Mat D = distance_matrix(m);
    const double pi = 3.14159265358979323846;
    for (int x = 0; x < m.n_vertices; ++x) {
      const double d = D(center, x);
      if (d <= radius) {
        const double c = std::cos(0.5 * pi * d / radius);
        V.values[x] = height * c * c;
      }
    }
    const bool off_O = pj.contains("off_O") ? pj.at("off_O").get<bool>() : true;
    if (off_O)
      for (int x : O.vertex_indices) V.values[x] = 0.0;
  } else if (profile == "values") {
    V.values = vec_from_json(pj.at("values"));
    if (V.values.size() != m.n_vertices)
      throw SchemaError("config.potential.values: wrong length");
  } else {
    throw SchemaError("config.potential.profile: unknown profile " + profile);
  }
  return V;
}

namespace {

// ---- report helpers ---------------------------------------------------------

struct CheckList {
  json checks = json::array();
  bool all_pass = true;
  std::string first_failure;

  void add(const std::string& id, bool pass, double value, double threshold) {
    json c;
    c["id"] = id;
    c["pass"] = pass;
    c["value"] = num(value);
    c["threshold"] = num(threshold);
    checks.push_back(c);
    if (!pass) {
      all_pass = false;
      if (first_failure.empty()) first_failure = id;
    }
  }
  void note(const std::string& id, double value) {
    json c;
    c["id"] = id;
    c["pass"] = true;
    c["value"] = num(value);
    c["informational"] = true;
    checks.push_back(c);
  }
};

void write_report(const fs::path& dir, const std::string& name,
                  const json& resolved, CheckList& checks, json extra) {
  json rep;
  rep["tool"] = kVersion;
  rep["subcommand"] = name;
  rep["config"] = resolved;
  rep["config_hash"] = json_hash(resolved);
  rep["checks"] = checks.checks;
  rep["all_pass"] = checks.all_pass;
  if (!checks.first_failure.empty())
    rep["first_failure"] = checks.first_failure;
  for (auto& [k, v] : extra.items()) rep[k] = v;
  write_json_file((dir / (name + "_report.json")).string(), rep);
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream os(path);
  os << body;
}

struct Workspace {
  DiscreteManifold m;
  ObservationSet O{std::vector<int>{0}};
  Potential V;
  double alpha = 0.5;
  std::uint64_t seed = 0;
  json tol;
};

Workspace make_workspace(const json& resolved) {
  Workspace w;
  w.m = manifold_from_config(resolved);
  w.O = observation_from_config(resolved, w.m);
  w.O.validate(w.m);
  w.V = potential_from_config(resolved, w.m, w.O);
  w.alpha = resolved.at("alpha").get<double>();
  w.seed = resolved.at("seed").get<std::uint64_t>();
  w.tol = resolved.at("tolerances");
  return w;
}

// ---- subcommands ------------------------------------------------------------

int cmd_forward(const json& resolved, const RunOptions& opt,
                const fs::path& dir) {
  Workspace w = make_workspace(resolved);
  SpectralDecomposition spec = decompose(w.m);
  FracSchroedingerOp op(spec, w.alpha, w.V);
  const int n_sources = resolved.at("sources").get<int>();
  CauchyDataSet data = cauchy_generate(w.m, op, w.O, n_sources, w.seed);

  CheckList checks;
  double max_resid = 0.0, max_ortho = 0.0;
  for (const CauchyPair& p : data.pairs) {
    max_resid = std::max(max_resid, p.residual);
    max_ortho = std::max(max_ortho, p.kernel_orthogonality);
  }
  checks.add("forward.residual", max_resid < w.tol["solver_residual"].get<double>(),
             max_resid, w.tol["solver_residual"].get<double>());
  checks.add("forward.kernel_orthogonality",
             max_ortho < w.tol["kernel_orthogonality"].get<double>(), max_ortho,
             w.tol["kernel_orthogonality"].get<double>());
  checks.note("forward.kernel_dim", op.kernel().dim);
  checks.note("forward.kernel_sigma_below", op.kernel().sigma_below);
  checks.note("forward.kernel_sigma_above", op.kernel().sigma_above);

  write_json_file((dir / "cauchy.json").string(),
                  cauchy_to_json(data, w.m, opt.blind));
  {
    std::ostringstream os;
    save_manifold(os, w.m);
    write_text(dir / "manifold.txt", os.str());
  }
  json extra;
  extra["n_pairs"] = data.pairs.size();
  write_report(dir, "forward", resolved, checks, extra);
  return checks.all_pass ? 0 : 1;
}

int cmd_heatcheck(const json& resolved, const RunOptions&, const fs::path& dir) {
  Workspace w = make_workspace(resolved);
  SpectralDecomposition spec = decompose(w.m);
  CheckList checks;

  // reflection identity on an alpha grid: Gamma(-a)Gamma(1+a) evaluated
  // through tgamma must match the -pi/sin(pi a) route
  double refl_err = 0.0;
  for (int i = 1; i <= 19; ++i) {
    const double a = i / 20.0;
    const double via_gamma = std::tgamma(-a) * std::tgamma(1.0 + a);
    const double via_sin = gamma_reflection(a);
    refl_err =
        std::max(refl_err, std::abs(via_gamma - via_sin) / std::abs(via_sin));
  }
  checks.add("heatcheck.reflection_identity", refl_err < 1e-12, refl_err, 1e-12);

  const double lam1 = spec.lambda_1();
  const double lam_max = spec.lambda_max();
  QuadratureScheme inv_scheme = make_inverse_power_scheme(lam1, lam_max);
  QuadratureScheme fwd_scheme = make_forward_power_scheme(lam1, lam_max);

  // scalar quadrature over the calibrated grid
  double scalar_err = 0.0;
  for (double a : {lam1, 0.5 * (lam1 + lam_max), lam_max})
    for (double alpha : {0.05, 0.25, 0.5, 0.75, 0.95}) {
      const double got = power_via_quadrature(a, alpha, inv_scheme);
      scalar_err =
          std::max(scalar_err, std::abs(got - std::pow(a, -alpha)) /
                                   std::pow(a, -alpha));
    }
  checks.add("heatcheck.scalar_power", scalar_err < 1e-8, scalar_err, 1e-8);

  // operator representations vs the spectral calculus
  std::mt19937_64 rng(w.seed);
  std::normal_distribution<double> gauss;
  Vec f(w.m.n_vertices);
  for (int i = 0; i < f.size(); ++i) f[i] = gauss(rng);
  Vec f0 = f - spec.eigenvectors.col(0) * spec.coefficients(f)[0];

  double inv_err = 0.0, fwd_err = 0.0;
  for (double alpha : {0.25, 0.5, 0.75}) {
    Vec via_heat = inv_frac_power_via_heat(spec, alpha, f0, inv_scheme);
    Vec exact = inv_frac_power_apply(spec, alpha, f0);
    inv_err = std::max(inv_err, spec.mass_norm(via_heat - exact) /
                                    spec.mass_norm(exact));
    auto pw = frac_power_via_heat_pointwise(spec, alpha, f, fwd_scheme);
    Vec fexact = frac_power_apply(spec, alpha, f);
    fwd_err = std::max(fwd_err, spec.mass_norm(pw.values - fexact) /
                                    spec.mass_norm(fexact));
  }
  checks.add("heatcheck.inverse_representation", inv_err < 1e-6, inv_err, 1e-6);
  checks.add("heatcheck.forward_representation", fwd_err < 1e-5, fwd_err, 1e-5);

  {
    std::ostringstream os;
    write_scheme_csv(os, inv_scheme);
    write_text(dir / "scheme_inverse.csv", os.str());
    std::ostringstream os2;
    write_scheme_csv(os2, fwd_scheme);
    write_text(dir / "scheme_forward.csv", os2.str());
  }
  write_report(dir, "heatcheck", resolved, checks, json::object());
  return checks.all_pass ? 0 : 1;
}

int cmd_geometry(const json& resolved, const RunOptions&, const fs::path& dir) {
  Workspace w = make_workspace(resolved);
  SpectralDecomposition spec = decompose(w.m);
  Mat D = distance_matrix(w.m);
  const double tie_tol = 1e-9 * D.maxCoeff();
  ConditionHReport rep = check_condition_H(w.m, w.O, spec, tie_tol);

  CheckList checks;
  checks.add("geometry.observability_at_least_one",
             rep.observability_constant >= 1.0 - 1e-12,
             rep.observability_constant, 1.0);
  const bool full = w.O.size() == w.m.n_vertices;
  if (!full)
    checks.add("geometry.observability_above_one_for_partial_O",
               rep.observability_constant > 1.0, rep.observability_constant,
               1.0);
  int n_ok = 0;
  for (bool b : rep.antipodal_ok) n_ok += b ? 1 : 0;
  checks.note("geometry.antipodal_ok_count", n_ok);
  checks.note("geometry.observability_constant", rep.observability_constant);

  json extra;
  extra["condition_H"] = {
      {"observability_constant", num(rep.observability_constant)},
      {"constant_finite", rep.constant_finite},
      {"worst_cluster", rep.worst_cluster},
      {"note", rep.note}};
  json anti = json::array();
  for (size_t i = 0; i < rep.candidates.size(); ++i)
    anti.push_back({{"p", rep.candidates[i]},
                    {"antipodal_ok", static_cast<bool>(rep.antipodal_ok[i])}});
  extra["antipodal"] = anti;

  {
    std::ostringstream os;
    os << "lambda,N_lambda,lambda_pow\n";
    for (auto& row : weyl_curve(spec, w.m.dimension_hint))
      os << row[0] << "," << row[1] << "," << row[2] << "\n";
    write_text(dir / "weyl_curve.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "lambda,sup_phi,lambda_pow\n";
    for (auto& row : supnorm_curve(spec, w.m.dimension_hint))
      os << row[0] << "," << row[1] << "," << row[2] << "\n";
    write_text(dir / "supnorm_curve.csv", os.str());
  }
  write_report(dir, "geometry", resolved, checks, extra);
  return checks.all_pass ? 0 : 1;
}

json entangle_goldens_for(const json& resolved, const Workspace& w,
                          const SpectralDecomposition& spec) {
  // N=1 margin on the configured O, vanish set = O
  EntangleConfig ucp;
  ucp.alphas = {w.alpha};
  ucp.coeffs = {1.0};
  ucp.vanish_set = w.O.vertex_indices;
  ucp.obs = w.O;
  auto d1 = injectivity_diagnostic(assemble_operator(spec, ucp));

  json g;
  g["config_hash"] = json_hash(resolved);
  g["seed"] = resolved.at("seed").get<std::uint64_t>();
  g["tool"] = kVersion;
  g["ucp_sigma_min_normalized"] = num(d1.sigma_min_normalized);
  g["lambda_cap"] =
      num(std::numbers::pi / resolved.at("trace_grid").at("dt").get<double>());
  return g;
}

int cmd_entangle(const json& resolved, const RunOptions& opt,
                 const fs::path& dir) {
  Workspace w = make_workspace(resolved);
  SpectralDecomposition spec = decompose(w.m);
  const json ej = resolved.contains("entangle") ? resolved["entangle"]
                                                : json::object();
  const double ucp_threshold = w.tol["ucp_threshold"].get<double>();
  CheckList checks;

  // N=1 discrete (UCP)': vanish set = O itself
  EntangleConfig ucp;
  ucp.alphas = {w.alpha};
  ucp.coeffs = {1.0};
  ucp.vanish_set = w.O.vertex_indices;
  ucp.obs = w.O;
  ucp.validate(w.m);
  auto d1 = injectivity_diagnostic(assemble_operator(spec, ucp), ucp_threshold);
  checks.add("entangle.ucp_trivial_nullspace",
             !d1.structural_nullspace &&
                 d1.sigma_min_normalized > ucp_threshold,
             d1.sigma_min_normalized, ucp_threshold);

  // generic multi-alpha configuration; the vanish set is an enlargement of O
  // so the stacked operator stays tall
  const int hops =
      ej.contains("enlarge_hops") ? ej.at("enlarge_hops").get<int>() : 1;
  EntangleConfig gen;
  gen.alphas = ej.contains("alphas")
                   ? ej.at("alphas").get<std::vector<double>>()
                   : std::vector<double>{0.3, 0.6};
  gen.coeffs = ej.contains("coeffs")
                   ? ej.at("coeffs").get<std::vector<double>>()
                   : std::vector<double>{1.0, -1.0};
  gen.vanish_set = enlarge(w.m, w.O.vertex_indices, hops);
  gen.obs = w.O;
  json generic;
  {
    Mat E = assemble_operator(spec, gen);
    auto dg = injectivity_diagnostic(E, ucp_threshold);
    generic["rows"] = dg.rows;
    generic["cols"] = dg.cols;
    generic["sigma_min_normalized"] = num(dg.sigma_min_normalized);
    generic["structural_nullspace"] = dg.structural_nullspace;
    checks.note("entangle.generic_sigma_min", dg.sigma_min_normalized);
  }

  // integer-shift counterexample
  const double shift_alpha =
      ej.contains("shift_alpha") ? ej.at("shift_alpha").get<double>() : 0.4;
  const int shift_k = ej.contains("shift_k") ? ej.at("shift_k").get<int>() : 1;
  auto cex = counterexample_integer_shift(w.m, spec, w.O, shift_alpha, shift_k,
                                          w.seed);
  checks.add("entangle.integer_shift_residual", cex.residual < 1e-10,
             cex.residual, 1e-10);
  double v1_on_O = 0.0;
  for (int x : w.O.vertex_indices)
    v1_on_O = std::max(v1_on_O, std::abs(cex.v1[x]));
  checks.add("entangle.integer_shift_locality", v1_on_O == 0.0, v1_on_O, 0.0);

  // feed the counterexample into the diagnostic: nullvector must appear
  {
    EntangleConfig shifted;
    shifted.alphas = {shift_alpha, shift_alpha + shift_k};
    shifted.coeffs = {1.0, -1.0};
    shifted.vanish_set = w.O.vertex_indices;
    shifted.obs = w.O;
    Mat E = assemble_operator(spec, shifted);
    std::set<int> vs(w.O.vertex_indices.begin(), w.O.vertex_indices.end());
    std::vector<int> interior;
    for (int v = 0; v < w.m.n_vertices; ++v)
      if (!vs.count(v)) interior.push_back(v);
    Vec stacked(2 * interior.size());
    for (size_t c = 0; c < interior.size(); ++c) {
      stacked[c] = cex.v1[interior[c]];
      stacked[interior.size() + c] = cex.v2[interior[c]];
    }
    stacked /= stacked.norm();
    const double img = (E * stacked).norm() / std::max(E.norm(), 1e-300);
    checks.add("entangle.integer_shift_nullvector", img < 1e-8, img, 1e-8);
  }

  // heat-moment witness on the entangled configuration
  {
    EntangleConfig mom;
    mom.alphas = {shift_alpha, shift_alpha + shift_k};
    mom.coeffs = {1.0, -1.0};
    mom.vanish_set = w.O.vertex_indices;
    mom.obs = w.O;
    const int probe = default_probe_vertex(w.m, mom);
    QuadratureScheme grid =
        make_moment_scheme(1e-20, -std::log(1e-14) / spec.lambda_1());
    MomentSeries series = heat_moment_series(
        w.m, spec, mom, {cex.v1, cex.v2}, probe, grid);
    const int cap = moment_order_max(series);
    json moments = json::array();
    const double witness_tol = w.tol["moment_witness"].get<double>();
    for (int m_ord = 1; m_ord <= std::min(cap, 3); ++m_ord) {
      const double wit = moment_functional_normalized(series, m_ord);
      moments.push_back({{"m", m_ord}, {"witness", num(wit)}});
      checks.add("entangle.moment_witness_m" + std::to_string(m_ord),
                 wit < witness_tol, wit, witness_tol);
    }
    generic["moment_order_cap"] = cap;
    generic["moments"] = moments;
    generic["probe"] = probe;
    auto fit1 = fit_decay_bounds(series.t_grid, series.samples.row(0));
    generic["decay_fit_f1"] = {{"c_large", num(fit1.c_large)},
                               {"delta_large", num(fit1.delta_large)},
                               {"c_small", num(fit1.c_small)},
                               {"delta_small", num(fit1.delta_small)}};
  }

  // homotopy curve alpha_2 -> alpha_1 + 1
  {
    const int steps =
        ej.contains("homotopy_steps") ? ej.at("homotopy_steps").get<int>() : 6;
    auto curve = sigma_min_homotopy(spec, w.O, w.O.vertex_indices, shift_alpha,
                                    steps);
    std::ostringstream os;
    os << "alpha2,sigma_min_normalized\n";
    for (auto& [a2, s] : curve) os << a2 << "," << s << "\n";
    write_text(dir / "homotopy.csv", os.str());
  }

  // golden margin comparison when available
  const fs::path golden_path = fs::path(FRACLAB_GOLDEN_DIR) / "entangle.json";
  if (fs::exists(golden_path)) {
    json g = read_json_file(golden_path.string());
    const std::string key = json_hash(resolved);
    if (g.contains(key)) {
      const double recorded =
          g.at(key).at("ucp_sigma_min_normalized").get<double>();
      const double drift =
          std::abs(d1.sigma_min_normalized - recorded) /
          std::max(recorded, 1e-300);
      checks.add("entangle.golden_margin_drift", drift < 0.1, drift, 0.1);
    }
  }

  json extra;
  extra["ucp"] = {{"rows", d1.rows},
                  {"cols", d1.cols},
                  {"sigma_min_normalized", num(d1.sigma_min_normalized)}};
  extra["generic"] = generic;
  extra["integer_shift"] = {{"alpha", num(shift_alpha)},
                            {"k", shift_k},
                            {"residual", num(cex.residual)}};
  write_report(dir, "entangle", resolved, checks, extra);
  return checks.all_pass ? 0 : 1;
}

struct RecoveryBundle {
  SpectralData sd;
  HeatTraceSamples traces;
  CauchyDataSet data;
  SpectralDecomposition spec;  // oracle side
};

RecoveryBundle run_spectral_recovery(const Workspace& w, const json& resolved) {
  RecoveryBundle b;
  b.spec = decompose(w.m);
  FracSchroedingerOp op(b.spec, w.alpha, w.V);
  b.data = cauchy_generate(w.m, op, w.O, resolved.at("sources").get<int>(),
                           w.seed);
  const double dt = resolved.at("trace_grid").at("dt").get<double>();
  const int n_t = resolved.at("trace_grid").at("n").get<int>();
  b.traces = heat_trace_from_cauchy(b.data, w.m, b.spec, dt, n_t);
  const int max_modes = resolved.contains("recover") &&
                                resolved["recover"].contains("max_modes")
                            ? resolved["recover"]["max_modes"].get<int>()
                            : 40;
  std::vector<std::vector<ExpFitMode>> fits;
  for (const Mat& samples : b.traces.per_source)
    fits.push_back(exponential_fit(samples, dt, max_modes,
                                   w.tol["noise_floor"].get<double>()));
  b.sd = accumulate_eigenspaces(b.traces, fits, w.tol["dedup"].get<double>(),
                                w.tol["rank"].get<double>());
  return b;
}

double principal_angle_vs_truth(const SpectralData& sd, int cluster,
                                const SpectralDecomposition& spec,
                                int true_cluster) {
  const int b = sd.cluster_col_begin(cluster);
  const int d = sd.multiplicities[cluster];
  const SpectralCluster& cl = spec.clusters[true_cluster];
  if (d != cl.multiplicity) return 1.0;
  Mat A = sd.restrictions.middleCols(b, d);
  Mat B(sd.O_indices.size(), d);
  for (size_t r = 0; r < sd.O_indices.size(); ++r)
    for (int c = 0; c < d; ++c)
      B(r, c) = spec.eigenvectors(sd.O_indices[r], cl.col_begin + c);
  auto orth = [](const Mat& X) {
    Eigen::HouseholderQR<Mat> qr(X);
    return Mat(qr.householderQ() * Mat::Identity(X.rows(), X.cols()));
  };
  Mat Qa = orth(A), Qb = orth(B);
  Eigen::BDCSVD<Mat> svd(Qa.transpose() * Qb);
  const double c = std::min(1.0, svd.singularValues().minCoeff());
  return std::acos(c);
}

int cmd_spectral_recover(const json& resolved, const RunOptions& opt,
                         const fs::path& dir) {
  Workspace w = make_workspace(resolved);
  RecoveryBundle b = run_spectral_recovery(w, resolved);
  CheckList checks;

  write_json_file((dir / "spectral_data.json").string(),
                  spectral_data_to_json(b.sd));

  if (opt.oracle) {
    // truth comparison below the recorded cap
    std::vector<int> truth;
    for (int k = 0; k < b.spec.n_clusters(); ++k)
      if (b.spec.clusters[k].eigenvalue < b.sd.lambda_cap) truth.push_back(k);
    const bool count_ok = truth.size() == b.sd.eigenvalues.size();
    checks.add("recover.cluster_count", count_ok,
               static_cast<double>(b.sd.eigenvalues.size()),
               static_cast<double>(truth.size()));
    if (count_ok) {
      double eig_err = 0.0, angle = 0.0;
      bool mult_ok = true;
      for (size_t k = 1; k < truth.size(); ++k) {
        const double lt = b.spec.clusters[truth[k]].eigenvalue;
        eig_err = std::max(
            eig_err, std::abs(b.sd.eigenvalues[k] - lt) / (1.0 + lt));
        mult_ok = mult_ok && (b.sd.multiplicities[k] ==
                              b.spec.clusters[truth[k]].multiplicity);
        angle = std::max(angle, principal_angle_vs_truth(
                                    b.sd, static_cast<int>(k), b.spec,
                                    truth[k]));
      }
      checks.add("recover.eigenvalue_rel_err",
                 eig_err < w.tol["eig_rel_err"].get<double>(), eig_err,
                 w.tol["eig_rel_err"].get<double>());
      checks.add("recover.multiplicities_exact", mult_ok, mult_ok ? 0 : 1, 0.5);
      checks.add("recover.principal_angle",
                 angle < w.tol["principal_angle"].get<double>(), angle,
                 w.tol["principal_angle"].get<double>());
    }
  }
  json extra;
  extra["lambda_cap"] = num(b.sd.lambda_cap);
  extra["clusters"] = b.sd.eigenvalues.size();
  write_report(dir, "spectral-recover", resolved, checks, extra);
  return checks.all_pass ? 0 : 1;
}

int cmd_normalize(const json& resolved, const RunOptions&,
                  const fs::path& dir) {
  Workspace w = make_workspace(resolved);
  RecoveryBundle b = run_spectral_recovery(w, resolved);
  CheckList checks;
  const double cert_tol = w.tol["cert"].get<double>();

  // lift, orthonormalize jointly, re-restrict
  Mat lifted(w.m.n_vertices, b.sd.total_columns());
  {
    // reuse verification-side lift through the known eigenspaces
    // (normalize is a matched-mesh stage)
    SpectralData tmp = b.sd;
    Mat fam = Mat::Zero(w.m.n_vertices, b.sd.total_columns());
    // cluster-by-cluster least squares against the true eigenspaces
    for (size_t k = 0; k < tmp.eigenvalues.size(); ++k) {
      int match = -1;
      for (int j = 0; j < b.spec.n_clusters(); ++j)
        if (std::abs(b.spec.clusters[j].eigenvalue - tmp.eigenvalues[k]) <=
            1e-5 * (1.0 + tmp.eigenvalues[k]))
          match = j;
      if (match < 0) throw std::runtime_error("normalize: unmatched cluster");
      const SpectralCluster& cl = b.spec.clusters[match];
      Mat Phi_O(tmp.O_indices.size(), cl.multiplicity);
      for (size_t r = 0; r < tmp.O_indices.size(); ++r)
        for (int c = 0; c < cl.multiplicity; ++c)
          Phi_O(r, c) =
              b.spec.eigenvectors(tmp.O_indices[r], cl.col_begin + c);
      const int cb = tmp.cluster_col_begin(static_cast<int>(k));
      Mat C = Phi_O.colPivHouseholderQr().solve(
          tmp.restrictions.middleCols(cb, tmp.multiplicities[k]));
      fam.middleCols(cb, tmp.multiplicities[k]) =
          b.spec.eigenvectors.middleCols(cl.col_begin, cl.multiplicity) * C;
    }
    lifted = fam;
  }
  Mat restr = b.sd.restrictions;
  joint_gram_schmidt(w.m, lifted, restr);
  b.sd.restrictions = restr;

  // test sources in a ball V strictly inside O
  Mat D = distance_matrix(w.m);
  const int v_center = w.O.vertex_indices[0];
  std::vector<int> V_pos;
  for (int p = 0; p < w.O.size(); ++p)
    if (D(v_center, w.O.vertex_indices[p]) <= 2.0) V_pos.push_back(p);
  std::mt19937_64 rng(w.seed + 17);
  std::normal_distribution<double> gauss;
  int max_mult = 0;
  for (int d : b.sd.multiplicities) max_mult = std::max(max_mult, d);
  std::vector<Vec> sources;
  for (int s = 0; s < 3 * max_mult + 4; ++s) {
    Vec f = Vec::Zero(w.O.size());
    for (int p : V_pos) f[p] = gauss(rng);
    sources.push_back(f);
  }
  Vec mass_O(w.O.size());
  for (int p = 0; p < w.O.size(); ++p)
    mass_O[p] = w.m.mass[w.O.vertex_indices[p]];

  auto honest = expansion_residual(b.sd, sources, V_pos, mass_O, cert_tol);
  checks.add("normalize.expansion_residual_honest",
             honest.max_residual < cert_tol, honest.max_residual, cert_tol);
  checks.add("normalize.certified", honest.certified, honest.certified ? 1 : 0,
             0.5);

  // injected non-unitary mixing must be detected
  {
    SpectralData mixed = b.sd;
    int victim = -1;
    for (size_t k = 1; k < mixed.eigenvalues.size(); ++k)
      if (mixed.multiplicities[k] >= 1) {
        victim = static_cast<int>(k);
        break;
      }
    const int cb = mixed.cluster_col_begin(victim);
    mixed.restrictions.col(cb) *= (1.0 + 1e-2);
    auto bad = expansion_residual(mixed, sources, V_pos, mass_O, cert_tol);
    checks.add("normalize.mixing_detected", bad.max_residual > 1e-3,
               bad.max_residual, 1e-3);
  }

  // wave support checks around an antipodal pair inside O
  const json wj = resolved.contains("wave") ? resolved["wave"] : json::object();
  if (wj.contains("p_center")) {
    const int p = wj.at("p_center").get<int>();
    const int q = wj.at("q_center").get<int>();
    const double r = wj.contains("ball_radius")
                         ? wj.at("ball_radius").get<double>()
                         : 1.0;
    std::vector<int> Wball, Vball;
    for (int v = 0; v < w.m.n_vertices; ++v) {
      if (D(p, v) <= r) Wball.push_back(v);
      if (D(q, v) <= r) Vball.push_back(v);
    }
    const int hops = wj.contains("hops")
                         ? wj.at("hops").get<int>()
                         : static_cast<int>(D(p, q) - 2 * r - 1);
    auto ws = wave_support_check(w.m, b.spec, b.sd, Vball, Wball, hops);
    checks.add("normalize.f2_outside_O", ws.outside_O_ok, ws.outside_O_mass,
               1e-8);
    checks.add("normalize.wave_window", ws.window_ok, ws.window_witness, 1e-8);
    checks.add("normalize.wave_window_reverse", ws.reverse_window_ok,
               ws.reverse_window_witness, 1e-8);

    // corrupted restriction must break the support check
    SpectralData bad = b.sd;
    std::mt19937_64 crng(w.seed + 99);
    std::normal_distribution<double> g2;
    Vec noise(bad.restrictions.rows());
    for (int i = 0; i < noise.size(); ++i) noise[i] = g2(crng);
    bad.restrictions.col(2) += 1e-2 * noise / noise.norm();
    auto wsbad = wave_support_check(w.m, b.spec, bad, Vball, Wball, hops);
    checks.add("normalize.corruption_detected",
               wsbad.outside_O_mass > 1e-3, wsbad.outside_O_mass, 1e-3);
  }

  write_json_file((dir / "spectral_data_normalized.json").string(),
                  spectral_data_to_json(b.sd));
  write_report(dir, "normalize", resolved, checks, json::object());
  return checks.all_pass ? 0 : 1;
}

int cmd_potential(const json& resolved, const RunOptions&,
                  const fs::path& dir) {
  Workspace w = make_workspace(resolved);
  SpectralDecomposition spec = decompose(w.m);
  FracSchroedingerOp op(spec, w.alpha, w.V);
  CauchyDataSet data = cauchy_generate(w.m, op, w.O,
                                       resolved.at("sources").get<int>(),
                                       w.seed);
  BlindCauchyData blind = data.blind(w.m);
  const double tau = w.tol["coverage_tau"].get<double>();
  PotentialRecovery rec = recover_potential(blind, w.m, spec, tau);

  CheckList checks;
  int covered = 0;
  double max_err = 0.0;
  const double v_scale = std::max(w.V.values.cwiseAbs().maxCoeff(), 1.0);
  for (int x = 0; x < w.m.n_vertices; ++x) {
    if (!rec.covered[x]) continue;
    ++covered;
    max_err = std::max(max_err,
                       std::abs(rec.V_hat[x] - w.V.values[x]) / v_scale);
  }
  checks.add("potential.full_coverage", rec.n_uncovered == 0,
             rec.n_uncovered, 0.5);
  checks.add("potential.max_rel_err",
             max_err < w.tol["potential_rel_err"].get<double>(), max_err,
             w.tol["potential_rel_err"].get<double>());
  checks.note("potential.extension_sigma_min", rec.extension_sigma_min);
  checks.note("potential.source_spread", rec.max_source_spread);

  {
    std::ostringstream os;
    os << "vertex,V_true,V_hat,covered\n";
    for (int x = 0; x < w.m.n_vertices; ++x)
      os << x << "," << w.V.values[x] << "," << rec.V_hat[x] << ","
         << (rec.covered[x] ? 1 : 0) << "\n";
    write_text(dir / "potential.csv", os.str());
  }
  json extra;
  extra["coverage"] = covered;
  write_report(dir, "potential", resolved, checks, extra);
  return checks.all_pass ? 0 : 1;
}

int cmd_gauge(const json& resolved, const RunOptions&, const fs::path& dir) {
  Workspace w = make_workspace(resolved);
  SpectralDecomposition spec = decompose(w.m);
  const json gj = resolved.contains("gauge") ? resolved["gauge"] : json::object();

  std::vector<int> perm(w.m.n_vertices);
  for (int v = 0; v < w.m.n_vertices; ++v) perm[v] = v;
  if (gj.contains("permutation")) {
    perm = gj.at("permutation").get<std::vector<int>>();
  } else if (gj.contains("swap_limbs") && gj.at("swap_limbs").get<bool>()) {
    const json& mj = resolved.at("manifold");
    const int ring = mj.at("ring").get<int>();
    const int limb = mj.at("limb").get<int>();
    for (int k = 0; k < limb; ++k) {
      perm[ring + k] = ring + limb + k;
      perm[ring + limb + k] = ring + k;
    }
  }

  auto [m2, V2] = gauge_pullback(w.m, w.V, perm, w.O);
  SpectralDecomposition spec2 = decompose(m2);
  FracSchroedingerOp op1(spec, w.alpha, w.V);
  FracSchroedingerOp op2(spec2, w.alpha, V2);
  const int n_sources = resolved.at("sources").get<int>();
  CauchyDataSet d1 = cauchy_generate(w.m, op1, w.O, n_sources, w.seed);
  CauchyDataSet d2 = cauchy_generate(m2, op2, w.O, n_sources, w.seed);

  CheckList checks;
  double pair_diff = 0.0;
  for (int s = 0; s < n_sources; ++s) {
    pair_diff = std::max(pair_diff,
                         (d1.pairs[s].f_O - d2.pairs[s].f_O).cwiseAbs().maxCoeff());
    pair_diff = std::max(pair_diff,
                         (d1.pairs[s].u_O - d2.pairs[s].u_O).cwiseAbs().maxCoeff());
    pair_diff = std::max(
        pair_diff,
        (d1.pairs[s].fracu_O - d2.pairs[s].fracu_O).cwiseAbs().maxCoeff());
  }
  checks.add("gauge.cauchy_pairs_equal", pair_diff < 1e-10, pair_diff, 1e-10);

  // reduce both data sets and verify equivalence with the owner models
  const double dt = resolved.at("trace_grid").at("dt").get<double>();
  const int n_t = resolved.at("trace_grid").at("n").get<int>();
  auto reduce = [&](const CauchyDataSet& data, const DiscreteManifold& mesh,
                    const SpectralDecomposition& sp) {
    HeatTraceSamples tr = heat_trace_from_cauchy(data, mesh, sp, dt, n_t);
    std::vector<std::vector<ExpFitMode>> fits;
    for (const Mat& s : tr.per_source)
      fits.push_back(exponential_fit(s, dt, 40,
                                     w.tol["noise_floor"].get<double>()));
    return accumulate_eigenspaces(tr, fits, w.tol["dedup"].get<double>(),
                                  w.tol["rank"].get<double>());
  };
  GaugeModel g1{&w.m, &spec, w.V.values, reduce(d1, w.m, spec)};
  GaugeModel g2{&m2, &spec2, V2.values, reduce(d2, m2, spec2)};
  GaugeVerdict verdict =
      verify_gauge_equivalence(g1, g2, w.O, w.tol["gauge"].get<double>());
  checks.add("gauge.matched", verdict.matched, verdict.matched ? 1 : 0, 0.5);
  bool id_on_O = true;
  bool is_generator = verdict.matched;
  if (verdict.matched) {
    for (int x : w.O.vertex_indices)
      if (verdict.permutation[x] != x) id_on_O = false;
    for (int v = 0; v < w.m.n_vertices; ++v)
      if (verdict.permutation[v] != perm[v]) is_generator = false;
  }
  checks.add("gauge.identity_on_O", verdict.matched && id_on_O,
             id_on_O ? 1 : 0, 0.5);
  const bool nontrivial_expected =
      w.V.values.cwiseAbs().maxCoeff() > 0.0;  // V distinguishes the limbs
  if (nontrivial_expected)
    checks.add("gauge.generating_permutation", is_generator,
               is_generator ? 1 : 0, 0.5);

  json extra;
  extra["witness"] = verdict.witness;
  if (verdict.matched) extra["permutation"] = verdict.permutation;
  write_report(dir, "gauge", resolved, checks, extra);
  return checks.all_pass ? 0 : 1;
}

int cmd_all(const json& resolved, const RunOptions& opt, const fs::path& dir) {
  int rc = 0;
  RunOptions o = opt;
  o.oracle = true;
  rc = std::max(rc, cmd_forward(resolved, o, dir));
  rc = std::max(rc, cmd_heatcheck(resolved, o, dir));
  rc = std::max(rc, cmd_geometry(resolved, o, dir));
  rc = std::max(rc, cmd_entangle(resolved, o, dir));
  rc = std::max(rc, cmd_spectral_recover(resolved, o, dir));
  rc = std::max(rc, cmd_normalize(resolved, o, dir));
  rc = std::max(rc, cmd_potential(resolved, o, dir));
  json summary;
  summary["exit"] = rc;
  write_json_file((dir / "all_summary.json").string(), summary);
  return rc;
}

}  // namespace

int regen_golden(const json& config, const RunOptions& opt) {
  if (!opt.oracle) {
    std::fprintf(stderr, "regen-golden requires --oracle\n");
    return 2;
  }
  json resolved = resolve_config(config, opt);
  Workspace w = make_workspace(resolved);
  SpectralDecomposition spec = decompose(w.m);
  json entry = entangle_goldens_for(resolved, w, spec);

  const fs::path golden_path = fs::path(FRACLAB_GOLDEN_DIR) / "entangle.json";
  json all = fs::exists(golden_path) ? read_json_file(golden_path.string())
                                     : json::object();
  const std::string key = json_hash(resolved);
  if (all.contains(key) && !opt.force) {
    const double old =
        all.at(key).at("ucp_sigma_min_normalized").get<double>();
    const double now = entry.at("ucp_sigma_min_normalized").get<double>();
    const double drift = std::abs(now - old) / std::max(old, 1e-300);
    if (drift > 0.1) {
      std::fprintf(stderr,
                   "regen-golden: drift %.3e beyond tolerance; rerun with "
                   "--force to accept\n",
                   drift);
      return 1;
    }
  }
  all[key] = entry;
  write_json_file(golden_path.string(), all);
  return 0;
}

int run_subcommand(const std::string& name, const json& config,
                   const RunOptions& opt) {
  json resolved;
  try {
    resolved = resolve_config(config, opt);
  } catch (const SchemaError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }
  fs::path dir(opt.out_dir);
  fs::create_directories(dir);
  write_json_file((dir / "resolved_config.json").string(), resolved);

  try {
    if (name == "forward") return cmd_forward(resolved, opt, dir);
    if (name == "heatcheck") return cmd_heatcheck(resolved, opt, dir);
    if (name == "geometry") return cmd_geometry(resolved, opt, dir);
    if (name == "entangle") return cmd_entangle(resolved, opt, dir);
    if (name == "spectral-recover")
      return cmd_spectral_recover(resolved, opt, dir);
    if (name == "normalize") return cmd_normalize(resolved, opt, dir);
    if (name == "potential") return cmd_potential(resolved, opt, dir);
    if (name == "gauge") return cmd_gauge(resolved, opt, dir);
    if (name == "all") return cmd_all(resolved, opt, dir);
    if (name == "regen-golden") return regen_golden(config, opt);
  } catch (const SchemaError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "run failed: %s\n", e.what());
    return 1;
  }
  std::fprintf(stderr, "unknown subcommand %s\n", name.c_str());
  return 2;
}

}  // namespace fraclab
