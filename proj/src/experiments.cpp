#include "gff2d/experiments.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <boost/version.hpp>
#include <chrono>
#include <cmath>
#include <fftw3.h>
#include <fstream>
#include <map>
#include <openssl/crypto.h>
#include <sstream>

#include "gff2d/cable_percolation.hpp"
#include "gff2d/coarse_grain.hpp"
#include "gff2d/continuum_capacity.hpp"
#include "gff2d/digest.hpp"
#include "gff2d/errors.hpp"
#include "gff2d/gff_sampler.hpp"
#include "gff2d/green.hpp"
#include "gff2d/interlacements.hpp"
#include "gff2d/potential.hpp"
#include "gff2d/tube.hpp"

namespace gff2d {

namespace fs = std::filesystem;

namespace {

enum class Ty { integer, number, string, boolean, int_array, number_array, point, object, array };

struct Param {
  const char* name;
  Ty type;
  bool required;
  json def;
};

const char* type_name(Ty t) {
  switch (t) {
    case Ty::integer: return "integer";
    case Ty::number: return "number";
    case Ty::string: return "string";
    case Ty::boolean: return "boolean";
    case Ty::int_array: return "array of integers";
    case Ty::number_array: return "array of numbers";
    case Ty::point: return "[x, y] integer pair";
    case Ty::object: return "object";
    default: return "array";
  }
}

bool has_type(const json& v, Ty t) {
  switch (t) {
    case Ty::integer: return v.is_number_integer();
    case Ty::number: return v.is_number();
    case Ty::string: return v.is_string();
    case Ty::boolean: return v.is_boolean();
    case Ty::int_array:
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number_integer(); });
    case Ty::number_array:
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); });
    case Ty::point: return v.is_array() && v.size() == 2 && v[0].is_number_integer() && v[1].is_number_integer();
    case Ty::object: return v.is_object();
    default: return v.is_array();
  }
}

const std::vector<Param> kCommon = {
    {"command", Ty::string, true, nullptr},
    {"name", Ty::string, false, nullptr},
    {"seed", Ty::integer, false, nullptr},
    {"checks", Ty::array, false, json::array()},
};

const std::map<std::string, std::vector<Param>>& schema() {
  static const std::map<std::string, std::vector<Param>> s = {
      {"segcap",
       {{"n", Ty::integer, false, 0},
        {"ns", Ty::int_array, false, {500, 1000, 2000, 4000}},
        {"tol", Ty::number, false, 1e-13}}},
      {"green",
       {{"N", Ty::integer, true, nullptr},
        {"window_kind", Ty::string, false, "torus"},
        {"window_side", Ty::integer, false, 0},
        {"points", Ty::array, false, json::array({json::array({0, 0})})},
        {"set_file", Ty::string, false, ""},
        {"killed_file", Ty::string, false, ""}}},
      {"capacity",
       {{"N", Ty::integer, true, nullptr},
        {"window_kind", Ty::string, false, "plane"},
        {"window_side", Ty::integer, false, 0},
        {"set_file", Ty::string, false, ""},
        {"ball_radius", Ty::number, false, -1.0},
        {"weights", Ty::boolean, false, false}}},
      {"tube",
       {{"N", Ty::integer, true, nullptr},
        {"P", Ty::integer, true, nullptr},
        {"A", Ty::int_array, false, json::array()},
        {"shape", Ty::string, false, "segments"},
        {"scale", Ty::number, false, 1.0},
        {"hypothesis", Ty::string, false, "separation"},
        {"capacity", Ty::boolean, false, true},
        {"eta", Ty::number, false, 0.15}}},
      {"sample",
       {{"N", Ty::integer, true, nullptr},
        {"side", Ty::integer, false, 0},
        {"method", Ty::string, false, "spectral"},
        {"out", Ty::string, false, "field.bin"}}},
      {"theta",
       {{"N", Ty::integer, true, nullptr},
        {"abar", Ty::number, false, 0.0},
        {"R", Ty::integer, false, 0},
        {"samples", Ty::integer, false, 1000},
        {"side_factor", Ty::integer, false, 8},
        {"eval_fraction", Ty::number, false, 0.125},
        {"workers", Ty::integer, false, 0}}},
      {"scaling",
       {{"grid", Ty::array, false, json::array()},
        {"grid_file", Ty::string, false, ""},
        {"samples", Ty::integer, false, 1000},
        {"samples_xi", Ty::integer, false, 0},
        {"side_factor", Ty::integer, false, 8},
        {"eval_fraction", Ty::number, false, 0.125},
        {"workers", Ty::integer, false, 0}}},
      {"interlace",
       {{"N", Ty::integer, true, nullptr},
        {"u", Ty::number, true, nullptr},
        {"side", Ty::integer, false, 0},
        {"samples", Ty::integer, false, 1000},
        {"anchor_radius", Ty::integer, false, 0},
        {"vacancy_radius", Ty::number, false, -1.0},
        {"locuniq", Ty::object, false, nullptr},
        {"isom", Ty::object, false, nullptr}}},
      {"coarsegrain",
       {{"path_file", Ty::string, false, ""},
        {"generate", Ty::object, false, nullptr},
        {"x", Ty::point, false, json::array({0, 0})},
        {"N", Ty::integer, true, nullptr},
        {"L", Ty::integer, false, 1},
        {"M", Ty::integer, false, 100},
        {"R", Ty::number, false, 0.0},
        {"exclusion", Ty::number, false, 0.0},
        {"verify", Ty::boolean, false, true},
        {"rho", Ty::number_array, false, json::array()}}},
  };
  return s;
}

std::string hex_digest(const json& j) { return sha256_hex(j.dump()); }

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream s;
  s.precision(12);
  s << v;
  return s.str();
}

Window make_window(const std::string& kind, int side) {
  if (kind == "box") return Window::box(side);
  if (kind == "torus") return Window::torus(side);
  throw ValidationError("window_kind must be box or torus, got '" + kind + "'");
}

PointSet read_point_set(const std::string& file) { return make_point_set(read_path(file)); }

void ensure_dir(const fs::path& d) {
  if (!d.empty()) fs::create_directories(d);
}

// ---- commands -------------------------------------------------------------

json cmd_segcap(const json& t, const fs::path& dir, TaskOutcome& o) {
  if (t["n"].get<int>() > 0) {
    const auto d = minimize_segment(t["n"].get<int>(), t["tol"].get<double>());
    if (!dir.empty()) {
      std::vector<std::vector<std::string>> rows;
      for (int i = 0; i < d.n; ++i) rows.push_back({num(d.nodes[i]), num(d.weights[i])});
      write_csv(dir / "weights.csv", {"node", "weight"}, rows);
      o.outputs.push_back(dir / "weights.csv");
    }
    const long nonpositive = std::count_if(d.weights.begin(), d.weights.end(), [](double w) { return w <= 0; });
    o.metrics = {{"cap", d.cap}, {"tau", d.tau}, {"residual", d.residual}, {"nonpositive_weights", nonpositive}};
    return {{"n", d.n},
            {"cap", d.cap},
            {"tau", d.tau},
            {"energy", d.energy},
            {"iterations", d.iterations},
            {"residual", d.residual},
            {"nonpositive_weights", nonpositive}};
  }
  const auto ns = t["ns"].get<std::vector<int>>();
  const auto st = segment_capacity_study(ns, t["tol"].get<double>());
  json levels = json::array();
  std::vector<std::vector<std::string>> rows;
  for (const auto& l : st.levels) {
    levels.push_back({{"n", l.n}, {"cap", l.cap}, {"tau", l.tau}, {"energy", l.energy}, {"iterations", l.iterations}, {"gap", l.residual}});
    rows.push_back({std::to_string(l.n), num(l.cap), num(l.tau), std::to_string(l.iterations), num(l.residual)});
  }
  if (!dir.empty()) {
    write_csv(dir / "segcap.csv", {"n", "cap", "tau", "iterations", "gap"}, rows);
    o.outputs.push_back(dir / "segcap.csv");
  }
  o.metrics = {{"cap_finest", st.cap_finest},
               {"tau_finest", st.tau_finest},
               {"cap_extrapolated", st.cap_extrapolated},
               {"extrapolation_error", st.extrapolation_error},
               {"observed_order", st.observed_order},
               {"cauchy_ok", st.cauchy_ok}};
  return {{"levels", levels}};
}

json cmd_green(const json& t, const fs::path&, TaskOutcome& o) {
  const int N = t["N"];
  const WalkModel m(N);
  const int side = t["window_side"].get<int>() > 0 ? t["window_side"].get<int>() : 8 * N;
  const Window w = make_window(t["window_kind"], side);
  std::vector<Point> pts;
  if (!t["set_file"].get<std::string>().empty())
    pts = read_path(t["set_file"]);
  else
    for (const auto& p : t["points"]) pts.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
  PointSet U;
  if (!t["killed_file"].get<std::string>().empty()) U = read_point_set(t["killed_file"]);
  json rec = json::array();
  for (Point y : pts) {
    const double g = U.empty() ? green(m, w, {0, 0}, y) : green_killed(m, w, U, {0, 0}, y);
    rec.push_back({{"x", 0}, {"y", 0}, {"to", {y.x, y.y}}, {"g", g}});
  }
  o.metrics = {{"g_origin", green(m, w, {0, 0}, {0, 0})}, {"points", pts.size()}};
  return {{"values", rec}, {"window", {{"kind", to_string(w.kind())}, {"side", side}}}};
}

json cmd_capacity(const json& t, const fs::path&, TaskOutcome& o) {
  const int N = t["N"];
  const WalkModel m(N);
  PointSet K;
  if (!t["set_file"].get<std::string>().empty())
    K = read_point_set(t["set_file"]);
  else if (t["ball_radius"].get<double>() >= 0)
    K = ball({0, 0}, t["ball_radius"].get<double>());
  else
    throw ValidationError("capacity: give set_file or ball_radius");
  const std::string kind = t["window_kind"];
  EquilibriumMeasure e;
  if (kind == "plane") {
    auto g = plane_green(N);
    e = equilibrium_measure(m, [&g](int dx, int dy) { return (*g)(dx, dy); }, K);
  } else {
    const int side = t["window_side"].get<int>() > 0 ? t["window_side"].get<int>() : 8 * N;
    e = equilibrium_measure(m, make_window(kind, side), K);
  }
  json rec = {{"cap", e.cap}, {"size", K.size()}, {"residual", e.residual}};
  if (t["weights"].get<bool>()) {
    json w = json::array();
    for (std::size_t i = 0; i < K.size(); ++i) w.push_back({K[i].x, K[i].y, e.weights[i]});
    rec["weights"] = w;
  }
  o.metrics = {{"cap", e.cap}, {"size", K.size()}};
  return rec;
}

json cmd_tube(const json& t, const fs::path&, TaskOutcome& o) {
  const int N = t["N"], P = t["P"];
  std::vector<int> A = t["A"].get<std::vector<int>>();
  if (A.empty())
    for (int i = 1; i <= P; ++i) A.push_back(i);
  const std::string sh = t["shape"], hy = t["hypothesis"];
  if (sh != "segments" && sh != "boxes") throw ValidationError("tube: shape must be segments or boxes");
  if (hy != "separation" && hy != "diameter") throw ValidationError("tube: hypothesis must be separation or diameter");
  const Tube tb = build_tube(N, P, A, sh == "segments" ? TubeShape::segments : TubeShape::boxes, t["scale"],
                             hy == "separation" ? TubeHypothesis::separation : TubeHypothesis::diameter);
  json rec = {{"separation_delta", tb.separation_delta},
              {"diameter_inverse_delta", tb.diameter_inverse_delta},
              {"blocks", tb.indices.size()}};
  o.metrics = {{"separation_delta", tb.separation_delta}, {"diameter_inverse_delta", tb.diameter_inverse_delta}};
  if (t["capacity"].get<bool>()) {
    const PointSet U = tube_union(tb);
    const double cap = plane_capacity(N, U);
    double kappa = 1e300;
    for (const auto& s : tb.parts) kappa = std::min(kappa, plane_capacity(N, s));
    const double cseg = cap_reference();
    const double eta = t["eta"];
    rec["cap"] = cap;
    rec["kappa_min_part"] = kappa;
    rec["cap_segment"] = cseg;
    rec["upper_bound"] = (1 + eta) * cseg;
    // smallest c with cap >= ((c kappa P)^-1 + (1+eta)/cap_segment)^-1
    const double slack = 1.0 / cap - (1 + eta) / cseg;
    rec["lower_bound_c_required"] = slack > 0 ? 1.0 / (slack * kappa * P) : 0.0;
    o.metrics["cap"] = cap;
    o.metrics["cap_over_segment"] = cap / cseg;
    o.metrics["lower_bound_c_required"] = rec["lower_bound_c_required"];
  }
  return rec;
}

json cmd_sample(const json& t, const fs::path& dir, TaskOutcome& o) {
  const int N = t["N"];
  const int side = t["side"].get<int>() > 0 ? t["side"].get<int>() : 8 * N;
  const SamplerMethod meth = sampler_method_from_string(t["method"]);
  const Window w = meth == SamplerMethod::spectral ? Window::torus(side) : Window::box(side);
  const Field f = sample_field(WalkModel(N), w, t["seed"].get<std::uint64_t>(), meth);
  fs::path out = t["out"].get<std::string>();
  if (out.is_relative() && !dir.empty()) out = dir / out;
  ensure_dir(out.parent_path());
  write_field(f, out);
  o.outputs.push_back(out);
  o.outputs.push_back(fs::path(out.string() + ".json"));
  double s1 = 0, s2 = 0;
  for (double v : f.values) s1 += v, s2 += v * v;
  const double n = f.values.size();
  o.metrics = {{"mean", s1 / n}, {"variance", s2 / n - (s1 / n) * (s1 / n)}, {"sites", f.values.size()}};
  return {{"file", out.string()}, {"window", {{"kind", to_string(w.kind())}, {"side", side}}}};
}

LevelSetConfig theta_config(const json& t) {
  LevelSetConfig c;
  c.N = t["N"];
  c.level_abar = t["abar"];
  c.radius_R = t["R"];
  c.samples = t["samples"];
  c.side_factor = t["side_factor"];
  c.eval_fraction = t["eval_fraction"];
  c.workers = t["workers"];
  c.seed = t["seed"];
  return c;
}

json cmd_theta(const json& t, const fs::path&, TaskOutcome& o) {
  const LevelSetConfig c = theta_config(t);
  const auto e = estimate_theta(c);
  o.metrics = {{"p_hat", e.p_hat}, {"std_error", e.std_error}, {"hits", e.hits}, {"n_samples", e.n_samples}};
  return {{"level_abar", e.level_abar},
          {"p_hat", e.p_hat},
          {"std_error", e.std_error},
          {"n_samples", e.n_samples},
          {"hits", e.hits},
          {"R", effective_radius(c)},
          {"torus_side", theta_window(c).side()},
          {"config_digest", e.digest}};
}

json cmd_scaling(const json& t, const fs::path& dir, TaskOutcome& o) {
  json grid = t["grid"];
  if (!t["grid_file"].get<std::string>().empty()) {
    std::ifstream in(t["grid_file"].get<std::string>());
    if (!in) throw ValidationError("scaling: cannot open grid file");
    json g = json::parse(in);
    grid = g.is_object() ? g.at("grid") : g;
  }
  std::vector<ScalingPoint> pts;
  for (const auto& p : grid) {
    if (!p.is_object() || !p.contains("a") || !p.contains("N") || !p["a"].is_number() || !p["N"].is_number_integer())
      throw ValidationError("scaling: grid entries must be {\"a\": number, \"N\": integer}");
    pts.push_back({p["a"].get<double>(), p["N"].get<int>()});
  }
  ScalingOptions so;
  so.samples = t["samples"];
  so.samples_xi = t["samples_xi"];
  so.seed = t["seed"];
  so.side_factor = t["side_factor"];
  so.eval_fraction = t["eval_fraction"];
  so.workers = t["workers"];
  const auto rows = scaling_experiment(pts, so);
  std::vector<std::vector<std::string>> cells;
  json rec = json::array();
  for (const auto& r : rows) {
    cells.push_back(scaling_row_cells(r));
    json jr;
    const auto cols = scaling_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) jr[cols[i]] = cells.back()[i];
    rec.push_back(jr);
  }
  if (!dir.empty()) {
    write_csv(dir / "scaling.csv", scaling_columns(), cells);
    std::ofstream(dir / "plot_scaling.py") << scaling_plot_script("scaling.csv");
    o.outputs.push_back(dir / "scaling.csv");
    o.outputs.push_back(dir / "plot_scaling.py");
  }
  o.metrics = {{"rows", rows.size()}};
  // least-squares slope of the log-ratio against log(N/xi) over resolvable rows
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& r : rows)
    if (std::isfinite(r.log_ratio) && r.log_N_over_xi > 0) {
      sx += r.log_N_over_xi, sy += r.log_ratio, sxx += r.log_N_over_xi * r.log_N_over_xi;
      sxy += r.log_N_over_xi * r.log_ratio;
      ++n;
    }
  if (n >= 2 && sxx * n - sx * sx > 0) o.metrics["slope"] = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  o.metrics["tau_reference"] = tau_reference();
  return {{"rows", rec}};
}

json cmd_interlace(const json& t, const fs::path&, TaskOutcome& o) {
  const int N = t["N"];
  const double u = t["u"];
  const WalkModel m(N);
  const int side = t["side"].get<int>() > 0 ? t["side"].get<int>() : 4 * N;
  const Window w = Window::box(side);
  const int ar = t["anchor_radius"];
  const std::uint64_t seed = t["seed"];
  const long samples = t["samples"];
  const InterlacementSampler s(m, w, ar > 0 ? box_set({0, 0}, ar) : PointSet{});
  json rec = {{"cap_anchor", s.cap()}, {"expected_count", u * s.cap()}, {"window_side", side}};
  o.metrics = {{"cap_anchor", s.cap()}};
  const double vr = t["vacancy_radius"];
  if (vr >= 0) {
    const PointSet K = ball({0, 0}, vr);
    const double capK = equilibrium_measure(m, w, K).cap;
    const auto v = vacancy_experiment(s, K, capK, u, samples, seed);
    rec["vacancy"] = {{"cap_K", capK},     {"expected", v.expected},     {"p_hat", v.p_hat},
                      {"std_error", v.std_error}, {"mean_count", v.mean_count}, {"count_std_error", v.count_std_error}};
    o.metrics["vacancy_z"] = (v.p_hat - v.expected) / v.std_error;
    o.metrics["count_z"] = (v.mean_count - v.expected_count) / v.count_std_error;
  } else {
    double c1 = 0, c2 = 0;
    for (long k = 0; k < samples; ++k) {
      const double c = s.sample(u, seed, k, {false, false}).trajectories.size();
      c1 += c, c2 += c * c;
    }
    const double mean = c1 / samples, se = std::sqrt(std::max(0.0, c2 / samples - mean * mean) / samples);
    rec["mean_count"] = mean;
    rec["count_std_error"] = se;
    o.metrics["count_z"] = (mean - u * s.cap()) / se;
  }
  if (t.contains("locuniq") && t["locuniq"].is_object()) {
    const json& l = t["locuniq"];
    const Point x{l.value("x", json::array({0, 0}))[0].get<int>(), l.value("x", json::array({0, 0}))[1].get<int>()};
    const int R = l.at("R");
    const double lam = l.contains("lambda") ? l["lambda"].get<double>() : locuniq_lambda(N, R, l.value("c1", 1.0));
    long fail = 0;
    for (long k = 0; k < samples; ++k) fail += !loc_uniq(s.sample(u, seed ^ 0x10c, k, {false, true}), x, R, lam);
    const double p = double(fail) / samples;
    rec["locuniq"] = {{"R", R}, {"lambda", lam}, {"p_fail", p}, {"std_error", std::sqrt(p * (1 - p) / samples)}};
    o.metrics["locuniq_p_fail"] = p;
  }
  if (t.contains("isom") && t["isom"].is_object()) {
    const json& is = t["isom"];
    const int iside = is.value("side", 16);
    const double a = is.at("a");
    const auto r = isomorphism_marginal_test(m, Window::box(iside), a, is.value("samples", samples), seed,
                                             is.value("u", -1.0));
    rec["isom"] = {{"a", a},          {"u", r.level_u},           {"ks", r.ks.statistic},
                   {"critical_1pct", r.ks.critical_1pct}, {"p_value", r.ks.p_value}, {"passes", r.ks.passes()},
                   {"mean_lhs", r.mean_lhs}, {"mean_rhs", r.mean_rhs}};
    o.metrics["ks"] = r.ks.statistic;
    o.metrics["ks_passes"] = r.ks.passes();
  }
  return rec;
}

json cmd_coarsegrain(const json& t, const fs::path& dir, TaskOutcome& o) {
  const int N = t["N"], L = t["L"], M = t["M"];
  const Point x{t["x"][0].get<int>(), t["x"][1].get<int>()};
  Path path;
  if (!t["path_file"].get<std::string>().empty()) {
    path = read_path(t["path_file"]);
  } else if (t.contains("generate") && t["generate"].is_object()) {
    const json& g = t["generate"];
    path = generate_test_path(path_kind_from_string(g.value("kind", "straight")), x, N, L,
                              g.value("seed", t["seed"].get<std::uint64_t>()));
    if (!dir.empty() && g.value("write", false)) {
      write_path(dir / "path.txt", path);
      o.outputs.push_back(dir / "path.txt");
    }
  } else {
    throw ValidationError("coarsegrain: give path_file or generate");
  }
  CoarseGrainOptions opt;
  opt.peel_radius = t["R"];
  opt.exclusion_radius = t["exclusion"];
  const auto r = coarse_grain_path(path, x, N, L, M, opt);
  json parts = json::array();
  for (const auto& p : r.parts) {
    json jp = json::array();
    for (Point q : p) jp.push_back({q.x, q.y});
    parts.push_back(jp);
  }
  json rec = {{"path_digest", r.path_digest}, {"path_length", path.size()},
              {"k", r.scales.k},            {"R", r.scales.R},
              {"P", r.scales.P},            {"n", r.scales.n},
              {"L_seq", r.scales.L_seq},    {"l_seq", r.scales.l_seq},
              {"size", r.collection.size()}, {"excluded_parts", r.excluded_parts},
              {"parts", parts}};
  o.metrics = {{"size", r.collection.size()}, {"size_over_n", r.collection.size() / r.scales.n}};
  if (t["verify"].get<bool>()) {
    const auto v = verify_coarse_grain(r, path, opt);
    rec["verify"] = {{"position", v.embedding.position_violations}, {"separation", v.embedding.separation_violations},
                     {"nesting", v.embedding.nesting_violations},   {"leaf", v.embedding.leaf_violations},
                     {"subset", v.subset_violations},               {"spacing", v.spacing_violations},
                     {"anchoring", v.anchoring_violations},         {"exclusion", v.exclusion_violations},
                     {"lattice", v.lattice_violations},             {"total", v.total()}};
    o.metrics["violations"] = v.total();
  }
  const auto rhos = t["rho"].get<std::vector<double>>();
  if (!rhos.empty()) {
    json caps = json::array();
    const double cseg = cap_reference();
    for (double rho : rhos) {
      const auto c = capacity_of_coarse_grained(r, N, rho);
      caps.push_back({{"rho", rho},
                      {"cap", c.cap},
                      {"dropped", c.dropped.size()},
                      {"H", c.H},
                      {"c_required_eta_0.15", required_constant(c.cap, c.H, cseg, 0.15)}});
    }
    rec["capacity"] = caps;
  }
  return rec;
}

using Handler = json (*)(const json&, const fs::path&, TaskOutcome&);

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> h = {
      {"segcap", cmd_segcap}, {"green", cmd_green},     {"capacity", cmd_capacity},
      {"tube", cmd_tube},     {"sample", cmd_sample},   {"theta", cmd_theta},
      {"scaling", cmd_scaling}, {"interlace", cmd_interlace}, {"coarsegrain", cmd_coarsegrain}};
  return h;
}

json check_one(const json& chk, const json& metrics, bool& ok) {
  json r = chk;
  const std::string metric = chk.value("metric", "");
  if (!metrics.contains(metric) || !(metrics[metric].is_number() || metrics[metric].is_boolean())) {
    r["passed"] = false;
    r["reason"] = "metric not reported";
    ok = false;
    return r;
  }
  const double v = metrics[metric].is_boolean() ? (metrics[metric].get<bool>() ? 1.0 : 0.0) : metrics[metric].get<double>();
  bool pass = std::isfinite(v);
  if (chk.contains("min")) pass = pass && v >= chk["min"].get<double>();
  if (chk.contains("max")) pass = pass && v <= chk["max"].get<double>();
  r["value"] = v;
  r["passed"] = pass;
  ok = ok && pass;
  return r;
}

}  // namespace

const std::vector<std::string>& experiment_commands() {
  static const std::vector<std::string> c = {"segcap", "green",   "capacity",  "tube",       "sample",
                                             "theta",  "scaling", "interlace", "coarsegrain"};
  return c;
}

std::vector<std::string> validate_task(const json& task, const std::string& where) {
  std::vector<std::string> err;
  if (!task.is_object()) return {where + ": must be an object"};
  if (!task.contains("command") || !task["command"].is_string()) return {where + ": missing string field 'command'"};
  const std::string cmd = task["command"];
  auto it = schema().find(cmd);
  if (it == schema().end()) return {where + ": unknown command '" + cmd + "'"};
  std::vector<Param> params = kCommon;
  params.insert(params.end(), it->second.begin(), it->second.end());
  for (const auto& p : params) {
    if (!task.contains(p.name)) {
      if (p.required) err.push_back(where + ": missing required field '" + p.name + "'");
      continue;
    }
    if (!has_type(task[p.name], p.type))
      err.push_back(where + ": field '" + p.name + "' must be " + type_name(p.type));
  }
  for (auto kv = task.begin(); kv != task.end(); ++kv)
    if (std::none_of(params.begin(), params.end(), [&](const Param& p) { return kv.key() == p.name; }))
      err.push_back(where + ": unknown field '" + kv.key() + "' for command " + cmd);
  if (task.contains("checks") && task["checks"].is_array())
    for (std::size_t i = 0; i < task["checks"].size(); ++i) {
      const json& c = task["checks"][i];
      if (!c.is_object() || !c.contains("metric") || !c["metric"].is_string() ||
          (!c.contains("min") && !c.contains("max")))
        err.push_back(where + ": checks[" + std::to_string(i) + "] needs 'metric' and 'min' or 'max'");
    }
  return err;
}

std::vector<std::string> validate_config(const json& config) {
  std::vector<std::string> err;
  if (!config.is_object()) return {"configuration must be a JSON object"};
  for (auto kv = config.begin(); kv != config.end(); ++kv)
    if (kv.key() != "seed" && kv.key() != "output_dir" && kv.key() != "experiments")
      err.push_back("unknown top-level field '" + kv.key() + "'");
  if (config.contains("seed") && !config["seed"].is_number_integer()) err.push_back("'seed' must be an integer");
  if (config.contains("output_dir") && !config["output_dir"].is_string()) err.push_back("'output_dir' must be a string");
  if (!config.contains("experiments")) return err;
  if (!config["experiments"].is_array()) {
    err.push_back("'experiments' must be an array");
    return err;
  }
  std::map<std::string, int> names;
  for (std::size_t i = 0; i < config["experiments"].size(); ++i) {
    const json& t = config["experiments"][i];
    auto e = validate_task(t, "experiments[" + std::to_string(i) + "]");
    err.insert(err.end(), e.begin(), e.end());
    if (t.is_object() && t.contains("name") && t["name"].is_string() && ++names[t["name"]] > 1)
      err.push_back("experiments[" + std::to_string(i) + "]: duplicate name '" + t["name"].get<std::string>() + "'");
  }
  return err;
}

json normalize_task(const json& task, std::uint64_t default_seed, std::size_t index) {
  json t = task;
  const std::string cmd = t["command"];
  for (const auto& p : schema().at(cmd))
    if (!t.contains(p.name) && !p.def.is_null()) t[p.name] = p.def;
  if (!t.contains("seed")) t["seed"] = default_seed;
  if (!t.contains("name")) t["name"] = cmd + "_" + std::to_string(index);
  if (!t.contains("checks")) t["checks"] = json::array();
  return t;
}

TaskOutcome run_task(const json& task, const fs::path& dir) {
  TaskOutcome o;
  o.name = task.value("name", "");
  o.command = task.value("command", "");
  const auto t0 = std::chrono::steady_clock::now();
  try {
    ensure_dir(dir);
    o.record = handlers().at(o.command)(task, dir, o);
    bool ok = true;
    for (const auto& c : task["checks"]) o.checks.push_back(check_one(c, o.metrics, ok));
    if (!ok) o.status = "check_failed";
  } catch (const std::exception& e) {
    o.status = "failed";
    o.error = e.what();
  }
  o.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return o;
}

json library_versions() {
  return {{"gff2dlab", std::string(kToolVersion)},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"fftw", std::string(fftw_version)},
          {"boost", std::string(BOOST_LIB_VERSION)},
          {"openssl", std::string(OpenSSL_version(OPENSSL_VERSION))},
          {"compiler", std::string(__VERSION__)}};
}

RunOutcome run_config(const json& input, const fs::path& out_dir, const std::string& command_line) {
  // a manifest carries its configuration
  const json config = (input.is_object() && input.contains("manifest_version") && input.contains("config"))
                          ? input["config"]
                          : input;
  const auto errors = validate_config(config);
  if (!errors.empty()) {
    std::string msg = "configuration invalid:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ValidationError(msg);
  }
  const std::uint64_t seed = config.value("seed", 1);
  fs::path dir = out_dir;
  if (dir.empty()) dir = config.value("output_dir", "gff2dlab_out");
  ensure_dir(dir);
  RunOutcome r;
  const auto t0 = std::chrono::steady_clock::now();
  json tasks = json::array();
  const json exps = config.value("experiments", json::array());
  for (std::size_t i = 0; i < exps.size(); ++i) {
    const json t = normalize_task(exps[i], seed, i);
    const fs::path tdir = dir / t["name"].get<std::string>();
    auto o = run_task(t, tdir);
    if (o.status != "ok") r.ok = false;
    json outs = json::array();
    const fs::path rec_file = tdir / "record.json";
    if (o.status != "failed") {
      std::ofstream(rec_file) << json{{"metrics", o.metrics}, {"record", o.record}}.dump(2) << "\n";
      o.outputs.push_back(rec_file);
    }
    for (const auto& f : o.outputs)
      outs.push_back({{"file", fs::relative(f, dir).generic_string()}, {"sha256", sha256_file(f)}});
    tasks.push_back({{"name", o.name},
                     {"command", o.command},
                     {"status", o.status},
                     {"error", o.error},
                     {"seed", t["seed"]},
                     {"config", t},
                     {"config_digest", hex_digest(t)},
                     {"metrics", o.metrics},
                     {"checks", o.checks},
                     {"outputs", outs},
                     {"wall_seconds", o.wall_seconds}});
  }
  r.manifest = {{"manifest_version", 1},
                {"tool", "gff2dlab"},
                {"command", command_line},
                {"config", config},
                {"config_digest", hex_digest(config)},
                {"seed", seed},
                {"versions", library_versions()},
                {"wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()},
                {"tasks", tasks},
                {"ok", r.ok}};
  std::ofstream(dir / "manifest.json") << r.manifest.dump(2) << "\n";
  return r;
}

void write_csv(const fs::path& p, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  ensure_dir(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + p.string());
  auto line = [&out](const std::vector<std::string>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
    out << "\n";
  };
  line(header);
  for (const auto& r : rows) line(r);
}

std::string scaling_plot_script(const std::string& csv_name) {
  return R"PY(# Usage: python3 plot_scaling.py [scaling.csv] [out.png]
import csv
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

src = sys.argv[1] if len(sys.argv) > 1 else ")PY" + csv_name + R"PY("
dst = sys.argv[2] if len(sys.argv) > 2 else "scaling.png"
rows = [r for r in csv.DictReader(open(src)) if r["log_ratio"] != "nan"]
fig, ax = plt.subplots(figsize=(6, 4))
for n in sorted({int(r["N"]) for r in rows}):
    sub = [r for r in rows if int(r["N"]) == n]
    x = [float(r["log_N_over_xi"]) for r in sub]
    y = [float(r["log_ratio"]) for r in sub]
    e = [2 * float(r["log_ratio_se"]) for r in sub]
    ax.errorbar(x, y, yerr=e, fmt="o", label=f"N={n}")
if rows:
    xs = sorted(float(r["log_N_over_xi"]) for r in rows)
    tau = float(rows[0]["minus_tau_log_N_over_xi"]) / float(rows[0]["log_N_over_xi"]) if float(rows[0]["log_N_over_xi"]) > 0 else None
    if tau is not None:
        ax.plot([0, xs[-1]], [0, tau * xs[-1]], "k--", label="-tau log(N/xi)")
ax.set_xlabel("log(N/xi)")
ax.set_ylabel("log theta(abar,N) - log theta(0,xi)")
ax.legend()
fig.tight_layout()
fig.savefig(dst, dpi=150)
)PY";
}

}  // namespace gff2d
