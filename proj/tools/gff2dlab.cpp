#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "gff2d/errors.hpp"
#include "gff2d/experiments.hpp"

using gff2d::json;

namespace {

std::string joined_argv(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) s += (i ? " " : "") + std::string(argv[i]);
  return s;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw gff2d::ValidationError("cannot open " + path);
  return json::parse(in, nullptr, true, true);
}

int run_and_report(const json& config, const std::string& out, const std::string& cmdline) {
  const auto r = gff2d::run_config(config, out, cmdline);
  for (const auto& t : r.manifest["tasks"]) {
    json shown = {{"name", t["name"]}, {"status", t["status"]}, {"metrics", t["metrics"]}};
    if (!t["error"].get<std::string>().empty()) shown["error"] = t["error"];
    if (!t["checks"].empty()) shown["checks"] = t["checks"];
    std::cout << shown.dump(2) << "\n";
  }
  std::string dir = out;
  if (dir.empty()) dir = r.manifest["config"].value("output_dir", "gff2dlab_out");
  std::cerr << "manifest: " << (std::filesystem::path(dir) / "manifest.json").string() << "\n";
  return r.ok ? 0 : 1;
}

struct Sub {
  CLI::App* app;
  json task;
  std::uint64_t seed = 1;
  std::string out;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gff2dlab: massive planar GFF, cable percolation and interlacement experiments.\n"
               "Worker threads for Monte Carlo default to $GFF2D_WORKERS (else 1)."};
  app.require_subcommand(1);
  std::vector<Sub> subs;
  subs.reserve(10);

  auto add = [&](const std::string& name, const std::string& help) -> Sub& {
    subs.push_back({app.add_subcommand(name, help), {{"command", name}}});
    Sub& s = subs.back();
    s.app->add_option("--seed", s.seed, "master seed")->capture_default_str();
    s.out = "gff2dlab_out/" + name;
    s.app->add_option("--out", s.out, "output directory (manifest.json and files)")->capture_default_str();
    return s;
  };

  // option storage lives as long as main
  struct {
    int n = 0;
    std::vector<int> ns{500, 1000, 2000, 4000};
    double tol = 1e-13;
  } sc;
  {
    Sub& s = add("segcap", "capacity of [0,1] for Brownian motion killed at rate 1");
    s.app->add_option("--n", sc.n, "single discretization size; 0 runs the refinement study")->capture_default_str();
    s.app->add_option("--ns", sc.ns, "refinement study sizes")->capture_default_str();
    s.app->add_option("--tol", sc.tol, "duality-gap tolerance")->capture_default_str();
  }

  struct {
    int N = 0, side = 0;
    std::string kind = "torus", set, killed;
    std::vector<int> point{};
  } gr;
  {
    Sub& s = add("green", "Green function g_N(0,y) on a window, optionally killed on a set");
    s.app->add_option("--N", gr.N, "mass scale N (killing rate N^-2)")->required();
    s.app->add_option("--window-kind", gr.kind, "box or torus")->capture_default_str();
    s.app->add_option("--window-side", gr.side, "window side; 0 means 8N")->capture_default_str();
    s.app->add_option("--point", gr.point, "target y as two integers (default the origin)")->expected(2);
    s.app->add_option("--set", gr.set, "file of target points, one integer pair per line");
    s.app->add_option("--killed", gr.killed, "file of killed sites U");
  }

  struct {
    int N = 0, side = 0;
    std::string kind = "plane", set;
    double ball = -1;
    bool weights = false;
  } cp;
  {
    Sub& s = add("capacity", "capacity and equilibrium measure of a finite set");
    s.app->add_option("--N", cp.N, "mass scale N")->required();
    s.app->add_option("--window-kind", cp.kind, "plane, box or torus")->capture_default_str();
    s.app->add_option("--window-side", cp.side, "window side; 0 means 8N")->capture_default_str();
    s.app->add_option("--set", cp.set, "file of points, one integer pair per line");
    s.app->add_option("--ball", cp.ball, "use the Euclidean ball of this radius at the origin");
    s.app->add_flag("--weights", cp.weights, "include the equilibrium weights");
  }

  struct {
    int N = 0, P = 0;
    std::vector<int> A;
    std::string shape = "segments", hyp = "separation";
    double scale = 1, eta = 0.15;
    bool no_cap = false;
  } tb;
  {
    Sub& s = add("tube", "porous tube of P blocks along the length-N segment and its capacity");
    s.app->add_option("--N", tb.N, "mass scale N")->required();
    s.app->add_option("--P", tb.P, "number of blocks")->required();
    s.app->add_option("--A", tb.A, "kept block indices in 1..P (default all)");
    s.app->add_option("--shape", tb.shape, "segments or boxes")->capture_default_str();
    s.app->add_option("--scale", tb.scale, "block scale factor")->capture_default_str();
    s.app->add_option("--hypothesis", tb.hyp, "separation or diameter")->capture_default_str();
    s.app->add_option("--eta", tb.eta, "upper-bound slack eta")->capture_default_str();
    s.app->add_flag("--no-capacity", tb.no_cap, "skip the capacity solve");
  }

  struct {
    int N = 0, side = 0;
    std::string method = "spectral", file = "field.bin";
  } sm;
  {
    Sub& s = add("sample", "one exact sample of the massive GFF");
    s.app->add_option("--N", sm.N, "mass scale N")->required();
    s.app->add_option("--side", sm.side, "window side; 0 means 8N")->capture_default_str();
    s.app->add_option("--method", sm.method, "spectral (torus), cholesky or factorization (box)")
        ->capture_default_str();
    s.app->add_option("--file", sm.file, "field file name, relative to --out")->capture_default_str();
  }

  struct {
    int N = 0, R = 0, samples = 1000, side_factor = 8, workers = 0;
    double abar = 0, eval_fraction = 0.125;
  } th;
  {
    Sub& s = add("theta", "one-arm probability of the cable level set above abar");
    s.app->add_option("--N", th.N, "mass scale N")->required();
    s.app->add_option("--abar", th.abar, "field level")->capture_default_str();
    s.app->add_option("--R", th.R, "arm radius; 0 means N")->capture_default_str();
    s.app->add_option("--samples", th.samples, "Monte Carlo samples")->capture_default_str();
    s.app->add_option("--side-factor", th.side_factor, "torus side = side_factor * max(N, R), rounded up")
        ->capture_default_str();
    s.app->add_option("--eval-fraction", th.eval_fraction, "largest R / side allowed")->capture_default_str();
    s.app->add_option("--workers", th.workers, "threads; 0 means $GFF2D_WORKERS or 1")->capture_default_str();
  }

  struct {
    std::string grid;
    int samples = 1000, samples_xi = 0, side_factor = 8, workers = 0;
    double eval_fraction = 0.125;
  } sl;
  {
    Sub& s = add("scaling", "scaling table log theta(abar,N) - log theta(0,xi) over an (a,N) grid");
    s.app->add_option("--grid", sl.grid, "JSON file: [{\"a\": ..., \"N\": ...}, ...] or {\"grid\": [...]}")
        ->required();
    s.app->add_option("--samples", sl.samples, "samples per theta(abar,N)")->capture_default_str();
    s.app->add_option("--samples-xi", sl.samples_xi, "samples per theta(0,xi); 0 means --samples")
        ->capture_default_str();
    s.app->add_option("--side-factor", sl.side_factor, "torus side factor")->capture_default_str();
    s.app->add_option("--eval-fraction", sl.eval_fraction, "largest R / side allowed")->capture_default_str();
    s.app->add_option("--workers", sl.workers, "threads; 0 means $GFF2D_WORKERS or 1")->capture_default_str();
  }

  struct {
    int N = 0, side = 0, samples = 1000, anchor = 0;
    double u = 0, vac = -1;
    std::vector<double> locuniq;
    double isom = std::nan("");
  } il;
  {
    Sub& s = add("interlace", "random interlacements of the killed walk on a box window");
    s.app->add_option("--N", il.N, "mass scale N")->required();
    s.app->add_option("--u", il.u, "intensity u")->required();
    s.app->add_option("--side", il.side, "box side; 0 means 4N")->capture_default_str();
    s.app->add_option("--samples", il.samples, "samples")->capture_default_str();
    s.app->add_option("--anchor-radius", il.anchor, "anchor box half-side; 0 means the whole window")
        ->capture_default_str();
    s.app->add_option("--vacancy-radius", il.vac, "ball radius for the vacancy test; negative skips")
        ->capture_default_str();
    s.app->add_option("--locuniq", il.locuniq, "x_1 x_2 R lambda (lambda <= 0 uses the default)")->expected(4);
    s.app->add_option("--isom", il.isom, "isomorphism marginal test at level a (box side 16)");
  }

  struct {
    std::string path, gen;
    std::vector<int> x{0, 0};
    int N = 0, L = 1, M = 100;
    double R = 0, excl = 0;
    std::vector<double> rho;
    bool verify = false;
    std::uint64_t gen_seed = 0;
  } cg;
  {
    Sub& s = add("coarsegrain", "coarse-graining of a crossing path");
    s.app->add_option("--path", cg.path, "path file, one integer pair per line");
    s.app->add_option("--generate", cg.gen, "generate a test path: straight, spiral, drifted_walk, staircase");
    s.app->add_option("--generate-seed", cg.gen_seed, "seed for --generate; 0 means --seed");
    s.app->add_option("--x", cg.x, "center x")->expected(2)->capture_default_str();
    s.app->add_option("--N", cg.N, "mass scale N")->required();
    s.app->add_option("--L", cg.L, "base scale L")->capture_default_str();
    s.app->add_option("--M", cg.M, "scale factor M (>= 100)")->capture_default_str();
    s.app->add_option("--R", cg.R, "peel radius; 0 means M L log(N/(ML))")->capture_default_str();
    s.app->add_option("--exclusion", cg.excl, "exclusion radius around x")->capture_default_str();
    s.app->add_option("--rho", cg.rho, "capacity of the coarse-grained set after dropping a rho fraction");
    s.app->add_flag("--verify", cg.verify, "check every structural property and report violations");
  }

  std::string config_file, run_out;
  CLI::App* run = app.add_subcommand("run", "run a JSON configuration (or rerun a manifest)");
  run->add_option("--config", config_file, "configuration or manifest file")->required();
  run->add_option("--out", run_out, "output directory; default from the config, else gff2dlab_out");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const std::string cmdline = joined_argv(argc, argv);
  try {
    if (run->parsed()) return run_and_report(read_json_file(config_file), run_out, cmdline);

    for (auto& s : subs) {
      if (!s.app->parsed()) continue;
      json& t = s.task;
      const std::string c = t["command"];
      if (c == "segcap") {
        t.update({{"n", sc.n}, {"ns", sc.ns}, {"tol", sc.tol}});
      } else if (c == "green") {
        t.update({{"N", gr.N}, {"window_kind", gr.kind}, {"window_side", gr.side}});
        if (!gr.point.empty()) t["points"] = json::array({gr.point});
        if (!gr.set.empty()) t["set_file"] = std::filesystem::absolute(gr.set).string();
        if (!gr.killed.empty()) t["killed_file"] = std::filesystem::absolute(gr.killed).string();
      } else if (c == "capacity") {
        t.update({{"N", cp.N}, {"window_kind", cp.kind}, {"window_side", cp.side}, {"weights", cp.weights}});
        if (!cp.set.empty()) t["set_file"] = std::filesystem::absolute(cp.set).string();
        if (cp.ball >= 0) t["ball_radius"] = cp.ball;
      } else if (c == "tube") {
        t.update({{"N", tb.N}, {"P", tb.P}, {"A", tb.A}, {"shape", tb.shape}, {"scale", tb.scale},
                  {"hypothesis", tb.hyp}, {"eta", tb.eta}, {"capacity", !tb.no_cap}});
      } else if (c == "sample") {
        t.update({{"N", sm.N}, {"side", sm.side}, {"method", sm.method}, {"out", sm.file}});
      } else if (c == "theta") {
        t.update({{"N", th.N}, {"abar", th.abar}, {"R", th.R}, {"samples", th.samples},
                  {"side_factor", th.side_factor}, {"eval_fraction", th.eval_fraction}, {"workers", th.workers}});
      } else if (c == "scaling") {
        t.update({{"grid_file", std::filesystem::absolute(sl.grid).string()}, {"samples", sl.samples},
                  {"samples_xi", sl.samples_xi}, {"side_factor", sl.side_factor},
                  {"eval_fraction", sl.eval_fraction}, {"workers", sl.workers}});
      } else if (c == "interlace") {
        t.update({{"N", il.N}, {"u", il.u}, {"side", il.side}, {"samples", il.samples},
                  {"anchor_radius", il.anchor}, {"vacancy_radius", il.vac}});
        if (il.locuniq.size() == 4) {
          json l = {{"x", {int(il.locuniq[0]), int(il.locuniq[1])}}, {"R", int(il.locuniq[2])}};
          if (il.locuniq[3] > 0) l["lambda"] = il.locuniq[3];
          t["locuniq"] = l;
        }
        if (!std::isnan(il.isom)) t["isom"] = {{"a", il.isom}};
      } else if (c == "coarsegrain") {
        t.update({{"N", cg.N}, {"L", cg.L}, {"M", cg.M}, {"R", cg.R}, {"x", cg.x}, {"exclusion", cg.excl},
                  {"verify", cg.verify}, {"rho", cg.rho}});
        if (!cg.path.empty()) t["path_file"] = std::filesystem::absolute(cg.path).string();
        if (!cg.gen.empty()) {
          t["generate"] = {{"kind", cg.gen}, {"write", true}};
          if (cg.gen_seed) t["generate"]["seed"] = cg.gen_seed;
        }
      }
      const json config = {{"seed", s.seed}, {"experiments", json::array({t})}};
      return run_and_report(config, s.out, cmdline);
    }
  } catch (const std::exception& e) {
    std::cerr << "gff2dlab: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
