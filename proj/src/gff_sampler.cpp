#include "gff2d/gff_sampler.hpp"

#include <Eigen/Sparse>
#include <boost/random/normal_distribution.hpp>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <mutex>

#include "fftw_util.hpp"
#include "gff2d/errors.hpp"
#include "gff2d/green.hpp"

namespace gff2d {

std::string to_string(SamplerMethod m) {
  return m == SamplerMethod::factorization ? "factorization" : "spectral";
}

SamplerMethod sampler_method_from_string(const std::string& s) {
  if (s == "factorization") return SamplerMethod::factorization;
  if (s == "spectral") return SamplerMethod::spectral;
  throw ValidationError("unknown sampler method '" + s + "'");
}

// ----------------------------------------------------------- factorization

struct FactorizationSampler::Impl {
  Window window;
  std::vector<std::ptrdiff_t> pos;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> llt;
  explicit Impl(const Window& w) : window(w) {}
};

FactorizationSampler::FactorizationSampler(const WalkModel& m, const Window& w, const PointSet& U)
    : impl_(std::make_unique<Impl>(w)) {
  if (w.size() > kMaxSites)
    throw ResourceError("factorization sampler: window of " + std::to_string(w.size()) +
                        " sites exceeds the memory budget; use the spectral method on a torus");
  auto& I = *impl_;
  const std::size_t n = w.size();
  I.pos.assign(n, -1);
  std::size_t nf = 0;
  for (Point p : U)
    if (w.kind() == WindowKind::torus || w.inside(p)) I.pos[w.index(p)] = -2;
  for (std::size_t i = 0; i < n; ++i)
    if (I.pos[i] == -1) I.pos[i] = static_cast<std::ptrdiff_t>(nf++);
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t i = 0; i < n; ++i) {
    if (I.pos[i] < 0) continue;
    t.emplace_back(I.pos[i], I.pos[i], m.total_rate);
    for (int d = 0; d < 4; ++d) {
      const std::size_t j = w.neighbor(i, d);
      if (j == Window::npos || I.pos[j] < 0) continue;
      if (I.pos[j] < I.pos[i]) t.emplace_back(I.pos[i], I.pos[j], -m.edge_conductance);
    }
  }
  Eigen::SparseMatrix<double> q(nf, nf);
  q.setFromTriplets(t.begin(), t.end());
  try {
    I.llt.compute(q);
  } catch (const std::bad_alloc&) {
    throw ResourceError("factorization sampler: out of memory; use the spectral method on a torus");
  }
  if (I.llt.info() != Eigen::Success) throw SolverError("factorization sampler: Cholesky failed", INFINITY);
}

FactorizationSampler::~FactorizationSampler() = default;
FactorizationSampler::FactorizationSampler(FactorizationSampler&&) noexcept = default;
const Window& FactorizationSampler::window() const { return impl_->window; }

void FactorizationSampler::sample(Engine& rng, std::span<double> out) const {
  const auto& I = *impl_;
  if (out.size() != I.window.size()) throw DomainError("FactorizationSampler::sample: size mismatch");
  const Eigen::Index nf = I.llt.rows();
  boost::random::normal_distribution<double> nd;
  Eigen::VectorXd w(nf);
  for (Eigen::Index k = 0; k < nf; ++k) w[k] = nd(rng);
  // P Q P^T = L L^T, so x = P^T L^{-T} w has covariance Q^{-1}.
  Eigen::VectorXd y = I.llt.matrixU().solve(w);
  Eigen::VectorXd x = I.llt.permutationPinv() * y;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = I.pos[i] >= 0 ? x[I.pos[i]] : 0.0;
}

// ---------------------------------------------------------------- spectral

struct SpectralSampler::Impl {
  Window window;
  std::vector<double> amp;  // sqrt(1 / symbol) / side
  mutable std::mutex mu;
  detail::FftwBuffer buf;
  detail::FftwPlan plan;
  explicit Impl(const Window& w)
      : window(w), buf(sizeof(fftw_complex) * w.size()) {}
};

SpectralSampler::SpectralSampler(const WalkModel& m, const Window& w) {
  if (w.kind() != WindowKind::torus) throw UnsupportedError("spectral sampling requires a torus window");
  try {
    impl_ = std::make_unique<Impl>(w);
  } catch (const std::bad_alloc&) {
    throw ResourceError("spectral sampler: out of memory");
  }
  const int s = w.side();
  {
    std::lock_guard<std::mutex> lk(detail::fftw_planner_mutex());
    auto* b = impl_->buf.as<fftw_complex>();
    impl_->plan = detail::FftwPlan(fftw_plan_dft_2d(s, s, b, b, FFTW_BACKWARD, FFTW_ESTIMATE));
  }
  impl_->amp.resize(w.size());
  const double lam = m.total_rate, c = m.edge_conductance;
  for (int ky = 0; ky < s; ++ky)
    for (int kx = 0; kx < s; ++kx) {
      const double sym = lam - 2 * c * (std::cos(2 * M_PI * kx / s) + std::cos(2 * M_PI * ky / s));
      impl_->amp[static_cast<std::size_t>(ky) * s + kx] = 1.0 / (std::sqrt(sym) * s);
    }
}

SpectralSampler::~SpectralSampler() = default;
SpectralSampler::SpectralSampler(SpectralSampler&&) noexcept = default;
const Window& SpectralSampler::window() const { return impl_->window; }

void SpectralSampler::sample_pair(std::uint64_t key, std::span<double> a, std::span<double> b) const {
  const auto& I = *impl_;
  const std::size_t n = I.window.size();
  if (a.size() != n || (!b.empty() && b.size() != n)) throw DomainError("SpectralSampler: size mismatch");
  std::lock_guard<std::mutex> lk(I.mu);
  Engine rng = make_engine(key);
  boost::random::normal_distribution<double> nd;
  auto* z = I.buf.as<fftw_complex>();
  for (std::size_t k = 0; k < n; ++k) {
    z[k][0] = nd(rng) * I.amp[k];
    z[k][1] = nd(rng) * I.amp[k];
  }
  fftw_execute(I.plan.get());
  for (std::size_t k = 0; k < n; ++k) a[k] = z[k][0];
  if (!b.empty())
    for (std::size_t k = 0; k < n; ++k) b[k] = z[k][1];
}

Field sample_field(const WalkModel& m, const Window& w, std::uint64_t seed, SamplerMethod method) {
  Field f{w, m, std::vector<double>(w.size()), seed, method};
  if (method == SamplerMethod::spectral) {
    SpectralSampler s(m, w);
    s.sample_pair(stream_key(seed, Stream::field), f.values, {});
  } else {
    FactorizationSampler s(m, w);
    Engine rng = make_engine(stream_key(seed, Stream::field));
    s.sample(rng, f.values);
  }
  return f;
}

Decomposition decompose(const Field& f, const PointSet& K) {
  Decomposition d;
  d.anchor_set = K;
  const Window& w = f.window;
  if (K.empty()) {
    d.eta.assign(w.size(), 0.0);
    d.psi = f.values;
    return d;
  }
  std::vector<char> mask(w.size(), 0);
  for (Point p : K) {
    if (w.kind() == WindowKind::box && !w.inside(p)) throw DomainError("decompose: K leaves the window");
    mask[w.index(p)] = 1;
  }
  DirichletSolver s(f.model, w, mask);
  d.eta = s.solve({}, f.values).u;
  d.psi.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) d.psi[i] = mask[i] ? 0.0 : f.values[i] - d.eta[i];
  return d;
}

void write_field(const Field& f, const std::filesystem::path& path) {
  {
    std::ofstream o(path, std::ios::binary);
    o.write(reinterpret_cast<const char*>(f.values.data()),
            static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!o) throw std::runtime_error("cannot write " + path.string());
  }
  nlohmann::json j;
  j["format"] = "float64-le-row-major";
  j["side"] = f.window.side();
  j["window_kind"] = to_string(f.window.kind());
  j["center"] = {f.window.center().x, f.window.center().y};
  j["lower_left"] = {f.window.lower_left().x, f.window.lower_left().y};
  j["N"] = f.model.N;
  j["edge_conductance"] = f.model.edge_conductance;
  j["killing_rate"] = f.model.killing_rate;
  j["seed"] = f.seed;
  j["method"] = to_string(f.method);
  std::ofstream o(path.string() + ".json");
  o << j.dump(2) << "\n";
}

Field read_field(const std::filesystem::path& path) {
  std::ifstream js(path.string() + ".json");
  if (!js) throw ValidationError("missing sidecar for " + path.string());
  const auto j = nlohmann::json::parse(js);
  const int side = j.at("side");
  const Point c{j.at("center")[0].get<int>(), j.at("center")[1].get<int>()};
  const Window w = j.at("window_kind") == "torus" ? Window::torus(side, c) : Window::box(side, c);
  Field f{w, WalkModel(j.at("N").get<int>()), std::vector<double>(w.size()), j.at("seed").get<std::uint64_t>(),
          sampler_method_from_string(j.at("method"))};
  std::ifstream in(path, std::ios::binary);
  in.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  if (!in) throw ValidationError("field file truncated: " + path.string());
  return f;
}

}  // namespace gff2d
