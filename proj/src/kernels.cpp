#include "calibre/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "calibre/error.hpp"
#include "calibre/random.hpp"

namespace calibre {
namespace {

// Plain loops: the combined kernel must equal linear + gaussian bit for bit,
// which rules out differently vectorized reductions on the two paths.
inline double dot(const double* p, const double* q, Eigen::Index m) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < m; ++k) s += p[k] * q[k];
  return s;
}

inline double squared_distance(const double* p, const double* q, Eigen::Index m) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < m; ++k) {
    const double d = p[k] - q[k];
    s += d * d;
  }
  return s;
}

struct Evaluator {
  KernelFamily family;
  double scale = 0.0;  // 1 / (2 gamma^2)

  explicit Evaluator(const KernelConfig& cfg) : family(cfg.family) {
    if (cfg.needs_bandwidth()) {
      const double g = cfg.gamma.value();
      scale = 1.0 / (2.0 * g * g);
    }
  }

  double operator()(const double* p, const double* q, Eigen::Index m) const {
    switch (family) {
      case KernelFamily::linear:
        return dot(p, q, m);
      case KernelFamily::gaussian:
        return std::exp(-scale * squared_distance(p, q, m));
      case KernelFamily::combined:
        return dot(p, q, m) + std::exp(-scale * squared_distance(p, q, m));
    }
    return 0.0;
  }
};

}  // namespace

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::linear:
      return "linear";
    case KernelFamily::gaussian:
      return "gaussian";
    case KernelFamily::combined:
      return "combined";
  }
  return "unknown";
}

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "linear") return KernelFamily::linear;
  if (name == "gaussian") return KernelFamily::gaussian;
  if (name == "combined") return KernelFamily::combined;
  throw ValidationError("unknown kernel family '" + std::string(name) + "'");
}

Bandwidth Bandwidth::fixed(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("bandwidth must be a positive finite number");
  Bandwidth b;
  b.median_ = false;
  b.value_ = gamma;
  return b;
}

double Bandwidth::value() const {
  if (median_) throw ValidationError("median bandwidth has not been resolved");
  return value_;
}

double kernel_eval(const KernelConfig& cfg, std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ValidationError("kernel arguments differ in dimension");
  return Evaluator(cfg)(p.data(), q.data(), static_cast<Eigen::Index>(p.size()));
}

Eigen::MatrixXd label_gram(std::span<const int> labels) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  Eigen::MatrixXd L(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) L(i, j) = label_kernel(labels[i], labels[j]);
  }
  return L;
}

GramMatrix gram(const KernelConfig& cfg, const Eigen::MatrixXd& points) {
  const Evaluator k(cfg);
  const Eigen::Index m = points.rows();
  const Eigen::Index n = points.cols();
  GramMatrix g{Eigen::MatrixXd(n, n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const double* pj = points.col(j).data();
    for (Eigen::Index i = 0; i <= j; ++i) {
      const double v = k(points.col(i).data(), pj, m);
      g.entries(i, j) = v;
      g.entries(j, i) = v;
    }
  }
  return g;
}

double median_heuristic(const Eigen::MatrixXd& rows, std::size_t cap, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(rows.rows());
  if (n < 2) throw ValidationError("median heuristic needs at least two rows");
  std::vector<std::size_t> pick(n);
  std::iota(pick.begin(), pick.end(), std::size_t{0});
  if (cap >= 2 && n > cap) {
    Rng rng(seed);
    for (std::size_t k = 0; k < cap; ++k) {
      const std::size_t r = k + static_cast<std::size_t>(rng.below(n - k));
      std::swap(pick[k], pick[r]);
    }
    pick.resize(cap);
    std::sort(pick.begin(), pick.end());
  }

  const Eigen::MatrixXd pts = rows.transpose();
  const Eigen::Index m = pts.rows();
  std::vector<double> dist;
  dist.reserve(pick.size() * (pick.size() - 1) / 2);
  for (std::size_t a = 0; a < pick.size(); ++a) {
    const double* pa = pts.col(static_cast<Eigen::Index>(pick[a])).data();
    for (std::size_t b = a + 1; b < pick.size(); ++b) {
      const double d2 = squared_distance(pa, pts.col(static_cast<Eigen::Index>(pick[b])).data(), m);
      if (d2 > 0.0) dist.push_back(std::sqrt(d2));
    }
  }
  if (dist.empty()) throw ValidationError("median heuristic: all rows are identical");

  const std::size_t mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid), dist.end());
  const double upper = dist[mid];
  if (dist.size() % 2 == 1) return upper;
  const double lower = *std::max_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

KernelConfig resolve_bandwidth(const KernelConfig& cfg, const Eigen::MatrixXd& rows, std::size_t cap,
                               std::uint64_t seed) {
  KernelConfig out = cfg;
  if (cfg.needs_bandwidth() && cfg.gamma.is_median()) {
    out.gamma = Bandwidth::fixed(median_heuristic(rows, cap, seed));
  }
  return out;
}

}  // namespace calibre
