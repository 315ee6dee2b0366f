#include <algorithm>
#include <cmath>
#include <limits>

#include "medtext/encoders.hpp"
#include "medtext/error.hpp"
#include "medtext/rng.hpp"

namespace medtext::encoders {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    acc += d * d;
  }
  return acc;
}

Matrix<double> kmeans_pp(const Matrix<double>& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.rows();
  Matrix<double> centers(k, x.cols());
  auto place = [&](std::size_t c, std::size_t i) {
    std::copy(x.row(i).begin(), x.row(i).end(), centers.row(c).begin());
  };
  place(0, rng.below(n));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(x.row(i), centers.row(0));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = n - 1;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (u < d2[i]) {
          pick = i;
          break;
        }
        u -= d2[i];
      }
    } else {
      pick = rng.below(n);
    }
    place(c, pick);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(x.row(i), centers.row(c)));
  }
  return centers;
}

// Nearest center, ties to the lower index.
std::size_t nearest(std::span<const double> p, const Matrix<double>& centers, double& best) {
  std::size_t arg = 0;
  best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.rows(); ++c) {
    const double d = sq_dist(p, centers.row(c));
    if (d < best) {
      best = d;
      arg = c;
    }
  }
  return arg;
}

}  // namespace

Codebook fit_codebook(const Matrix<double>& x, std::size_t k, std::size_t max_iters, double tol,
                      std::uint64_t seed, KMeansTrace* trace) {
  require(k >= 1, "k-means: K must be at least 1");
  require(x.rows() >= k, "k-means: " + std::to_string(x.rows()) + " points cannot fill " +
                             std::to_string(k) + " clusters");
  for (double v : x.data()) require(std::isfinite(v), "k-means: input contains non-finite values");
  const std::size_t n = x.rows(), d = x.cols();
  Rng rng(seed);
  Matrix<double> centers = kmeans_pp(x, k, rng);
  std::vector<std::size_t> assign(n);
  std::vector<double> dist(n);
  KMeansTrace local;
  KMeansTrace& tr = trace ? *trace : local;
  tr = {};

  auto assign_all = [&] {
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      assign[i] = nearest(x.row(i), centers, dist[i]);
      inertia += dist[i];
    }
    tr.inertia.push_back(inertia);
  };

  assign_all();
  for (std::size_t it = 0; it < max_iters; ++it) {
    Matrix<double> next(k, d);
    std::vector<std::size_t> members(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = next.row(assign[i]);
      auto p = x.row(i);
      for (std::size_t j = 0; j < d; ++j) row[j] += p[j];
      ++members[assign[i]];
    }
    std::vector<char> taken(n, 0);
    for (std::size_t c = 0; c < k; ++c) {
      if (members[c] > 0) {
        for (auto& v : next.row(c)) v /= static_cast<double>(members[c]);
        continue;
      }
      // Empty cluster: move it onto the worst-served point not already used.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i)
        if (!taken[i] && dist[i] > far_d) {
          far_d = dist[i];
          far = i;
        }
      taken[far] = 1;
      std::copy(x.row(far).begin(), x.row(far).end(), next.row(c).begin());
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) shift = std::max(shift, std::sqrt(sq_dist(centers.row(c), next.row(c))));
    centers = std::move(next);
    ++tr.iterations;
    assign_all();
    if (shift < tol) break;
  }
  tr.assignment = assign;

  Codebook cb{Matrix<float>(k, d)};
  for (std::size_t i = 0; i < centers.data().size(); ++i)
    cb.centers.data()[i] = static_cast<float>(centers.data()[i]);
  return cb;
}

}  // namespace medtext::encoders
