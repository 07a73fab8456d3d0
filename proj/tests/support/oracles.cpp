#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ood::oracle {
namespace {

using ld = long double;
using Idx = Eigen::Index;

std::vector<ld> row(const Matrix& m, Idx i) {
  std::vector<ld> r(static_cast<std::size_t>(m.cols()));
  for (Idx j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
  return r;
}

// exp(x_i) / sum_j exp(x_j), literally. long double keeps exp finite for the
// magnitudes the tests use.
std::vector<ld> plain_softmax(const std::vector<ld>& x) {
  ld sum = 0;
  for (ld v : x) sum += std::exp(v);
  std::vector<ld> p(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) p[i] = std::exp(x[i]) / sum;
  return p;
}

ld plain_lse(const std::vector<ld>& x) {
  ld sum = 0;
  for (ld v : x) sum += std::exp(v);
  return std::log(sum);
}

std::vector<ld> affine(const Matrix& w, const Vector& b, const std::vector<ld>& f) {
  std::vector<ld> z(static_cast<std::size_t>(w.rows()));
  for (Idx c = 0; c < w.rows(); ++c) {
    ld acc = b(c);
    for (Idx j = 0; j < w.cols(); ++j) acc += static_cast<ld>(w(c, j)) * f[static_cast<std::size_t>(j)];
    z[static_cast<std::size_t>(c)] = acc;
  }
  return z;
}

// Rank of entry j (0 = largest) with ties going to the lower index.
std::size_t rank_of(const std::vector<ld>& v, std::size_t j) {
  std::size_t r = 0;
  for (std::size_t k = 0; k < v.size(); ++k)
    if (v[k] > v[j] || (v[k] == v[j] && k < j)) ++r;
  return r;
}

}  // namespace

std::vector<double> msp(const Matrix& z) { return odin(z, 1.0); }

std::vector<double> odin(const Matrix& z, double temperature) {
  std::vector<double> out;
  for (Idx i = 0; i < z.rows(); ++i) {
    auto r = row(z, i);
    for (auto& v : r) v /= temperature;
    const auto p = plain_softmax(r);
    out.push_back(static_cast<double>(*std::max_element(p.begin(), p.end())));
  }
  return out;
}

std::vector<double> maxlogit(const Matrix& z) {
  std::vector<double> out;
  for (Idx i = 0; i < z.rows(); ++i) {
    double best = z(i, 0);
    for (Idx j = 1; j < z.cols(); ++j)
      if (z(i, j) > best) best = z(i, j);
    out.push_back(best);
  }
  return out;
}

std::vector<double> energy(const Matrix& z) {
  std::vector<double> out;
  for (Idx i = 0; i < z.rows(); ++i) out.push_back(static_cast<double>(plain_lse(row(z, i))));
  return out;
}

std::vector<double> kl_matching(const Matrix& z, const Matrix& templates) {
  std::vector<double> out;
  for (Idx i = 0; i < z.rows(); ++i) {
    const auto p = plain_softmax(row(z, i));
    ld best = std::numeric_limits<ld>::infinity();
    for (Idx c = 0; c < templates.rows(); ++c) {
      ld kl = 0;
      for (std::size_t j = 0; j < p.size(); ++j)
        if (p[j] > 0) kl += p[j] * std::log(p[j] / static_cast<ld>(templates(c, static_cast<Idx>(j))));
      best = std::min(best, kl);
    }
    out.push_back(static_cast<double>(-best));
  }
  return out;
}

std::vector<double> mahalanobis(const Matrix& f, const Matrix& means, const Matrix& precision) {
  std::vector<double> out;
  const auto d = static_cast<std::size_t>(f.cols());
  for (Idx i = 0; i < f.rows(); ++i) {
    ld best = std::numeric_limits<ld>::infinity();
    for (Idx c = 0; c < means.rows(); ++c) {
      std::vector<ld> diff(d);
      for (std::size_t j = 0; j < d; ++j) diff[j] = static_cast<ld>(f(i, static_cast<Idx>(j))) - means(c, static_cast<Idx>(j));
      ld q = 0;
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) q += diff[a] * precision(static_cast<Idx>(a), static_cast<Idx>(b)) * diff[b];
      best = std::min(best, q);
    }
    out.push_back(static_cast<double>(-best));
  }
  return out;
}

std::vector<double> vim(const Matrix& z, const Matrix& f, const Vector& offset, const Matrix& residual_basis,
                        double alpha) {
  std::vector<double> out;
  for (Idx i = 0; i < f.rows(); ++i) {
    ld norm2 = 0;
    for (Idx k = 0; k < residual_basis.cols(); ++k) {
      ld proj = 0;
      for (Idx j = 0; j < f.cols(); ++j) proj += (static_cast<ld>(f(i, j)) - offset(j)) * residual_basis(j, k);
      norm2 += proj * proj;
    }
    const ld l0 = alpha * std::sqrt(norm2);
    ld denom = std::exp(l0);
    for (Idx j = 0; j < z.cols(); ++j) denom += std::exp(static_cast<ld>(z(i, j)));
    out.push_back(static_cast<double>(-std::exp(l0) / denom));
  }
  return out;
}

std::vector<double> react(const Matrix& f, const Matrix& w, const Vector& b, double tau) {
  std::vector<double> out;
  for (Idx i = 0; i < f.rows(); ++i) {
    auto x = row(f, i);
    for (auto& v : x) v = std::min<ld>(v, tau);
    out.push_back(static_cast<double>(plain_lse(affine(w, b, x))));
  }
  return out;
}

std::vector<double> dice(const Matrix& f, const Matrix& w, const Vector& b, const Matrix& mask) {
  Matrix masked = w;
  for (Idx c = 0; c < w.rows(); ++c)
    for (Idx j = 0; j < w.cols(); ++j) masked(c, j) = mask(c, j) != 0.0 ? w(c, j) : 0.0;
  std::vector<double> out;
  for (Idx i = 0; i < f.rows(); ++i) out.push_back(static_cast<double>(plain_lse(affine(masked, b, row(f, i)))));
  return out;
}

std::vector<double> openmax(const Matrix& z, const Matrix& f, const OpenMaxTails& tails, std::size_t alpha_top) {
  std::vector<double> out;
  const auto c = static_cast<std::size_t>(z.cols());
  const std::size_t alpha = std::min(alpha_top, c);
  for (Idx i = 0; i < z.rows(); ++i) {
    const auto zi = row(z, i);
    std::vector<ld> revised(c);
    ld unknown = 0;
    for (std::size_t k = 0; k < c; ++k) {
      const std::size_t r = rank_of(zi, k) + 1;
      ld weight = 0;
      if (r <= alpha) {
        ld x;
        if (tails.on_distance) {
          ld s = 0;
          for (Idx j = 0; j < f.cols(); ++j) {
            const ld diff = static_cast<ld>(f(i, j)) - tails.mav(static_cast<Idx>(k), j);
            s += diff * diff;
          }
          x = std::sqrt(s);
        } else {
          x = zi[k];
        }
        const ld cdf = x <= 0 ? 0 : 1 - std::exp(-std::pow(x / static_cast<ld>(tails.scale[k]), static_cast<ld>(tails.shape[k])));
        const ld rank_factor = static_cast<ld>(alpha - r + 1) / static_cast<ld>(alpha);
        weight = cdf * rank_factor;
      }
      revised[k] = zi[k] * (1 - weight);
      unknown += zi[k] * weight;
    }
    ld denom = std::exp(unknown);
    for (ld v : revised) denom += std::exp(v);
    ld best = 0;
    for (ld v : revised) best = std::max(best, std::exp(v) / denom);
    out.push_back(static_cast<double>(best));
  }
  return out;
}

Pooled pooled_covariance(const Matrix& f, const std::vector<std::int64_t>& labels, std::size_t classes) {
  const auto n = static_cast<std::size_t>(f.rows());
  const auto d = static_cast<std::size_t>(f.cols());
  std::vector<std::vector<ld>> sum(classes, std::vector<ld>(d, 0));
  std::vector<std::size_t> count(classes, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    ++count[c];
    for (std::size_t j = 0; j < d; ++j) sum[c][j] += f(static_cast<Idx>(i), static_cast<Idx>(j));
  }
  Pooled p;
  p.means = Matrix::Zero(static_cast<Idx>(classes), static_cast<Idx>(d));
  for (std::size_t c = 0; c < classes; ++c)
    for (std::size_t j = 0; j < d; ++j)
      p.means(static_cast<Idx>(c), static_cast<Idx>(j)) = static_cast<double>(sum[c][j] / static_cast<ld>(count[c]));
  std::vector<std::vector<ld>> cov(d, std::vector<ld>(d, 0));
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<Idx>(labels[i]);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b)
        cov[a][b] += (static_cast<ld>(f(static_cast<Idx>(i), static_cast<Idx>(a))) - p.means(c, static_cast<Idx>(a))) *
                     (static_cast<ld>(f(static_cast<Idx>(i), static_cast<Idx>(b))) - p.means(c, static_cast<Idx>(b)));
  }
  p.covariance = Matrix::Zero(static_cast<Idx>(d), static_cast<Idx>(d));
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b)
      p.covariance(static_cast<Idx>(a), static_cast<Idx>(b)) = static_cast<double>(cov[a][b] / static_cast<ld>(n));
  return p;
}

Matrix invert(const Matrix& a) {
  const auto n = static_cast<std::size_t>(a.rows());
  std::vector<std::vector<ld>> m(n, std::vector<ld>(2 * n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m[i][j] = a(static_cast<Idx>(i), static_cast<Idx>(j));
    m[i][n + i] = 1;
  }
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(m[r][col]) > std::fabs(m[pivot][col])) pivot = r;
    if (m[pivot][col] == 0) throw std::runtime_error("oracle::invert: singular matrix");
    std::swap(m[pivot], m[col]);
    const ld inv = 1 / m[col][col];
    for (auto& v : m[col]) v *= inv;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const ld factor = m[r][col];
      for (std::size_t j = 0; j < 2 * n; ++j) m[r][j] -= factor * m[col][j];
    }
  }
  Matrix out(static_cast<Idx>(n), static_cast<Idx>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(static_cast<Idx>(i), static_cast<Idx>(j)) = static_cast<double>(m[i][n + j]);
  return out;
}

std::vector<double> symmetric_eigenvalues(const Matrix& a) {
  const auto n = static_cast<std::size_t>(a.rows());
  std::vector<std::vector<ld>> m(n, std::vector<ld>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m[i][j] = a(static_cast<Idx>(i), static_cast<Idx>(j));
  for (int sweep = 0; sweep < 100; ++sweep) {
    ld off = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += m[i][j] * m[i][j];
    if (off < 1e-40L) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (m[p][q] == 0) continue;
        const ld theta = (m[q][q] - m[p][p]) / (2 * m[p][q]);
        const ld t = (theta >= 0 ? 1 : -1) / (std::fabs(theta) + std::sqrt(theta * theta + 1));
        const ld c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const ld mkp = m[k][p], mkq = m[k][q];
          m[k][p] = c * mkp - s * mkq;
          m[k][q] = s * mkp + c * mkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const ld mpk = m[p][k], mqk = m[q][k];
          m[p][k] = c * mpk - s * mqk;
          m[q][k] = s * mpk + c * mqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = static_cast<double>(m[i][i]);
  std::sort(ev.begin(), ev.end());
  return ev;
}

Matrix templates(const Matrix& z, double epsilon) {
  const auto c = static_cast<std::size_t>(z.cols());
  std::vector<std::vector<ld>> sum(c, std::vector<ld>(c, 0));
  std::vector<std::size_t> count(c, 0);
  for (Idx i = 0; i < z.rows(); ++i) {
    const auto zi = row(z, i);
    std::size_t arg = 0;
    for (std::size_t k = 0; k < c; ++k)
      if (rank_of(zi, k) == 0) arg = k;
    const auto p = plain_softmax(zi);
    ++count[arg];
    for (std::size_t k = 0; k < c; ++k) sum[arg][k] += p[k];
  }
  Matrix q(static_cast<Idx>(c), static_cast<Idx>(c));
  for (std::size_t t = 0; t < c; ++t) {
    std::vector<ld> v(c);
    for (std::size_t k = 0; k < c; ++k) v[k] = sum[t][k] / static_cast<ld>(count[t]);
    // Pin entries below the floor, rescale the rest, repeat until nothing new drops.
    std::vector<bool> pinned(c, false);
    for (bool changed = true; changed;) {
      changed = false;
      ld free_mass = 0;
      std::size_t n_pinned = 0;
      for (std::size_t k = 0; k < c; ++k) {
        if (pinned[k]) {
          ++n_pinned;
        } else {
          free_mass += v[k];
        }
      }
      const ld target = 1 - static_cast<ld>(epsilon) * static_cast<ld>(n_pinned);
      for (std::size_t k = 0; k < c; ++k) {
        if (pinned[k]) {
          v[k] = epsilon;
        } else {
          v[k] = v[k] * target / free_mass;
        }
      }
      for (std::size_t k = 0; k < c; ++k)
        if (!pinned[k] && v[k] < epsilon) pinned[k] = changed = true;
    }
    for (std::size_t k = 0; k < c; ++k) q(static_cast<Idx>(t), static_cast<Idx>(k)) = static_cast<double>(v[k]);
  }
  return q;
}

Matrix dice_mask(const Matrix& f, const Matrix& w, double rho) {
  const auto d = static_cast<std::size_t>(f.cols());
  std::vector<ld> mean(d, 0);
  for (Idx i = 0; i < f.rows(); ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += f(i, static_cast<Idx>(j));
  // ranked on the mean rounded to double, as stored in the artifacts
  std::vector<double> mean_d(d);
  for (std::size_t j = 0; j < d; ++j) mean_d[j] = static_cast<double>(mean[j] / static_cast<ld>(f.rows()));
  const auto keep = static_cast<std::size_t>(std::llround((1.0 - rho) * static_cast<double>(d)));
  Matrix m = Matrix::Zero(w.rows(), w.cols());
  for (Idx c = 0; c < w.rows(); ++c) {
    std::vector<ld> v(d);
    for (std::size_t j = 0; j < d; ++j) v[j] = w(c, static_cast<Idx>(j)) * mean_d[j];
    for (std::size_t j = 0; j < d; ++j)
      if (rank_of(v, j) < keep) m(c, static_cast<Idx>(j)) = 1.0;
  }
  return m;
}

double sorted_quantile(std::vector<double> values, double q) {
  // insertion sort; the inputs are small
  for (std::size_t i = 1; i < values.size(); ++i)
    for (std::size_t j = i; j > 0 && values[j - 1] > values[j]; --j) std::swap(values[j - 1], values[j]);
  const ld h = static_cast<ld>(q) * static_cast<ld>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return static_cast<double>(values[lo] + (h - static_cast<ld>(lo)) * (static_cast<ld>(values[hi]) - values[lo]));
}

double auroc_pairwise(const std::vector<double>& id, const std::vector<double>& ood) {
  std::uint64_t twice = 0;
  for (double a : id)
    for (double b : ood) twice += a > b ? 2 : (a == b ? 1 : 0);
  return static_cast<double>(twice) / (2.0 * static_cast<double>(id.size()) * static_cast<double>(ood.size()));
}

double threshold_by_count(const std::vector<double>& id, double target_tpr) {
  std::size_t need = 0;
  while (static_cast<double>(need) < target_tpr * static_cast<double>(id.size()) - 1e-9) ++need;
  // largest ID value that still keeps `need` scores at or above it
  double best = -std::numeric_limits<double>::infinity();
  for (double v : id) {
    std::size_t at_or_above = 0;
    for (double u : id) at_or_above += u >= v;
    if (at_or_above >= need && v > best) best = v;
  }
  return best;
}

double fpr_by_count(const std::vector<double>& id, const std::vector<double>& ood, double target_tpr) {
  const double lambda = threshold_by_count(id, target_tpr);
  std::size_t accepted = 0;
  for (double v : ood) accepted += v >= lambda;
  return static_cast<double>(accepted) / static_cast<double>(ood.size());
}

}  // namespace ood::oracle
