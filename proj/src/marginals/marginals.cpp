// SPDX-License-Identifier: Apache-2.0
#include "cpsdyn/marginals.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <thread>

namespace cpsdyn {

PhaseAxis PhaseAxis::parse(const std::string& text) {
  if (text.size() < 2 || (text[0] != 'x' && text[0] != 'p')) {
    throw DomainError("phase axis must look like x1 or p2, got '" + text + "'");
  }
  PhaseAxis a;
  a.momentum = text[0] == 'p';
  std::size_t used = 0;
  int idx = 0;
  try {
    idx = std::stoi(text.substr(1), &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() - 1 || idx < 1) throw DomainError("bad phase axis index in '" + text + "'");
  a.index = idx - 1;
  return a;
}

std::string PhaseAxis::label() const { return (momentum ? "p" : "x") + std::to_string(index + 1); }

namespace {

void check_axis(const UniformAxis& a) {
  if (!(a.max > a.min) || a.points < 1) throw DomainError("invalid grid axis");
}

}  // namespace

void Grid2D::write_csv(std::ostream& os, double scale) const {
  for (const auto& kv : metadata) os << "# " << kv.first << ": " << kv.second << '\n';
  os << label1 << ',' << label2 << ",re,im,stderr\n";
  char buf[160];
  for (int i = 0; i < axis1.points; ++i) {
    for (int j = 0; j < axis2.points; ++j) {
      const cplx v = values(i, j);
      const double e = stderr_.size() == 0 ? 0.0 : stderr_(i, j);
      std::snprintf(buf, sizeof buf, "%.8g,%.8g,%.12e,%.12e,%.6e\n", axis1.at(i) / scale,
                    axis2.at(j) / scale, v.real(), v.imag(), e);
      os << buf;
    }
  }
}

void Grid2D::write_csv(const std::string& path, double scale) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  write_csv(f, scale);
  if (!f) throw std::runtime_error("write failed: " + path);
}

CMat marginal_f2_analytic(double a, double b, double gamma, bool momentum_second) {
  if (!(1.0 + 2.0 * gamma > 0.0)) throw DomainError("gamma must exceed -1/2 for F = 2");
  CMat M = CMat::Zero(2, 2);
  const double r2 = 2.0 * (1.0 + 2.0 * gamma);
  if (a * a + b * b > r2) return M;
  const double c = 1.0 / (2.0 * kPi * (1.0 + 2.0 * gamma));
  M(0, 0) = c * (1.0 + 0.5 * a * a - 0.5 * b * b);
  M(1, 1) = c * (1.0 - 0.5 * a * a + 0.5 * b * b);
  if (momentum_second) {
    M(0, 1) = cplx(0.0, -c * a * b);
    M(1, 0) = cplx(0.0, c * a * b);
  } else {
    M(0, 1) = c * a * b;
    M(1, 0) = c * a * b;
  }
  return M;
}

CMat marginal_f2_weighted(double a, double b, double delta, bool momentum_second) {
  const auto [wp, wm] = pair_weights(delta, 2);
  return wp * marginal_f2_analytic(a, b, delta, momentum_second) +
         wm * marginal_f2_analytic(a, b, -delta, momentum_second);
}

double support_radius(const GammaScheme& scheme) {
  return std::sqrt(2.0 * (1.0 + scheme.n_states() * scheme.gamma()));
}

MarginalMcResult marginal_mc(const GammaScheme& scheme, const MarginalMcOptions& o) {
  const int F = scheme.n_states();
  if (F < 2) throw DomainError("marginals need F >= 2");
  if (o.n < 0 || o.n >= F || o.m < 0 || o.m >= F) throw DomainError("kernel entry out of range");
  if (o.first.index >= F || o.second.index >= F || o.first.index < 0 || o.second.index < 0) {
    throw DomainError("phase axis index out of range");
  }
  if (o.first.momentum == o.second.momentum && o.first.index == o.second.index) {
    throw DomainError("marginal axes must differ");
  }
  if (o.n_samples < 2 * scheme.n_branches()) throw DomainError("n_samples too small");
  if (o.shard_size < 1) throw DomainError("shard_size must be >= 1");
  check_axis(o.axis1);
  check_axis(o.axis2);

  const int n1 = o.axis1.points;
  const int n2 = o.axis2.points;
  const long bins = static_cast<long>(n1) * n2;
  const double inv_area = 1.0 / (o.axis1.step() * o.axis2.step());

  struct Shard {
    int branch;
    long count;
  };
  std::vector<Shard> shards;
  std::vector<long> per_branch;
  for (int b = 0; b < scheme.n_branches(); ++b) {
    const long nb = b == 0 ? (o.n_samples + scheme.n_branches() - 1) / scheme.n_branches()
                           : o.n_samples / scheme.n_branches();
    per_branch.push_back(nb);
    for (long done = 0; done < nb; done += o.shard_size) {
      shards.push_back({b, std::min(o.shard_size, nb - done)});
    }
  }
  // Per shard: sum re, sum im, sum re^2, sum im^2 per bin.
  std::vector<std::vector<double>> sums(shards.size());

  auto coord = [](const PhaseAxis& a, const ElectronicMappingState& s) {
    return a.momentum ? s.p(a.index) : s.x(a.index);
  };
  auto run_shard = [&](std::size_t k) {
    const Shard& sh = shards[k];
    const GammaDraw draw = draw_gamma(scheme, sh.branch);
    std::vector<double>& acc = sums[k];
    acc.assign(static_cast<std::size_t>(4 * bins), 0.0);
    // Streams are numbered per branch so that adding samples only appends.
    std::size_t first_of_branch = 0;
    while (shards[first_of_branch].branch != sh.branch) ++first_of_branch;
    Rng rng = Rng::stream(o.seed, (static_cast<std::uint64_t>(sh.branch) << 32) + (k - first_of_branch));
    Vec dir(2 * F);
    for (long s = 0; s < sh.count; ++s) {
      for (auto& v : dir) v = rng.normal();
      const ElectronicMappingState st = project_to_sphere(dir, draw.gamma);
      const double a = coord(o.first, st);
      const double b = coord(o.second, st);
      const int i = static_cast<int>(std::floor((a - o.axis1.min) / o.axis1.step()));
      const int j = static_cast<int>(std::floor((b - o.axis2.min) / o.axis2.step()));
      if (i < 0 || i >= n1 || j < 0 || j >= n2) continue;
      cplx K = 0.5 * cplx(st.x(o.n), st.p(o.n)) * cplx(st.x(o.m), -st.p(o.m));
      if (o.n == o.m) K -= draw.gamma;
      const cplx y = static_cast<double>(F) * draw.weight * inv_area * K;
      const std::size_t at = 4 * (static_cast<std::size_t>(i) * n2 + j);
      acc[at] += y.real();
      acc[at + 1] += y.imag();
      acc[at + 2] += y.real() * y.real();
      acc[at + 3] += y.imag() * y.imag();
    }
  };

  const int workers = std::max(1, std::min<int>(o.workers, static_cast<int>(shards.size())));
  if (workers == 1) {
    for (std::size_t k = 0; k < shards.size(); ++k) run_shard(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < shards.size(); k = next++) run_shard(k);
      });
    }
    for (auto& t : pool) t.join();
  }

  MarginalMcResult out;
  Grid2D& g = out.grid;
  g.axis1 = o.axis1;
  g.axis2 = o.axis2;
  g.label1 = o.first.label();
  g.label2 = o.second.label();
  g.values = CMat::Zero(n1, n2);
  g.stderr_ = Mat::Zero(n1, n2);
  Mat var = Mat::Zero(n1, n2);
  for (int b = 0; b < scheme.n_branches(); ++b) {
    std::vector<double> total(static_cast<std::size_t>(4 * bins), 0.0);
    for (std::size_t k = 0; k < shards.size(); ++k) {
      if (shards[k].branch != b) continue;
      for (std::size_t q = 0; q < total.size(); ++q) total[q] += sums[k][q];
    }
    const double nb = static_cast<double>(per_branch[b]);
    for (int i = 0; i < n1; ++i) {
      for (int j = 0; j < n2; ++j) {
        const std::size_t at = 4 * (static_cast<std::size_t>(i) * n2 + j);
        const double mr = total[at] / nb;
        const double mi = total[at + 1] / nb;
        g.values(i, j) += cplx(mr, mi);
        const double vr = std::max(0.0, total[at + 2] / nb - mr * mr);
        const double vi = std::max(0.0, total[at + 3] / nb - mi * mi);
        var(i, j) += (vr + vi) / nb;
      }
    }
  }
  g.stderr_ = var.cwiseSqrt();
  g.metadata = {{"axes", g.label1 + "," + g.label2},
                {"gamma_scheme", describe(scheme)},
                {"nm_pair", std::to_string(o.n + 1) + "," + std::to_string(o.m + 1)},
                {"method", "monte_carlo"},
                {"n_samples", std::to_string(o.n_samples)},
                {"seed", std::to_string(o.seed)},
                {"shard_size", std::to_string(o.shard_size)}};
  if (static_cast<double>(o.n_samples) / static_cast<double>(bins) < 10.0) {
    out.warning = "fewer than 10 expected samples per bin (" + std::to_string(o.n_samples) + " samples, " +
                  std::to_string(bins) + " bins)";
  }
  return out;
}

Grid2D marginal_f2_grid(const GammaScheme& scheme, int n, int m, bool momentum_second,
                        const UniformAxis& axis1, const UniformAxis& axis2) {
  if (scheme.n_states() != 2) throw DomainError("closed-form marginals are for F = 2");
  if (n < 0 || n > 1 || m < 0 || m > 1) throw DomainError("kernel entry out of range");
  check_axis(axis1);
  check_axis(axis2);
  Grid2D g;
  g.axis1 = axis1;
  g.axis2 = axis2;
  g.label1 = "x1";
  g.label2 = momentum_second ? "p2" : "x2";
  g.values = CMat::Zero(axis1.points, axis2.points);
  g.stderr_ = Mat::Zero(axis1.points, axis2.points);
  for (int i = 0; i < axis1.points; ++i) {
    for (int j = 0; j < axis2.points; ++j) {
      const double a = axis1.at(i);
      const double b = axis2.at(j);
      const CMat M = scheme.is_pair() ? marginal_f2_weighted(a, b, scheme.delta(), momentum_second)
                                      : marginal_f2_analytic(a, b, scheme.gamma(), momentum_second);
      g.values(i, j) = M(n, m);
    }
  }
  g.metadata = {{"axes", g.label1 + "," + g.label2},
                {"gamma_scheme", describe(scheme)},
                {"nm_pair", std::to_string(n + 1) + "," + std::to_string(m + 1)},
                {"method", scheme.is_pair() ? "closed_form_weighted" : "closed_form"}};
  return g;
}

HybridState parse_hybrid_state(const std::string& name) {
  if (name == "bell") return HybridState::Bell;
  if (name == "product_cat") return HybridState::ProductCat;
  throw DomainError("unknown hybrid state '" + name + "' (expected bell or product_cat)");
}

std::string to_string(HybridState s) { return s == HybridState::Bell ? "bell" : "product_cat"; }

cplx harmonic_wigner(int i, int j, double R, double P) {
  const double s = R * R + P * P;
  const double g = std::exp(-s) / kPi;
  if (i == 0 && j == 0) return g;
  if (i == 1 && j == 1) return (2.0 * s - 1.0) * g;
  if (i == 0 && j == 1) return std::sqrt(2.0) * cplx(R, P) * g;
  if (i == 1 && j == 0) return std::sqrt(2.0) * cplx(R, -P) * g;
  throw DomainError("harmonic Wigner functions are tabulated for n <= 1");
}

namespace {

// c(i, n): nuclear level i, electronic state n.
Eigen::Matrix2cd hybrid_coefficients(HybridState state) {
  Eigen::Matrix2cd c = Eigen::Matrix2cd::Zero();
  switch (state) {
    case HybridState::Bell:
      c(0, 1) = 1.0 / std::sqrt(2.0);
      c(1, 0) = 1.0 / std::sqrt(2.0);
      break;
    case HybridState::ProductCat:
      c.setConstant(0.5);
      break;
  }
  return c;
}

}  // namespace

CMat hybrid_block(HybridState state, double R, double P) {
  const Eigen::Matrix2cd c = hybrid_coefficients(state);
  CMat B = CMat::Zero(2, 2);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const cplx w = harmonic_wigner(i, j, R, P);
      for (int n = 0; n < 2; ++n) {
        for (int m = 0; m < 2; ++m) B(n, m) += c(i, n) * std::conj(c(j, m)) * w;
      }
    }
  }
  return B;
}

cplx hybrid_joint(HybridState state, const GammaScheme& scheme, double R, double P, double x1,
                  double x2) {
  if (scheme.n_states() != 2) throw DomainError("hybrid joint distributions need F = 2");
  const CMat B = hybrid_block(state, R, P);
  const CMat M = scheme.is_pair() ? marginal_f2_weighted(x1, x2, scheme.delta())
                                  : marginal_f2_analytic(x1, x2, scheme.gamma());
  cplx v = 0.0;
  for (int n = 0; n < 2; ++n) {
    for (int m = 0; m < 2; ++m) v += B(n, m) * M(m, n);
  }
  return v;
}

std::vector<Grid2D> hybrid_block_grids(HybridState state, const UniformAxis& R_axis,
                                       const UniformAxis& P_axis) {
  check_axis(R_axis);
  check_axis(P_axis);
  std::vector<Grid2D> out(4);
  for (int k = 0; k < 4; ++k) {
    Grid2D& g = out[k];
    g.axis1 = R_axis;
    g.axis2 = P_axis;
    g.label1 = "R";
    g.label2 = "P";
    g.values = CMat::Zero(R_axis.points, P_axis.points);
    g.stderr_ = Mat::Zero(R_axis.points, P_axis.points);
    g.metadata = {{"axes", "R,P"},
                  {"gamma_scheme", "none"},
                  {"nm_pair", std::to_string(k / 2 + 1) + "," + std::to_string(k % 2 + 1)},
                  {"state", to_string(state)},
                  {"method", "closed_form_hybrid_block"}};
  }
  for (int i = 0; i < R_axis.points; ++i) {
    for (int j = 0; j < P_axis.points; ++j) {
      const CMat B = hybrid_block(state, R_axis.at(i), P_axis.at(j));
      for (int k = 0; k < 4; ++k) out[k].values(i, j) = B(k / 2, k % 2);
    }
  }
  return out;
}

}  // namespace cpsdyn
