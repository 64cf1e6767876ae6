// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "cpsdyn/oracles.hpp"

namespace cpsdyn {

namespace {

constexpr long kMaxCodes = 50'000'000;
constexpr long kMaxDimension = 4'000'000;

}  // namespace

FockSpace::FockSpace(const LinearHarmonicModel& model, FockSpec spec)
    : n_states_(model.n_states()), n_modes_(model.n_dof()), spec_(std::move(spec)) {
  const auto& form = model.form();
  if (static_cast<int>(spec_.n_max.size()) != n_modes_) {
    throw DomainError("FockSpec needs one n_max per mode (" + std::to_string(n_modes_) + ")");
  }
  V0_ = form.V0;
  omega_.resize(n_modes_);
  scale_.resize(n_modes_);
  radix_.resize(n_modes_);
  long codes = 1;
  for (int k = 0; k < n_modes_; ++k) {
    if (spec_.n_max[k] < 0) throw DomainError("n_max must be non-negative");
    if (!(form.kappa(k) > 0.0 && form.mu(k) > 0.0)) {
      throw DomainError("Fock oracle needs positive mode frequencies");
    }
    omega_(k) = form.frequency(k);
    scale_(k) = std::sqrt(form.mu(k) / (2.0 * omega_(k)));
    radix_[k] = codes;
    codes *= spec_.n_max[k] + 1;
    if (codes > kMaxCodes) throw DomainError("Fock basis too large; lower n_max or set total_cap");
  }
  lookup_.assign(static_cast<std::size_t>(codes), -1);
  std::vector<int> occ(n_modes_, 0);
  for (long code = 0; code < codes; ++code) {
    long rem = code;
    int total = 0;
    for (int k = 0; k < n_modes_; ++k) {
      occ[k] = static_cast<int>(rem % (spec_.n_max[k] + 1));
      rem /= spec_.n_max[k] + 1;
      total += occ[k];
    }
    if (spec_.total_cap >= 0 && total > spec_.total_cap) continue;
    lookup_[code] = static_cast<long>(occupations_.size());
    occupations_.push_back(occ);
  }
  if (dimension() > kMaxDimension) {
    throw DomainError("Fock dimension " + std::to_string(dimension()) +
                      " exceeds the oracle limit; lower n_max or set total_cap");
  }
  raise_.assign(static_cast<std::size_t>(n_fock() * n_modes_), -1);
  for (long f = 0; f < n_fock(); ++f) {
    auto up = occupations_[f];
    for (int k = 0; k < n_modes_; ++k) {
      if (up[k] + 1 > spec_.n_max[k]) continue;
      ++up[k];
      raise_[f * n_modes_ + k] = lookup_[encode(up)];
      --up[k];
    }
  }
  for (int k = 0; k < n_modes_; ++k) {
    for (int n = 0; n < n_states_; ++n) {
      for (int m = n; m < n_states_; ++m) {
        const double c = form.C[k](n, m);
        if (c != 0.0) couplings_.push_back({k, n, m, c});
      }
    }
  }
}

long FockSpace::encode(const std::vector<int>& occ) const {
  long code = 0;
  for (int k = 0; k < n_modes_; ++k) code += occ[k] * radix_[k];
  return code;
}

long FockSpace::index(int state, const std::vector<int>& occ) const {
  if (state < 0 || state >= n_states_ || static_cast<int>(occ.size()) != n_modes_) return -1;
  for (int k = 0; k < n_modes_; ++k) {
    if (occ[k] < 0 || occ[k] > spec_.n_max[k]) return -1;
  }
  const long f = lookup_[encode(occ)];
  return f < 0 ? -1 : f * n_states_ + state;
}

void FockSpace::apply_hamiltonian(const CVec& in, CVec& out) const {
  const int F = n_states_;
  out.resize(in.size());
  for (long f = 0; f < n_fock(); ++f) {
    double e = 0.0;
    for (int k = 0; k < n_modes_; ++k) e += omega_(k) * (occupations_[f][k] + 0.5);
    const auto block = in.segment(f * F, F);
    out.segment(f * F, F) = V0_ * block + e * block;
  }
  for (long f = 0; f < n_fock(); ++f) {
    for (const auto& c : couplings_) {
      const long r = raise_[f * n_modes_ + c.mode];
      if (r < 0) continue;
      const double amp = c.value * scale_(c.mode) * std::sqrt(occupations_[f][c.mode] + 1.0);
      out(r * F + c.n) += amp * in(f * F + c.m);
      out(f * F + c.n) += amp * in(r * F + c.m);
      if (c.n != c.m) {
        out(r * F + c.m) += amp * in(f * F + c.n);
        out(f * F + c.m) += amp * in(r * F + c.n);
      }
    }
  }
}

double FockSpace::energy(const CVec& psi) const {
  CVec h;
  apply_hamiltonian(psi, h);
  return psi.dot(h).real() / psi.squaredNorm();
}

double FockSpace::position(const CVec& psi, int k) const {
  const int F = n_states_;
  double out = 0.0;
  for (long f = 0; f < n_fock(); ++f) {
    const long r = raise_[f * n_modes_ + k];
    if (r < 0) continue;
    const double amp = scale_(k) * std::sqrt(occupations_[f][k] + 1.0);
    out += 2.0 * amp * psi.segment(r * F, F).dot(psi.segment(f * F, F)).real();
  }
  return out;
}

Vec FockSpace::populations(const CVec& psi) const {
  const int F = n_states_;
  Vec p = Vec::Zero(F);
  for (long f = 0; f < n_fock(); ++f) p += psi.segment(f * F, F).cwiseAbs2();
  return p;
}

void FockSpace::propagate(CVec& psi, double t, double tolerance) const {
  constexpr int kMaxKrylov = 40;
  double remaining = t;
  double h = t;
  std::vector<CVec> basis;
  basis.reserve(kMaxKrylov + 1);
  CVec w;
  while (remaining > 1e-14 * std::max(1.0, std::abs(t))) {
    h = std::min(h, remaining);
    const double norm = psi.norm();
    if (norm == 0.0) return;
    basis.clear();
    basis.push_back(psi / norm);
    std::vector<double> alpha;
    std::vector<double> beta;
    bool accepted = false;
    CVec coeff;
    for (int j = 0; j < kMaxKrylov; ++j) {
      apply_hamiltonian(basis[j], w);
      const double a = basis[j].dot(w).real();
      alpha.push_back(a);
      // Full reorthogonalization, two passes; the subspace is small.
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& v : basis) w -= v.dot(w) * v;
      }
      const double b = w.norm();
      const int m = j + 1;
      Mat T = Mat::Zero(m, m);
      for (int i = 0; i < m; ++i) T(i, i) = alpha[i];
      for (int i = 0; i + 1 < m; ++i) T(i, i + 1) = T(i + 1, i) = beta[i];
      Eigen::SelfAdjointEigenSolver<Mat> eig(T);
      CVec phases(m);
      for (int i = 0; i < m; ++i) phases(i) = std::polar(1.0, -eig.eigenvalues()(i) * h);
      const Mat& Q = eig.eigenvectors();
      coeff = Q.cast<cplx>() * phases.asDiagonal() * Q.row(0).transpose().cast<cplx>();
      const double err = b * std::abs(coeff(m - 1));
      if (err < tolerance || b < 1e-13) {
        accepted = true;
        break;
      }
      beta.push_back(b);
      basis.push_back(w / b);
    }
    if (!accepted) {
      h *= 0.5;
      continue;
    }
    psi.setZero();
    for (Eigen::Index i = 0; i < coeff.size(); ++i) psi += coeff(i) * basis[i];
    psi *= norm;
    remaining -= h;
    // Let the next substep try a longer interval.
    h *= 1.25;
  }
}

namespace {

struct InitialTerm {
  std::vector<int> occ;
  double weight;
};

std::vector<InitialTerm> initial_terms(const LinearHarmonicModel& model, const FockSpec& spec,
                                       const FockInitial& init, double& truncated) {
  const int N = model.n_dof();
  truncated = 0.0;
  if (!init.thermal || std::isinf(init.beta)) return {{std::vector<int>(N, 0), 1.0}};
  if (!(init.beta > 0.0)) throw DomainError("thermal Fock initial state needs beta > 0");
  // Enumerate occupation tuples best-first by Boltzmann weight.
  std::vector<double> q(N);
  double log_z = 0.0;
  for (int k = 0; k < N; ++k) {
    q[k] = std::exp(-init.beta * model.form().frequency(k));
    log_z += std::log1p(-q[k]);
  }
  std::vector<InitialTerm> terms;
  std::vector<int> occ(N, 0);
  // Depth-first over tuples with weight above a threshold chosen so that the
  // discarded mass stays below thermal_tail.
  double threshold = init.thermal_tail * 1e-3;
  for (int attempt = 0; attempt < 20; ++attempt) {
    terms.clear();
    double kept = 0.0;
    std::function<void(int, double)> visit = [&](int k, double logw) {
      if (k == N) {
        const double w = std::exp(logw);
        terms.push_back({occ, w});
        kept += w;
        return;
      }
      for (int n = 0; n <= spec.n_max[k]; ++n) {
        const double lw = logw + n * std::log(q[k]);
        if (std::exp(lw) < threshold) break;
        occ[k] = n;
        visit(k + 1, lw);
      }
      occ[k] = 0;
    };
    visit(0, log_z);
    if (1.0 - kept <= init.thermal_tail || threshold < 1e-14) {
      truncated = std::max(0.0, 1.0 - kept);
      break;
    }
    threshold *= 0.1;
  }
  if (spec.total_cap >= 0) {
    std::erase_if(terms, [&](const InitialTerm& t) {
      return std::accumulate(t.occ.begin(), t.occ.end(), 0) > spec.total_cap;
    });
  }
  std::sort(terms.begin(), terms.end(),
            [](const InitialTerm& a, const InitialTerm& b) { return a.weight > b.weight; });
  double sum = 0.0;
  for (const auto& t : terms) sum += t.weight;
  truncated = std::max(truncated, 1.0 - sum);
  for (auto& t : terms) t.weight /= sum;
  return terms;
}

struct FockRun {
  Mat pops;  // F x times
  Vec times;
  long dimension = 0;
  int n_terms = 0;
  double truncated = 0.0;
};

FockRun run_fock(const LinearHarmonicModel& model, const FockSpec& spec, const FockInitial& init,
                 const FockOptions& opt) {
  const FockSpace space(model, spec);
  const int F = model.n_states();
  const int n_times = static_cast<int>(std::floor(opt.t_final / opt.record_dt + 1e-9)) + 1;
  FockRun out;
  out.dimension = space.dimension();
  out.pops = Mat::Zero(F, n_times);
  out.times.resize(n_times);
  for (int j = 0; j < n_times; ++j) out.times(j) = j * opt.record_dt;
  const auto terms = initial_terms(model, spec, init, out.truncated);
  out.n_terms = static_cast<int>(terms.size());
  for (const auto& term : terms) {
    CVec psi = CVec::Zero(space.dimension());
    const long i0 = space.index(init.electronic_state, term.occ);
    if (i0 < 0) throw DomainError("initial Fock state outside the basis");
    psi(i0) = 1.0;
    out.pops.col(0) += term.weight * space.populations(psi);
    for (int j = 1; j < n_times; ++j) {
      space.propagate(psi, opt.record_dt, opt.lanczos_tolerance);
      out.pops.col(j) += term.weight * space.populations(psi);
    }
  }
  return out;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

FockResult fock_propagate(const LinearHarmonicModel& model, const FockSpec& spec,
                          const FockInitial& init, const FockOptions& options) {
  const int F = model.n_states();
  if (init.electronic_state < 0 || init.electronic_state >= F) {
    throw DomainError("invalid initial electronic state");
  }
  if (!(options.record_dt > 0.0) || options.t_final < 0.0) throw DomainError("invalid time grid");
  FockRun run = run_fock(model, spec, init, options);
  FockResult result;
  if (options.convergence_gate) {
    FockSpec bigger = spec;
    for (auto& n : bigger.n_max) n += 2;
    if (bigger.total_cap >= 0) bigger.total_cap += 2;
    FockRun check = run_fock(model, bigger, init, options);
    result.gate_difference = (check.pops - run.pops).cwiseAbs().maxCoeff();
    if (result.gate_difference > options.gate_tolerance) {
      std::string hint;
      for (auto n : bigger.n_max) hint += (hint.empty() ? "" : ",") + std::to_string(n + 2);
      throw ConvergenceError("Fock oracle not converged: populations change by " +
                             num(result.gate_difference) + " with n_max+2; try n_max=" + hint);
    }
    run = std::move(check);
  }
  result.dimension = run.dimension;
  result.n_initial_states = run.n_terms;
  result.truncated_weight = run.truncated;

  EnsembleSeries& s = result.series;
  s.times = run.times;
  const auto nt = run.times.size();
  const int n_cols = F + (F == 2 ? 1 : 0) + 1;
  s.values.resize(n_cols, nt);
  s.errors = Mat::Zero(n_cols, nt);
  for (int n = 0; n < F; ++n) {
    s.names.push_back("P" + std::to_string(n + 1));
    s.values.row(n) = run.pops.row(n);
  }
  int c = F;
  if (F == 2) {
    s.names.emplace_back("D12");
    s.values.row(c++) = run.pops.row(0) - run.pops.row(1);
  }
  s.names.emplace_back("total");
  s.values.row(c) = run.pops.colwise().sum();
  s.n_trajectories = run.n_terms;
  for (const auto& kv : model.parameters()) s.metadata.emplace_back("model." + kv.first, kv.second);
  s.metadata.emplace_back("method", "oracle:fock");
  std::string nmax;
  for (auto n : spec.n_max) nmax += (nmax.empty() ? "" : ",") + std::to_string(n);
  s.metadata.emplace_back("n_max", nmax);
  s.metadata.emplace_back("total_cap", std::to_string(spec.total_cap));
  s.metadata.emplace_back("dimension", std::to_string(result.dimension));
  s.metadata.emplace_back("initial_state", std::to_string(init.electronic_state + 1));
  s.metadata.emplace_back("initial_terms", std::to_string(result.n_initial_states));
  s.metadata.emplace_back("truncated_weight", num(result.truncated_weight));
  s.metadata.emplace_back("gate_difference", num(result.gate_difference));
  return result;
}

}  // namespace cpsdyn
