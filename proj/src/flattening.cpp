#include "qlab/flattening.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qlab {

void FlatteningParams::check() const {
  if (bin_count < 1) throw std::invalid_argument("bin_count must be positive");
  if (brother_budget < bin_count) throw std::invalid_argument("brother_budget must be at least bin_count");
}

int bin_index(double p, int bin_count) {
  if (!(p > 0.0) || p > 1.0 + 1e-12) return 0;
  int r = std::max(1, static_cast<int>(std::ceil(-std::log2(p))));
  // Exact interval membership, correcting the rounding of log2.
  while (r > 1 && p > std::exp2(-r + 1)) --r;
  while (p <= std::exp2(-r)) ++r;
  return r <= bin_count ? r : 0;
}

std::size_t j_qubits(int bin_count) {
  std::size_t q = 0;
  while ((std::size_t{1} << q) < static_cast<std::size_t>(bin_count) + 1) ++q;
  return q;
}

namespace {

constexpr double kDropCut = 1e-14;

std::size_t first_dim(const DensityState& s) { return s.layout().subsystems().front().dim; }

std::vector<std::string> rest_names(const RegisterLayout& l) {
  auto n = l.names();
  return {n.begin() + 1, n.end()};
}

double entropy_of_positive(const Mat& m) {
  double s = 0.0;
  RVec w = herm_eigenvalues(m);
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (w(i) > kDropCut) s -= w(i) * std::log2(w(i));
  return s;
}

}  // namespace

BinnedState bin_spectrum(const DensityState& s, const FlatteningParams& params) {
  params.check();
  BinnedState b{s, {}, Mat(), {}, {}, {}, params};
  const std::size_t d = s.dim();
  const auto& subs = s.layout().subsystems();
  const bool cq = subs.front().classical;
  const std::size_t dx = cq ? subs.front().dim : 1;
  const std::size_t rest = d / dx;
  std::vector<Vec> cols;
  for (std::size_t x = 0; x < dx; ++x) {
    RVec w;
    Mat v;
    herm_eig(s.matrix().block(x * rest, x * rest, rest, rest), w, v);
    for (Eigen::Index k = w.size() - 1; k >= 0; --k) {
      if (w(k) <= kDropCut) continue;
      Vec e = Vec::Zero(d);
      e.segment(x * rest, rest) = v.col(k);
      cols.push_back(e);
      b.p.push_back(w(k));
      b.label.push_back(x);
    }
  }
  b.vectors.resize(d, cols.size());
  for (std::size_t k = 0; k < cols.size(); ++k) b.vectors.col(k) = cols[k];
  b.q.assign(params.bin_count + 1, 0.0);
  for (double p : b.p) {
    const int j = bin_index(p, params.bin_count);
    b.bins.push_back(j);
    b.q[j] += p;
  }
  return b;
}

DensityState BinnedState::with_j() const {
  const std::size_t dj = std::size_t{1} << j_qubits(params.bin_count);
  const std::size_t d = input.dim();
  check_dim(d * dj, "bin_spectrum");
  Mat m = Mat::Zero(d * dj, d * dj);
  for (std::size_t k = 0; k < p.size(); ++k) {
    Mat jj = Mat::Zero(dj, dj);
    jj(bins[k], bins[k]) = 1.0;
    m += p[k] * kron(vectors.col(k) * vectors.col(k).adjoint(), jj);
  }
  return DensityState::trusted(hermitize(m), input.layout().concat(reg("J", dj, true)));
}

FlattenedState attach_brothers(const BinnedState& b) {
  FlattenedState f;
  f.binned = b;
  const auto& pr = b.params;
  f.j_qubits = j_qubits(pr.bin_count);
  f.b_qubits = pr.brother_budget;
  f.brothers.assign(pr.bin_count + 1, 0);
  for (int j = 1; j <= pr.bin_count; ++j) f.brothers[j] = pr.brother_budget - j;
  const double q0 = b.q[0];
  if (q0 >= pr.gamma()) f.brothers[0] = static_cast<int>(std::floor(std::log2(q0 / pr.gamma()) + 1e-12));
  return f;
}

FlattenedState flatten(const DensityState& s, const FlatteningParams& params) {
  return attach_brothers(bin_spectrum(s, params));
}

Mat FlattenedState::sector(int j) const {
  const std::size_t d = binned.input.dim();
  Mat m = Mat::Zero(d, d);
  for (std::size_t k = 0; k < binned.p.size(); ++k)
    if (binned.bins[k] == j) m += binned.p[k] * binned.vectors.col(k) * binned.vectors.col(k).adjoint();
  return hermitize(m);
}

Mat FlattenedState::marginal() const {
  const std::size_t d = binned.input.dim();
  Mat m = Mat::Zero(d, d);
  for (int j = 0; j <= binned.params.bin_count; ++j) m += sector(j);
  return m;
}

WeightedSpectrum FlattenedState::extended_spectrum() const {
  WeightedSpectrum w;
  for (std::size_t k = 0; k < binned.p.size(); ++k) {
    const int b = brothers[binned.bins[k]];
    w.items.push_back({binned.p[k] * std::exp2(-b), std::exp2(b)});
  }
  std::sort(w.items.begin(), w.items.end(), [](const auto& a, const auto& c) { return a.first > c.first; });
  return w;
}

double FlattenedState::nonzero_sector_ratio() const {
  double lo = kInf, hi = 0.0;
  for (std::size_t k = 0; k < binned.p.size(); ++k) {
    const int j = binned.bins[k];
    if (j == 0) continue;
    const double v = binned.p[k] * std::exp2(-brothers[j]);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi > 0.0 ? hi / lo : 1.0;
}

DensityState FlattenedState::materialize() const {
  const std::size_t d = binned.input.dim();
  const std::size_t dj = std::size_t{1} << j_qubits;
  const std::size_t db = std::size_t{1} << b_qubits;
  check_dim(d * dj * db, "flattened state");
  Mat m = Mat::Zero(d * dj * db, d * dj * db);
  for (std::size_t k = 0; k < binned.p.size(); ++k) {
    const int j = binned.bins[k];
    const std::size_t nb = std::size_t{1} << brothers[j];
    // Uniform on the leading brothers[j] qubits of B, |0> on the rest.
    const std::size_t shift = std::size_t{1} << (b_qubits - brothers[j]);
    Mat jb = Mat::Zero(dj * db, dj * db);
    for (std::size_t u = 0; u < nb; ++u) {
      const std::size_t idx = static_cast<std::size_t>(j) * db + u * shift;
      jb(idx, idx) = 1.0 / static_cast<double>(nb);
    }
    m += binned.p[k] * kron(binned.vectors.col(k) * binned.vectors.col(k).adjoint(), jb);
  }
  RegisterLayout l = binned.input.layout().concat(reg("J", dj, true)).concat(reg("B", db, true));
  return DensityState::trusted(hermitize(m), l);
}

double entropy_total(const FlattenedState& f) {
  double s = 0.0;
  for (std::size_t k = 0; k < f.binned.p.size(); ++k) {
    const double p = f.binned.p[k];
    s += -p * std::log2(p) + p * f.brothers[f.binned.bins[k]];
  }
  return s;
}

double entropy_rest(const FlattenedState& f) {
  const std::size_t dx = first_dim(f.binned.input);
  const std::size_t rest = f.binned.input.dim() / dx;
  double s = 0.0;
  for (int j = 0; j <= f.binned.params.bin_count; ++j) {
    if (f.binned.q[j] <= 0.0) continue;
    s += entropy_of_positive(partial_trace_raw(f.sector(j), {dx, rest}, {1}));
    s += f.binned.q[j] * f.brothers[j];
  }
  return s;
}

namespace {

// Per-label combination of conditional entropies H_j with weights q_j.
double combine(const std::vector<double>& q, const std::vector<double>& h, double alpha) {
  if (alpha == 1.0) {
    double s = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) s += q[j] * h[j];
    return s;
  }
  const double e = std::isinf(alpha) ? -1.0 : (1.0 - alpha) / alpha;
  double acc = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) acc += q[j] * std::exp2(e * h[j]);
  return std::log2(acc) / e;
}

double cond_over_sectors(const FlattenedState& f, const std::vector<Mat>& ext, double alpha) {
  const RegisterLayout& l = f.binned.input.layout();
  const std::string x = l.names().front();
  std::vector<std::string> rest = rest_names(l);
  RegisterLayout layout = l;
  if (!ext.empty()) {
    layout = l.concat(reg("_next", ext.front().rows()));
    rest.push_back("_next");
  }
  std::vector<double> q, h;
  for (int j = 0; j <= f.binned.params.bin_count; ++j) {
    const double qj = f.binned.q[j];
    if (qj <= 0.0) continue;
    Mat m;
    if (ext.empty()) {
      m = f.sector(j);
    } else {
      const std::size_t d = f.binned.input.dim() * ext.front().rows();
      m = Mat::Zero(d, d);
      for (std::size_t k = 0; k < f.binned.p.size(); ++k)
        if (f.binned.bins[k] == j)
          m += f.binned.p[k] *
               kron(f.binned.vectors.col(k) * f.binned.vectors.col(k).adjoint(), ext.at(f.binned.label[k]));
    }
    auto st = DensityState::trusted(hermitize(m / m.trace().real()), layout);
    q.push_back(qj);
    h.push_back(conditional_renyi(st, {x}, rest, alpha).value);
  }
  double total = 0.0;
  for (double v : q) total += v;
  for (double& v : q) v /= total;
  return combine(q, h, alpha);
}

}  // namespace

double cond_x_given_rest(const FlattenedState& f, double alpha) { return cond_over_sectors(f, {}, alpha); }

double cond_x_given_rest_extended(const FlattenedState& f, const std::vector<Mat>& ext, double alpha) {
  if (!f.binned.input.layout().subsystems().front().classical)
    throw StateError("extension per label needs a classical first register");
  if (ext.size() != first_dim(f.binned.input)) throw StateError("one extension state per label expected");
  return cond_over_sectors(f, ext, alpha);
}

FlatnessReport verify_flatness_claim(const FlattenedState& f) {
  FlatnessReport r;
  r.s_total = entropy_total(f);
  r.s2_cond = cond_x_given_rest(f, 2.0);
  r.s_rest = entropy_rest(f);
  r.excess = r.s_total - r.s2_cond - r.s_rest;
  r.slack = 2.0 - r.excess;
  r.pass = r.slack >= -tol().num;
  return r;
}

json FlatnessReport::to_json() const {
  return {{"S_total", s_total}, {"S2_cond", s2_cond}, {"S_rest", s_rest},
          {"excess", excess},   {"slack", slack},     {"pass", pass}};
}

json flattening_to_json(const FlattenedState& f, const FlatnessReport& r) {
  json ext = json::array();
  for (const auto& [v, m] : f.extended_spectrum().items) ext.push_back({v, m});
  return {{"input_spectrum", f.binned.p},
          {"bins", f.binned.bins},
          {"brothers", f.brothers},
          {"extended_spectrum", ext},
          {"flatness_slack", r.slack},
          {"claim", r.to_json()}};
}

}  // namespace qlab
