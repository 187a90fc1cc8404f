#include "qlab/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <set>
#include <sstream>

namespace qlab {

Tolerances& tol() {
  static Tolerances t;
  return t;
}

std::size_t dim_cap() {
  const char* env = std::getenv("LAB_DIM_CAP");
  if (env != nullptr) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return 4096;
}

void check_dim(std::size_t d, const std::string& what) {
  if (d > dim_cap()) {
    std::ostringstream os;
    os << what << ": dimension " << d << " exceeds cap " << dim_cap();
    throw DimensionCapError(os.str());
  }
}

// ---- layout -------------------------------------------------------------------

RegisterLayout::RegisterLayout(std::vector<Subsystem> subs) : subs_(std::move(subs)) {
  std::set<std::string> seen;
  for (const auto& s : subs_) {
    if (s.dim == 0) throw StateError("subsystem " + s.name + " has zero dimension");
    if (!seen.insert(s.name).second) throw StateError("duplicate subsystem name " + s.name);
  }
}

std::size_t RegisterLayout::total_dim() const {
  std::size_t d = 1;
  for (const auto& s : subs_) d *= s.dim;
  return d;
}

std::size_t RegisterLayout::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < subs_.size(); ++i)
    if (subs_[i].name == name) return i;
  throw StateError("unknown subsystem " + name);
}

bool RegisterLayout::contains(const std::string& name) const {
  return std::any_of(subs_.begin(), subs_.end(), [&](const Subsystem& s) { return s.name == name; });
}

std::vector<std::string> RegisterLayout::names() const {
  std::vector<std::string> out;
  for (const auto& s : subs_) out.push_back(s.name);
  return out;
}

std::size_t RegisterLayout::dim_of(const std::vector<std::string>& names) const {
  std::size_t d = 1;
  for (const auto& n : names) d *= subs_[index_of(n)].dim;
  return d;
}

std::size_t RegisterLayout::stride(std::size_t k) const {
  std::size_t s = 1;
  for (std::size_t i = k + 1; i < subs_.size(); ++i) s *= subs_[i].dim;
  return s;
}

RegisterLayout RegisterLayout::concat(const RegisterLayout& other) const {
  std::vector<Subsystem> all = subs_;
  all.insert(all.end(), other.subs_.begin(), other.subs_.end());
  return RegisterLayout(all);
}

RegisterLayout RegisterLayout::select(const std::vector<std::string>& keep) const {
  std::vector<Subsystem> out;
  for (const auto& n : keep) out.push_back(subs_[index_of(n)]);
  return RegisterLayout(out);
}

RegisterLayout qubits(const std::string& name, int n, bool classical) {
  return RegisterLayout({{name, std::size_t{1} << n, classical}});
}

RegisterLayout reg(const std::string& name, std::size_t dim, bool classical) {
  return RegisterLayout({{name, dim, classical}});
}

// ---- validation ---------------------------------------------------------------

double hermiticity_defect(const Mat& m) {
  if (m.rows() != m.cols()) return INFINITY;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

double classical_defect(const Mat& m, const RegisterLayout& layout) {
  double worst = 0.0;
  const std::size_t d = layout.total_dim();
  for (std::size_t k = 0; k < layout.size(); ++k) {
    if (!layout.subsystems()[k].classical) continue;
    const std::size_t dk = layout.subsystems()[k].dim;
    const std::size_t st = layout.stride(k);
    for (std::size_t i = 0; i < d; ++i) {
      const std::size_t li = (i / st) % dk;
      for (std::size_t j = 0; j < d; ++j) {
        if ((j / st) % dk == li) continue;
        worst = std::max(worst, std::abs(m(i, j)));
      }
    }
  }
  return worst;
}

void validate(const Mat& m, const RegisterLayout& layout, bool check_psd) {
  if (m.rows() != m.cols()) throw StateError("state matrix is not square");
  if (static_cast<std::size_t>(m.rows()) != layout.total_dim())
    throw StateError("matrix dimension does not match layout");
  if (hermiticity_defect(m) > tol().herm) throw StateError("state is not Hermitian");
  if (std::abs(m.trace() - cplx(1.0)) > tol().tr) throw StateError("state trace differs from 1");
  if (classical_defect(m, layout) > tol().herm)
    throw StateError("classical register has off-diagonal coherence");
  if (check_psd && m.rows() <= 1024 && min_eigenvalue(m) < -tol().psd)
    throw StateError("state has a negative eigenvalue");
}

DensityState::DensityState(Mat m, RegisterLayout layout) : m_(std::move(m)), layout_(std::move(layout)) {
  check_dim(layout_.total_dim(), "state");
  validate(m_, layout_, true);
}

DensityState DensityState::trusted(Mat m, RegisterLayout layout) {
  DensityState s;
  s.m_ = std::move(m);
  s.layout_ = std::move(layout);
  check_dim(s.layout_.total_dim(), "state");
  if (static_cast<std::size_t>(s.m_.rows()) != s.layout_.total_dim())
    throw StateError("matrix dimension does not match layout");
  return s;
}

// ---- matrix utilities ---------------------------------------------------------

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Mat hermitize(const Mat& m) { return 0.5 * (m + m.adjoint()); }

// The QR iteration occasionally stalls on highly degenerate spectra; a diagonal shift
// changes the iteration path without changing the eigenvectors. Returns the shift used.
static double solve_shifted(const Mat& h, Eigen::SelfAdjointEigenSolver<Mat>& es, int options) {
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  const Mat id = Mat::Identity(h.rows(), h.cols());
  for (double f : {0.1234567, 0.7654321, 2.3456789}) {
    const double shift = f * scale;
    es.compute(h + shift * id, options);
    if (es.info() == Eigen::Success) return shift;
  }
  throw StateError("eigen-solver failed");
}

void herm_eig(const Mat& a, RVec& w, Mat& v) {
  if (a.rows() == 0) {
    w.resize(0);
    v.resize(0, 0);
    return;
  }
  const Mat h = hermitize(a);
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  if (es.info() == Eigen::Success) {
    w = es.eigenvalues();
    v = es.eigenvectors();
    return;
  }
  const double shift = solve_shifted(h, es, Eigen::ComputeEigenvectors);
  w = es.eigenvalues().array() - shift;
  v = es.eigenvectors();
}

RVec herm_eigenvalues(const Mat& a) {
  if (a.rows() == 0) return RVec();
  const Mat h = hermitize(a);
  Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
  if (es.info() == Eigen::Success) return es.eigenvalues();
  const double shift = solve_shifted(h, es, Eigen::EigenvaluesOnly);
  return es.eigenvalues().array() - shift;
}

Mat herm_pow(const Mat& a, double p, double cutoff) {
  return herm_fn(a, [&](double x) {
    if (x <= cutoff) return (p > 0.0 && x > 0.0) ? std::pow(x, p) : 0.0;
    return std::pow(x, p);
  });
}

Mat herm_sqrt(const Mat& a) {
  return herm_fn(a, [](double x) { return x > 0.0 ? std::sqrt(x) : 0.0; });
}

double trace_norm(const Mat& a) {
  if (hermiticity_defect(a) <= 1e-12) {
    RVec w = herm_eigenvalues(a);
    return w.cwiseAbs().sum();
  }
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues().sum();
}

double min_eigenvalue(const Mat& a) { return herm_eigenvalues(a).minCoeff(); }
double max_eigenvalue(const Mat& a) { return herm_eigenvalues(a).maxCoeff(); }

Mat projector_onto_support(const Mat& a, double cutoff) {
  return herm_fn(a, [&](double x) { return x > cutoff ? 1.0 : 0.0; });
}

// ---- construction -------------------------------------------------------------

DensityState maximally_mixed(const RegisterLayout& layout) {
  const std::size_t d = layout.total_dim();
  check_dim(d, "maximally_mixed");
  Mat m = Mat::Identity(d, d) / static_cast<double>(d);
  return DensityState::trusted(m, layout);
}

DensityState basis_state(const RegisterLayout& layout, std::size_t index) {
  const std::size_t d = layout.total_dim();
  check_dim(d, "basis_state");
  if (index >= d) throw StateError("basis index out of range");
  Mat m = Mat::Zero(d, d);
  m(index, index) = 1.0;
  return DensityState::trusted(m, layout);
}

DensityState pure_state(const Vec& v, const RegisterLayout& layout) {
  Vec u = v / v.norm();
  return DensityState(u * u.adjoint(), layout);
}

DensityState diagonal_state(const std::vector<double>& p, const RegisterLayout& layout) {
  if (p.size() != layout.total_dim()) throw StateError("diagonal length does not match layout");
  Mat m = Mat::Zero(p.size(), p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m(i, i) = p[i];
  return DensityState(m, layout);
}

DensityState make_cq_state(const std::vector<double>& dist, const std::vector<DensityState>& states,
                           const std::string& label) {
  if (dist.empty() || dist.size() != states.size())
    throw StateError("distribution and state list differ in length");
  double total = 0.0;
  for (double p : dist) {
    if (p < 0.0) throw StateError("negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > tol().tr) throw StateError("distribution does not sum to 1");
  const RegisterLayout& base = states[0].layout();
  for (const auto& s : states)
    if (s.layout() != base) throw StateError("cq components have different layouts");
  const std::size_t dq = base.total_dim();
  const std::size_t dx = dist.size();
  check_dim(dx * dq, "make_cq_state");
  Mat m = Mat::Zero(dx * dq, dx * dq);
  for (std::size_t x = 0; x < dx; ++x) m.block(x * dq, x * dq, dq, dq) = dist[x] * states[x].matrix();
  return DensityState::trusted(m, reg(label, dx, true).concat(base));
}

DensityState tensor(const DensityState& a, const DensityState& b) {
  RegisterLayout l = a.layout().concat(b.layout());
  check_dim(l.total_dim(), "tensor");
  return DensityState::trusted(kron(a.matrix(), b.matrix()), l);
}

DensityState rename(const DensityState& s, const std::vector<std::string>& names) {
  if (names.size() != s.layout().size()) throw StateError("rename: wrong number of names");
  std::vector<Subsystem> subs = s.layout().subsystems();
  for (std::size_t i = 0; i < subs.size(); ++i) subs[i].name = names[i];
  return DensityState::trusted(s.matrix(), RegisterLayout(subs));
}

DensityState tensor_power(const DensityState& s, int t) {
  if (t < 1) throw StateError("tensor power needs t >= 1");
  auto copy = [&](int k) {
    std::vector<std::string> names;
    for (const auto& n : s.layout().names()) names.push_back(n + "_" + std::to_string(k));
    return rename(s, names);
  };
  DensityState out = copy(1);
  for (int k = 2; k <= t; ++k) out = tensor(out, copy(k));
  return out;
}

Mat partial_trace_raw(const Mat& m, const std::vector<std::size_t>& dims,
                      const std::vector<std::size_t>& keep) {
  const std::size_t n = dims.size();
  std::vector<std::size_t> strides(n, 1);
  for (std::size_t i = n; i-- > 1;) strides[i - 1] = strides[i] * dims[i];
  std::vector<bool> kept(n, false);
  for (std::size_t k : keep) {
    if (k >= n || kept[k]) throw StateError("partial trace: bad keep list");
    kept[k] = true;
  }
  std::vector<std::size_t> traced;
  for (std::size_t i = 0; i < n; ++i)
    if (!kept[i]) traced.push_back(i);
  // Offsets of every kept multi-index (in keep order) and traced multi-index.
  auto offsets = [&](const std::vector<std::size_t>& idx) {
    std::size_t total = 1;
    for (std::size_t i : idx) total *= dims[i];
    std::vector<std::size_t> off(total, 0);
    for (std::size_t lin = 0; lin < total; ++lin) {
      std::size_t rem = lin, o = 0;
      for (std::size_t q = idx.size(); q-- > 0;) {
        const std::size_t i = idx[q];
        o += (rem % dims[i]) * strides[i];
        rem /= dims[i];
      }
      off[lin] = o;
    }
    return off;
  };
  const auto offk = offsets(keep);
  const auto offt = offsets(traced);
  const std::size_t dk = offk.size();
  Mat out = Mat::Zero(dk, dk);
  for (std::size_t b = 0; b < dk; ++b)
    for (std::size_t a = 0; a < dk; ++a) {
      cplx acc = 0.0;
      for (std::size_t t : offt) acc += m(offk[a] + t, offk[b] + t);
      out(a, b) = acc;
    }
  return out;
}

static std::vector<std::size_t> dims_of(const RegisterLayout& l) {
  std::vector<std::size_t> d;
  for (const auto& s : l.subsystems()) d.push_back(s.dim);
  return d;
}

DensityState partial_trace(const DensityState& s, const std::vector<std::string>& keep) {
  std::vector<std::size_t> idx;
  for (const auto& n : keep) idx.push_back(s.layout().index_of(n));
  Mat out = partial_trace_raw(s.matrix(), dims_of(s.layout()), idx);
  return DensityState::trusted(out, s.layout().select(keep));
}

DensityState reorder(const DensityState& s, const std::vector<std::string>& order) {
  if (order.size() != s.layout().size()) throw StateError("reorder must list every subsystem");
  return partial_trace(s, order);
}

// ---- spectra and distances ----------------------------------------------------

std::vector<double> spectrum(const Mat& m) {
  RVec w = herm_eigenvalues(m);
  std::vector<double> out(w.data(), w.data() + w.size());
  for (double& x : out) {
    if (x < -tol().psd) throw StateError("spectrum: negative eigenvalue beyond tolerance");
    // Eigen-solver noise around zero would otherwise dominate orders below one.
    if (x < 1e-14) x = 0.0;
  }
  double total = std::accumulate(out.begin(), out.end(), 0.0);
  if (total > 0.0)
    for (double& x : out) x /= total;
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

SpectralDecomp spectral_decompose(const DensityState& s) {
  if (hermiticity_defect(s.matrix()) > tol().herm) throw StateError("state is not Hermitian");
  RVec w;
  Mat v;
  herm_eig(s.matrix(), w, v);
  const Eigen::Index d = w.size();
  SpectralDecomp out;
  out.eigenvalues.resize(d);
  out.eigenvectors.resize(d, d);
  double total = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    double x = w(d - 1 - k);
    if (x < -tol().psd) throw StateError("spectral_decompose: negative eigenvalue");
    if (x < 0.0) x = 0.0;
    out.eigenvalues(k) = x;
    out.eigenvectors.col(k) = v.col(d - 1 - k);
    total += x;
  }
  if (total > 0.0) out.eigenvalues /= total;
  return out;
}

static void require_same_layout(const DensityState& a, const DensityState& b) {
  if (a.layout() != b.layout()) throw StateError("layout mismatch");
}

double trace_distance(const DensityState& a, const DensityState& b) {
  require_same_layout(a, b);
  return trace_norm(a.matrix() - b.matrix());
}

double fidelity(const Mat& a, const Mat& b) {
  Mat prod = herm_sqrt(a) * herm_sqrt(b);
  Eigen::JacobiSVD<Mat> svd(prod);
  return std::min(1.0, svd.singularValues().sum());
}

double fidelity(const DensityState& a, const DensityState& b) {
  require_same_layout(a, b);
  return fidelity(a.matrix(), b.matrix());
}

double bures(const DensityState& a, const DensityState& b) {
  return std::sqrt(std::max(0.0, 1.0 - fidelity(a, b)));
}

DensityState uhlmann_extension(const DensityState& rho_ab, const DensityState& sigma_a) {
  const RegisterLayout& la = sigma_a.layout();
  const RegisterLayout& lab = rho_ab.layout();
  if (la.size() > lab.size()) throw StateError("uhlmann_extension: marginal has more registers");
  for (std::size_t i = 0; i < la.size(); ++i)
    if (!(la.subsystems()[i].name == lab.subsystems()[i].name &&
          la.subsystems()[i].dim == lab.subsystems()[i].dim))
      throw StateError("uhlmann_extension: marginal registers do not lead the joint layout");
  const std::size_t da = la.total_dim();
  const std::size_t d = lab.total_dim();
  const std::size_t db = d / da;
  // Purifications as da x (db*d) and da x da operators.
  Mat sq = herm_sqrt(rho_ab.matrix());
  Mat mrho(da, db * d);
  for (std::size_t a = 0; a < da; ++a)
    for (std::size_t b = 0; b < db; ++b)
      for (std::size_t r = 0; r < d; ++r) mrho(a, b * d + r) = sq(a * db + b, r);
  Mat msig = herm_sqrt(sigma_a.matrix());
  // Maximize |Tr(M_rho^dag M_sig W)| over partial isometries W : C^{db*d} <- C^{da}.
  Mat k = mrho.adjoint() * msig;  // (db*d) x da
  Eigen::JacobiSVD<Mat> svd(k, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Mat w = svd.matrixV() * svd.matrixU().adjoint();  // da x (db*d)
  Mat mth = msig * w;                               // da x (db*d)
  Mat t(d, d);
  for (std::size_t a = 0; a < da; ++a)
    for (std::size_t b = 0; b < db; ++b)
      for (std::size_t r = 0; r < d; ++r) t(a * db + b, r) = mth(a, b * d + r);
  Mat theta = hermitize(t * t.adjoint());
  theta /= theta.trace().real();
  std::vector<Subsystem> subs = lab.subsystems();
  for (std::size_t i = 0; i < la.size(); ++i) subs[i].classical = la.subsystems()[i].classical;
  // Classical flags of B are dropped when the extension creates coherence.
  RegisterLayout out_layout(subs);
  if (classical_defect(theta, out_layout) > tol().herm) {
    for (std::size_t i = la.size(); i < subs.size(); ++i) subs[i].classical = false;
    out_layout = RegisterLayout(subs);
  }
  return DensityState::trusted(theta, out_layout);
}

// ---- cq Markov chains ---------------------------------------------------------

double markov_defect(const Mat& axb, std::size_t da, std::size_t dx, std::size_t db) {
  double worst = 0.0;
  const std::size_t blk = dx * db;
  for (std::size_t x = 0; x < dx; ++x) {
    // Block for label x: (a,b),(a',b') entries with x fixed.
    Mat bx(da * db, da * db);
    for (std::size_t a = 0; a < da; ++a)
      for (std::size_t b = 0; b < db; ++b)
        for (std::size_t a2 = 0; a2 < da; ++a2)
          for (std::size_t b2 = 0; b2 < db; ++b2)
            bx(a * db + b, a2 * db + b2) = axb(a * blk + x * db + b, a2 * blk + x * db + b2);
    const double px = bx.trace().real();
    if (px <= 1e-15) continue;
    Mat ra = partial_trace_raw(bx, {da, db}, {0});
    Mat rb = partial_trace_raw(bx, {da, db}, {1});
    Mat prod = kron(ra, rb) / px;
    worst = std::max(worst, (bx - prod).cwiseAbs().maxCoeff());
  }
  return worst;
}

CqMarkovChain::CqMarkovChain(DensityState state, std::vector<std::string> a, std::string x,
                             std::vector<std::string> b)
    : a_(std::move(a)), x_(std::move(x)), b_(std::move(b)) {
  const RegisterLayout& l = state.layout();
  if (!l.subsystems()[l.index_of(x_)].classical) throw StateError("Markov chain register X must be classical");
  std::vector<std::string> order = a_;
  order.push_back(x_);
  order.insert(order.end(), b_.begin(), b_.end());
  if (order.size() != l.size()) throw StateError("Markov chain partition must cover all registers");
  state_ = reorder(state, order);
  defect_ = qlab::markov_defect(state_.matrix(), l.dim_of(a_), l.dim_of({x_}), l.dim_of(b_));
  if (defect_ > tol().herm) throw StateError("state is not a cq Markov chain");
}

RecoveryMap markov_recovery(const CqMarkovChain& chain) {
  const RegisterLayout& l = chain.state().layout();
  const std::size_t da = l.dim_of(chain.a());
  const std::size_t dx = l.dim_of({chain.x()});
  const std::size_t db = l.dim_of(chain.b());
  RecoveryMap r;
  r.x_layout = l.select({chain.x()});
  r.b_layout = l.select(chain.b());
  std::vector<std::string> xb = {chain.x()};
  xb.insert(xb.end(), chain.b().begin(), chain.b().end());
  Mat mxb = partial_trace(chain.state(), xb).matrix();
  for (std::size_t x = 0; x < dx; ++x) {
    Mat bx = mxb.block(x * db, x * db, db, db);
    const double px = bx.trace().real();
    // Labels of probability zero get the maximally mixed state; any choice works.
    if (px <= 1e-15)
      r.b_given_x.push_back(Mat::Identity(db, db) / static_cast<double>(db));
    else
      r.b_given_x.push_back(bx / px);
  }
  (void)da;
  return r;
}

DensityState RecoveryMap::apply(const DensityState& s) const {
  const RegisterLayout& l = s.layout();
  const std::string& xname = x_layout.subsystems()[0].name;
  const std::size_t kx = l.index_of(xname);
  const std::size_t dx = x_layout.total_dim();
  if (l.subsystems()[kx].dim != dx) throw StateError("recovery: X dimension mismatch");
  const std::size_t db = b_layout.total_dim();
  std::size_t dpre = 1, dpost = 1;
  for (std::size_t i = 0; i < kx; ++i) dpre *= l.subsystems()[i].dim;
  for (std::size_t i = kx + 1; i < l.size(); ++i) dpost *= l.subsystems()[i].dim;
  const std::size_t dout = dpre * dx * db * dpost;
  check_dim(dout, "recovery");
  Mat out = Mat::Zero(dout, dout);
  const Mat& m = s.matrix();
  // The channel acts on the diagonal of X; off-diagonal X blocks are dropped.
  for (std::size_t p = 0; p < dpre; ++p)
    for (std::size_t p2 = 0; p2 < dpre; ++p2)
      for (std::size_t x = 0; x < dx; ++x)
        for (std::size_t q = 0; q < dpost; ++q)
          for (std::size_t q2 = 0; q2 < dpost; ++q2) {
            const cplx v = m((p * dx + x) * dpost + q, (p2 * dx + x) * dpost + q2);
            if (v == cplx(0.0)) continue;
            for (std::size_t b = 0; b < db; ++b)
              for (std::size_t b2 = 0; b2 < db; ++b2)
                out(((p * dx + x) * db + b) * dpost + q, ((p2 * dx + x) * db + b2) * dpost + q2) +=
                    v * b_given_x[x](b, b2);
          }
  std::vector<Subsystem> subs;
  for (std::size_t i = 0; i <= kx; ++i) subs.push_back(l.subsystems()[i]);
  for (const auto& b : b_layout.subsystems()) subs.push_back(b);
  for (std::size_t i = kx + 1; i < l.size(); ++i) subs.push_back(l.subsystems()[i]);
  return DensityState::trusted(out, RegisterLayout(subs));
}

// ---- serialization ------------------------------------------------------------

json layout_to_json(const RegisterLayout& layout) {
  json arr = json::array();
  for (const auto& s : layout.subsystems())
    arr.push_back({{"name", s.name}, {"dim", s.dim}, {"classical", s.classical}});
  return arr;
}

RegisterLayout layout_from_json(const json& j) {
  std::vector<Subsystem> subs;
  for (const auto& e : j)
    subs.push_back({e.at("name").get<std::string>(), e.at("dim").get<std::size_t>(),
                    e.value("classical", false)});
  return RegisterLayout(subs);
}

json state_to_json(const DensityState& s) {
  json data = json::array();
  const Mat& m = s.matrix();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      data.push_back(m(i, j).real());
      data.push_back(m(i, j).imag());
    }
  return {{"layout", layout_to_json(s.layout())}, {"data", data}};
}

DensityState state_from_json(const json& j) {
  RegisterLayout l = layout_from_json(j.at("layout"));
  const std::size_t d = l.total_dim();
  check_dim(d, "state_from_json");
  const auto& data = j.at("data");
  if (data.size() != 2 * d * d) throw StateError("state data has wrong length");
  Mat m(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < d; ++k)
      m(i, k) = cplx(data[2 * (i * d + k)].get<double>(), data[2 * (i * d + k) + 1].get<double>());
  return DensityState(m, l);
}

// ---- randomness ---------------------------------------------------------------

static std::uint64_t splitmix(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t x = seed;
  std::uint64_t h = splitmix(x);
  for (std::uint64_t v : {a, b, c}) {
    x = h ^ (v + 0x632be59bd9b4e019ULL);
    h = splitmix(x);
  }
  return h;
}

Mat ginibre(Rng& rng, std::size_t rows, std::size_t cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat g(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const double re = n(rng);
      const double im = n(rng);
      g(i, j) = cplx(re, im);
    }
  return g;
}

Mat random_density_matrix(Rng& rng, std::size_t d, std::size_t rank) {
  if (rank == 0) rank = d;
  Mat g = ginibre(rng, d, rank);
  Mat m = g * g.adjoint();
  return hermitize(m / m.trace().real());
}

Vec random_pure_vector(Rng& rng, std::size_t d) {
  Mat g = ginibre(rng, d, 1);
  Vec v = g.col(0);
  return v / v.norm();
}

Mat haar_isometry(Rng& rng, std::size_t rows, std::size_t cols) {
  if (cols > rows) throw StateError("isometry needs rows >= cols");
  Mat g = ginibre(rng, rows, cols);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(rows, cols);
  Mat r = qr.matrixQR().topLeftCorner(cols, cols).triangularView<Eigen::Upper>();
  // Phase fix makes the distribution Haar.
  for (std::size_t j = 0; j < cols; ++j) {
    const cplx rjj = r(j, j);
    const double a = std::abs(rjj);
    if (a > 0.0) q.col(j) *= rjj / a;
  }
  return q;
}

Mat haar_unitary(Rng& rng, std::size_t d) { return haar_isometry(rng, d, d); }

DensityState random_state(Rng& rng, const RegisterLayout& layout, std::size_t rank) {
  const std::size_t d = layout.total_dim();
  check_dim(d, "random_state");
  for (const auto& s : layout.subsystems())
    if (s.classical) throw StateError("random_state: use random_cq_state for classical registers");
  return DensityState::trusted(random_density_matrix(rng, d, rank), layout);
}

std::vector<double> random_distribution(Rng& rng, std::size_t k) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(k);
  double t = 0.0;
  for (auto& v : p) {
    v = e(rng);
    t += v;
  }
  for (auto& v : p) v /= t;
  return p;
}

DensityState random_cq_state(Rng& rng, std::size_t dx, const RegisterLayout& rest,
                             const std::string& label, std::size_t rank) {
  std::vector<double> p = random_distribution(rng, dx);
  std::vector<DensityState> states;
  for (std::size_t x = 0; x < dx; ++x) states.push_back(random_state(rng, rest, rank));
  return make_cq_state(p, states, label);
}

}  // namespace qlab
