#include "qlab/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace qlab {

double log2_safe(double x) { return x > 0.0 ? std::log2(x) : -kInf; }

// ---- spectra -------------------------------------------------------------------

double shannon(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0.0) h -= x * std::log2(x);
  return h;
}

double renyi_of(const std::vector<double>& p, double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("renyi order must be nonnegative");
  if (alpha == 1.0) return shannon(p);
  if (alpha == 0.0) {
    double n = 0.0;
    for (double x : p)
      if (x > 0.0) n += 1.0;
    return std::log2(n);
  }
  if (std::isinf(alpha)) {
    double m = 0.0;
    for (double x : p) m = std::max(m, x);
    return -std::log2(m);
  }
  double s = 0.0;
  for (double x : p)
    if (x > 0.0) s += std::pow(x, alpha);
  return std::log2(s) / (1.0 - alpha);
}

double von_neumann(const Mat& m) { return shannon(spectrum(m)); }
double von_neumann(const DensityState& s) { return von_neumann(s.matrix()); }
double renyi(const Mat& m, double alpha) { return renyi_of(spectrum(m), alpha); }
double renyi(const DensityState& s, double alpha) { return renyi(s.matrix(), alpha); }

// ---- divergences ---------------------------------------------------------------

namespace {

struct SupportInfo {
  RVec w;
  Mat v;
  double cut = 0.0;
};

SupportInfo support_of(const Mat& sigma) {
  SupportInfo si;
  herm_eig(sigma, si.w, si.v);
  const double top = si.w.size() ? std::max(si.w.maxCoeff(), 0.0) : 0.0;
  si.cut = 1e-13 * std::max(1.0, top);
  return si;
}

Mat fn_on(const SupportInfo& si, const std::function<double(double)>& f) {
  RVec fw(si.w.size());
  for (Eigen::Index i = 0; i < si.w.size(); ++i) fw(i) = si.w(i) > si.cut ? f(si.w(i)) : 0.0;
  return si.v * fw.cast<cplx>().asDiagonal() * si.v.adjoint();
}

bool violates_support(const SupportInfo& si, const Mat& rho) {
  Mat p = fn_on(si, [](double) { return 1.0; });
  const Eigen::Index d = rho.rows();
  Mat q = Mat::Identity(d, d) - p;
  const double leak = (q * rho * q).trace().real();
  return leak > tol().psd;
}

}  // namespace

DivergenceResult sandwiched_divergence(const Mat& rho, const Mat& sigma, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("divergence order must be positive");
  if (rho.rows() != sigma.rows()) throw StateError("divergence: dimension mismatch");
  SupportInfo si = support_of(sigma);
  DivergenceResult out;
  if (alpha >= 1.0 && violates_support(si, rho)) {
    out.value = kInf;
    out.support_violation = true;
    return out;
  }
  if (alpha == 1.0) {
    Mat logs = fn_on(si, [](double x) { return std::log2(x); });
    RVec w;
    Mat v;
    herm_eig(rho, w, v);
    double a = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i)
      if (w(i) > 0.0) a += w(i) * std::log2(w(i));
    out.value = a - (rho * logs).trace().real();
    return out;
  }
  if (std::isinf(alpha)) {
    Mat is = fn_on(si, [](double x) { return 1.0 / std::sqrt(x); });
    out.value = std::log2(std::max(max_eigenvalue(is * rho * is), 0.0));
    return out;
  }
  const double g = (1.0 - alpha) / (2.0 * alpha);
  Mat sg = fn_on(si, [&](double x) { return std::pow(x, g); });
  RVec z = herm_eigenvalues(sg * rho * sg);
  const double cut = 1e-14 * std::max(1.0, z.maxCoeff());
  double q = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i)
    if (z(i) > cut) q += std::pow(z(i), alpha);
  if (q <= 0.0) {
    out.value = kInf;
    out.support_violation = true;
    return out;
  }
  out.value = std::log2(q) / (alpha - 1.0);
  return out;
}

DivergenceResult sandwiched_divergence(const DensityState& rho, const DensityState& sigma, double alpha) {
  if (rho.layout() != sigma.layout()) throw StateError("divergence: layout mismatch");
  return sandwiched_divergence(rho.matrix(), sigma.matrix(), alpha);
}

// ---- conditional entropies ---------------------------------------------------

std::string method_name(Method m) {
  switch (m) {
    case Method::closed_form:
      return "closed_form";
    case Method::variational:
      return "variational";
    case Method::brute_grid:
      return "brute_grid";
  }
  return "unknown";
}

static std::vector<std::string> join(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::string> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

CondBlocks condition_blocks(const DensityState& s, const std::vector<std::string>& a,
                            const std::vector<std::string>& b) {
  const RegisterLayout& l = s.layout();
  const std::size_t da = l.dim_of(a);
  const std::size_t db = l.dim_of(b);
  Mat rab = partial_trace(s, join(a, b)).matrix();
  Mat rb = partial_trace_raw(rab, {da, db}, {1});
  RVec w;
  Mat v;
  herm_eig(rb, w, v);
  const double cut = 1e-12 * std::max(1.0, w.maxCoeff());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (w(i) > cut) keep.push_back(i);
  CondBlocks cb;
  cb.r = keep.size();
  cb.support.resize(db, cb.r);
  for (std::size_t k = 0; k < keep.size(); ++k) cb.support.col(k) = v.col(keep[k]);
  const Mat& sv = cb.support;
  bool a_classical = !a.empty();
  for (const auto& n : a) a_classical = a_classical && l.subsystems()[l.index_of(n)].classical;
  if (a_classical) {
    cb.da = 1;
    for (std::size_t x = 0; x < da; ++x) {
      Mat blk = sv.adjoint() * rab.block(x * db, x * db, db, db) * sv;
      if (blk.trace().real() > 1e-15) cb.blocks.push_back(hermitize(blk));
    }
  } else {
    cb.da = da;
    Mat iv = kron(Mat::Identity(da, da), sv);
    cb.blocks.push_back(hermitize(iv.adjoint() * rab * iv));
  }
  return cb;
}

namespace {

Mat lift(const CondBlocks& cb, const Mat& x) {
  return cb.da == 1 ? x : kron(Mat::Identity(cb.da, cb.da), x);
}

// Tr_A of an operator on C^da (x) C^r.
Mat trace_a(const CondBlocks& cb, const Mat& z) {
  if (cb.da == 1) return z;
  return partial_trace_raw(z, {cb.da, cb.r}, {1});
}

}  // namespace

double cond_q(const CondBlocks& cb, const Mat& sigma, double alpha) {
  const double g = (1.0 - alpha) / (2.0 * alpha);
  Mat sg = lift(cb, herm_pow(sigma, g, 0.0));
  double q = 0.0;
  for (const auto& m : cb.blocks) {
    RVec z = herm_eigenvalues(sg * m * sg);
    const double cut = 1e-14 * std::max(1.0, z.maxCoeff());
    for (Eigen::Index i = 0; i < z.size(); ++i)
      if (z(i) > cut) q += std::pow(z(i), alpha);
  }
  return q;
}

double cond_value(const CondBlocks& cb, const Mat& sigma, double alpha) {
  const double q = cond_q(cb, sigma, alpha);
  if (q <= 0.0) return alpha > 1.0 ? kInf : -kInf;
  return -std::log2(q) / (alpha - 1.0);
}

namespace {

// W = sum_k Tr_A[(sigma^g M_k sigma^g)^alpha], returned as W / Tr W. Stationary points of the objective satisfy W(sigma) = sigma.
Mat stationarity_map(const CondBlocks& cb, const Mat& sigma, double alpha) {
  const double g = (1.0 - alpha) / (2.0 * alpha);
  Mat sg = lift(cb, herm_pow(sigma, g, 0.0));
  Mat w = Mat::Zero(cb.r, cb.r);
  for (const auto& m : cb.blocks) {
    Mat z = herm_fn(sg * m * sg, [&](double x) { return x > 0.0 ? std::pow(x, alpha) : 0.0; });
    w += trace_a(cb, z);
  }
  w = hermitize(w);
  return w / w.trace().real();
}

// sigma <- (sigma^h W sigma^h)^(1/alpha) / Tr with h = (alpha-1)/2. Same fixed points as
// W = sigma, and exact in one step when everything commutes.
Mat fixed_point_map(const Mat& sigma, const Mat& w, double alpha) {
  Mat sh = herm_pow(sigma, 0.5 * (alpha - 1.0), 0.0);
  Mat n = herm_pow(hermitize(sh * w * sh), 1.0 / alpha, 0.0);
  return n / n.trace().real();
}

struct FixedPointResult {
  Mat sigma;
  double value;
  bool converged;
  int iterations;
};

FixedPointResult solve_fixed_point(const CondBlocks& cb, const Mat& start, double alpha) {
  Mat sigma = start;
  double val = cond_value(cb, sigma, alpha);
  const int max_iter = 5000;
  double res = kInf;
  int iters = 0;
  for (int it = 1; it <= max_iter; ++it) {
    iters = it;
    Mat w = stationarity_map(cb, sigma, alpha);
    res = (w - sigma).norm();
    if (res < 1e-11) return {sigma, val, true, it};
    Mat target = fixed_point_map(sigma, w, alpha);
    Mat next = target;
    double nv = cond_value(cb, next, alpha);
    double lam = 1.0;
    while (nv < val - 1e-15 && lam > 1e-4) {
      lam *= 0.5;
      next = hermitize(sigma + lam * (target - sigma));
      nv = cond_value(cb, next, alpha);
    }
    if (nv < val - 1e-15) break;
    if (lam == 1.0) {
      // Slow linear convergence near the boundary: extend the step while it keeps improving.
      const Mat d = target - sigma;
      for (double t = 2.0; t <= 1e6; t *= 2.0) {
        Mat ext = hermitize(sigma + t * d);
        if (min_eigenvalue(ext) <= 0.0) break;
        const double ev = cond_value(cb, ext, alpha);
        if (!(ev > nv)) break;
        next = ext;
        nv = ev;
      }
    }
    const double gain = nv - val;
    sigma = next;
    val = nv;
    if (gain < 1e-15 && (target - sigma).norm() < 1e-10) break;
  }
  // The stationarity residual decides whether the iterate is usable.
  res = (stationarity_map(cb, sigma, alpha) - sigma).norm();
  return {sigma, val, res < 1e-6, iters};
}

// || sigma^(-1/2) W sigma^(-1/2) - 1 ||, which stays large near the boundary where
// the absolute residual W - sigma is small for the wrong reason.
double relative_residual(const CondBlocks& cb, const Mat& sigma, double alpha) {
  if (min_eigenvalue(sigma) <= 0.0) return kInf;
  Mat si = herm_pow(sigma, -0.5, 0.0);
  Mat r = hermitize(si * stationarity_map(cb, sigma, alpha) * si) - Mat::Identity(cb.r, cb.r);
  return std::max(std::abs(min_eigenvalue(r)), std::abs(max_eigenvalue(r)));
}

// sigma = L L^dag / Tr with L lower triangular and a real diagonal, which removes the
// unitary gauge V -> VU. Parameters: the diagonal, then real and imaginary parts below it.
Mat sigma_of(const Eigen::VectorXd& x, std::size_t r) {
  Mat l = Mat::Zero(r, r);
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < r; ++i) l(i, i) = x(k++);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      l(i, j) = cplx(x(k), x(k + 1));
      k += 2;
    }
  Mat s = hermitize(l * l.adjoint());
  return s / s.trace().real();
}

Eigen::VectorXd params_of(const Mat& sigma) {
  const std::size_t r = sigma.rows();
  Mat l = Eigen::LLT<Mat>(sigma).matrixL();
  Eigen::VectorXd x(static_cast<Eigen::Index>(r * r));
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < r; ++i) x(k++) = l(i, i).real();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      x(k++) = l(i, j).real();
      x(k++) = l(i, j).imag();
    }
  return x / x.norm();
}

// BFGS ascent over the Cholesky factor of sigma with central-difference gradients. Used
// when the fixed point stalls, typically when the optimizer has a very small eigenvalue.
FixedPointResult polish(const CondBlocks& cb, const Mat& start, double alpha) {
  const std::size_t r = cb.r;
  const Eigen::Index n = static_cast<Eigen::Index>(r * r);
  Eigen::VectorXd x = params_of(hermitize(start + 1e-12 * Mat::Identity(r, r)));
  auto f = [&](const Eigen::VectorXd& y) {
    const double v = cond_value(cb, sigma_of(y, r), alpha);
    return std::isfinite(v) ? -v : kInf;
  };
  auto grad = [&](const Eigen::VectorXd& y) {
    Eigen::VectorXd g(n);
    const double h = 1e-7;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd a = y, b = y;
      a(i) += h;
      b(i) -= h;
      g(i) = (f(a) - f(b)) / (2.0 * h);
    }
    return g;
  };
  double fx = f(x);
  Eigen::VectorXd g = grad(x);
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
  bool fresh = true;
  int it = 0;
  for (; it < 2000 && g.norm() >= 1e-9; ++it) {
    Eigen::VectorXd p = -hinv * g;
    if (p.dot(g) >= 0.0 || p.norm() > 1.0) {
      hinv.setIdentity();
      fresh = true;
      p = -g;
    }
    double t = 1.0, ft = f(x + p);
    while (!(ft <= fx + 1e-4 * t * p.dot(g)) && t > 1e-12) {
      t *= 0.5;
      ft = f(x + t * p);
    }
    if (!(ft < fx)) {
      if (fresh) break;
      hinv.setIdentity();
      fresh = true;
      continue;
    }
    // The objective is invariant under scaling, so the iterate is kept on the unit sphere.
    Eigen::VectorXd xn = x + t * p;
    xn /= xn.norm();
    Eigen::VectorXd gn = grad(xn);
    Eigen::VectorXd sv = xn - x, yv = gn - g;
    const double sy = sv.dot(yv);
    if (sy > 1e-12 * sv.norm() * yv.norm()) {
      const double rho = 1.0 / sy;
      Eigen::MatrixXd e = Eigen::MatrixXd::Identity(n, n) - rho * sv * yv.transpose();
      hinv = e * hinv * e.transpose() + rho * sv * sv.transpose();
      fresh = false;
    }
    x = xn;
    fx = ft;
    g = gn;
  }
  return {sigma_of(x, r), -fx, g.norm() < 1e-6, it};
}

// Real basis of r x r Hermitian matrices.
std::vector<Mat> herm_basis(std::size_t r) {
  std::vector<Mat> basis;
  for (std::size_t p = 0; p < r; ++p) {
    Mat e = Mat::Zero(r, r);
    e(p, p) = 1.0;
    basis.push_back(e);
  }
  for (std::size_t p = 0; p < r; ++p)
    for (std::size_t q = p + 1; q < r; ++q) {
      Mat e = Mat::Zero(r, r);
      e(p, q) = e(q, p) = 1.0;
      basis.push_back(e);
      Mat f = Mat::Zero(r, r);
      f(p, q) = cplx(0.0, 1.0);
      f(q, p) = cplx(0.0, -1.0);
      basis.push_back(f);
    }
  return basis;
}

bool cholesky_ok(const Mat& s) {
  Eigen::LLT<Mat> llt(s);
  return llt.info() == Eigen::Success;
}

// min Tr Y subject to 1 (x) Y >= M_k for all k, by a log-barrier Newton method.
struct SdpResult {
  Mat y;
  bool converged;
  int iterations;
};

SdpResult solve_dmax_sdp(const CondBlocks& cb) {
  const std::size_t r = cb.r;
  const auto basis = herm_basis(r);
  const std::size_t n = basis.size();
  double top = 0.0;
  for (const auto& m : cb.blocks) top = std::max(top, max_eigenvalue(m));
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  for (std::size_t p = 0; p < r; ++p) y(p) = top + 1.0;
  auto build = [&](const Eigen::VectorXd& v) {
    Mat out = Mat::Zero(r, r);
    for (std::size_t k = 0; k < n; ++k) out += v(k) * basis[k];
    return out;
  };
  auto slack = [&](const Mat& ym, std::size_t k) { return Mat(lift(cb, ym) - cb.blocks[k]); };
  double m_total = 0.0;
  for (std::size_t k = 0; k < cb.blocks.size(); ++k) m_total += static_cast<double>(cb.blocks[k].rows());
  auto barrier = [&](const Eigen::VectorXd& v, double t, bool& feasible) {
    Mat ym = build(v);
    double phi = t * ym.trace().real();
    for (std::size_t k = 0; k < cb.blocks.size(); ++k) {
      Eigen::LLT<Mat> llt(slack(ym, k));
      if (llt.info() != Eigen::Success) {
        feasible = false;
        return kInf;
      }
      const Mat& l = llt.matrixL();
      for (Eigen::Index i = 0; i < l.rows(); ++i) phi -= 2.0 * std::log(l(i, i).real());
    }
    feasible = true;
    return phi;
  };
  int iters = 0;
  double t = 1.0 / (top + 1e-300);
  bool ok = true;
  while (true) {
    for (int inner = 0; inner < 200; ++inner) {
      ++iters;
      Mat ym = build(y);
      Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
      Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
      for (std::size_t p = 0; p < r; ++p) g(p) = t;
      for (std::size_t k = 0; k < cb.blocks.size(); ++k) {
        Mat kinv = slack(ym, k).inverse();
        std::vector<Mat> lk;
        lk.reserve(n);
        for (std::size_t j = 0; j < n; ++j) {
          Mat lj = kinv * lift(cb, basis[j]);
          g(j) -= lj.trace().real();
          lk.push_back(std::move(lj));
        }
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t q = j; q < n; ++q) {
            const double v = (lk[j].cwiseProduct(lk[q].transpose())).sum().real();
            h(j, q) += v;
            if (q != j) h(q, j) += v;
          }
      }
      Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
      Eigen::VectorXd dy = -ldlt.solve(g);
      const double dec = -g.dot(dy);
      if (!(dec == dec)) {
        ok = false;
        break;
      }
      if (dec / 2.0 < 1e-12) break;
      bool feas = false;
      const double phi0 = barrier(y, t, feas);
      double step = 1.0;
      while (step > 1e-14) {
        bool f2 = false;
        const double phi1 = barrier(y + step * dy, t, f2);
        if (f2 && phi1 <= phi0 - 0.25 * step * dec) break;
        step *= 0.5;
      }
      if (step <= 1e-14) break;
      y += step * dy;
    }
    if (m_total / t < 1e-12 * std::max(1.0, build(y).trace().real())) break;
    t *= 10.0;
    if (t > 1e20) break;
  }
  Mat ym = hermitize(build(y));
  for (std::size_t k = 0; k < cb.blocks.size(); ++k)
    if (!cholesky_ok(slack(ym, k) + 1e-12 * Mat::Identity(cb.blocks[k].rows(), cb.blocks[k].rows()))) ok = false;
  return {ym, ok, iters};
}

}  // namespace

ConditionalEntropyResult conditional_renyi(const DensityState& s, const std::vector<std::string>& a,
                                           const std::vector<std::string>& b, double alpha) {
  if (alpha < 0.5) throw std::invalid_argument("conditional entropy needs alpha >= 1/2");
  const RegisterLayout& l = s.layout();
  ConditionalEntropyResult res;
  RegisterLayout lb = b.empty() ? reg("_", 1) : l.select(b);
  if (alpha == 1.0) {
    Mat rab = partial_trace(s, join(a, b)).matrix();
    Mat rb = partial_trace_raw(rab, {l.dim_of(a), l.dim_of(b)}, {1});
    res.value = von_neumann(rab) - von_neumann(rb);
    res.optimizer_sigma = DensityState::trusted(rb, lb);
    res.method = Method::closed_form;
    return res;
  }
  CondBlocks cb = condition_blocks(s, a, b);
  Mat sigma;
  if (std::isinf(alpha)) {
    SdpResult sd = solve_dmax_sdp(cb);
    const double tr = sd.y.trace().real();
    res.value = -std::log2(tr);
    sigma = sd.y / tr;
    res.converged = sd.converged;
    res.iterations = sd.iterations;
    res.method = Method::variational;
  } else {
    Mat start = Mat::Zero(cb.r, cb.r);
    for (const auto& m : cb.blocks) start += trace_a(cb, m);
    start = hermitize(start / start.trace().real());
    FixedPointResult fp = solve_fixed_point(cb, start, alpha);
    if (relative_residual(cb, fp.sigma, alpha) > 1e-6) {
      FixedPointResult pq = polish(cb, fp.sigma, alpha);
      pq.iterations += fp.iterations;
      if (pq.value >= fp.value) fp = pq;
      // Near-singular states put a noise floor of about 1e-10 on the objective, below which
      // difference gradients are meaningless. A loose relative residual is accepted there.
      fp.converged = fp.converged || relative_residual(cb, fp.sigma, alpha) < 1e-3;
    }
    res.value = fp.value;
    sigma = fp.sigma;
    res.converged = fp.converged;
    res.iterations = fp.iterations;
    res.method = Method::variational;
  }
  if (!res.converged) throw NonConvergenceError("conditional entropy optimizer did not converge", res.value);
  Mat full = hermitize(cb.support * sigma * cb.support.adjoint());
  res.optimizer_sigma = DensityState::trusted(full / full.trace().real(), lb);
  return res;
}

double conditional_renyi_classical(const DensityState& s, const std::string& x,
                                   const std::vector<std::string>& a,
                                   const std::vector<std::string>& b, double alpha) {
  const RegisterLayout& l = s.layout();
  if (!l.subsystems()[l.index_of(x)].classical) throw StateError("label register must be classical");
  std::vector<std::string> order = {x};
  order.insert(order.end(), a.begin(), a.end());
  order.insert(order.end(), b.begin(), b.end());
  DensityState xab = partial_trace(s, order);
  const std::size_t dx = l.dim_of({x});
  const std::size_t d = xab.dim() / dx;
  RegisterLayout rest = l.select(join(a, b));
  std::vector<double> p;
  std::vector<double> h;
  for (std::size_t k = 0; k < dx; ++k) {
    Mat blk = xab.matrix().block(k * d, k * d, d, d);
    const double pk = blk.trace().real();
    if (pk <= 1e-15) continue;
    p.push_back(pk);
    h.push_back(conditional_renyi(DensityState::trusted(blk / pk, rest), a, b, alpha).value);
  }
  if (alpha == 1.0) {
    double v = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) v += p[k] * h[k];
    return v;
  }
  if (std::isinf(alpha)) {
    double v = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) v += p[k] * std::exp2(-h[k]);
    return -std::log2(v);
  }
  const double e = (1.0 - alpha) / alpha;
  double v = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) v += p[k] * std::exp2(e * h[k]);
  return std::log2(v) / e;
}

// ---- brute oracle ----------------------------------------------------------------

namespace {

double nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd& x0,
                   double scale, int max_evals) {
  const Eigen::Index n = x0.size();
  std::vector<Eigen::VectorXd> pts(n + 1, x0);
  std::vector<double> val(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) pts[i + 1](i) += scale;
  int evals = 0;
  for (Eigen::Index i = 0; i <= n; ++i) {
    val[i] = f(pts[i]);
    ++evals;
  }
  std::vector<Eigen::Index> idx(n + 1);
  while (evals < max_evals) {
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return val[a] < val[b]; });
    const Eigen::Index best = idx[0], worst = idx[n], second = idx[n - 1];
    if (std::abs(val[worst] - val[best]) < 1e-15 * (1.0 + std::abs(val[best]))) break;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) c += pts[idx[i]];
    c /= static_cast<double>(n);
    Eigen::VectorXd xr = c + (c - pts[worst]);
    const double fr = f(xr);
    ++evals;
    if (fr < val[best]) {
      Eigen::VectorXd xe = c + 2.0 * (c - pts[worst]);
      const double fe = f(xe);
      ++evals;
      if (fe < fr) {
        pts[worst] = xe;
        val[worst] = fe;
      } else {
        pts[worst] = xr;
        val[worst] = fr;
      }
    } else if (fr < val[second]) {
      pts[worst] = xr;
      val[worst] = fr;
    } else {
      Eigen::VectorXd xc = fr < val[worst] ? Eigen::VectorXd(c + 0.5 * (xr - c)) : Eigen::VectorXd(c + 0.5 * (pts[worst] - c));
      const double fc = f(xc);
      ++evals;
      if (fc < std::min(fr, val[worst])) {
        pts[worst] = xc;
        val[worst] = fc;
      } else {
        for (Eigen::Index i = 1; i <= n; ++i) {
          pts[idx[i]] = pts[best] + 0.5 * (pts[idx[i]] - pts[best]);
          val[idx[i]] = f(pts[idx[i]]);
          ++evals;
        }
      }
    }
  }
  const auto it = std::min_element(val.begin(), val.end());
  x0 = pts[static_cast<std::size_t>(it - val.begin())];
  return *it;
}

}  // namespace

double brute_conditional_renyi(const DensityState& s, const std::vector<std::string>& a,
                               const std::vector<std::string>& b, double alpha,
                               const BruteOptions& opts) {
  const RegisterLayout& l = s.layout();
  const std::size_t da = l.dim_of(a);
  const std::size_t db = l.dim_of(b);
  Mat rab = partial_trace(s, join(a, b)).matrix();
  Mat ia = Mat::Identity(da, da);
  auto neg_div = [&](const Mat& sigma) {
    DivergenceResult d = sandwiched_divergence(rab, kron(ia, sigma), alpha);
    return -d.value;
  };
  if (db == 1) return neg_div(Mat::Identity(1, 1));
  if (db == 2) {
    auto sigma_of = [](double x, double y, double z) {
      Mat m(2, 2);
      m(0, 0) = 0.5 * (1.0 + z);
      m(1, 1) = 0.5 * (1.0 - z);
      m(0, 1) = 0.5 * cplx(x, -y);
      m(1, 0) = 0.5 * cplx(x, y);
      return m;
    };
    double best = -kInf;
    double bx = 0, by = 0, bz = 0;
    const double h0 = opts.grid_step;
    const int steps = static_cast<int>(std::lround(2.0 / h0));
    for (int i = 0; i <= steps; ++i)
      for (int j = 0; j <= steps; ++j)
        for (int k = 0; k <= steps; ++k) {
          const double x = -1.0 + i * h0, y = -1.0 + j * h0, z = -1.0 + k * h0;
          if (x * x + y * y + z * z > 1.0) continue;
          const double v = neg_div(sigma_of(x, y, z));
          if (v > best) {
            best = v;
            bx = x;
            by = y;
            bz = z;
          }
        }
    double h = h0;
    while (h > 1e-8) {
      const double step = h / 2.0;
      const double cx = bx, cy = by, cz = bz;
      for (int i = -6; i <= 6; ++i)
        for (int j = -6; j <= 6; ++j)
          for (int k = -6; k <= 6; ++k) {
            const double x = cx + i * step, y = cy + j * step, z = cz + k * step;
            if (x * x + y * y + z * z > 1.0) continue;
            const double v = neg_div(sigma_of(x, y, z));
            if (v > best) {
              best = v;
              bx = x;
              by = y;
              bz = z;
            }
          }
      h = step;
    }
    return best;
  }
  // Nelder-Mead over sigma = W W^dag / Tr, W complex db x db.
  const Eigen::Index np = static_cast<Eigen::Index>(2 * db * db);
  auto sigma_of = [&](const Eigen::VectorXd& v) {
    Mat w(db, db);
    for (std::size_t i = 0; i < db * db; ++i) w(i / db, i % db) = cplx(v(2 * i), v(2 * i + 1));
    Mat sg = w * w.adjoint();
    const double tr = sg.trace().real();
    return Mat(sg / (tr > 0.0 ? tr : 1.0));
  };
  auto f = [&](const Eigen::VectorXd& v) {
    const double d = -neg_div(sigma_of(v));
    return std::isfinite(d) ? d : 1e300;
  };
  Rng rng(opts.seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  double best = kInf;
  Eigen::VectorXd arg;
  for (int rep = 0; rep < opts.restarts; ++rep) {
    Eigen::VectorXd x0(np);
    for (Eigen::Index i = 0; i < np; ++i) x0(i) = nd(rng);
    double v = nelder_mead(f, x0, 0.5, 4000);
    if (v < best) {
      best = v;
      arg = x0;
    }
  }
  // Restarting from the incumbent with shrinking simplices polishes the minimum.
  for (double scale = 0.2; scale > 1e-6; scale *= 0.3) best = std::min(best, nelder_mead(f, arg, scale, 20000));
  return -best;
}

// ---- smoothing -------------------------------------------------------------------

double WeightedSpectrum::total_mass() const {
  double m = 0.0;
  for (const auto& [v, k] : items) m += v * k;
  return m;
}

WeightedSpectrum weighted(const std::vector<double>& p) {
  WeightedSpectrum w;
  for (double x : p)
    if (x > 0.0) w.items.push_back({x, 1.0});
  return w;
}

WeightedSpectrum weighted_tensor_power(const std::vector<double>& p, int t) {
  std::vector<double> q;
  for (double x : p)
    if (x > 0.0) q.push_back(x);
  WeightedSpectrum w;
  std::vector<int> k(q.size(), 0);
  std::vector<double> lf(t + 1, 0.0);
  for (int i = 1; i <= t; ++i) lf[i] = lf[i - 1] + std::log(static_cast<double>(i));
  std::function<void(std::size_t, int)> rec = [&](std::size_t pos, int left) {
    if (pos + 1 == q.size()) {
      k[pos] = left;
      double logv = 0.0, logm = lf[t];
      for (std::size_t i = 0; i < q.size(); ++i) {
        logv += k[i] * std::log(q[i]);
        logm -= lf[k[i]];
      }
      w.items.push_back({std::exp(logv), std::round(std::exp(logm))});
      return;
    }
    for (int c = 0; c <= left; ++c) {
      k[pos] = c;
      rec(pos + 1, left - c);
    }
  };
  if (!q.empty()) rec(0, t);
  return w;
}

double smooth_s0(const WeightedSpectrum& w, double eps) {
  auto items = w.items;
  std::sort(items.begin(), items.end());
  double total = 0.0;
  for (const auto& [v, m] : items)
    if (v > 0.0) total += m;
  double removed_mass = 0.0, removed = 0.0;
  for (const auto& [v, m] : items) {
    if (v <= 0.0) continue;
    if (removed_mass + v * m <= eps + 1e-15) {
      removed_mass += v * m;
      removed += m;
      continue;
    }
    removed += std::floor((eps - removed_mass) / v + 1e-12);
    break;
  }
  return std::log2(std::max(1.0, total - removed));
}

double smooth_sinf(const WeightedSpectrum& w, double eps) {
  auto items = w.items;
  std::sort(items.begin(), items.end(), std::greater<>());
  double count = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    count += items[i].second;
    sum += items[i].first * items[i].second;
    const double next = i + 1 < items.size() ? items[i + 1].first : 0.0;
    const double c = (sum - eps) / count;
    if (c >= next) return -std::log2(std::max(c, 0.0));
  }
  return kInf;
}

double smooth_s0(const DensityState& s, double eps) { return smooth_s0(weighted(spectrum(s.matrix())), eps); }
double smooth_sinf(const DensityState& s, double eps) { return smooth_sinf(weighted(spectrum(s.matrix())), eps); }

double smooth_s0_exhaustive(const std::vector<double>& p, double eps) {
  std::vector<double> q;
  for (double x : p)
    if (x > 0.0) q.push_back(x);
  if (q.size() > 16) throw std::invalid_argument("exhaustive smoothing needs at most 16 entries");
  std::size_t best = q.size();
  for (std::uint32_t mask = 0; mask < (1u << q.size()); ++mask) {
    double mass = 0.0;
    std::size_t kept = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (mask >> i & 1u)
        mass += q[i];
      else
        ++kept;
    }
    if (mass <= eps + 1e-15 && kept >= 1) best = std::min(best, kept);
  }
  return std::log2(static_cast<double>(best));
}

double smooth_sinf_exhaustive(const std::vector<double>& p, double eps) {
  if (p.size() > 16) throw std::invalid_argument("exhaustive smoothing needs at most 16 entries");
  double best = kInf;
  for (std::uint32_t mask = 1; mask < (1u << p.size()); ++mask) {
    double sum = 0.0, others = 0.0;
    int cnt = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (mask >> i & 1u) {
        sum += p[i];
        ++cnt;
      } else {
        others = std::max(others, p[i]);
      }
    }
    // Every capped entry must sit at or above the cap.
    const double cap = std::max({(sum - eps) / cnt, others, 0.0});
    bool valid = true;
    for (std::size_t i = 0; i < p.size(); ++i)
      if ((mask >> i & 1u) && p[i] < cap - 1e-15) valid = false;
    if (valid) best = std::min(best, cap);
  }
  return -std::log2(best);
}

// ---- random channels -----------------------------------------------------------

Mat RandomChannel::apply(const Mat& rho) const {
  Mat big = v * rho * v.adjoint();
  return partial_trace_raw(big, {dout, denv}, {0});
}

RandomChannel random_channel(Rng& rng, std::size_t din, std::size_t dout, std::size_t denv) {
  if (dout * denv < din) throw std::invalid_argument("channel needs dout * denv >= din");
  RandomChannel c;
  c.v = haar_isometry(rng, dout * denv, din);
  c.din = din;
  c.dout = dout;
  c.denv = denv;
  return c;
}

}  // namespace qlab
