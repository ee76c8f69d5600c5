#include "nls/bound_state.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/IterativeSolvers>

#include <json.hpp>

#include "nls/check.hpp"
#include "nls/fft.hpp"

namespace nls {
namespace bsdetail {
class BorderedOp;
}  // namespace bsdetail
}  // namespace nls

namespace Eigen {
namespace internal {
template <>
struct traits<nls::bsdetail::BorderedOp>
    : public Eigen::internal::traits<Eigen::SparseMatrix<double>> {};
}  // namespace internal
}  // namespace Eigen

namespace nls {
namespace bsdetail {

using Eigen::ArrayXXcd;
using Eigen::ArrayXXd;
using Eigen::VectorXd;
using std::complex;

constexpr complex<double> kI{0.0, 1.0};

// Bordered Jacobian of the stationary system at a real profile: the field
// block is -Lap + veff, the border column couples the energy unknown to
// -psi, and the border row is the amplitude constraint <psi0, .>.
class BorderedOp : public Eigen::EigenBase<BorderedOp> {
 public:
  using Scalar = double;
  using RealScalar = double;
  using StorageIndex = int;
  enum {
    ColsAtCompileTime = Eigen::Dynamic,
    MaxColsAtCompileTime = Eigen::Dynamic,
    IsRowMajor = false
  };

  Eigen::Index rows() const { return n2_ + 1; }
  Eigen::Index cols() const { return n2_ + 1; }

  void configure(const GridPtr& g, const ArrayXXd* veff, const ArrayXXd* psi,
                 const ArrayXXd* psi0) {
    g_ = g;
    veff_ = veff;
    psi_ = psi;
    psi0_ = psi0;
    n2_ = g->n * g->n;
    buf_.resize(g->n, g->n);
  }

  template <typename Rhs>
  Eigen::Product<BorderedOp, Rhs, Eigen::AliasFreeProduct> operator*(
      const Eigen::MatrixBase<Rhs>& x) const {
    return Eigen::Product<BorderedOp, Rhs, Eigen::AliasFreeProduct>(*this, x.derived());
  }

  void apply_to(const VectorXd& x, VectorXd& y) const {
    const int n = g_->n;
    y.resize(n2_ + 1);
    Eigen::Map<const ArrayXXd> xf(x.data(), n, n);
    buf_ = xf.cast<complex<double>>();
    fft2(buf_);
    buf_ *= g_->k2;
    ifft2(buf_);
    Eigen::Map<ArrayXXd> yf(y.data(), n, n);
    yf = buf_.real() + (*veff_) * xf - x[n2_] * (*psi_);
    y[n2_] = g_->dx * g_->dx * ((*psi0_) * xf).sum();
  }

 private:
  GridPtr g_;
  const ArrayXXd* veff_ = nullptr;
  const ArrayXXd* psi_ = nullptr;
  const ArrayXXd* psi0_ = nullptr;
  int n2_ = 0;
  mutable ArrayXXcd buf_;
};

// (-Lap + shift)^-1 on the field block, identity on the border row.
class ShiftInverse {
 public:
  using StorageIndex = int;

  ShiftInverse() = default;
  template <typename Mat>
  explicit ShiftInverse(const Mat&) {}

  void configure(const GridPtr& g, double shift) {
    g_ = g;
    shift_ = std::max(shift, 1e-6);
    buf_.resize(g->n, g->n);
  }

  template <typename Mat>
  ShiftInverse& analyzePattern(const Mat&) {
    return *this;
  }
  template <typename Mat>
  ShiftInverse& factorize(const Mat&) {
    return *this;
  }
  template <typename Mat>
  ShiftInverse& compute(const Mat&) {
    return *this;
  }

  template <typename Rhs>
  VectorXd solve(const Rhs& b) const {
    VectorXd x = b;
    if (!g_) return x;
    const int n = g_->n;
    Eigen::Map<ArrayXXd> xf(x.data(), n, n);
    buf_ = xf.cast<complex<double>>();
    fft2(buf_);
    buf_ /= (g_->k2 + shift_);
    ifft2(buf_);
    xf = buf_.real();
    return x;
  }

  Eigen::ComputationInfo info() { return Eigen::Success; }

 private:
  GridPtr g_;
  double shift_ = 1.0;
  mutable ArrayXXcd buf_;
};

}  // namespace bsdetail
}  // namespace nls

namespace Eigen {
namespace internal {

template <typename Rhs>
struct generic_product_impl<nls::bsdetail::BorderedOp, Rhs, SparseShape, DenseShape,
                            GemvProduct>
    : generic_product_impl_base<
          nls::bsdetail::BorderedOp, Rhs,
          generic_product_impl<nls::bsdetail::BorderedOp, Rhs>> {
  using Scalar = typename Product<nls::bsdetail::BorderedOp, Rhs>::Scalar;

  template <typename Dest>
  static void scaleAndAddTo(Dest& dst, const nls::bsdetail::BorderedOp& lhs,
                            const Rhs& rhs, const Scalar& alpha) {
    Eigen::VectorXd x = rhs;
    Eigen::VectorXd y;
    lhs.apply_to(x, y);
    dst += alpha * y;
  }
};

}  // namespace internal
}  // namespace Eigen

namespace nls {

namespace {

using Eigen::ArrayXXcd;
using Eigen::ArrayXXd;
using Eigen::VectorXd;
using std::complex;

constexpr complex<double> kI{0.0, 1.0};

// (-Lap + V) p for a real profile.
ArrayXXd apply_linear_real(const Hamiltonian& h, const ArrayXXd& p, ArrayXXcd& buf) {
  buf = p.cast<complex<double>>();
  fft2(buf);
  buf *= h.grid->k2;
  ifft2(buf);
  return buf.real() + h.pot.v * p;
}

// g on a real profile through the odd extension g(s) = (g(|s|)/|s|) s.
ArrayXXd g_real(const NonlinearitySpec& nl, const ArrayXXd& p) {
  return eval_phase_rate(nl, p.abs()) * p;
}

struct DefectParts {
  ArrayXXd field;
  double scalar = 0.0;
  double norm = 0.0;
};

DefectParts stationary_defect(const Hamiltonian& h, const NonlinearitySpec& nl,
                              const ArrayXXd& psi0r, const ArrayXXd& p, double e,
                              double a_real, ArrayXXcd& buf) {
  const double cell = h.grid->dx * h.grid->dx;
  DefectParts d;
  d.field = apply_linear_real(h, p, buf) + g_real(nl, p) - e * p;
  d.scalar = cell * (psi0r * p).sum() - a_real;
  d.norm = std::sqrt(cell * d.field.square().sum() + d.scalar * d.scalar);
  return d;
}

}  // namespace

BoundState solve_bound_state(const Hamiltonian& h, const NonlinearitySpec& nl,
                             double a_real, const BoundState* warm,
                             const FamilyOptions& opt) {
  require(h.has_bound_state, "solve_bound_state: operator carries no bound state");
  require(std::isfinite(a_real) && a_real > 0.0,
          "solve_bound_state: amplitude must be positive");
  require(a_real <= opt.a_max * (1.0 + 1e-9),
          "solve_bound_state: amplitude beyond configured range");

  const GridPtr& g = h.grid;
  const int n = g->n;
  const int n2 = n * n;
  const double cell = g->dx * g->dx;
  const ArrayXXd psi0r = h.psi0.v.real();
  ArrayXXcd buf(n, n);

  ArrayXXd psi;
  double e;
  if (warm && warm->psi.grid == g && std::abs(warm->a) > 0.0) {
    psi = warm->psi.v.real() * (a_real / std::abs(warm->a));
    e = warm->e;
  } else {
    psi = a_real * psi0r;
    e = h.e0 + cell * (psi0r * g_real(nl, psi)).sum() / a_real;
  }

  DefectParts d = stationary_defect(h, nl, psi0r, psi, e, a_real, buf);
  int it = 0;
  for (; it < opt.max_newton && d.norm > opt.newton_tol; ++it) {
    const ArrayXXd veff = h.pot.v + eval_profile_prime(nl, psi.abs()) - e;

    bsdetail::BorderedOp op;
    op.configure(g, &veff, &psi, &psi0r);
    Eigen::GMRES<bsdetail::BorderedOp, bsdetail::ShiftInverse> solver;
    solver.preconditioner().configure(g, 1.0 + std::abs(e));
    solver.set_restart(opt.gmres_restart);
    solver.setMaxIterations(opt.max_gmres);
    solver.setTolerance(1e-10);
    solver.compute(op);

    VectorXd rhs(n2 + 1);
    rhs.head(n2) = -Eigen::Map<const VectorXd>(d.field.data(), n2);
    rhs[n2] = -d.scalar;
    VectorXd delta = solver.solve(rhs);
    ensure(solver.info() == Eigen::Success || solver.error() < 1e-6,
           "solve_bound_state: linear solve failed");

    Eigen::Map<const ArrayXXd> dpsi(delta.data(), n, n);
    const double de = delta[n2];
    bool improved = false;
    double lam = 1.0;
    for (int ls = 0; ls < 8; ++ls, lam *= 0.5) {
      ArrayXXd cand = psi + lam * dpsi;
      const double ecand = e + lam * de;
      DefectParts dc = stationary_defect(h, nl, psi0r, cand, ecand, a_real, buf);
      if (dc.norm < d.norm) {
        psi.swap(cand);
        e = ecand;
        d = std::move(dc);
        improved = true;
        break;
      }
    }
    char msg[96];
    if (!improved) {
      std::snprintf(msg, sizeof msg,
                    "solve_bound_state: Newton stagnated, residual %.3e", d.norm);
      ensure(false, msg);
    }
  }
  {
    char msg[96];
    std::snprintf(msg, sizeof msg,
                  "solve_bound_state: no convergence in %d steps, residual %.3e", it,
                  d.norm);
    ensure(d.norm <= opt.newton_tol, msg);
  }

  BoundState bs;
  bs.a = a_real;
  bs.e = e;
  bs.psi = ComplexField(g);
  bs.psi.v = psi.cast<complex<double>>();
  bs.correction = ComplexField(g);
  bs.correction.v = bs.psi.v - a_real * h.psi0.v;
  bs.residual = std::sqrt(cell * d.field.square().sum());
  const double hnorm = norm_lp(bs.correction, 2.0);
  ensure(hnorm <= a_real, "solve_bound_state: correction exceeds the linear part");
  return bs;
}

BoundStateFamily BoundStateFamily::build(const Hamiltonian& h, const NonlinearitySpec& nl,
                                         const FamilyOptions& opt) {
  require(h.has_bound_state, "family build: operator carries no bound state");
  require(opt.a_min > 0.0 && opt.a_max > opt.a_min, "family build: bad amplitude range");
  require(opt.ratio > 1.02 && opt.ratio <= 2.0, "family build: bad node ratio");
  require(opt.pairing_floor > 0.0 && opt.pairing_floor <= 1.0,
          "family build: bad pairing floor");

  BoundStateFamily fam;
  fam.ham_ = h;
  fam.nl_ = nl;
  fam.opt_ = opt;

  std::vector<double> nodes;
  for (double a = opt.a_min; a < opt.a_max * (1.0 - 1e-12); a *= opt.ratio)
    nodes.push_back(a);
  nodes.push_back(opt.a_max);
  require(nodes.size() >= 3, "family build: fewer than three nodes in range");

  BoundState prev;
  for (double a : nodes) {
    BoundState bs = solve_bound_state(h, nl, a, prev.psi.grid ? &prev : nullptr, opt);
    fam.a_.push_back(a);
    fam.e_.push_back(bs.e);
    fam.resid_.push_back(bs.residual);
    fam.psi_.push_back(bs.psi);
    prev = std::move(bs);
  }

  ensure(std::abs(fam.e_.front() - h.e0) <= 1e-4,
         "family build: branch does not limit to the linear eigenvalue");
  fam.finalize();

  // Walk the branch once so pairing floors and defects are certified.
  for (double a : fam.a_) {
    BoundState bs = fam.at(a);
    ensure(bs.residual <= 1e-9, "family build: node defect above tolerance");
    ensure(std::abs(inner(h.psi0, bs.correction)) <= 1e-10 * std::max(1.0, a),
           "family build: correction not orthogonal to the ground state");
  }
  return fam;
}

void BoundStateFamily::finalize() {
  const int m = static_cast<int>(a_.size());
  require(m >= 3, "family: need at least three nodes");
  dpsi_.resize(m);
  de_.assign(m, 0.0);

  auto profile = [&](int k) -> ArrayXXd { return psi_[k].v.real(); };

  for (int k = 0; k < m; ++k) {
    double w0, w1, w2;
    int i0, i1, i2;
    if (k == 0) {
      const double h1 = a_[1] - a_[0], h2 = a_[2] - a_[1];
      w0 = -(2.0 * h1 + h2) / (h1 * (h1 + h2));
      w1 = (h1 + h2) / (h1 * h2);
      w2 = -h1 / (h2 * (h1 + h2));
      i0 = 0, i1 = 1, i2 = 2;
    } else if (k == m - 1) {
      const double hb = a_[m - 1] - a_[m - 2], ha = a_[m - 2] - a_[m - 3];
      w0 = (2.0 * hb + ha) / (hb * (hb + ha));
      w1 = -(hb + ha) / (hb * ha);
      w2 = hb / (ha * (ha + hb));
      i0 = m - 1, i1 = m - 2, i2 = m - 3;
    } else {
      const double hm = a_[k] - a_[k - 1], hp = a_[k + 1] - a_[k];
      w0 = (hp - hm) / (hm * hp);
      w1 = -hp / (hm * (hm + hp));
      w2 = hm / (hp * (hm + hp));
      i0 = k, i1 = k - 1, i2 = k + 1;
    }
    dpsi_[k] = w0 * profile(i0) + w1 * profile(i1) + w2 * profile(i2);
    de_[k] = w0 * e_[i0] + w1 * e_[i1] + w2 * e_[i2];
  }
}

void BoundStateFamily::eval_radial(double r, ArrayXXd& psi, ArrayXXd& dpsi,
                                   double& e) const {
  const ArrayXXd psi0r = ham_.psi0.v.real();
  if (r < a_.front()) {
    // Small-amplitude extension with the branch's leading power laws.
    const double a0 = a_.front();
    const ArrayXXd h0 = psi_.front().v.real() - a0 * psi0r;
    const double p = 2.0 + nl_.alpha1;
    const double q = 1.0 + nl_.alpha1;
    psi = r * psi0r + std::pow(r / a0, p) * h0;
    dpsi = psi0r + (p / a0) * std::pow(r / a0, q) * h0;
    e = ham_.e0 + (e_.front() - ham_.e0) * std::pow(r / a0, q);
    return;
  }
  const int m = static_cast<int>(a_.size());
  int k = static_cast<int>(std::upper_bound(a_.begin(), a_.end(), r) - a_.begin()) - 1;
  k = std::clamp(k, 0, m - 2);
  const double h = a_[k + 1] - a_[k];
  const double t = (r - a_[k]) / h;
  const double h00 = 1.0 + t * t * (2.0 * t - 3.0);
  const double h10 = t * (1.0 - t) * (1.0 - t);
  const double h01 = t * t * (3.0 - 2.0 * t);
  const double h11 = t * t * (t - 1.0);
  const double d00 = 6.0 * t * (t - 1.0) / h;
  const double d10 = 1.0 + t * (3.0 * t - 4.0);
  const double d01 = -d00;
  const double d11 = t * (3.0 * t - 2.0);

  const ArrayXXd p0 = psi_[k].v.real();
  const ArrayXXd p1 = psi_[k + 1].v.real();
  psi = h00 * p0 + (h10 * h) * dpsi_[k] + h01 * p1 + (h11 * h) * dpsi_[k + 1];
  dpsi = d00 * p0 + d10 * dpsi_[k] + d01 * p1 + d11 * dpsi_[k + 1];
  e = h00 * e_[k] + h10 * h * de_[k] + h01 * e_[k + 1] + h11 * h * de_[k + 1];
}

double BoundStateFamily::energy(double amod) const {
  require(std::isfinite(amod) && amod >= 0.0, "family energy: bad amplitude");
  require(amod <= opt_.a_max * (1.0 + 1e-9), "family energy: amplitude outside range");
  if (amod == 0.0) return ham_.e0;
  ArrayXXd p, dp;
  double e;
  eval_radial(amod, p, dp, e);
  return e;
}

ComplexField BoundStateFamily::state(std::complex<double> a) const {
  const double r = std::abs(a);
  require(r <= opt_.a_max * (1.0 + 1e-9), "family state: amplitude outside range");
  ComplexField out(ham_.grid);
  if (r == 0.0) return out;
  ArrayXXd p, dp;
  double e;
  eval_radial(r, p, dp, e);
  const std::complex<double> phase = a / r;
  out.v = phase * p.cast<complex<double>>();
  return out;
}

BoundState BoundStateFamily::at(std::complex<double> a) const {
  const double r = std::abs(a);
  require(r <= opt_.a_max * (1.0 + 1e-9), "family at: amplitude outside range");

  BoundState bs;
  bs.a = a;
  const GridPtr& g = ham_.grid;
  bs.psi = ComplexField(g);
  bs.correction = ComplexField(g);
  bs.tangent1 = ComplexField(g);
  bs.tangent2 = ComplexField(g);
  bs.dual1 = ComplexField(g);
  bs.dual2 = ComplexField(g);

  if (r == 0.0) {
    bs.e = ham_.e0;
    bs.tangent1.v = ham_.psi0.v;
    bs.tangent2.v = kI * ham_.psi0.v;
    bs.dual1.v = ham_.psi0.v;
    bs.dual2.v = kI * ham_.psi0.v;
    bs.pairing = 1.0;
    bs.residual = 0.0;
    return bs;
  }

  ArrayXXd p, dp;
  double e;
  eval_radial(r, p, dp, e);
  const std::complex<double> phase = a / r;
  const double ct = phase.real();
  const double st = phase.imag();

  const ArrayXXcd pc = p.cast<complex<double>>();
  const ArrayXXcd dc = dp.cast<complex<double>>();
  bs.e = e;
  bs.psi.v = phase * pc;
  bs.correction.v = bs.psi.v - a * ham_.psi0.v;
  bs.tangent1.v = phase * (ct * dc - kI * (st / r) * pc);
  bs.tangent2.v = phase * (st * dc + kI * (ct / r) * pc);

  bs.pairing = std::imag(inner(bs.tangent1, bs.tangent2));
  char msg[96];
  if (std::abs(bs.pairing) < opt_.pairing_floor) {
    std::snprintf(msg, sizeof msg, "family at: dual pairing %.3f below floor %.2f",
                  bs.pairing, opt_.pairing_floor);
    ensure(false, msg);
  }
  bs.dual1.v = (-kI / bs.pairing) * bs.tangent2.v;
  bs.dual2.v = (kI / bs.pairing) * bs.tangent1.v;

  ComplexField defect = apply_h(ham_, bs.psi);
  defect.v += eval_g(nl_, bs.psi).v;
  defect.v -= bs.e * bs.psi.v;
  bs.residual = norm_lp(defect, 2.0);
  return bs;
}

ComplexField BoundStateFamily::inverse_projection(const BoundState& bs,
                                                  const ComplexField& zeta) const {
  require(bs.dual1.grid == ham_.grid && bs.dual2.grid == ham_.grid,
          "inverse_projection: state lacks duals");
  require(zeta.grid == ham_.grid, "inverse_projection: field lives on a different grid");
  const double scale = std::max(norm_lp(zeta, 2.0), 1e-300);
  require(std::abs(inner(ham_.psi0, zeta)) <= 1e-8 * scale,
          "inverse_projection: input not orthogonal to the ground state");

  ComplexField ipsi0(ham_.grid);
  ipsi0.v = kI * ham_.psi0.v;

  const double a11 = inner_real(bs.dual1, ham_.psi0);
  const double a12 = inner_real(bs.dual1, ipsi0);
  const double a21 = inner_real(bs.dual2, ham_.psi0);
  const double a22 = inner_real(bs.dual2, ipsi0);
  const double q1 = inner_real(bs.dual1, zeta);
  const double q2 = inner_real(bs.dual2, zeta);

  const double det = a11 * a22 - a12 * a21;
  ensure(std::abs(det) > 1e-10, "inverse_projection: correction system is singular");
  const double b1 = (-q1 * a22 + q2 * a12) / det;
  const double b2 = (-a11 * q2 + a21 * q1) / det;

  ComplexField eta = zeta;
  eta.v += complex<double>(b1, b2) * ham_.psi0.v;
  return eta;
}

void BoundStateFamily::save(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  nlohmann::json m;
  m["format"] = 1;
  m["grid"] = {{"n", ham_.grid->n}, {"L", ham_.grid->L}};
  m["potential"] = {{"kind", ham_.pot.kind},
                    {"depth", ham_.pot.depth},
                    {"width", ham_.pot.width}};
  m["nonlinearity"] = nl_.name;
  m["alpha1"] = nl_.alpha1;
  m["alpha2"] = nl_.alpha2;
  m["e_limit"] = ham_.e0;
  m["a"] = a_;
  m["e"] = e_;
  m["residual"] = resid_;
  m["options"] = {{"a_min", opt_.a_min},
                  {"a_max", opt_.a_max},
                  {"ratio", opt_.ratio},
                  {"newton_tol", opt_.newton_tol},
                  {"pairing_floor", opt_.pairing_floor}};

  std::ofstream out(fs::path(dir) / "manifest.json");
  ensure(out.good(), "family save: cannot write manifest");
  out << m.dump(2) << "\n";
  out.close();
  ensure(out.good(), "family save: manifest write failed");

  char name[32];
  for (std::size_t k = 0; k < psi_.size(); ++k) {
    std::snprintf(name, sizeof name, "node_%03zu.snap", k);
    write_snapshot((fs::path(dir) / name).string(), psi_[k]);
  }
}

BoundStateFamily BoundStateFamily::load(const std::string& dir, const Hamiltonian& h,
                                        const NonlinearitySpec& nl) {
  namespace fs = std::filesystem;
  require(h.has_bound_state, "family load: operator carries no bound state");
  std::ifstream in(fs::path(dir) / "manifest.json");
  require(in.good(), "family load: missing manifest");
  nlohmann::json m;
  try {
    in >> m;
  } catch (const std::exception&) {
    require(false, "family load: unreadable manifest");
  }

  try {
    require(m.at("format").get<int>() == 1, "family load: unknown format");
    require(m.at("grid").at("n").get<int>() == h.grid->n &&
                m.at("grid").at("L").get<double>() == h.grid->L,
            "family load: grid mismatch");
    require(m.at("potential").at("kind").get<std::string>() == h.pot.kind &&
                m.at("potential").at("depth").get<double>() == h.pot.depth &&
                m.at("potential").at("width").get<double>() == h.pot.width,
            "family load: potential mismatch");
    require(m.at("nonlinearity").get<std::string>() == nl.name,
            "family load: nonlinearity mismatch");
    require(std::abs(m.at("e_limit").get<double>() - h.e0) <= 1e-9,
            "family load: linear eigenvalue mismatch");
  } catch (const nlohmann::json::exception&) {
    require(false, "family load: manifest missing fields");
  }

  BoundStateFamily fam;
  fam.ham_ = h;
  fam.nl_ = nl;
  fam.opt_.a_min = m["options"]["a_min"].get<double>();
  fam.opt_.a_max = m["options"]["a_max"].get<double>();
  fam.opt_.ratio = m["options"]["ratio"].get<double>();
  fam.opt_.newton_tol = m["options"]["newton_tol"].get<double>();
  fam.opt_.pairing_floor = m["options"]["pairing_floor"].get<double>();
  fam.a_ = m["a"].get<std::vector<double>>();
  fam.e_ = m["e"].get<std::vector<double>>();
  fam.resid_ = m["residual"].get<std::vector<double>>();
  require(fam.a_.size() >= 3 && fam.a_.size() == fam.e_.size() &&
              fam.a_.size() == fam.resid_.size(),
          "family load: inconsistent manifest arrays");

  ArrayXXcd buf(h.grid->n, h.grid->n);
  const ArrayXXd psi0r = h.psi0.v.real();
  char name[32];
  for (std::size_t k = 0; k < fam.a_.size(); ++k) {
    std::snprintf(name, sizeof name, "node_%03zu.snap", k);
    ComplexField f = read_snapshot((fs::path(dir) / name).string());
    require(f.grid->n == h.grid->n && f.grid->L == h.grid->L,
            "family load: node grid mismatch");
    f.grid = h.grid;
    DefectParts d = stationary_defect(h, nl, psi0r, f.v.real().eval(), fam.e_[k],
                                      fam.a_[k], buf);
    ensure(d.norm <= 2e-9,
           "family load: stored node fails the stationary equation");
    fam.psi_.push_back(std::move(f));
  }
  fam.finalize();
  return fam;
}

double verify_decay(const BoundState& bs, double sigma) {
  require(static_cast<bool>(bs.psi.grid), "verify_decay: empty state");
  require(std::isfinite(sigma), "verify_decay: bad exponent");
  const double base = norm_sobolev(bs.psi, 2);
  ensure(base > 0.0, "verify_decay: zero state");
  ComplexField weighted = bs.psi;
  weighted.v *= (1.0 + bs.psi.grid->r2).pow(0.5 * sigma);
  return norm_sobolev(weighted, 2) / base;
}

}  // namespace nls
