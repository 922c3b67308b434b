#include "rankone/rank_one.hpp"

#include "rankone/errors.hpp"
#include "rankone/logging.hpp"
#include "rankone/measure_json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

namespace rankone {

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double sgn(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

// 1 + alpha F evaluated at anchor + delta, atom denominators formed as
// (t - anchor) - delta so that roots hugging an atom keep relative accuracy.
class Secular {
 public:
  Secular(const Measure& mu, double alpha) : alpha_(alpha), pieces_(Measure({}, mu.pieces())) {
    for (const auto& a : mu.atoms()) {
      positions_.push_back(a.position);
      masses_.push_back(a.mass);
    }
  }

  double F(double anchor, double delta) const {
    double s = 0.0;
    for (std::size_t j = 0; j < positions_.size(); ++j) s += masses_[j] / ((positions_[j] - anchor) - delta);
    if (!pieces_.measure().pieces().empty()) s += pieces_(cplx(anchor + delta)).real();
    return s;
  }

  double dF(double anchor, double delta) const {
    double s = 0.0;
    for (std::size_t j = 0; j < positions_.size(); ++j) {
      const double d = (positions_[j] - anchor) - delta;
      s += masses_[j] / (d * d);
    }
    if (!pieces_.measure().pieces().empty()) s += pieces_.derivative(anchor + delta);
    return s;
  }

  double g(double anchor, double delta) const { return 1.0 + alpha_ * F(anchor, delta); }
  double alpha() const { return alpha_; }

 private:
  double alpha_;
  std::vector<double> positions_;
  std::vector<double> masses_;
  HerglotzFunction pieces_;
};

struct Obstacle {
  double lo = 0.0;
  double hi = 0.0;
  bool atom = false;
};

// Merged a.c. blocks and the atoms that sit outside every block, in order.
std::vector<Obstacle> obstacles(const Measure& mu) {
  std::vector<Obstacle> blocks;
  std::vector<Interval> ivs;
  for (const auto& p : mu.pieces()) ivs.push_back(p.interval);
  std::sort(ivs.begin(), ivs.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (const auto& iv : ivs) {
    if (!blocks.empty() && iv.lo <= blocks.back().hi) blocks.back().hi = std::max(blocks.back().hi, iv.hi);
    else blocks.push_back({iv.lo, iv.hi, false});
  }
  std::vector<Obstacle> out = blocks;
  for (const auto& a : mu.atoms()) {
    const bool inside = std::any_of(blocks.begin(), blocks.end(),
                                    [&](const Obstacle& b) { return b.lo <= a.position && a.position <= b.hi; });
    if (!inside) out.push_back({a.position, a.position, true});
  }
  std::sort(out.begin(), out.end(), [](const Obstacle& a, const Obstacle& b) { return a.lo < b.lo; });
  return out;
}

enum class EndKind { Atom, Edge, Infinite };

struct GapEnd {
  EndKind kind = EndKind::Infinite;
  double pos = 0.0;
  double sign = 1.0;     // sign of g just inside the gap
  double offset = 0.0;   // |delta| of the innermost probe for edges, 0 for atoms
  double g_probe = 0.0;  // g at that probe
};

// dir = +1 probes to the right of pos, -1 to the left.
GapEnd probe_end(const Secular& sec, EndKind kind, double pos, double dir, double gap_length) {
  GapEnd e{kind, pos, 1.0, 0.0, 0.0};
  if (kind == EndKind::Infinite) return e;
  if (kind == EndKind::Atom) {
    // F -> -inf just right of an atom, +inf just left.
    e.sign = -dir * sgn(sec.alpha());
    return e;
  }
  double chosen = 0.0;
  for (int k = 2; k <= 14; ++k) {
    const double d = std::pow(10.0, -k);
    if (!(d < 0.5 * gap_length)) continue;
    if (pos + dir * d == pos) break;
    chosen = d;
  }
  if (chosen == 0.0) chosen = 0.25 * gap_length;
  e.offset = chosen;
  e.g_probe = sec.g(pos, dir * chosen);
  e.sign = e.g_probe >= 0.0 ? 1.0 : -1.0;
  return e;
}

double solve_in_bracket(const Secular& sec, double anchor, double da, double db, double sign_a) {
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (da + db);
    if (mid == da || mid == db) break;
    const double gm = sec.g(anchor, mid);
    if (gm == 0.0) return mid;
    if ((gm > 0.0) == (sign_a > 0.0)) da = mid;
    else db = mid;
    if (db - da <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(da), std::abs(db))) break;
  }
  double d = 0.5 * (da + db);
  for (int k = 0; k < 50; ++k) {
    const double gp = sec.alpha() * sec.dF(anchor, d);
    if (gp == 0.0 || !std::isfinite(gp)) break;
    const double step = sec.g(anchor, d) / gp;
    const double next = d - step;
    if (!(next >= da && next <= db)) break;
    d = next;
    if (std::abs(step) <= 1e-13 * std::abs(d)) break;
  }
  return d;
}

std::optional<std::pair<double, double>> solve_gap(const Secular& sec, const GapEnd& left, const GapEnd& right,
                                                   std::vector<std::string>& excluded) {
  if (left.sign == right.sign) {
    for (const GapEnd* e : {&left, &right}) {
      if (e->kind == EndKind::Edge && std::abs(e->g_probe) < 1e-8) {
        excluded.push_back("root at a.c. edge x=" + fmt(e->pos) + " excluded: |1+alpha F| = " +
                           fmt(std::abs(e->g_probe)) + " at offset " + fmt(e->offset));
      }
    }
    return std::nullopt;
  }
  const double inner_left = left.kind == EndKind::Edge ? left.offset : 0.0;
  const double inner_right = right.kind == EndKind::Edge ? -right.offset : 0.0;
  if (left.kind == EndKind::Infinite) {
    double d = 1.0 + std::abs(right.pos);
    while (sec.g(right.pos, -d) <= 0.0) {
      d *= 2.0;
      if (!std::isfinite(d)) throw ConvergenceError("secular_roots: could not bracket root on the left ray");
    }
    const double delta = solve_in_bracket(sec, right.pos, -d, inner_right, 1.0);
    return std::make_pair(right.pos, delta);
  }
  if (right.kind == EndKind::Infinite) {
    double d = 1.0 + std::abs(left.pos);
    while (sec.g(left.pos, d) <= 0.0) {
      d *= 2.0;
      if (!std::isfinite(d)) throw ConvergenceError("secular_roots: could not bracket root on the right ray");
    }
    const double delta = solve_in_bracket(sec, left.pos, inner_left, d, left.sign);
    return std::make_pair(left.pos, delta);
  }
  const double half = 0.5 * (right.pos - left.pos);
  const double gm = sec.g(left.pos, half);
  if (gm == 0.0) return std::make_pair(left.pos, half);
  if ((gm > 0.0) == (left.sign > 0.0)) {
    const double delta = solve_in_bracket(sec, right.pos, -half, inner_right, left.sign);
    return std::make_pair(right.pos, delta);
  }
  const double delta = solve_in_bracket(sec, left.pos, inner_left, half, left.sign);
  return std::make_pair(left.pos, delta);
}

std::optional<cplx> boundary_F(const Measure& mu, const HerglotzFunction& F, double x) {
  if (auto closed = boundary_value_closed_form(mu, x)) return closed;
  const auto bv = boundary_value(F, x);
  if (bv.method == BoundaryMethod::Divergent) return std::nullopt;
  return bv.value;
}

void check_disjoint(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const char* where) {
  const auto& t = mu.nodes();
  for (double s : nu.nodes()) {
    if (std::binary_search(t.begin(), t.end(), s))
      throw DomainError(std::string(where) + ": shared node " + fmt(s) + " between mu and the perturbed measure");
  }
}

double hermitian_norm(const Eigen::MatrixXcd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

cplx aronszajn_krein(const HerglotzFunction& F, double alpha, cplx z) {
  const cplx f = F(z);
  return f / (1.0 + alpha * f);
}

SecularRoots secular_roots(const Measure& mu, double alpha) {
  if (alpha == 0.0) throw DomainError("secular_roots: requires alpha != 0");
  SecularRoots out;
  if (mu.empty()) return out;
  const Secular sec(mu, alpha);
  const auto obs = obstacles(mu);
  auto end_kind = [](const Obstacle& o) { return o.atom ? EndKind::Atom : EndKind::Edge; };
  auto record = [&](std::optional<std::pair<double, double>> r) {
    if (!r) return;
    out.roots.push_back({r->first + r->second, sec.dF(r->first, r->second)});
  };
  const double inf = std::numeric_limits<double>::infinity();
  {
    const GapEnd left{EndKind::Infinite, -inf, 1.0, 0.0, 0.0};
    const GapEnd right = probe_end(sec, end_kind(obs.front()), obs.front().lo, -1.0, inf);
    record(solve_gap(sec, left, right, out.excluded));
  }
  for (std::size_t i = 0; i + 1 < obs.size(); ++i) {
    const double len = obs[i + 1].lo - obs[i].hi;
    const GapEnd left = probe_end(sec, end_kind(obs[i]), obs[i].hi, 1.0, len);
    const GapEnd right = probe_end(sec, end_kind(obs[i + 1]), obs[i + 1].lo, -1.0, len);
    record(solve_gap(sec, left, right, out.excluded));
  }
  {
    const GapEnd left = probe_end(sec, end_kind(obs.back()), obs.back().hi, 1.0, inf);
    const GapEnd right{EndKind::Infinite, inf, 1.0, 0.0, 0.0};
    record(solve_gap(sec, left, right, out.excluded));
  }
  std::sort(out.roots.begin(), out.roots.end(),
            [](const SecularRoot& a, const SecularRoot& b) { return a.root < b.root; });
  for (const auto& e : out.excluded) log::info(e);
  return out;
}

DensityValue perturbed_ac_density(const Measure& mu, double alpha, double x) {
  const bool interior = std::any_of(mu.pieces().begin(), mu.pieces().end(),
                                    [x](const AcPiece& p) { return p.interval.contains_interior(x); });
  if (!interior) throw DomainError("perturbed_ac_density: x=" + fmt(x) + " is not interior to an a.c. piece");
  DensityValue out;
  const double w = mu.density(x);
  if (alpha == 0.0) {
    out.value = w;
    return out;
  }
  const HerglotzFunction F(mu);
  cplx fx;
  if (auto closed = boundary_value_closed_form(mu, x)) {
    fx = *closed;
  } else {
    const auto bv = boundary_value(F, x);
    if (bv.method == BoundaryMethod::Divergent || !bv.converged)
      throw DomainError("perturbed_ac_density: boundary value non-convergent at x=" + fmt(x));
    fx = bv.value;
  }
  out.value = w / std::norm(1.0 + alpha * fx);
  out.bound_product = kPi * kPi * alpha * alpha * w * out.value;
  out.bound_ok = out.bound_product <= 1.0 + 1e-8;
  return out;
}

PerturbationResult perturb(const Measure& mu, double alpha) {
  PerturbationResult r;
  r.alpha = alpha;
  r.base = mu;
  if (alpha == 0.0) {
    r.perturbed = mu;
    return r;
  }
  const auto sr = secular_roots(mu, alpha);
  r.excluded = sr.excluded;
  const HerglotzFunction F(mu);
  std::vector<Atom> atoms;
  for (const auto& root : sr.roots) {
    PerturbedAtom a;
    a.root = root.root;
    a.derivative = root.derivative;
    a.mass = 1.0 / (alpha * alpha * root.derivative);
    const bool on_support = std::any_of(mu.pieces().begin(), mu.pieces().end(),
                                        [&](const AcPiece& p) { return p.interval.contains(a.root); });
    if (!on_support) a.residual = std::abs(1.0 + alpha * F(cplx(a.root)).real());
    r.max_root_residual = std::max(r.max_root_residual, a.residual);
    r.atoms.push_back(a);
    atoms.push_back({a.root, a.mass});
  }

  std::vector<AcPiece> pieces;
  for (const auto& block : obstacles(mu)) {
    if (block.atom) continue;
    const double len = block.hi - block.lo;
    const double nudge = 1e-9 * len;
    auto sample = [&](double x) {
      x = std::clamp(x, block.lo + nudge, block.hi - nudge);
      const double w = mu.density(x);
      if (w == 0.0) return 0.0;
      const auto fx = boundary_F(mu, F, x);
      if (!fx) return 0.0;
      const double v = w / std::norm(1.0 + alpha * *fx);
      const double product = kPi * kPi * alpha * alpha * w * v;
      r.max_bound_product = std::max(r.max_bound_product, product);
      if (product > 1.0 + 1e-8) ++r.bound_violations;
      return v;
    };
    constexpr int kInitial = 128;
    std::vector<double> xs, ys;
    for (int i = 0; i <= kInitial; ++i) {
      const double x = i == kInitial ? block.hi : block.lo + len * i / kInitial;
      xs.push_back(x);
      ys.push_back(sample(x));
    }
    const double scale = std::max(1e-300, *std::max_element(ys.begin(), ys.end()));
    // Refine cells whose midpoint departs from linear interpolation.
    constexpr std::size_t kMaxPoints = 20000;
    for (int pass = 0; pass < 14 && xs.size() < kMaxPoints; ++pass) {
      std::vector<double> nx{xs.front()}, ny{ys.front()};
      bool refined = false;
      for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const double xm = 0.5 * (xs[i] + xs[i + 1]);
        if (xs.size() + (nx.size() - i) < kMaxPoints && xm > xs[i] && xm < xs[i + 1]) {
          const double ym = sample(xm);
          const double lin = 0.5 * (ys[i] + ys[i + 1]);
          if (std::abs(ym - lin) > 1e-4 * std::abs(ym) + 1e-7 * scale) {
            nx.push_back(xm);
            ny.push_back(ym);
            refined = true;
          }
        }
        nx.push_back(xs[i + 1]);
        ny.push_back(ys[i + 1]);
      }
      xs = std::move(nx);
      ys = std::move(ny);
      if (!refined) break;
    }
    r.density_samples += xs.size();
    pieces.push_back(make_piece(Interval(block.lo, block.hi), weight::Table{xs, ys}));
  }
  r.perturbed = Measure(std::move(atoms), std::move(pieces));
  r.mass_defect = std::abs(r.perturbed.total_mass() - mu.total_mass());
  return r;
}

DirectPerturbation direct_discrete_perturbation(const DiscreteMeasure& mu, double alpha) {
  const auto n = static_cast<Eigen::Index>(mu.size());
  if (n == 0) throw DomainError("direct_discrete_perturbation: empty measure");
  Eigen::VectorXd sw(n), t(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sw(i) = std::sqrt(mu.weights()[i]);
    t(i) = mu.nodes()[i];
  }
  Eigen::MatrixXd a = alpha * sw * sw.transpose();
  a.diagonal() += t;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) {
    std::ostringstream os;
    os << "direct_discrete_perturbation: eigensolver did not converge (n=" << n << ", alpha=" << alpha
       << ")\n" << a.topLeftCorner(std::min<Eigen::Index>(n, 8), std::min<Eigen::Index>(n, 8));
    throw ConvergenceError(os.str());
  }
  DirectPerturbation out;
  out.eigenvectors = es.eigenvectors();
  std::vector<double> s(n), v(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    s[k] = es.eigenvalues()(k);
    const double c = sw.dot(out.eigenvectors.col(k));
    v[k] = c * c;
  }
  out.perturbed = DiscreteMeasure(std::move(s), std::move(v));
  return out;
}

RepresentationMatrix representation_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& perturbed,
                                           double alpha) {
  if (alpha == 0.0) throw DomainError("representation_matrix: requires alpha != 0");
  check_disjoint(mu, perturbed, "representation_matrix");
  const auto& t = mu.nodes();
  const auto& w = mu.weights();
  const auto& s = perturbed.nodes();
  RepresentationMatrix out;
  out.alpha = alpha;
  Eigen::MatrixXcd e(s.size(), t.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    double sum = 0.0;
    for (std::size_t j = 0; j < t.size(); ++j) {
      const double kj = w[j] / (s[k] - t[j]);
      e(k, j) = alpha * kj;
      sum += kj;
    }
    out.secular_residual = std::max(out.secular_residual, std::abs(1.0 - alpha * sum));
  }
  out.matrix = WeightedMatrix(std::move(e),
                              Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())),
                              Eigen::Map<const Eigen::VectorXd>(perturbed.weights().data(),
                                                                static_cast<Eigen::Index>(perturbed.size())));
  return out;
}

Eigen::VectorXd apply_representation(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double alpha,
                                     const std::function<double(double)>& f) {
  const auto& t = mu.nodes();
  const auto& w = mu.weights();
  const auto& s = nu.nodes();
  Eigen::VectorXd out(s.size());
  if (alpha != 0.0) check_disjoint(mu, nu, "apply_representation");
  std::vector<double> ft(t.size());
  for (std::size_t j = 0; j < t.size(); ++j) ft[j] = f(t[j]);
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double fs = f(s[k]);
    double sum = 0.0;
    if (alpha != 0.0)
      for (std::size_t j = 0; j < t.size(); ++j) sum += w[j] * (fs - ft[j]) / (s[k] - t[j]);
    out(k) = fs - alpha * sum;
  }
  return out;
}

UnitarityDefect unitarity_defect(const WeightedMatrix& v) {
  const Eigen::MatrixXcd b = v.orthonormal_form();
  UnitarityDefect d;
  Eigen::MatrixXcd l = b.adjoint() * b;
  l -= Eigen::MatrixXcd::Identity(l.rows(), l.cols());
  Eigen::MatrixXcd r = b * b.adjoint();
  r -= Eigen::MatrixXcd::Identity(r.rows(), r.cols());
  d.left = hermitian_norm(l);
  d.right = hermitian_norm(r);
  return d;
}

UnitarityDefect unitarity_defect(const RepresentationMatrix& v) { return unitarity_defect(v.matrix); }

RigidityResult rigidity_normalizer(const WeightedMatrix& v, double offdiag_tol, double psi_tol) {
  const Eigen::MatrixXcd b = v.orthonormal_form();
  const Eigen::MatrixXcd g = b * b.adjoint();
  const Eigen::Index n = g.rows();
  RigidityResult out;
  Eigen::VectorXd psi = g.diagonal().real();
  const double psi_max = n > 0 ? psi.maxCoeff() : 0.0;
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index l = 0; l < n; ++l)
      if (k != l) out.offdiag_residual = std::max(out.offdiag_residual, std::abs(g(k, l)));
  for (Eigen::Index k = 0; k < n; ++k) {
    if (psi(k) <= psi_tol)
      throw DomainError("rigidity_normalizer: kernel obstruction, psi_" + std::to_string(k) + " = " +
                        fmt(psi(k)) + " <= " + fmt(psi_tol));
  }
  if (out.offdiag_residual > offdiag_tol * std::max(1.0, psi_max))
    throw DomainError("rigidity_normalizer: VV* is not diagonal (off-diagonal residual " +
                      fmt(out.offdiag_residual) + ")");
  out.h = psi.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXcd scaled = out.h.asDiagonal() * v.entries();
  out.normalized_defect = unitarity_defect(WeightedMatrix(std::move(scaled), v.in_weights(), v.out_weights()));
  return out;
}

std::vector<TEpsOneRow> t_eps_one_limit(const DiscreteMeasure& mu, const DiscreteMeasure& perturbed,
                                        double alpha, std::span<const double> eps_ladder) {
  if (alpha == 0.0) throw DomainError("t_eps_one_limit: requires alpha != 0");
  if (eps_ladder.empty()) throw DomainError("t_eps_one_limit: eps ladder is empty");
  const auto& t = mu.nodes();
  const auto& w = mu.weights();
  std::vector<TEpsOneRow> rows;
  for (double s : perturbed.nodes()) {
    TEpsOneRow row;
    row.s = s;
    row.target = 1.0 / alpha;
    for (double eps : eps_ladder) {
      cplx v = 0.0;
      for (std::size_t j = 0; j < t.size(); ++j) v += w[j] / cplx(s - t[j], eps);
      row.ladder.emplace_back(eps, v);
    }
    const std::size_t n = row.ladder.size();
    row.residual = std::abs(row.ladder.back().second - row.target);
    if (n >= 2) {
      const double r0 = std::abs(row.ladder[n - 2].second - row.target);
      const double e0 = row.ladder[n - 2].first;
      const double e1 = row.ladder[n - 1].first;
      if (r0 > 0.0 && row.residual > 0.0) row.rate = std::log(row.residual / r0) / std::log(e1 / e0);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::VectorXd tweak_reconstruction(const DiscreteMeasure& mu, const DiscreteMeasure& perturbed, double alpha,
                                     const std::function<double(double)>& f) {
  const auto& t = mu.nodes();
  const auto& w = mu.weights();
  const auto& s = perturbed.nodes();
  Eigen::VectorXd out(s.size());
  if (alpha == 0.0) {
    for (std::size_t k = 0; k < s.size(); ++k) out(k) = f(s[k]);
    return out;
  }
  check_disjoint(mu, perturbed, "tweak_reconstruction");
  std::vector<double> ft(t.size());
  for (std::size_t j = 0; j < t.size(); ++j) ft[j] = f(t[j]);
  for (std::size_t k = 0; k < s.size(); ++k) {
    double t1 = 0.0, tf = 0.0;
    for (std::size_t j = 0; j < t.size(); ++j) {
      const double kj = w[j] / (s[k] - t[j]);
      t1 += kj;
      tf += kj * ft[j];
    }
    out(k) = f(s[k]) * (1.0 - alpha * t1) + alpha * tf;
  }
  return out;
}

nlohmann::json to_json(const PerturbationResult& r) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto& a : r.atoms)
    atoms.push_back({{"root", json_number(a.root)},
                     {"derivative", json_number(a.derivative)},
                     {"mass", json_number(a.mass)},
                     {"residual", json_number(a.residual)}});
  return {{"alpha", r.alpha},
          {"atoms", atoms},
          {"perturbed", to_json(r.perturbed)},
          {"diagnostics",
           {{"mass_defect", json_number(r.mass_defect)},
            {"max_root_residual", json_number(r.max_root_residual)},
            {"max_bound_product", json_number(r.max_bound_product)},
            {"bound_violations", r.bound_violations},
            {"density_samples", r.density_samples},
            {"excluded", r.excluded}}}};
}

}  // namespace rankone
