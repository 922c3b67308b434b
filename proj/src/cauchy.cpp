#include "rankone/cauchy.hpp"

#include "rankone/errors.hpp"
#include "rankone/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

namespace rankone {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// P(t) = sum_k c[k] (t - origin)^k on [a, b].
struct PolySegment {
  double origin = 0.0;
  double a = 0.0;
  double b = 0.0;
  std::vector<double> c;

  double eval(double t) const {
    double v = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * (t - origin) + *it;
    return v;
  }
};

std::optional<std::vector<PolySegment>> poly_segments(const AcPiece& p) {
  const double a = p.interval.lo;
  const double b = p.interval.hi;
  if (const auto* c = std::get_if<weight::Constant>(&p.weight))
    return std::vector<PolySegment>{{0.0, a, b, {c->c}}};
  if (const auto* q = std::get_if<weight::Polynomial>(&p.weight))
    return std::vector<PolySegment>{{0.0, a, b, q->coefficients}};
  if (const auto* t = std::get_if<weight::Table>(&p.weight)) {
    std::vector<PolySegment> out;
    for (std::size_t i = 0; i + 1 < t->x.size(); ++i) {
      const double lo = std::max(a, t->x[i]);
      const double hi = std::min(b, t->x[i + 1]);
      if (hi <= lo) continue;
      const double slope = (t->y[i + 1] - t->y[i]) / (t->x[i + 1] - t->x[i]);
      out.push_back({t->x[i], lo, hi, {t->y[i], slope}});
    }
    return out;
  }
  return std::nullopt;
}

// Synthetic division P(t) = P(z) + (t - z) Q(t) in the shifted variable;
// returns P(z) and the integral of Q over the segment.
std::pair<cplx, cplx> divide_out(const PolySegment& s, cplx z) {
  const cplx zs = z - s.origin;
  const double as = s.a - s.origin;
  const double bs = s.b - s.origin;
  const std::size_t n = s.c.size() - 1;
  if (n == 0) return {cplx(s.c[0]), cplx(0.0)};
  std::vector<cplx> q(n);
  q[n - 1] = s.c[n];
  for (std::size_t k = n - 1; k >= 1; --k) q[k - 1] = s.c[k] + zs * q[k];
  const cplx pz = s.c[0] + zs * q[0];
  cplx integral = 0.0;
  double ap = as;
  double bp = bs;
  for (std::size_t k = 0; k < n; ++k) {
    integral += q[k] * (bp - ap) / double(k + 1);
    ap *= as;
    bp *= bs;
  }
  return {pz, integral};
}

cplx log_ratio(cplx z, double a, double b) {
  if (z.imag() == 0.0) return std::log(std::abs(b - z.real()) / std::abs(a - z.real()));
  return std::log(cplx(b) - z) - std::log(cplx(a) - z);
}

// int_a^b P(t) / (t - z) dt, z off the segment.
cplx segment_transform(const PolySegment& s, cplx z) {
  const auto [pz, iq] = divide_out(s, z);
  return pz * log_ratio(z, s.a, s.b) + iq;
}

bool is_full_semicircle(const AcPiece& p) {
  return std::holds_alternative<weight::Semicircle>(p.weight) && p.interval.lo == -2.0 &&
         p.interval.hi == 2.0;
}

bool is_full_arcsine(const AcPiece& p) {
  return std::holds_alternative<weight::Arcsine>(p.weight) && p.interval.lo == -1.0 &&
         p.interval.hi == 1.0;
}

// sqrt(z - c) sqrt(z + c): the branch that behaves like z at infinity,
// with the cut on [-c, c].
cplx sqrt_pair(cplx z, double c) { return std::sqrt(z - c) * std::sqrt(z + c); }

cplx quadrature_transform(const AcPiece& p, cplx z) {
  const double a = p.interval.lo;
  const double b = p.interval.hi;
  const double x0 = std::clamp(z.real(), a, b);
  const double w0 = p(x0);
  const bool subtract = std::isfinite(w0);
  std::vector<double> edges{a};
  if (x0 > a && x0 < b) edges.push_back(x0);
  edges.push_back(b);
  cplx total = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    auto part = [&](bool imag) {
      return [&, imag](double t) {
        const cplx v = (subtract ? p(t) - w0 : p(t)) / (t - z);
        return imag ? v.imag() : v.real();
      };
    };
    const double re = integrate_endpoint_singular(part(false), edges[i], edges[i + 1]).value;
    const double im = z.imag() == 0.0 ? 0.0
                                      : integrate_endpoint_singular(part(true), edges[i], edges[i + 1]).value;
    total += cplx(re, im);
  }
  if (subtract && w0 != 0.0) total += w0 * log_ratio(z, a, b);
  return total;
}

cplx piece_transform(const AcPiece& p, cplx z) {
  if (auto segs = poly_segments(p)) {
    cplx total = 0.0;
    for (const auto& s : *segs) total += segment_transform(s, z);
    return total;
  }
  if (is_full_semicircle(p)) {
    const double scale = std::get<weight::Semicircle>(p.weight).scale;
    return scale * 0.5 * (-z + sqrt_pair(z, 2.0));
  }
  if (is_full_arcsine(p)) {
    const double scale = std::get<weight::Arcsine>(p.weight).scale;
    return -scale / sqrt_pair(z, 1.0);
  }
  return quadrature_transform(p, z);
}

// int w(t) / (t - x)^2 dt for real x outside the piece.
double piece_derivative(const AcPiece& p, double x) {
  if (auto segs = poly_segments(p)) {
    // Integration by parts: [-P/(t - x)]_a^b + int P'/(t - x).
    double total = 0.0;
    for (const auto& s : *segs) {
      total += -s.eval(s.b) / (s.b - x) + s.eval(s.a) / (s.a - x);
      if (s.c.size() > 1) {
        PolySegment d{s.origin, s.a, s.b, {}};
        for (std::size_t k = 1; k < s.c.size(); ++k) d.c.push_back(k * s.c[k]);
        total += segment_transform(d, cplx(x)).real();
      }
    }
    return total;
  }
  auto f = [&](double t) { return p(t) / ((t - x) * (t - x)); };
  return integrate_endpoint_singular(f, p.interval.lo, p.interval.hi).value;
}

void check_off_support(const Measure& mu, cplx z) {
  if (z.imag() != 0.0) return;
  const double x = z.real();
  for (const auto& a : mu.atoms())
    if (a.position == x) throw DomainError("borel_transform: z is an atom of the measure");
  for (const auto& p : mu.pieces())
    if (p.interval.contains(x))
      throw DomainError("borel_transform: real z inside an a.c. piece (use boundary_value)");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

struct HerglotzFunction::Cache {
  std::mutex mutex;
  std::map<std::pair<double, double>, cplx> values;
};

HerglotzFunction::HerglotzFunction(Measure mu)
    : mu_(std::move(mu)), cache_(std::make_shared<Cache>()) {}

cplx HerglotzFunction::operator()(cplx z) const {
  const auto key = std::make_pair(z.real(), z.imag());
  {
    std::lock_guard lock(cache_->mutex);
    if (auto it = cache_->values.find(key); it != cache_->values.end()) return it->second;
  }
  const cplx v = borel_transform(mu_, z);
  std::lock_guard lock(cache_->mutex);
  cache_->values.emplace(key, v);
  return v;
}

double HerglotzFunction::derivative(double x) const {
  check_off_support(mu_, cplx(x));
  double d = 0.0;
  for (const auto& a : mu_.atoms()) d += a.mass / ((a.position - x) * (a.position - x));
  for (const auto& p : mu_.pieces()) d += piece_derivative(p, x);
  return d;
}

cplx borel_transform(const Measure& mu, cplx z) {
  check_off_support(mu, z);
  cplx total = 0.0;
  for (const auto& a : mu.atoms()) total += a.mass / (a.position - z);
  for (const auto& p : mu.pieces()) total += piece_transform(p, z);
  return total;
}

cplx borel_transform(const HerglotzFunction& F, cplx z) { return F(z); }

std::string to_string(BoundaryMethod m) {
  switch (m) {
    case BoundaryMethod::ClosedForm: return "closed_form";
    case BoundaryMethod::Extrapolated: return "extrapolated";
    case BoundaryMethod::Divergent: return "divergent";
  }
  return "unknown";
}

std::vector<double> default_eps_ladder() { return {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}; }

std::optional<cplx> boundary_value_closed_form(const Measure& mu, double x) {
  cplx total = 0.0;
  for (const auto& a : mu.atoms()) {
    if (a.position == x) return std::nullopt;
    total += a.mass / (a.position - x);
  }
  // Coefficients of ln|node - x| for nodes that coincide with x; they must
  // cancel between neighbouring segments for the value to be finite.
  double log_coefficient = 0.0;
  for (const auto& p : mu.pieces()) {
    if (!p.interval.contains(x)) {
      total += piece_transform(p, cplx(x));
      continue;
    }
    if (is_full_semicircle(p)) {
      const double scale = std::get<weight::Semicircle>(p.weight).scale;
      total += scale * 0.5 * (-x + cplx(0.0, std::sqrt(std::max(0.0, 4.0 - x * x))));
      continue;
    }
    if (is_full_arcsine(p)) {
      if (x == -1.0 || x == 1.0) return std::nullopt;
      const double scale = std::get<weight::Arcsine>(p.weight).scale;
      total += cplx(0.0, scale / std::sqrt(1.0 - x * x));
      continue;
    }
    auto segs = poly_segments(p);
    if (!segs) return std::nullopt;
    for (const auto& s : *segs) {
      if (x < s.a || x > s.b) {
        total += segment_transform(s, cplx(x));
        continue;
      }
      const auto [pz, iq] = divide_out(s, cplx(x));
      const double px = pz.real();
      total += iq;
      if (x > s.a && x < s.b) {
        total += cplx(px * std::log((s.b - x) / (x - s.a)), kPi * px);
      } else if (x == s.a) {
        total += cplx(px * std::log(s.b - x), 0.5 * kPi * px);
        log_coefficient -= px;
      } else {
        total += cplx(-px * std::log(x - s.a), 0.5 * kPi * px);
        log_coefficient += px;
      }
    }
  }
  const double scale = std::max(1.0, std::abs(total));
  if (std::abs(log_coefficient) > 1e-12 * scale) return std::nullopt;
  return total;
}

BoundaryValue boundary_value(const HerglotzFunction& F, double x, std::span<const double> eps_ladder) {
  if (eps_ladder.empty()) throw DomainError("boundary_value: eps ladder is empty");
  for (std::size_t i = 0; i < eps_ladder.size(); ++i) {
    if (!(eps_ladder[i] > 0.0)) throw DomainError("boundary_value: eps ladder must be positive");
    if (i > 0 && !(eps_ladder[i] < eps_ladder[i - 1]))
      throw DomainError("boundary_value: eps ladder must be strictly decreasing");
  }
  const Measure& mu = F.measure();
  const bool on_atom = std::any_of(mu.atoms().begin(), mu.atoms().end(),
                                   [x](const Atom& a) { return a.position == x; });
  BoundaryValue out;
  if (!on_atom) {
    if (auto closed = boundary_value_closed_form(mu, x)) {
      out.value = *closed;
      out.method = BoundaryMethod::ClosedForm;
      out.converged = true;
      return out;
    }
  }
  for (double eps : eps_ladder) out.ladder.emplace_back(eps, F(cplx(x, eps)));
  const std::size_t n = out.ladder.size();
  if (n >= 2) {
    const double r0 = std::abs(out.ladder[n - 2].second);
    const double r1 = std::abs(out.ladder[n - 1].second);
    out.rate = std::log(r1 / r0) / std::log(out.ladder[n - 2].first / out.ladder[n - 1].first);
  }
  if (on_atom || out.rate > 0.5) {
    out.method = BoundaryMethod::Divergent;
    out.converged = false;
    out.value = out.ladder.back().second;
    out.error_estimate = kInf;
    return out;
  }
  // Neville extrapolation to eps = 0 over the last (up to) four rungs.
  const std::size_t m = std::min<std::size_t>(4, n);
  std::vector<double> h;
  std::vector<cplx> table;
  for (std::size_t i = n - m; i < n; ++i) {
    h.push_back(out.ladder[i].first);
    table.push_back(out.ladder[i].second);
  }
  cplx previous = table.back();
  for (std::size_t level = 1; level < m; ++level) {
    for (std::size_t i = 0; i + level < m; ++i) {
      table[i] = (h[i + level] * table[i] - h[i] * table[i + 1]) / (h[i + level] - h[i]);
    }
    if (level + 1 == m) break;
    previous = table[0];
  }
  out.value = table[0];
  out.error_estimate = m >= 2 ? std::abs(table[0] - previous) : kInf;
  out.method = BoundaryMethod::Extrapolated;
  out.converged = out.error_estimate <= 1e-6 * std::max(1.0, std::abs(out.value));
  return out;
}

BoundaryValue boundary_value(const HerglotzFunction& F, double x) {
  const auto ladder = default_eps_ladder();
  return boundary_value(F, x, ladder);
}

WeightedMatrix::WeightedMatrix(Eigen::MatrixXcd entries, Eigen::VectorXd in_weights,
                               Eigen::VectorXd out_weights)
    : entries_(std::move(entries)), in_weights_(std::move(in_weights)), out_weights_(std::move(out_weights)) {
  if (entries_.cols() != in_weights_.size() || entries_.rows() != out_weights_.size())
    throw DomainError("WeightedMatrix: dimension mismatch between entries and weights");
  if ((in_weights_.array() <= 0.0).any() || (out_weights_.array() <= 0.0).any())
    throw DomainError("WeightedMatrix: weights must be positive");
}

Eigen::VectorXcd WeightedMatrix::apply(const Eigen::VectorXcd& f) const {
  if (f.size() != cols()) throw DomainError("WeightedMatrix::apply: dimension mismatch");
  return entries_ * f;
}

WeightedMatrix WeightedMatrix::adjoint() const {
  Eigen::MatrixXcd adj = in_weights_.cwiseInverse().asDiagonal() * entries_.adjoint() *
                         out_weights_.asDiagonal();
  return WeightedMatrix(std::move(adj), out_weights_, in_weights_);
}

Eigen::MatrixXcd WeightedMatrix::orthonormal_form() const {
  return out_weights_.cwiseSqrt().asDiagonal() * entries_ *
         in_weights_.cwiseSqrt().cwiseInverse().asDiagonal();
}

namespace {

Eigen::VectorXd as_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

WeightedMatrix regularized_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double eps) {
  if (!(eps > 0.0)) throw DomainError("regularized_matrix: eps must be > 0");
  const auto& t = mu.nodes();
  const auto& w = mu.weights();
  const auto& s = nu.nodes();
  Eigen::MatrixXcd k(s.size(), t.size());
  for (std::size_t r = 0; r < s.size(); ++r)
    for (std::size_t c = 0; c < t.size(); ++c) k(r, c) = w[c] / cplx(s[r] - t[c], eps);
  return WeightedMatrix(std::move(k), as_vector(w), as_vector(nu.weights()));
}

WeightedMatrix truncated_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double eps) {
  if (!(eps > 0.0)) throw DomainError("truncated_matrix: eps must be > 0");
  const auto& t = mu.nodes();
  const auto& w = mu.weights();
  const auto& s = nu.nodes();
  Eigen::MatrixXcd k = Eigen::MatrixXcd::Zero(s.size(), t.size());
  for (std::size_t r = 0; r < s.size(); ++r)
    for (std::size_t c = 0; c < t.size(); ++c) {
      const double d = s[r] - t[c];
      if (std::abs(d) > eps) k(r, c) = w[c] / d;
    }
  return WeightedMatrix(std::move(k), as_vector(w), as_vector(nu.weights()));
}

WeightedMatrix cauchy_kernel_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  const auto& t = mu.nodes();
  const auto& w = mu.weights();
  const auto& s = nu.nodes();
  Eigen::MatrixXcd k(s.size(), t.size());
  for (std::size_t r = 0; r < s.size(); ++r)
    for (std::size_t c = 0; c < t.size(); ++c) {
      const double d = s[r] - t[c];
      if (d == 0.0) throw DomainError("cauchy_kernel_matrix: shared node " + fmt(s[r]));
      k(r, c) = w[c] / d;
    }
  return WeightedMatrix(std::move(k), as_vector(w), as_vector(nu.weights()));
}

NormEstimate operator_norm(const WeightedMatrix& m, double tol, int max_iter) {
  if (!(tol > 0.0)) throw DomainError("operator_norm: tol must be > 0");
  if (m.entries().rows() != m.out_weights().size() || m.entries().cols() != m.in_weights().size())
    throw DomainError("operator_norm: dimension mismatch");
  NormEstimate out;
  if (m.cols() == 0 || m.rows() == 0) {
    out.converged = true;
    return out;
  }
  const Eigen::MatrixXcd b = m.orthonormal_form();
  Eigen::MatrixXcd gram = b.adjoint() * b;
  Eigen::VectorXcd x = Eigen::VectorXcd::Ones(gram.cols()) / std::sqrt(double(gram.cols()));
  // gram currently represents (A*A)^power / exp(log_scale).
  double power = 1.0;
  double log_scale = 0.0;
  double prev_estimate = 0.0;
  double prev_delta = 0.0;
  int since_reset = 0;
  constexpr int kStall = 60;
  constexpr int kMaxSquarings = 8;
  int squarings = 0;
  for (int iter = 1; iter <= max_iter; ++iter) {
    const Eigen::VectorXcd y = gram * x;
    const double rayleigh = x.dot(y).real();
    const double ny = y.norm();
    out.iterations = iter;
    if (ny == 0.0 || rayleigh <= 0.0) {
      out.value = 0.0;
      out.converged = true;
      return out;
    }
    x = y / ny;
    // sigma_max = (rayleigh * e^{log_scale})^{1 / (2 power)}
    const double estimate = std::exp((std::log(rayleigh) + log_scale) / (2.0 * power));
    const double delta = estimate - prev_estimate;
    out.value = std::max(out.value, estimate);
    ++since_reset;
    if (since_reset > 1) {
      const double ratio = prev_delta > 0.0 ? delta / prev_delta : 0.0;
      const double remaining = (ratio > 0.0 && ratio < 1.0) ? delta * ratio / (1.0 - ratio) : delta;
      if (std::abs(delta) <= tol * estimate && std::abs(remaining) <= tol * estimate) {
        out.converged = true;
        return out;
      }
    }
    prev_delta = delta;
    prev_estimate = estimate;
    if (since_reset >= kStall && squarings < kMaxSquarings) {
      gram = gram * gram;
      const double g = gram.norm();
      gram /= g;
      log_scale = 2.0 * log_scale + std::log(g);
      power *= 2.0;
      ++squarings;
      since_reset = 0;
      prev_delta = 0.0;
      prev_estimate = 0.0;
    }
  }
  return out;
}

double poisson_a2(const Measure& mu, const Measure& nu, cplx a) {
  if (!(a.imag() > 0.0)) throw DomainError("poisson_a2: requires Im a > 0");
  return borel_transform(mu, a).imag() * borel_transform(nu, a).imag();
}

namespace {

// mu(I) for many closed intervals: prefix sums over atoms, quadrature for pieces.
class MassOracle {
 public:
  explicit MassOracle(const Measure& mu) : pieces_({}, mu.pieces()) {
    double run = 0.0;
    prefix_.push_back(0.0);
    for (const auto& a : mu.atoms()) {
      positions_.push_back(a.position);
      run += a.mass;
      prefix_.push_back(run);
    }
  }

  double operator()(const Interval& I) const {
    const auto lo = std::lower_bound(positions_.begin(), positions_.end(), I.lo) - positions_.begin();
    const auto hi = std::upper_bound(positions_.begin(), positions_.end(), I.hi) - positions_.begin();
    double m = prefix_[hi] - prefix_[lo];
    if (!pieces_.pieces().empty()) m += pieces_.mass_of(I);
    return m;
  }

 private:
  std::vector<double> positions_;
  std::vector<double> prefix_;
  Measure pieces_;
};

Interval joint_hull(const Measure& mu, const Measure& nu) {
  if (mu.empty() && nu.empty()) throw DomainError("a2: both measures are zero");
  if (mu.empty()) return nu.hull();
  if (nu.empty()) return mu.hull();
  const Interval a = mu.hull();
  const Interval b = nu.hull();
  return Interval(std::min(a.lo, b.lo), std::max(a.hi, b.hi));
}

}  // namespace

A2Report interval_a2_sup(const Measure& mu, const Measure& nu, std::span<const Interval> candidates) {
  if (candidates.empty()) throw DomainError("interval_a2_sup: candidate list is empty");
  const MassOracle mass_mu(mu);
  const MassOracle mass_nu(nu);
  A2Report report;
  report.sup_value = 0.0;
  report.witness = candidates.front();
  double min_len = kInf;
  for (const auto& I : candidates) {
    if (!(I.length() > 0.0)) throw DomainError("interval_a2_sup: degenerate interval in candidate list");
    min_len = std::min(min_len, I.length());
    const double v = mass_mu(I) * mass_nu(I) / (I.length() * I.length());
    if (v > report.sup_value) {
      report.sup_value = v;
      report.witness = I;
    }
  }
  report.candidates = candidates.size();
  report.grid_resolution = std::to_string(candidates.size()) + " candidates, finest width " + fmt(min_len);
  return report;
}

std::vector<Interval> a2_candidates(const Measure& mu, const Measure& nu, int dyadic_depth,
                                    int shrink_levels) {
  if (dyadic_depth < 0 || shrink_levels < 0) throw DomainError("a2_candidates: negative depth");
  Interval hull = joint_hull(mu, nu);
  if (hull.length() == 0.0) hull = Interval(hull.lo - 0.5, hull.hi + 0.5);
  std::vector<Interval> out;
  for (int level = 0; level <= dyadic_depth; ++level) {
    const long n = 1L << level;
    const double h = hull.length() / double(n);
    for (long k = 0; k < n; ++k) {
      const double lo = hull.lo + h * double(k);
      const double hi = (k + 1 == n) ? hull.hi : hull.lo + h * double(k + 1);
      out.emplace_back(lo, hi);
    }
  }
  std::vector<double> centers;
  for (const auto& a : mu.atoms()) centers.push_back(a.position);
  for (const auto& a : nu.atoms()) centers.push_back(a.position);
  std::sort(centers.begin(), centers.end());
  centers.erase(std::unique(centers.begin(), centers.end()), centers.end());
  for (double c : centers) {
    double h = hull.length();
    for (int k = 0; k < shrink_levels; ++k) {
      h *= 0.5;
      out.emplace_back(c - h, c + h);
    }
  }
  constexpr std::size_t kSpan = 8;
  for (std::size_t i = 0; i < centers.size(); ++i)
    for (std::size_t j = i + 1; j < centers.size() && j <= i + kSpan; ++j) out.emplace_back(centers[i], centers[j]);
  return out;
}

AtomFamilyScan atom_centered_scan(const Measure& mu, const Measure& nu, double center, double h0,
                                  int levels) {
  if (!(h0 > 0.0) || levels < 2) throw DomainError("atom_centered_scan: needs h0 > 0 and >= 2 levels");
  const MassOracle mass_mu(mu);
  const MassOracle mass_nu(nu);
  AtomFamilyScan scan;
  scan.center = center;
  double h = h0;
  for (int k = 0; k < levels; ++k, h *= 0.5) {
    const Interval I(center - h, center + h);
    scan.values.emplace_back(h, mass_mu(I) * mass_nu(I) / (I.length() * I.length()));
  }
  const double last = scan.values.back().second;
  const double prev = scan.values[scan.values.size() - 2].second;
  scan.growth_per_halving = prev > 0.0 ? last / prev : 0.0;
  scan.divergent = last > 0.0 && scan.growth_per_halving > 1.5;
  return scan;
}

LevelsetTail levelset_tail(const Measure& eta, const Interval& I, std::span<const double> t_grid,
                           std::size_t grid_points) {
  if (t_grid.empty()) throw DomainError("levelset_tail: t grid is empty");
  if (!(I.length() > 0.0) || grid_points == 0) throw DomainError("levelset_tail: empty interval or grid");
  const HerglotzFunction F(eta);
  const double h = I.length() / double(grid_points);
  LevelsetTail out;
  out.grid_points = grid_points;
  std::vector<double> magnitude;
  magnitude.reserve(grid_points);
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double x = I.lo + (double(i) + 0.5) * h;
    if (std::any_of(eta.atoms().begin(), eta.atoms().end(), [x](const Atom& a) { return a.position == x; })) {
      out.excluded.push_back(x);
      continue;
    }
    auto closed = boundary_value_closed_form(eta, x);
    const cplx v = closed ? *closed : boundary_value(F, x).value;
    magnitude.push_back(std::abs(v));
  }
  std::sort(magnitude.begin(), magnitude.end());
  for (double t : t_grid) {
    const auto above = magnitude.end() - std::upper_bound(magnitude.begin(), magnitude.end(), t);
    const double m = double(above) * h;
    out.t.push_back(t);
    out.measure.push_back(m);
    out.product.push_back(t * m);
  }
  // Least-squares slope of log(product) against log(t) on the upper half.
  const std::size_t start = out.t.size() / 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  bool hit_zero = false;
  for (std::size_t i = start; i < out.t.size(); ++i) {
    if (out.product[i] <= 0.0) {
      hit_zero = true;
      continue;
    }
    const double lx = std::log(out.t[i]);
    const double ly = std::log(out.product[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (hit_zero) {
    out.slope = -kInf;
  } else if (n >= 2 && n * sxx - sx * sx > 0.0) {
    out.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return out;
}

}  // namespace rankone
