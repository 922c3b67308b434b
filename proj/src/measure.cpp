#include "rankone/measure.hpp"

#include "rankone/errors.hpp"
#include "rankone/logging.hpp"
#include "rankone/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

namespace rankone {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double horner(const std::vector<double>& c, double x) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
  return v;
}

double table_eval(const weight::Table& t, double x) {
  if (x <= t.x.front()) return t.y.front();
  if (x >= t.x.back()) return t.y.back();
  const auto it = std::upper_bound(t.x.begin(), t.x.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - t.x.begin()) - 1;
  const double s = (x - t.x[i]) / (t.x[i + 1] - t.x[i]);
  return t.y[i] + s * (t.y[i + 1] - t.y[i]);
}

// Fixed Gauss-Legendre panels between table samples; the density is linear
// on each panel.
QuadResult integrate_table(const weight::Table& t, const std::function<double(double)>& g, double lo, double hi) {
  static const GaussRule rule = gauss_legendre(10);
  std::vector<double> edges{lo};
  for (double x : t.x)
    if (x > lo && x < hi) edges.push_back(x);
  edges.push_back(hi);
  QuadResult r;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double c = 0.5 * (edges[i] + edges[i + 1]);
    const double h = 0.5 * (edges[i + 1] - edges[i]);
    double s = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) s += rule.weights[k] * g(c + h * rule.nodes[k]);
    r.value += h * s;
  }
  return r;
}

double eval_weight(const WeightDescriptor& w, double a, double x) {
  return std::visit(
      overloaded{
          [](const weight::Constant& c) { return c.c; },
          [x](const weight::Polynomial& p) { return horner(p.coefficients, x); },
          [a, x](const weight::PowerLaw& p) {
            const double u = x - a;
            if (p.p == 0.0) return p.c;
            return u <= 0.0 ? (p.p > 0.0 ? 0.0 : kInf) : p.c * std::pow(u, p.p);
          },
          [a, x](const weight::PowerLog& p) {
            const double u = x - a;
            if (u <= 0.0) return 0.0;
            return p.c * u * std::pow(std::log(1.0 / u), -p.p);
          },
          [x](const weight::Semicircle& s) {
            const double r = 4.0 - x * x;
            return r <= 0.0 ? 0.0 : s.scale * std::sqrt(r) / (2.0 * std::numbers::pi);
          },
          [x](const weight::Arcsine& s) {
            const double r = 1.0 - x * x;
            return r <= 0.0 ? kInf : s.scale / (std::numbers::pi * std::sqrt(r));
          },
          [x](const weight::Table& t) { return table_eval(t, x); },
      },
      w);
}

// Density at x given the exact distances to the ends of the piece.
double eval_weight_near(const AcPiece& p, double x, double to_lo, double to_hi) {
  const double lo = p.interval.lo, hi = p.interval.hi;
  return std::visit(
      overloaded{
          [&](const weight::PowerLaw& w) {
            if (w.p == 0.0) return w.c;
            return to_lo <= 0.0 ? (w.p > 0.0 ? 0.0 : kInf) : w.c * std::pow(to_lo, w.p);
          },
          [&](const weight::PowerLog& w) {
            if (to_lo <= 0.0) return 0.0;
            return w.c * to_lo * std::pow(std::log(1.0 / to_lo), -w.p);
          },
          [&](const weight::Semicircle& w) {
            const double r = ((lo + 2.0) + to_lo) * ((2.0 - hi) + to_hi);
            return r <= 0.0 ? 0.0 : w.scale * std::sqrt(r) / (2.0 * std::numbers::pi);
          },
          [&](const weight::Arcsine& w) {
            const double r = ((lo + 1.0) + to_lo) * ((1.0 - hi) + to_hi);
            return r <= 0.0 ? kInf : w.scale / (std::numbers::pi * std::sqrt(r));
          },
          [&](const auto&) { return p(x); },
      },
      p.weight);
}

QuadResult integrate_singular_piece(const AcPiece& p, const std::function<double(double)>& f, double lo,
                                    double hi) {
  const double off_lo = lo - p.interval.lo, off_hi = p.interval.hi - hi;
  return integrate_endpoint_singular(
      [&](double x, double dlo, double dhi) { return eval_weight_near(p, x, off_lo + dlo, off_hi + dhi) * f(x); },
      lo, hi);
}

std::string fmt_interval(const Interval& I) {
  std::ostringstream os;
  os << "[" << I.lo << ", " << I.hi << "]";
  return os.str();
}

// A stretch of a piece on which the density is monotone.
struct MonotoneRun {
  double lo;
  double hi;
  int direction;  // +1 increasing, -1 decreasing, 0 constant
};

std::vector<double> polynomial_turning_points(const std::vector<double>& c,
                                              double lo, double hi) {
  std::vector<double> deriv;
  for (std::size_t k = 1; k < c.size(); ++k) deriv.push_back(k * c[k]);
  std::vector<double> out;
  if (deriv.empty()) return out;
  constexpr int kProbe = 4096;
  double prev_x = lo;
  double prev_v = horner(deriv, lo);
  for (int i = 1; i <= kProbe; ++i) {
    const double x = lo + (hi - lo) * i / kProbe;
    const double v = horner(deriv, x);
    if ((prev_v < 0.0 && v > 0.0) || (prev_v > 0.0 && v < 0.0)) {
      double l = prev_x;
      double r = x;
      for (int it = 0; it < 200 && r - l > 0.0; ++it) {
        const double m = 0.5 * (l + r);
        if (m == l || m == r) break;
        const double vm = horner(deriv, m);
        if ((vm < 0.0) == (prev_v < 0.0)) l = m; else r = m;
      }
      out.push_back(0.5 * (l + r));
    }
    prev_x = x;
    prev_v = v;
  }
  return out;
}

std::vector<MonotoneRun> monotone_runs(const AcPiece& piece, const Interval& sub) {
  const double a = piece.interval.lo;
  std::vector<double> cuts;
  std::vector<MonotoneRun> runs;
  auto direction_at = [&](double l, double r) {
    const double fl = piece(l + 0.25 * (r - l));
    const double fr = piece(l + 0.75 * (r - l));
    if (fl < fr) return 1;
    if (fl > fr) return -1;
    return 0;
  };
  std::visit(overloaded{
                 [&](const weight::Constant&) {},
                 [&](const weight::Polynomial& p) {
                   cuts = polynomial_turning_points(p.coefficients, sub.lo, sub.hi);
                 },
                 [&](const weight::PowerLaw&) {},
                 [&](const weight::PowerLog& p) {
                   if (p.p < 0.0) cuts.push_back(a + std::exp(p.p));
                 },
                 [&](const weight::Semicircle&) { cuts.push_back(0.0); },
                 [&](const weight::Arcsine&) { cuts.push_back(0.0); },
                 [&](const weight::Table& t) { cuts = t.x; },
             },
             piece.weight);
  std::vector<double> edges{sub.lo};
  for (double c : cuts)
    if (c > sub.lo && c < sub.hi) edges.push_back(c);
  edges.push_back(sub.hi);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double l = edges[i];
    const double r = edges[i + 1];
    if (r <= l) continue;
    runs.push_back({l, r, direction_at(l, r)});
  }
  return runs;
}

// |{x in run : w(x) < t}|
double sublevel_length(const AcPiece& piece, const MonotoneRun& run, double t) {
  const double len = run.hi - run.lo;
  if (run.direction == 0) return piece(0.5 * (run.lo + run.hi)) < t ? len : 0.0;
  // Linear table segments invert exactly.
  if (const auto* tab = std::get_if<weight::Table>(&piece.weight)) {
    const double yl = table_eval(*tab, run.lo);
    const double yr = table_eval(*tab, run.hi);
    if (run.direction > 0) {
      if (yl >= t) return 0.0;
      if (yr < t) return len;
      return len * (t - yl) / (yr - yl);
    }
    if (yr >= t) return 0.0;
    if (yl < t) return len;
    return len * (yl - t) / (yl - yr);
  }
  // Infimum and supremum of the run are its endpoint values.
  const double inf_val = run.direction > 0 ? eval_weight(piece.weight, piece.interval.lo, run.lo)
                                           : eval_weight(piece.weight, piece.interval.lo, run.hi);
  const double sup_val = run.direction > 0 ? eval_weight(piece.weight, piece.interval.lo, run.hi)
                                           : eval_weight(piece.weight, piece.interval.lo, run.lo);
  if (inf_val >= t) return 0.0;
  if (sup_val < t) return len;
  double l = run.lo;
  double r = run.hi;
  for (int it = 0; it < 400; ++it) {
    const double m = 0.5 * (l + r);
    if (m <= l || m >= r) break;
    const bool below = piece(m) < t;
    if (run.direction > 0) {
      if (below) l = m; else r = m;
    } else {
      if (below) r = m; else l = m;
    }
  }
  const double crossing = 0.5 * (l + r);
  return run.direction > 0 ? crossing - run.lo : run.hi - crossing;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace

Interval::Interval(double a, double b) : lo(a), hi(b) {
  if (!(a <= b)) throw ValidationError("interval requires a <= b");
}

std::string kind_name(const WeightDescriptor& w) {
  return std::visit(overloaded{
                        [](const weight::Constant&) { return std::string("constant"); },
                        [](const weight::Polynomial&) { return std::string("polynomial"); },
                        [](const weight::PowerLaw&) { return std::string("power_law"); },
                        [](const weight::PowerLog&) { return std::string("power_log"); },
                        [](const weight::Semicircle&) { return std::string("semicircle"); },
                        [](const weight::Arcsine&) { return std::string("arcsine"); },
                        [](const weight::Table&) { return std::string("table"); },
                    },
                    w);
}

double AcPiece::operator()(double x) const {
  if (x < interval.lo || x > interval.hi) return 0.0;
  return eval_weight(weight, interval.lo, x);
}

bool AcPiece::endpoint_singular() const {
  return std::visit(overloaded{
                        [](const weight::PowerLaw& p) { return p.p < 1.0 && p.p != 0.0; },
                        [](const weight::PowerLog&) { return true; },
                        [](const weight::Semicircle&) { return true; },
                        [](const weight::Arcsine&) { return true; },
                        [](const auto&) { return false; },
                    },
                    weight);
}

AcPiece make_piece(Interval interval, WeightDescriptor weight) {
  require(interval.lo < interval.hi, "ac piece interval requires a < b, got " + fmt_interval(interval));
  require(std::isfinite(interval.lo) && std::isfinite(interval.hi), "ac piece interval must be finite");
  std::visit(overloaded{
                 [](const weight::Constant& c) { require(c.c >= 0.0, "weight >= 0 (constant c >= 0)"); },
                 [](const weight::Polynomial& p) {
                   require(!p.coefficients.empty(), "polynomial weight needs coefficients");
                 },
                 [](const weight::PowerLaw& p) {
                   require(p.c >= 0.0, "weight >= 0 (power_law c >= 0)");
                   require(p.p > -1.0, "total mass finite (power_law requires p > -1)");
                 },
                 [&](const weight::PowerLog& p) {
                   require(p.c >= 0.0, "weight >= 0 (power_log c >= 0)");
                   require(interval.length() < 1.0, "power_log piece must be shorter than 1");
                 },
                 [&](const weight::Semicircle& s) {
                   require(s.scale >= 0.0, "weight >= 0 (semicircle scale >= 0)");
                   require(interval.lo >= -2.0 && interval.hi <= 2.0, "semicircle piece must lie in [-2, 2]");
                 },
                 [&](const weight::Arcsine& s) {
                   require(s.scale >= 0.0, "weight >= 0 (arcsine scale >= 0)");
                   require(interval.lo >= -1.0 && interval.hi <= 1.0, "arcsine piece must lie in [-1, 1]");
                 },
                 [&](const weight::Table& t) {
                   require(t.x.size() >= 2 && t.x.size() == t.y.size(), "table needs matching x/y with >= 2 samples");
                   for (std::size_t i = 1; i < t.x.size(); ++i)
                     require(t.x[i] > t.x[i - 1], "table x must be strictly increasing");
                   for (double y : t.y) require(y >= 0.0 && std::isfinite(y), "weight >= 0 (table samples)");
                   require(t.x.front() <= interval.lo && t.x.back() >= interval.hi,
                           "table samples must cover the piece interval");
                 },
             },
             weight);
  AcPiece piece{interval, std::move(weight)};
  constexpr int kProbe = 257;
  for (int i = 1; i < kProbe; ++i) {
    const double x = interval.lo + interval.length() * i / kProbe;
    const double v = piece(x);
    require(v >= 0.0 && std::isfinite(v), "weight >= 0 and finite on the interior of " + fmt_interval(interval));
  }
  return piece;
}

Measure::Measure(std::vector<Atom> atoms, std::vector<AcPiece> pieces)
    : atoms_(std::move(atoms)), pieces_(std::move(pieces)) {
  for (const auto& a : atoms_) {
    require(std::isfinite(a.position), "atom position finite");
    require(a.mass > 0.0 && std::isfinite(a.mass), "mass > 0");
  }
  std::sort(atoms_.begin(), atoms_.end(),
            [](const Atom& x, const Atom& y) { return x.position < y.position; });
  for (std::size_t i = 1; i < atoms_.size(); ++i)
    require(atoms_[i].position != atoms_[i - 1].position, "atom positions strictly distinct");
  for (auto& p : pieces_) p = make_piece(p.interval, p.weight);
  std::sort(pieces_.begin(), pieces_.end(),
            [](const AcPiece& x, const AcPiece& y) { return x.interval.lo < y.interval.lo; });
}

Measure Measure::dirac(double position, double mass) { return Measure({{position, mass}}, {}); }

Measure Measure::lebesgue(double a, double b, double density) {
  return Measure({}, {AcPiece{Interval(a, b), weight::Constant{density}}});
}

Measure Measure::semicircle(double scale) {
  return Measure({}, {AcPiece{Interval(-2.0, 2.0), weight::Semicircle{scale}}});
}

double Measure::atomic_mass() const {
  double m = 0.0;
  for (const auto& a : atoms_) m += a.mass;
  return m;
}

double Measure::total_mass() const {
  double m = atomic_mass();
  for (const auto& p : pieces_) m += integrate(p, [](double) { return cplx(1.0); }).value.real();
  return m;
}

double Measure::mass_of(const Interval& I) const {
  double m = 0.0;
  for (const auto& a : atoms_)
    if (I.contains(a.position)) m += a.mass;
  for (const auto& p : pieces_) {
    const double lo = std::max(I.lo, p.interval.lo);
    const double hi = std::min(I.hi, p.interval.hi);
    if (hi <= lo) continue;
    if (const auto* c = std::get_if<weight::Constant>(&p.weight)) {
      m += c->c * (hi - lo);
      continue;
    }
    auto f = [&p](double x) { return p(x); };
    if (const auto* t = std::get_if<weight::Table>(&p.weight))
      m += integrate_table(*t, f, lo, hi).value;
    else
      m += p.endpoint_singular() ? integrate_singular_piece(p, [](double) { return 1.0; }, lo, hi).value
                                 : integrate_smooth(f, lo, hi).value;
  }
  return m;
}

double Measure::density(double x) const {
  double w = 0.0;
  for (const auto& p : pieces_)
    if (p.interval.contains(x)) w += p(x);
  return w;
}

Interval Measure::hull() const {
  if (empty()) throw DomainError("hull of the zero measure");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& a : atoms_) {
    lo = std::min(lo, a.position);
    hi = std::max(hi, a.position);
  }
  for (const auto& p : pieces_) {
    lo = std::min(lo, p.interval.lo);
    hi = std::max(hi, p.interval.hi);
  }
  return Interval(lo, hi);
}

Measure Measure::scaled(double factor) const {
  if (!(factor > 0.0)) throw DomainError("Measure::scaled requires factor > 0");
  std::vector<Atom> atoms = atoms_;
  for (auto& a : atoms) a.mass *= factor;
  std::vector<AcPiece> pieces;
  for (const auto& p : pieces_) {
    WeightDescriptor w = std::visit(
        overloaded{
            [&](weight::Constant c) -> WeightDescriptor { c.c *= factor; return c; },
            [&](weight::Polynomial q) -> WeightDescriptor {
              for (auto& c : q.coefficients) c *= factor;
              return q;
            },
            [&](weight::PowerLaw q) -> WeightDescriptor { q.c *= factor; return q; },
            [&](weight::PowerLog q) -> WeightDescriptor { q.c *= factor; return q; },
            [&](weight::Semicircle q) -> WeightDescriptor { q.scale *= factor; return q; },
            [&](weight::Arcsine q) -> WeightDescriptor { q.scale *= factor; return q; },
            [&](weight::Table q) -> WeightDescriptor {
              for (auto& y : q.y) y *= factor;
              return q;
            },
        },
        p.weight);
    pieces.push_back({p.interval, std::move(w)});
  }
  return Measure(std::move(atoms), std::move(pieces));
}

Measure Measure::operator+(const Measure& other) const {
  std::vector<Atom> atoms = atoms_;
  for (const auto& b : other.atoms_) {
    auto it = std::find_if(atoms.begin(), atoms.end(),
                           [&](const Atom& a) { return a.position == b.position; });
    if (it != atoms.end()) it->mass += b.mass; else atoms.push_back(b);
  }
  std::vector<AcPiece> pieces = pieces_;
  pieces.insert(pieces.end(), other.pieces_.begin(), other.pieces_.end());
  return Measure(std::move(atoms), std::move(pieces));
}

Integral integrate(const AcPiece& piece, const std::function<cplx(double)>& f) {
  if (const auto* p = std::get_if<weight::PowerLaw>(&piece.weight); p && p->p <= -1.0)
    throw DomainError("integrate: power_law weight with p <= -1 is not integrable");
  const double lo = piece.interval.lo;
  const double hi = piece.interval.hi;
  Integral out;
  for (int part = 0; part < 2; ++part) {
    auto g = [&](double x) {
      const cplx v = f(x);
      return piece(x) * (part == 0 ? v.real() : v.imag());
    };
    QuadResult r;
    if (piece.endpoint_singular()) {
      r = integrate_singular_piece(
          piece, [&](double x) { const cplx v = f(x); return part == 0 ? v.real() : v.imag(); }, lo, hi);
    } else if (const auto* t = std::get_if<weight::Table>(&piece.weight)) {
      r = integrate_table(*t, g, lo, hi);
    } else {
      r = integrate_smooth(g, lo, hi);
    }
    if (part == 0) out.value.real(r.value); else out.value.imag(r.value);
    out.error += r.error;
  }
  return out;
}

Integral integrate(const Measure& mu, const std::function<cplx(double)>& f) {
  Integral out;
  for (const auto& a : mu.atoms()) out.value += a.mass * f(a.position);
  for (const auto& p : mu.pieces()) {
    const Integral r = integrate(p, f);
    out.value += r.value;
    out.error += r.error;
  }
  return out;
}

Integral integrate_real(const Measure& mu, const std::function<double(double)>& f) {
  Integral out;
  for (const auto& a : mu.atoms()) out.value += a.mass * f(a.position);
  for (const auto& p : mu.pieces()) {
    auto g = [&](double x) { return p(x) * f(x); };
    const auto* t = std::get_if<weight::Table>(&p.weight);
    const QuadResult r = t ? integrate_table(*t, g, p.interval.lo, p.interval.hi)
                         : p.endpoint_singular() ? integrate_singular_piece(p, f, p.interval.lo, p.interval.hi)
                                                 : integrate_smooth(g, p.interval.lo, p.interval.hi);
    out.value += r.value;
    out.error += r.error;
  }
  return out;
}

double h_minus_one_check(const Measure& mu) {
  return integrate_real(mu, [](double t) { return 1.0 / (1.0 + std::abs(t)); }).value.real();
}

double moment(const Measure& mu, int k) {
  if (k < 0) throw DomainError("moment: k must be >= 0");
  return integrate_real(mu, [k](double t) { return std::pow(t, k); }).value.real();
}

DiscreteMeasure::DiscreteMeasure(std::vector<double> nodes, std::vector<double> weights,
                                 double mass_error)
    : nodes_(std::move(nodes)), weights_(std::move(weights)), mass_error_(mass_error) {
  if (nodes_.size() != weights_.size())
    throw ValidationError("discrete measure: nodes and weights differ in length");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!std::isfinite(nodes_[i])) throw ValidationError("discrete measure: nodes finite");
    if (!(weights_[i] > 0.0)) throw ValidationError("discrete measure: weights > 0");
    if (i > 0 && !(nodes_[i] > nodes_[i - 1]))
      throw ValidationError("discrete measure: nodes strictly increasing");
  }
}

double DiscreteMeasure::total_mass() const {
  double m = 0.0;
  for (double w : weights_) m += w;
  return m;
}

Measure DiscreteMeasure::to_measure() const {
  std::vector<Atom> atoms;
  atoms.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) atoms.push_back({nodes_[i], weights_[i]});
  return Measure(std::move(atoms), {});
}

namespace {

// Gauss-Chebyshev rules carrying the density in their weights, for the full
// semicircle (second kind) and arcsine (first kind) laws.
std::optional<GaussRule> chebyshev_rule(const AcPiece& p, int n) {
  GaussRule r;
  if (const auto* s = std::get_if<weight::Semicircle>(&p.weight);
      s && p.interval.lo == -2.0 && p.interval.hi == 2.0) {
    for (int k = n; k >= 1; --k) {
      const double th = k * std::numbers::pi / (n + 1);
      r.nodes.push_back(2.0 * std::cos(th));
      r.weights.push_back(s->scale * 2.0 * std::sin(th) * std::sin(th) / (n + 1));
    }
    return r;
  }
  if (const auto* a = std::get_if<weight::Arcsine>(&p.weight);
      a && p.interval.lo == -1.0 && p.interval.hi == 1.0) {
    for (int k = n; k >= 1; --k) {
      r.nodes.push_back(std::cos((2 * k - 1) * std::numbers::pi / (2 * n)));
      r.weights.push_back(a->scale / n);
    }
    return r;
  }
  return std::nullopt;
}

}  // namespace

DiscreteMeasure discretize(const Measure& mu, int nodes_per_piece) {
  if (nodes_per_piece < 1) throw DomainError("discretize: nodes_per_piece must be >= 1");
  std::vector<std::pair<double, double>> pts;
  for (const auto& a : mu.atoms()) pts.emplace_back(a.position, a.mass);
  double ac_quad_mass = 0.0;
  double ac_true_mass = 0.0;
  for (const auto& p : mu.pieces()) {
    const double piece_mass = integrate(p, [](double) { return cplx(1.0); }).value.real();
    ac_true_mass += piece_mass;
    if (const auto rule = chebyshev_rule(p, nodes_per_piece)) {
      for (std::size_t i = 0; i < rule->nodes.size(); ++i) {
        ac_quad_mass += rule->weights[i];
        pts.emplace_back(rule->nodes[i], rule->weights[i]);
      }
      continue;
    }
    const GaussRule rule = gauss_legendre(nodes_per_piece, p.interval.lo, p.interval.hi);
    for (int i = 0; i < nodes_per_piece; ++i) {
      const double w = p(rule.nodes[i]);
      if (!std::isfinite(w)) throw DomainError("discretize: weight not finite at a quadrature node");
      ac_quad_mass += rule.weights[i] * w;
      if (w > 0.0) pts.emplace_back(rule.nodes[i], rule.weights[i] * w);
    }
  }
  std::stable_sort(pts.begin(), pts.end(),
                   [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<double> nodes;
  std::vector<double> weights;
  for (const auto& [x, w] : pts) {
    double node = x;
    if (!nodes.empty() && node <= nodes.back()) {
      const double prev = nodes.back();
      const double ulp = std::nextafter(prev, kInf) - prev;
      node = prev + 4.0 * ulp;
      log::warn("discretize: coincident node at " + std::to_string(x) + " shifted by 4 ulp");
    }
    nodes.push_back(node);
    weights.push_back(w);
  }
  return DiscreteMeasure(std::move(nodes), std::move(weights), std::abs(ac_quad_mass - ac_true_mass));
}

double distribution_function(const AcPiece& piece, const Interval& sub, double t) {
  if (!(t > 0.0)) throw DomainError("distribution_function: t must be > 0");
  if (sub.lo < piece.interval.lo || sub.hi > piece.interval.hi)
    throw DomainError("distribution_function: sub-interval outside the piece");
  if (const auto* c = std::get_if<weight::Constant>(&piece.weight))
    return c->c < t ? sub.length() : 0.0;
  if (const auto* p = std::get_if<weight::PowerLaw>(&piece.weight)) {
    // Closed form: c u^p < t  <=>  u < (t/c)^{1/p}  (p > 0), reversed for p < 0.
    const double a = piece.interval.lo;
    if (p->p == 0.0 || p->c == 0.0) return (p->p == 0.0 ? p->c : 0.0) < t ? sub.length() : 0.0;
    const double u_star = std::pow(t / p->c, 1.0 / p->p);
    const double x_star = a + u_star;
    if (p->p > 0.0) return std::clamp(x_star, sub.lo, sub.hi) - sub.lo;
    return sub.hi - std::clamp(x_star, sub.lo, sub.hi);
  }
  double total = 0.0;
  for (const auto& run : monotone_runs(piece, sub)) total += sublevel_length(piece, run, t);
  return total;
}

double distribution_function(const AcPiece& piece, double t) {
  return distribution_function(piece, piece.interval, t);
}

namespace {

// Pieces of mu clipped to I, plus the length of I no piece covers.
struct Restriction {
  std::vector<std::pair<const AcPiece*, Interval>> parts;
  double uncovered = 0.0;
  bool overlapping = false;
};

Restriction restrict_to(const Measure& mu, const Interval& I) {
  Restriction r;
  std::vector<Interval> clips;
  for (const auto& p : mu.pieces()) {
    const double lo = std::max(I.lo, p.interval.lo);
    const double hi = std::min(I.hi, p.interval.hi);
    if (hi <= lo) continue;
    r.parts.emplace_back(&p, Interval(lo, hi));
    clips.emplace_back(lo, hi);
  }
  std::sort(clips.begin(), clips.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
  double covered = 0.0;
  double reach = I.lo;
  for (const auto& c : clips) {
    if (c.lo < reach) r.overlapping = true;
    const double lo = std::max(c.lo, reach);
    if (c.hi > lo) {
      covered += c.hi - lo;
      reach = c.hi;
    }
  }
  r.uncovered = std::max(0.0, I.length() - covered);
  return r;
}

}  // namespace

double distribution_function(const Measure& mu, const Interval& I, double t) {
  if (!(t > 0.0)) throw DomainError("distribution_function: t must be > 0");
  const Restriction r = restrict_to(mu, I);
  if (!r.overlapping) {
    double total = r.uncovered;
    for (const auto& [piece, sub] : r.parts) total += distribution_function(*piece, sub, t);
    return total;
  }
  // Overlapping pieces add densities; resolve the sublevel set on a grid.
  constexpr int kCells = 1 << 16;
  const double h = I.length() / kCells;
  int below = 0;
  for (int i = 0; i < kCells; ++i)
    if (mu.density(I.lo + (i + 0.5) * h) < t) ++below;
  return below * h;
}

namespace {

template <class Dist>
double invert_distribution(Dist&& dist, double length, double x, double sup_hint) {
  if (!(x > 0.0 && x < length))
    throw DomainError("increasing_rearrangement: x must lie in (0, |I|)");
  // Smallest t with D(t) > x.
  double hi = sup_hint > 0.0 && std::isfinite(sup_hint) ? sup_hint : 1.0;
  int grow = 0;
  while (!(dist(hi) > x)) {
    hi *= 2.0;
    if (++grow > 2000) throw DomainError("increasing_rearrangement: unbounded weight");
  }
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (lo + hi);
    if (m <= lo || m >= hi) break;
    if (m > 0.0 && dist(m) > x) hi = m; else lo = m;
  }
  return hi;
}

}  // namespace

double increasing_rearrangement(const AcPiece& piece, const Interval& sub, double x) {
  if (const auto* c = std::get_if<weight::Constant>(&piece.weight)) {
    if (!(x > 0.0 && x < sub.length()))
      throw DomainError("increasing_rearrangement: x must lie in (0, |I|)");
    return c->c;
  }
  if (const auto* p = std::get_if<weight::PowerLaw>(&piece.weight);
      p && p->p > 0.0 && sub.lo == piece.interval.lo) {
    if (!(x > 0.0 && x < sub.length()))
      throw DomainError("increasing_rearrangement: x must lie in (0, |I|)");
    return p->c * std::pow(x, p->p);
  }
  double sup = 0.0;
  for (int i = 0; i <= 64; ++i) sup = std::max(sup, piece(sub.lo + sub.length() * i / 64.0));
  return invert_distribution([&](double t) { return distribution_function(piece, sub, t); },
                             sub.length(), x, sup);
}

double increasing_rearrangement(const AcPiece& piece, double x) {
  return increasing_rearrangement(piece, piece.interval, x);
}

double increasing_rearrangement(const Measure& mu, const Interval& I, double x) {
  double sup = 0.0;
  for (int i = 0; i <= 64; ++i) sup = std::max(sup, mu.density(I.lo + I.length() * i / 64.0));
  return invert_distribution([&](double t) { return distribution_function(mu, I, t); }, I.length(),
                             x, sup);
}

bool atomic_parts_disjoint(const Measure& mu, const Measure& nu, double tol) {
  if (tol < 0.0) throw DomainError("atomic_parts_disjoint: tol must be >= 0");
  const auto& b = nu.atoms();
  for (const auto& a : mu.atoms()) {
    // nu atoms are sorted; look at the neighbours of a.position.
    auto it = std::lower_bound(b.begin(), b.end(), a.position,
                               [](const Atom& x, double v) { return x.position < v; });
    if (it != b.end() && std::abs(it->position - a.position) <= tol) return false;
    if (it != b.begin() && std::abs(std::prev(it)->position - a.position) <= tol) return false;
  }
  return true;
}

}  // namespace rankone
