#include "maxquad/payoff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "maxquad/util.hpp"

namespace maxquad {

double PiecewiseLinear::operator()(double s) const {
  if (breaks.empty()) throw std::invalid_argument("PiecewiseLinear: no breakpoints");
  if (s <= breaks.front()) return values.front() + slope_left * (s - breaks.front());
  if (s >= breaks.back()) return values.back() + slope_right * (s - breaks.back());
  // breaks[k] < s < breaks[k+1]
  const auto it = std::upper_bound(breaks.begin(), breaks.end(), s);
  const size_t k = size_t(it - breaks.begin()) - 1;
  const double slope = (values[k + 1] - values[k]) / (breaks[k + 1] - breaks[k]);
  return values[k] + slope * (s - breaks[k]);
}

double PiecewiseLinear::slope_left_of(double s) const {
  if (s <= breaks.front()) return slope_left;
  if (s > breaks.back()) return slope_right;
  // largest k with breaks[k] < s; slope of the piece ending at or after s
  const auto it = std::lower_bound(breaks.begin(), breaks.end(), s);
  const size_t k = size_t(it - breaks.begin());
  if (k == 0) return slope_left;
  if (k == breaks.size()) return slope_right;
  return (values[k] - values[k - 1]) / (breaks[k] - breaks[k - 1]);
}

std::vector<double> PiecewiseLinear::kinks() const {
  std::vector<double> out;
  const size_t n = breaks.size();
  for (size_t k = 0; k < n; ++k) {
    const double left =
        (k == 0) ? slope_left : (values[k] - values[k - 1]) / (breaks[k] - breaks[k - 1]);
    const double right = (k + 1 == n)
                             ? slope_right
                             : (values[k + 1] - values[k]) / (breaks[k + 1] - breaks[k]);
    if (std::abs(right - left) > 1e-14 * (1.0 + std::abs(left) + std::abs(right)))
      out.push_back(breaks[k]);
  }
  return out;
}

PiecewiseLinear PiecewiseLinear::butterfly(double k1, double k2) {
  if (!(k1 < k2)) throw std::invalid_argument("butterfly: requires k1 < k2");
  return PiecewiseLinear{{k1, k2}, {0.0, k2 - k1}, 0.0, 0.0};
}

double RidgePayoff::operator()(const VectorXd& xi) const {
  if (xi.size() != direction.size())
    throw std::invalid_argument("RidgePayoff: point dimension mismatch");
  return profile(direction.dot(xi));
}

namespace {

struct Segment {
  double lo, hi;      // subinterval of the band
  double g_lo, slope;  // g(s) = g_lo + slope * (s - lo) on [lo, hi]
};

std::vector<Segment> band_segments(const PiecewiseLinear& g, double lo, double hi) {
  std::vector<double> knots{lo};
  for (const double b : g.breaks)
    if (b > lo && b < hi) knots.push_back(b);
  knots.push_back(hi);
  std::vector<Segment> segs;
  segs.reserve(knots.size() - 1);
  for (size_t k = 0; k + 1 < knots.size(); ++k) {
    const double a = knots[k], b = knots[k + 1];
    const double mid = 0.5 * (a + b);
    segs.push_back({a, b, g(a), g.slope_left_of(mid)});
  }
  return segs;
}

// Exact max over the band of line(s) - (ck/2)(s - s_j)^2 - g(s): piecewise
// concave quadratic, so per segment the max is at the vertex or an endpoint.
double exact_overshoot(const std::vector<Segment>& segs, double g_j, double a_j,
                       double s_j, double ck) {
  double worst = 0.0;
  auto diff = [&](const Segment& seg, double s) {
    const double ds = s - s_j;
    return g_j + a_j * ds - 0.5 * ck * ds * ds - (seg.g_lo + seg.slope * (s - seg.lo));
  };
  for (const auto& seg : segs) {
    worst = std::max(worst, diff(seg, seg.lo));
    worst = std::max(worst, diff(seg, seg.hi));
    const double vertex = s_j + (a_j - seg.slope) / ck;
    if (vertex > seg.lo && vertex < seg.hi) worst = std::max(worst, diff(seg, vertex));
  }
  return worst;
}

std::vector<double> build_anchors(const PiecewiseLinear& g, double lo, double hi,
                                  int n_forms) {
  std::vector<double> anchors;
  for (const double k : g.kinks())
    if (k >= lo && k <= hi) anchors.push_back(k);
  const int n_grid = n_forms - int(anchors.size());
  if (n_grid < 2)
    throw std::invalid_argument("approximate_payoff: n_forms too small for the kink count");
  for (int i = 0; i < n_grid; ++i)
    anchors.push_back(lo + (hi - lo) * double(i) / double(n_grid - 1));
  std::sort(anchors.begin(), anchors.end());
  anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
  while (int(anchors.size()) < n_forms) {
    size_t widest = 0;
    for (size_t k = 1; k + 1 < anchors.size(); ++k)
      if (anchors[k + 1] - anchors[k] > anchors[widest + 1] - anchors[widest]) widest = k;
    anchors.insert(anchors.begin() + long(widest) + 1,
                   0.5 * (anchors[widest] + anchors[widest + 1]));
  }
  return anchors;
}

bool is_kink_anchor(const PiecewiseLinear& g, double s) {
  for (const double k : g.kinks())
    if (k == s) return true;
  return false;
}

}  // namespace

PayoffApproxResult approximate_payoff(const RidgePayoff& payoff,
                                      const PayoffApproxParams& params) {
  const PiecewiseLinear& g = payoff.profile;
  if (!(params.band_lo < params.band_hi))
    throw std::invalid_argument("approximate_payoff: empty band");
  if (params.n_forms < 2)
    throw std::invalid_argument("approximate_payoff: n_forms must be >= 2");
  if (!(params.kink_curvature > 0.0) || !(params.transverse_curvature > 0.0))
    throw std::invalid_argument("approximate_payoff: curvatures must be positive");
  const VectorXd& u = payoff.direction;
  const int d = payoff.dim();
  if (u.squaredNorm() == 0.0)
    throw std::invalid_argument("approximate_payoff: zero ridge direction");

  if (params.piece_curvature && !(*params.piece_curvature > 0.0))
    throw std::invalid_argument("approximate_payoff: curvatures must be positive");
  const double tv = params.transverse_curvature;
  const auto segs = band_segments(g, params.band_lo, params.band_hi);
  const auto anchors = build_anchors(g, params.band_lo, params.band_hi, params.n_forms);

  const MatrixXd uu = u * u.transpose();
  const MatrixXd transverse_part =
      -tv * (MatrixXd::Identity(d, d) - uu / u.squaredNorm());

  std::vector<QuadraticForm> forms;
  forms.reserve(anchors.size());
  std::vector<double> quad_coef(anchors.size()), lin_coef(anchors.size()),
      const_coef(anchors.size());
  for (size_t j = 0; j < anchors.size(); ++j) {
    const double s_j = anchors[j];
    const double c_j = params.curvature_at(is_kink_anchor(g, s_j));
    const double g_j = g(s_j);
    const double a_j = g.slope_left_of(s_j);
    const double gamma = exact_overshoot(segs, g_j, a_j, s_j, c_j);
    quad_coef[j] = -0.5 * c_j;
    lin_coef[j] = a_j + c_j * s_j;
    const_coef[j] = g_j - a_j * s_j - 0.5 * c_j * s_j * s_j - gamma;
    forms.emplace_back(-c_j * uu + transverse_part, lin_coef[j] * u, const_coef[j]);
  }

  // Achieved error on the ridge line, dense scan.
  const int n_scan = 100001;
  double achieved = 0.0;
  for (int i = 0; i < n_scan; ++i) {
    const double s =
        params.band_lo + (params.band_hi - params.band_lo) * double(i) / double(n_scan - 1);
    double best = -std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < anchors.size(); ++j)
      best = std::max(best, const_coef[j] + (lin_coef[j] + quad_coef[j] * s) * s);
    const double gap = g(s) - best;
    if (gap < -1e-9)
      throw std::logic_error("approximate_payoff: over-approximation detected");
    achieved = std::max(achieved, gap);
  }

  if (achieved > params.target_eps)
    throw std::runtime_error("approximate_payoff: achieved error " +
                             format_double(achieved) + " exceeds target " +
                             format_double(params.target_eps) +
                             " (increase n_forms or adjust kink_curvature)");

  return PayoffApproxResult{MaxPlusFunction(d, std::move(forms)), achieved, anchors};
}

}  // namespace maxquad
