#include "midnight/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "midnight/numerics.hpp"

namespace midnight {

using numerics::std_normal_cdf;
using numerics::std_normal_mass;
using numerics::std_normal_pdf;

const Density1D& as_density(const ReferenceDensity& r) {
  return std::visit([](const auto& d) -> const Density1D& { return d; }, r);
}

// ---------------------------------------------------------------- basis

double FemBasis::hat(int i, double x) const {
  const double xi = nodes_[i];
  if (i > 0 && x >= nodes_[i - 1] && x <= xi) {
    return (x - nodes_[i - 1]) / width_;
  }
  if (i + 1 < size() && x >= xi && x <= nodes_[i + 1]) {
    return (nodes_[i + 1] - x) / width_;
  }
  return 0.0;
}

FemBasis build_basis(double grid_lo, double grid_hi, int m) {
  if (!(grid_lo < 0 && 0 < grid_hi)) {
    throw InvalidParameter("grid must satisfy grid_lo < 0 < grid_hi");
  }
  if (m < 4) throw InvalidParameter("need at least 4 elements");
  const double width = (grid_hi - grid_lo) / m;
  const double k0 = -grid_lo / width;
  const double rounded = std::round(k0);
  if (std::abs(k0 - rounded) > 1e-9 * std::max(1.0, k0)) {
    throw InvalidParameter("zero is not a grid node");
  }
  FemBasis basis;
  basis.width_ = width;
  basis.zero_node_ = static_cast<int>(rounded);
  basis.nodes_.resize(static_cast<std::size_t>(m) + 1);
  for (int i = 0; i <= m; ++i) {
    basis.nodes_[i] = (i - basis.zero_node_) * width;
  }
  return basis;
}

FemBasis fit_basis(double lo, double hi, int m) {
  if (!(lo < 0 && 0 < hi)) {
    throw InvalidParameter("domain must satisfy lo < 0 < hi");
  }
  if (m < 4) throw InvalidParameter("need at least 4 elements");
  const int n_neg = std::clamp(
      static_cast<int>(std::lround(m * (-lo) / (hi - lo))), 1, m - 1);
  const int n_pos = m - n_neg;
  const double width = std::max(-lo / n_neg, hi / n_pos);
  return build_basis(-n_neg * width, n_pos * width, m);
}

std::pair<double, double> working_domain(const DiffusionParams& d) {
  if (!(d.tail_rate > 0)) {
    throw InvalidParameter("working domain needs γ > 0");
  }
  return {d.gaussian_center - 6.0 * std::sqrt(d.ou_variance),
          12.0 / d.tail_rate};
}

// ---------------------------------------------------------------- Pf

namespace {

// E[f(Z) 1{a <= Z <= b}] for f linear on [a,b] with f(a)=fa, f(b)=fb and
// Z ~ Normal(mean, sd^2).
double linear_piece(double a, double b, double fa, double fb, double mean,
                    double sd) {
  const double slope = (fb - fa) / (b - a);
  const double za = (a - mean) / sd;
  const double zb = (b - mean) / sd;
  return (fa + slope * (mean - a)) * std_normal_mass(za, zb) +
         slope * sd * (std_normal_pdf(za) - std_normal_pdf(zb));
}

}  // namespace

double PiecewiseLinear::operator()(double x) const {
  if (knots.empty() || x < knots.front()) return left_value;
  if (x > knots.back()) return right_value;
  const auto it = std::upper_bound(knots.begin(), knots.end(), x);
  const auto j = static_cast<std::size_t>(it - knots.begin());
  if (j >= knots.size()) return values.back();
  const double t = (x - knots[j - 1]) / (knots[j] - knots[j - 1]);
  return values[j - 1] + t * (values[j] - values[j - 1]);
}

PiecewiseLinear PiecewiseLinear::constant(double value) {
  return {{0.0}, {value}, value, value};
}

PiecewiseLinear PiecewiseLinear::from_hat(const FemBasis& basis, int i) {
  const auto& nodes = basis.nodes();
  PiecewiseLinear f;
  if (i > 0) {
    f.knots.push_back(nodes[i - 1]);
    f.values.push_back(0.0);
  }
  f.knots.push_back(nodes[i]);
  f.values.push_back(1.0);
  if (i + 1 < basis.size()) {
    f.knots.push_back(nodes[i + 1]);
    f.values.push_back(0.0);
  }
  return f;
}

PiecewiseLinear PiecewiseLinear::from_combination(
    const FemBasis& basis, std::span<const double> coeffs) {
  if (static_cast<int>(coeffs.size()) != basis.size()) {
    throw InvalidParameter("coefficient count must match basis size");
  }
  return {basis.nodes(), {coeffs.begin(), coeffs.end()}, 0.0, 0.0};
}

double apply_kernel_operator(const TransitionKernel& kernel,
                             const PiecewiseLinear& f, double x) {
  const double mean = kernel.mean_next(x);
  const double sd = kernel.sd();
  if (f.knots.empty()) return f.left_value;
  double sum = 0;
  if (f.left_value != 0) {
    sum += f.left_value * std_normal_cdf((f.knots.front() - mean) / sd);
  }
  if (f.right_value != 0) {
    sum += f.right_value * std_normal_cdf((mean - f.knots.back()) / sd);
  }
  for (std::size_t j = 0; j + 1 < f.knots.size(); ++j) {
    sum += linear_piece(f.knots[j], f.knots[j + 1], f.values[j],
                        f.values[j + 1], mean, sd);
  }
  return sum;
}

double hat_expectation(const TransitionKernel& kernel, const FemBasis& basis,
                       int i, double x) {
  const auto& nodes = basis.nodes();
  const double mean = kernel.mean_next(x);
  const double sd = kernel.sd();
  double sum = 0;
  if (i > 0) sum += linear_piece(nodes[i - 1], nodes[i], 0.0, 1.0, mean, sd);
  if (i + 1 < basis.size()) {
    sum += linear_piece(nodes[i], nodes[i + 1], 1.0, 0.0, mean, sd);
  }
  return sum;
}

double hat_generator(const TransitionKernel& kernel, const FemBasis& basis,
                     int i, double x) {
  return hat_expectation(kernel, basis, i, x) - basis.hat(i, x);
}

// ---------------------------------------------------------------- quadrature

namespace {

constexpr int kTailPanels = 24;
constexpr double kTailShrink = 0.25;

// Gauss-Legendre panels in the probability variable u of a tail: the panels
// are [u/4, u], [u/16, u/4], ... and a final [0, u 4^-kTailPanels].
template <class Map>
void append_tail(double top, const numerics::GaussLegendreRule& rule,
                 Map&& to_x, std::vector<double>& xs, std::vector<double>& ws) {
  if (!(top > 0)) return;
  double hi = top;
  for (int k = 0; k <= kTailPanels; ++k) {
    const double lo = k == kTailPanels ? 0.0 : hi * kTailShrink;
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      xs.push_back(to_x(mid + half * rule.nodes[j]));
      ws.push_back(half * rule.weights[j]);
    }
    hi = lo;
  }
}

WeightedQuadrature quadrature_on_breakpoints(std::span<const double> breaks,
                                             const Density1D& reference,
                                             int order) {
  const auto& rule = numerics::gauss_legendre(order);
  WeightedQuadrature q;
  std::vector<double> lx, lw;
  append_tail(reference.cdf(breaks.front()), rule,
              [&](double u) { return reference.quantile(u); }, lx, lw);
  // Left tail comes out ordered from the boundary outward; flip it.
  std::reverse(lx.begin(), lx.end());
  std::reverse(lw.begin(), lw.end());
  q.points = std::move(lx);
  q.weights = std::move(lw);
  q.interior_begin = q.points.size();
  for (std::size_t e = 0; e + 1 < breaks.size(); ++e) {
    const double a = breaks[e];
    const double b = breaks[e + 1];
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double x = mid + half * rule.nodes[j];
      q.points.push_back(x);
      q.weights.push_back(half * rule.weights[j] * reference.pdf(x));
    }
  }
  q.interior_end = q.points.size();
  append_tail(reference.survival(breaks.back()), rule,
              [&](double t) { return reference.upper_quantile(t); }, q.points,
              q.weights);
  return q;
}

}  // namespace

WeightedQuadrature build_quadrature(const FemBasis& basis,
                                    const Density1D& reference, int order) {
  return quadrature_on_breakpoints(basis.nodes(), reference, order);
}

// ---------------------------------------------------------------- Gram

double GramSystem::condition_estimate() const {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      matrix, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const double largest = ev.cwiseAbs().maxCoeff();
  const double smallest = ev.cwiseAbs().minCoeff();
  return largest / std::max(smallest, std::numeric_limits<double>::min());
}

GramSystem assemble_gram(const FemBasis& basis, const TransitionKernel& kernel,
                         const ReferenceDensity& reference,
                         int quadrature_order) {
  const Density1D& r = as_density(reference);
  auto quad = build_quadrature(basis, r, quadrature_order);
  const auto n = static_cast<Eigen::Index>(basis.size());
  const auto npts = static_cast<Eigen::Index>(quad.points.size());

  for (Eigen::Index k = 0; k < npts; ++k) {
    const double w = quad.weights[k];
    const double x = quad.points[k];
    const bool interior = static_cast<std::size_t>(k) >= quad.interior_begin &&
                          static_cast<std::size_t>(k) < quad.interior_end;
    if (!std::isfinite(w) || !std::isfinite(x) || (interior && !(w > 0))) {
      std::string where = "tail";
      if (interior) {
        where = "element " + std::to_string((k - quad.interior_begin) /
                                            quadrature_order);
      }
      throw SolverError("Gram quadrature non-finite on " + where +
                            " (reference density underflow)",
                        std::numeric_limits<double>::quiet_NaN());
    }
  }

  Eigen::MatrixXd values(n, npts);
  for (Eigen::Index k = 0; k < npts; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      values(i, k) =
          hat_generator(kernel, basis, static_cast<int>(i), quad.points[k]);
    }
  }
  const Eigen::Map<const Eigen::VectorXd> w(quad.weights.data(), npts);
  const Eigen::MatrixXd scaled = values * w.cwiseSqrt().asDiagonal();

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  a.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
  a = a.selfadjointView<Eigen::Lower>();
  Eigen::VectorXd rhs = values * w;

  if (!a.allFinite() || !rhs.allFinite()) {
    throw SolverError("Gram matrix has non-finite entries",
                      std::numeric_limits<double>::quiet_NaN());
  }
  return GramSystem{std::move(a),      std::move(rhs), Eigen::VectorXd(),
                    std::move(values), std::move(quad), reference,
                    kernel,            basis};
}

GramSolution solve_gram(const Eigen::MatrixXd& matrix,
                        const Eigen::VectorXd& rhs) {
  const auto n = matrix.rows();
  if (n == 0 || matrix.cols() != n || rhs.size() != n) {
    throw InvalidParameter("Gram system dimensions do not match");
  }
  // |<e, Lf_i>| <= ||Lf_i|| = sqrt(A_ii), so sqrt(trace A) is the largest
  // rhs the system can carry. It floors the tolerance when rhs is ~0.
  const double tolerance =
      1e-8 * rhs.norm() + 1e-12 * std::sqrt(std::max(matrix.trace(), 0.0));

  GramSolution out;
  const double shift = 1e-12 * matrix.trace() / static_cast<double>(n);
  Eigen::MatrixXd shifted = matrix;
  shifted.diagonal().array() += shift;
  const Eigen::LLT<Eigen::MatrixXd> llt(shifted);
  if (llt.info() == Eigen::Success) {
    out.coefficients = llt.solve(rhs);
    out.residual = (matrix * out.coefficients - rhs).norm();
    out.method = "cholesky";
    if (out.coefficients.allFinite() &&
        out.residual <= tolerance) {
      return out;
    }
  }
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(matrix);
  out.coefficients = cod.solve(rhs);
  out.residual = (matrix * out.coefficients - rhs).norm();
  out.method = "complete-orthogonal";
  if (!out.coefficients.allFinite() ||
      out.residual > tolerance) {
    throw SolverError("Gram solve residual " + std::to_string(out.residual) +
                          " above tolerance",
                      out.residual);
  }
  return out;
}

GramSolution solve_gram(GramSystem& system) {
  auto sol = solve_gram(system.matrix, system.rhs);
  system.coefficients = sol.coefficients;
  return sol;
}

// ---------------------------------------------------------------- q and pi*

double RatioReconstruction::projected(double x) const {
  double sum = 0;
  for (int i = 0; i < system_.basis.size(); ++i) {
    const double a = system_.coefficients[i];
    if (a != 0) sum += a * hat_generator(system_.kernel, system_.basis, i, x);
  }
  return sum;
}

double RatioReconstruction::ratio(double x) const {
  return (1.0 - projected(x)) / norm_sq_;
}

double RatioReconstruction::raw_density(double x) const {
  return as_density(system_.reference).pdf(x) * ratio(x);
}

double RatioReconstruction::density(double x) const {
  return std::max(raw_density(x), 0.0) / normalizer_;
}

RatioReconstruction reconstruct_density(const GramSystem& system) {
  if (system.coefficients.size() != system.matrix.rows()) {
    throw InvalidParameter("reconstruct_density needs a solved Gram system");
  }
  RatioReconstruction rec(system);
  const auto& quad = rec.system_.quadrature;
  const auto npts = static_cast<Eigen::Index>(quad.points.size());
  const Eigen::Map<const Eigen::VectorXd> w(quad.weights.data(), npts);
  const Eigen::VectorXd projected =
      rec.system_.generator_values.transpose() * rec.system_.coefficients;
  const Eigen::VectorXd residual = Eigen::VectorXd::Ones(npts) - projected;

  rec.norm_sq_ = residual.cwiseProduct(residual).dot(w);
  if (!(rec.norm_sq_ > 0) || !std::isfinite(rec.norm_sq_)) {
    throw SolverError("projection captured the constant function",
                      rec.norm_sq_);
  }
  const Eigen::VectorXd q = residual / rec.norm_sq_;
  const Density1D& r = as_density(rec.system_.reference);
  double positive = 0;
  for (Eigen::Index k = 0; k < npts; ++k) {
    const double wq = w[k] * q[k];
    rec.raw_mass_ += wq;
    const auto ku = static_cast<std::size_t>(k);
    if (ku >= quad.interior_begin && ku < quad.interior_end) {
      rec.domain_mass_ += wq;
    }
    if (q[k] < 0) {
      rec.clipped_mass_ -= wq;
      rec.max_clip_ = std::max(rec.max_clip_, -q[k] * r.pdf(quad.points[k]));
    } else {
      positive += wq;
    }
  }
  rec.normalizer_ = positive;
  rec.orthogonality_ =
      (rec.system_.generator_values * residual.cwiseProduct(w))
          .cwiseAbs()
          .maxCoeff();
  return rec;
}

std::vector<double> RatioReconstruction::bin_masses(double first_center,
                                                    int bins) const {
  const auto& rule = numerics::gauss_legendre(8);
  const auto& nodes = system_.basis.nodes();
  std::vector<double> out(static_cast<std::size_t>(std::max(bins, 0)), 0.0);
  for (int j = 0; j < bins; ++j) {
    const double a = first_center + j - 0.5;
    const double b = a + 1.0;
    std::vector<double> cuts{a};
    for (auto it = std::upper_bound(nodes.begin(), nodes.end(), a);
         it != nodes.end() && *it < b; ++it) {
      cuts.push_back(*it);
    }
    cuts.push_back(b);
    double sum = 0;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      sum += numerics::integrate_panel(rule, cuts[c], cuts[c + 1],
                                       [this](double x) { return density(x); });
    }
    out[j] = sum;
  }
  return out;
}

double bar_residual(const TransitionKernel& kernel, const Density1D& reference,
                    const std::function<double(double)>& ratio,
                    std::span<const double> ratio_breakpoints,
                    const FemBasis& test_family, int order) {
  std::vector<double> breaks(test_family.nodes());
  breaks.insert(breaks.end(), ratio_breakpoints.begin(),
                ratio_breakpoints.end());
  breaks.push_back(0.0);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end(),
                           [](double a, double b) {
                             return std::abs(a - b) <= 1e-12 * (1 + std::abs(a));
                           }),
               breaks.end());
  const auto quad = quadrature_on_breakpoints(breaks, reference, order);
  std::vector<double> weighted(quad.points.size());
  for (std::size_t k = 0; k < quad.points.size(); ++k) {
    weighted[k] = quad.weights[k] * ratio(quad.points[k]);
  }
  double sup = 0;
  for (int i = 0; i < test_family.size(); ++i) {
    double sum = 0;
    for (std::size_t k = 0; k < quad.points.size(); ++k) {
      sum += weighted[k] * hat_generator(kernel, test_family, i, quad.points[k]);
    }
    sup = std::max(sup, std::abs(sum));
  }
  return sup;
}

ProjectionResult project_stationary_density(const ModelParams& p,
                                            const ProjectionOptions& options) {
  const auto d = derive_diffusion_params(p);
  auto reference = proxy_density(d, p.daily_service_prob());
  auto [lo, hi] = working_domain(d);
  if (options.grid_lo) lo = *options.grid_lo;
  if (options.grid_hi) hi = *options.grid_hi;
  const auto basis = fit_basis(lo, hi, options.elements);
  const TransitionKernel kernel(d, p.daily_service_prob());
  auto system = assemble_gram(basis, kernel, reference, options.quadrature_order);
  auto solution = solve_gram(system);
  const double cond = system.condition_estimate();
  auto rec = reconstruct_density(system);
  return {d, reference, std::move(rec), std::move(solution), cond};
}

}  // namespace midnight
