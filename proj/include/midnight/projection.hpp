#ifndef MIDNIGHT_PROJECTION_HPP_
#define MIDNIGHT_PROJECTION_HPP_

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "midnight/diffusion.hpp"
#include "midnight/model.hpp"

namespace midnight {

/// Reference density r of the weighted space L^2(R, r).
using ReferenceDensity = std::variant<PiecewiseDensity, NormalDensity>;

const Density1D& as_density(const ReferenceDensity& r);

/// Continuous piecewise-linear test functions on a uniform grid with a node
/// at zero. Function i is the hat of node i; the two boundary hats are
/// supported on a single element. The hats sum to one on [lo, hi].
class FemBasis {
 public:
  double grid_lo() const noexcept { return nodes_.front(); }
  double grid_hi() const noexcept { return nodes_.back(); }
  double element_width() const noexcept { return width_; }
  int num_elements() const noexcept {
    return static_cast<int>(nodes_.size()) - 1;
  }
  /// Number of basis functions (one per node).
  int size() const noexcept { return static_cast<int>(nodes_.size()); }
  const std::vector<double>& nodes() const noexcept { return nodes_; }
  int zero_node() const noexcept { return zero_node_; }

  double hat(int i, double x) const;

 private:
  friend FemBasis build_basis(double, double, int);
  std::vector<double> nodes_;
  double width_ = 0;
  int zero_node_ = 0;
};

/// Uniform grid with m elements on [grid_lo, grid_hi]. Requires
/// grid_lo < 0 < grid_hi, m >= 4 and zero to fall on a node.
FemBasis build_basis(double grid_lo, double grid_hi, int m);

/// Smallest uniform grid with m elements that contains [lo, hi] and has a
/// node at zero.
FemBasis fit_basis(double lo, double hi, int m);

/// Default working domain [theta/mu - 6 sqrt(v), 12 / gamma].
std::pair<double, double> working_domain(const DiffusionParams& d);

/// Piecewise-linear function given by knots and values, extended by
/// constants left_value / right_value outside the knot range (the jump at
/// the outermost knots is allowed).
struct PiecewiseLinear {
  std::vector<double> knots;
  std::vector<double> values;
  double left_value = 0;
  double right_value = 0;

  double operator()(double x) const;

  static PiecewiseLinear constant(double value);
  static PiecewiseLinear from_hat(const FemBasis& basis, int i);
  static PiecewiseLinear from_combination(const FemBasis& basis,
                                          std::span<const double> coeffs);
};

/// (Pf)(x) = E[f(Z)], Z ~ Normal(m(x), sigma^2), in closed form from the
/// normal CDF and density on each linear piece.
double apply_kernel_operator(const TransitionKernel& kernel,
                             const PiecewiseLinear& f, double x);

/// (Pf_i)(x) for basis hat i.
double hat_expectation(const TransitionKernel& kernel, const FemBasis& basis,
                       int i, double x);

/// (Lf_i)(x) = (Pf_i)(x) - f_i(x).
double hat_generator(const TransitionKernel& kernel, const FemBasis& basis,
                     int i, double x);

/// Outer quadrature for <g, h> = \int g h r dx: Gauss-Legendre per element on
/// the grid plus the two tails mapped through the reference CDF, so that the
/// weights already include r(x) dx.
struct WeightedQuadrature {
  std::vector<double> points;
  std::vector<double> weights;
  std::size_t interior_begin = 0;  // points of [lo, hi] occupy
  std::size_t interior_end = 0;    // [interior_begin, interior_end)
};

WeightedQuadrature build_quadrature(const FemBasis& basis,
                                    const Density1D& reference, int order);

struct GramSystem {
  Eigen::MatrixXd matrix;        // A_ij = <Lf_i, Lf_j>
  Eigen::VectorXd rhs;           // <e, Lf_i>
  Eigen::VectorXd coefficients;  // alpha, empty until solved
  Eigen::MatrixXd generator_values;  // Lf_i at the quadrature points
  WeightedQuadrature quadrature;
  ReferenceDensity reference;
  TransitionKernel kernel;
  FemBasis basis;

  /// Largest over smallest absolute eigenvalue of the matrix.
  double condition_estimate() const;
};

/// Throws SolverError naming the element whose quadrature went non-finite.
GramSystem assemble_gram(const FemBasis& basis, const TransitionKernel& kernel,
                         const ReferenceDensity& reference,
                         int quadrature_order = 16);

struct GramSolution {
  Eigen::VectorXd coefficients;
  double residual = 0;  // ||A alpha - rhs||
  std::string method;
};

/// Least-squares solve of A alpha = rhs: shifted Cholesky, falling back to a
/// complete orthogonal decomposition. Throws SolverError when the residual
/// exceeds 1e-8 ||rhs|| + 1e-12 sqrt(trace A).
GramSolution solve_gram(const Eigen::MatrixXd& matrix,
                        const Eigen::VectorXd& rhs);
/// Solves and stores the coefficients in the system.
GramSolution solve_gram(GramSystem& system);

/// pi*(x) = r(x) (1 - e_k(x)) / ||e - e_k||^2 with e_k = sum alpha_i Lf_i.
class RatioReconstruction {
 public:
  double projected(double x) const;  // e_k(x)
  double ratio(double x) const;      // q(x), before clipping
  double raw_density(double x) const;
  /// Clipped and renormalized density.
  double density(double x) const;

  double norm_sq() const noexcept { return norm_sq_; }
  double mass_before_renormalization() const noexcept { return domain_mass_; }
  double total_raw_mass() const noexcept { return raw_mass_; }
  double clipped_mass() const noexcept { return clipped_mass_; }
  double max_clip() const noexcept { return max_clip_; }
  double normalizer() const noexcept { return normalizer_; }
  /// max_i |<e - e_k, Lf_i>|.
  double orthogonality_residual() const noexcept { return orthogonality_; }

  const GramSystem& system() const noexcept { return system_; }

  /// Masses of density() over [c + j - 0.5, c + j + 0.5), j = 0..bins-1.
  std::vector<double> bin_masses(double first_center, int bins) const;

  /// Breakpoints of the reconstructed density (grid nodes and zero).
  const std::vector<double>& breakpoints() const noexcept {
    return system_.basis.nodes();
  }

 private:
  friend RatioReconstruction reconstruct_density(const GramSystem&);
  explicit RatioReconstruction(GramSystem system) : system_(std::move(system)) {}

  GramSystem system_;
  double norm_sq_ = 0;
  double domain_mass_ = 0;
  double raw_mass_ = 0;
  double clipped_mass_ = 0;
  double max_clip_ = 0;
  double normalizer_ = 1;
  double orthogonality_ = 0;
};

/// Requires a solved system. Throws SolverError("projection captured the
/// constant function") when ||e - e_k||^2 <= 0.
RatioReconstruction reconstruct_density(const GramSystem& system);

/// sup_i |\int (Lg_i)(x) ratio(x) r(x) dx| over the hats g_i of a test
/// family, integrated piecewise between the union of both grids' nodes.
double bar_residual(const TransitionKernel& kernel, const Density1D& reference,
                    const std::function<double(double)>& ratio,
                    std::span<const double> ratio_breakpoints,
                    const FemBasis& test_family, int order = 16);

struct ProjectionOptions {
  int elements = 128;
  std::optional<double> grid_lo;
  std::optional<double> grid_hi;
  int quadrature_order = 16;
};

struct ProjectionResult {
  DiffusionParams diffusion;
  PiecewiseDensity reference;
  RatioReconstruction reconstruction;
  GramSolution solution;
  double condition_estimate;
};

/// End to end: proxy reference, working domain, FEM basis, Gram system,
/// solve and reconstruction for the centered diffusion of model p.
ProjectionResult project_stationary_density(const ModelParams& p,
                                            const ProjectionOptions& options = {});

}  // namespace midnight

#endif  // MIDNIGHT_PROJECTION_HPP_
