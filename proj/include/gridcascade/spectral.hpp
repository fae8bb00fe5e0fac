#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

#include "gridcascade/grid.hpp"

namespace cascade {

/// Uniform-parameter assumptions behind the linearized closed-loop analysis:
/// identical coupling k on every line, identical damping gamma, inertia 1.
struct LinearModelParams {
  double coupling = 1.0;  // k > 0
  double damping = 0.1;   // gamma > 0
};

/// Eigenvalues of the (symmetric PSD) Laplacian, sorted nondecreasing.
Eigen::VectorXd laplacian_eigenvalues(const GridTopology& topology,
                                      Weighting weighting = Weighting::unweighted);

/// Smallest eigenvalue above the zero cluster; eigenvalues below
/// 1e-9 * max(1, lambda_N) count as zero. Returns 0 for a disconnected graph.
double algebraic_connectivity(const Eigen::VectorXd& lambdas);

/// The 2N closed-loop eigenvalues, two per Laplacian mode in lambda order:
/// mu = (-(gamma + kc*lambda) +- sqrt((gamma + kc*lambda)^2 - 4*k*lambda)) / 2.
std::vector<std::complex<double>> closed_loop_eigenvalues(const Eigen::VectorXd& lambdas,
                                                          const LinearModelParams& params,
                                                          double gain);

/// Damping ratio of the mode with Laplacian eigenvalue lambda > 0:
/// (gamma + kc*lambda) / (2*sqrt(k*lambda)). Above 1 means overdamped.
double damping_ratio(double lambda, const LinearModelParams& params, double gain);

struct CriticalGain {
  double value = 0.0;     // every mode i >= 2 is overdamped for any gain above this
  double lambda2 = 0.0;
  // In the generic regime (lambda2 >= gamma^2/k) the lambda2 mode sets the
  // bound and value == 2*sqrt(k/lambda2) - gamma/lambda2. Otherwise that
  // formula understates the requirement and the max over per-mode thresholds
  // is returned instead, with this flag set.
  bool degenerate = false;
  double lambda2_formula_value = 0.0;
};

/// Critical control gain from the unweighted post-fault Laplacian spectrum.
/// Throws ValidationError when the post-fault topology is disconnected
/// (lambda2 = 0: synchrony cannot be restored over the surviving wiring).
CriticalGain critical_gain(const GridTopology& post_fault, const LinearModelParams& params);

/// Per-mode overdamping threshold 2*sqrt(k/lambda) - gamma/lambda (clamped
/// at zero: a nonnegative gain cannot be required to be negative).
double mode_gain_threshold(double lambda, const LinearModelParams& params);

/// Oracle check: assembles the 2N x 2N closed-loop block matrix
/// [[0, I], [-k*L, -gamma*I - kc*L]] explicitly, computes its spectrum
/// numerically, and returns the largest distance to the analytic eigenvalue
/// set under nearest matching.
double verify_spectrum_against_dense(const GridTopology& post_fault,
                                     const LinearModelParams& params, double gain);

struct SpectralSummary {
  Eigen::VectorXd laplacian_eigenvalues;  // sorted nondecreasing
  double lambda2 = 0.0;
  std::vector<std::complex<double>> closed_loop;  // 2N, in lambda order
};

SpectralSummary spectral_summary(const GridTopology& topology, const LinearModelParams& params,
                                 double gain);

}  // namespace cascade
