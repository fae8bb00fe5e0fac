#include "gridcascade/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gridcascade/errors.hpp"

namespace cascade {

Eigen::VectorXd laplacian_eigenvalues(const GridTopology& topology, Weighting weighting) {
  Eigen::MatrixXd matrix = laplacian(topology, weighting);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();  // ascending
}

double algebraic_connectivity(const Eigen::VectorXd& lambdas) {
  if (lambdas.size() == 0) return 0.0;
  const double zero_cut = 1e-9 * std::max(1.0, lambdas[lambdas.size() - 1]);
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
    if (lambdas[i] > zero_cut) return lambdas[i];
  }
  return 0.0;
}

std::vector<std::complex<double>> closed_loop_eigenvalues(const Eigen::VectorXd& lambdas,
                                                          const LinearModelParams& params,
                                                          double gain) {
  std::vector<std::complex<double>> result;
  result.reserve(2 * static_cast<size_t>(lambdas.size()));
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
    const double lambda = lambdas[i];
    const double sum = params.damping + gain * lambda;  // -(mu1 + mu2)
    const double discriminant = sum * sum - 4.0 * params.coupling * lambda;
    if (discriminant >= 0.0) {
      const double root = std::sqrt(discriminant);
      result.emplace_back(0.5 * (-sum - root), 0.0);
      result.emplace_back(0.5 * (-sum + root), 0.0);
    } else {
      const double root = std::sqrt(-discriminant);
      result.emplace_back(-0.5 * sum, -0.5 * root);
      result.emplace_back(-0.5 * sum, 0.5 * root);
    }
  }
  return result;
}

double damping_ratio(double lambda, const LinearModelParams& params, double gain) {
  if (!(lambda > 0.0)) {
    throw ValidationError("damping ratio is defined for lambda > 0");
  }
  return (params.damping + gain * lambda) / (2.0 * std::sqrt(params.coupling * lambda));
}

double mode_gain_threshold(double lambda, const LinearModelParams& params) {
  const double threshold =
      2.0 * std::sqrt(params.coupling / lambda) - params.damping / lambda;
  return std::max(0.0, threshold);
}

CriticalGain critical_gain(const GridTopology& post_fault, const LinearModelParams& params) {
  const Eigen::VectorXd lambdas = laplacian_eigenvalues(post_fault, Weighting::unweighted);
  const double lambda2 = algebraic_connectivity(lambdas);
  const double zero_cut = 1e-9 * std::max(1.0, lambdas.size() > 0 ? lambdas[lambdas.size() - 1] : 0.0);
  // Multiplicity of the zero eigenvalue equals the component count.
  int zero_count = 0;
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
    if (lambdas[i] <= zero_cut) ++zero_count;
  }
  if (zero_count != 1 || lambda2 <= 0.0) {
    throw ValidationError(
        "post-fault network is disconnected (lambda_2 = 0); the control layer "
        "cannot restore synchrony over the surviving wiring");
  }

  CriticalGain result;
  result.lambda2 = lambda2;
  result.lambda2_formula_value = mode_gain_threshold(lambda2, params);
  double max_threshold = 0.0;
  for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
    if (lambdas[i] <= zero_cut) continue;
    max_threshold = std::max(max_threshold, mode_gain_threshold(lambdas[i], params));
  }
  // lambda2 dominates whenever lambda2 >= gamma^2/k (the per-mode threshold
  // is decreasing in lambda there); below that the max over modes governs.
  result.degenerate = lambda2 * params.coupling < params.damping * params.damping;
  result.value = result.degenerate ? max_threshold : result.lambda2_formula_value;
  return result;
}

double verify_spectrum_against_dense(const GridTopology& post_fault,
                                     const LinearModelParams& params, double gain) {
  const int n = post_fault.node_count;
  const Eigen::MatrixXd lap = laplacian(post_fault, Weighting::unweighted);
  Eigen::MatrixXd closed_loop = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  closed_loop.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
  closed_loop.bottomLeftCorner(n, n) = -params.coupling * lap;
  closed_loop.bottomRightCorner(n, n) =
      -params.damping * Eigen::MatrixXd::Identity(n, n) - gain * lap;

  Eigen::EigenSolver<Eigen::MatrixXd> solver(closed_loop, false);
  std::vector<std::complex<double>> numeric(solver.eigenvalues().data(),
                                            solver.eigenvalues().data() + 2 * n);

  const Eigen::VectorXd lambdas = laplacian_eigenvalues(post_fault, Weighting::unweighted);
  const auto analytic = closed_loop_eigenvalues(lambdas, params, gain);

  // Nearest matching without replacement; the two sets agree to solver
  // accuracy, so a greedy pairing is ample here.
  std::vector<bool> used(numeric.size(), false);
  double worst = 0.0;
  for (const auto& value : analytic) {
    double best = std::numeric_limits<double>::infinity();
    size_t best_index = 0;
    for (size_t j = 0; j < numeric.size(); ++j) {
      if (used[j]) continue;
      const double distance = std::abs(value - numeric[j]);
      if (distance < best) {
        best = distance;
        best_index = j;
      }
    }
    used[best_index] = true;
    worst = std::max(worst, best);
  }
  return worst;
}

SpectralSummary spectral_summary(const GridTopology& topology, const LinearModelParams& params,
                                 double gain) {
  SpectralSummary summary;
  summary.laplacian_eigenvalues = laplacian_eigenvalues(topology, Weighting::unweighted);
  summary.lambda2 = algebraic_connectivity(summary.laplacian_eigenvalues);
  summary.closed_loop = closed_loop_eigenvalues(summary.laplacian_eigenvalues, params, gain);
  return summary;
}

}  // namespace cascade
