#pragma once

#include "phasedpg/estimator.hpp"
#include "phasedpg/policy.hpp"

#include <vector>

namespace phasedpg {

/// Central differences of L_lambda(theta) = F(pi_theta) + lambda R(theta).
Matrix finite_difference_gradient(const Mdp& m, const PolicyParams& params, double lambda, double h);

struct FiniteDifferenceCheck {
  Matrix coarse;  // step h
  Matrix fine;    // step h/2
  Matrix richardson;  // (4 fine - coarse) / 3
  double consistency = 0.0;  // ||coarse - fine|| / max(1, ||fine||)
};

/// Two-scale differences; a large `consistency` flags a step-size pathology.
FiniteDifferenceCheck finite_difference_check(const Mdp& m, const PolicyParams& params,
                                              double lambda, double h);

/// ||exact - approx|| / max(||exact||, 1e-6); the floor keeps a vanishing
/// gradient from turning rounding noise into a large relative error.
double gradient_relative_error(const Matrix& exact, const Matrix& approx);

/// Exact moments of the REINFORCE estimate over every trajectory of horizon H.
struct EnumerationReport {
  Matrix mean_gradient;
  double second_moment = 0.0;      // E ||g||^2
  double trace_covariance = 0.0;   // E ||g||^2 - ||E g||^2
  double total_probability = 0.0;
  long long atoms = 0;             // nonzero-probability trajectories visited
};

/// Upper limit on (S A)^{H+1} S^H.
inline constexpr double kEnumerationLimit = 1e7;

/// Rejects reinforcement-average baselines and instances above the limit.
EnumerationReport enumerate_estimator(const Mdp& m, const PolicyParams& params, double lambda,
                                      const EstimatorConfig& cfg, int horizon);

struct TrajectoryAtom {
  double probability = 0.0;
  Matrix gradient;
};

/// Every nonzero-probability trajectory of horizon H with its estimate.
std::vector<TrajectoryAtom> enumerate_atoms(const Mdp& m, const PolicyParams& params,
                                            double lambda, const EstimatorConfig& cfg, int horizon);

struct AscentResult {
  PolicyParams params;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Exact gradient ascent on L_lambda with backtracking until
/// ||grad L_lambda|| <= tolerance.
AscentResult ascend_regularized(const Mdp& m, const PolicyParams& start, double lambda,
                                double tolerance, int max_iterations = 200000);

/// E||g||^2 <= M1 + M2 ||grad L||^2.
bool check_second_moment(const EnumerationReport& report, const Matrix& exact_gradient,
                         const BoundConstants& constants);

}  // namespace phasedpg
