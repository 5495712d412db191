#include "phasedpg/policy.hpp"

#include <cmath>
#include <sstream>

namespace phasedpg {

void validate_params(const PolicyParams& params) {
  if (params.theta.rows() == 0 || params.theta.cols() == 0)
    throw InvalidArgument("policy parameters must be non-empty");
  if (!params.theta.allFinite()) throw InvalidArgument("policy parameters must be finite");
}

StatePolicy softmax_policy(const PolicyParams& params) {
  const Matrix& theta = params.theta;
  StatePolicy pi{Matrix(theta.rows(), theta.cols())};
  for (Eigen::Index s = 0; s < theta.rows(); ++s) {
    const double top = theta.row(s).maxCoeff();
    pi.probs.row(s) = (theta.row(s).array() - top).exp().matrix();
    pi.probs.row(s) /= pi.probs.row(s).sum();
  }
  return pi;
}

Matrix log_policy_gradient(const StatePolicy& pi, int s, int a) {
  if (s < 0 || s >= pi.num_states() || a < 0 || a >= pi.num_actions())
    throw InvalidArgument("state/action index out of range");
  Matrix grad = Matrix::Zero(pi.num_states(), pi.num_actions());
  grad.row(s) = -pi.probs.row(s);
  grad(s, a) += 1.0;
  return grad;
}

Matrix log_policy_gradient(const PolicyParams& params, int s, int a) {
  return log_policy_gradient(softmax_policy(params), s, a);
}

double regularizer(const PolicyParams& params) {
  // log pi(a|s) = theta_{s,a} - logsumexp(theta_s), stable for tiny probabilities.
  const Matrix& theta = params.theta;
  double total = 0.0;
  for (Eigen::Index s = 0; s < theta.rows(); ++s) {
    const double top = theta.row(s).maxCoeff();
    const double lse = top + std::log((theta.row(s).array() - top).exp().sum());
    total += theta.row(s).sum() - static_cast<double>(theta.cols()) * lse;
  }
  return total / static_cast<double>(theta.size());
}

Matrix regularizer_gradient(const StatePolicy& pi) {
  const double sa = static_cast<double>(pi.probs.size());
  const double a = static_cast<double>(pi.num_actions());
  return ((1.0 - a * pi.probs.array()) / sa).matrix();
}

Matrix regularizer_gradient(const PolicyParams& params) {
  return regularizer_gradient(softmax_policy(params));
}

PolicyParams post_process(const PolicyParams& params, const PostProcessConfig& cfg) {
  const double num_actions = static_cast<double>(params.num_actions());
  if (!(cfg.epsilon_pp > 0.0 && cfg.epsilon_pp <= 1.0 / num_actions)) {
    std::ostringstream os;
    os << "epsilon_pp must lie in (0, 1/A], got " << cfg.epsilon_pp;
    throw InvalidArgument(os.str());
  }
  const StatePolicy pi = softmax_policy(params);
  const double mix = 1.0 - num_actions * cfg.epsilon_pp;
  return PolicyParams((cfg.epsilon_pp + mix * pi.probs.array()).log().matrix());
}

PolicyParams recenter(const PolicyParams& params) {
  Matrix centered = params.theta;
  centered.colwise() -= params.theta.rowwise().mean();
  return PolicyParams(std::move(centered));
}

}  // namespace phasedpg
