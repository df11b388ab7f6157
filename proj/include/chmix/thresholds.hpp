#pragma once

#include <string>
#include <vector>

namespace chmix {

struct ThresholdInputs {
  double B = 1.0;  ///< ||c0 - cbar||_{L^2}
  double cbar = 0.0;
  double beta = 2.0;  ///< in (1, 2]
  double mu = 1.0;
  double gamma = 0.01;
  double C_beta_mu = 1.0;
  double grad_u_sup = 0.0;
  int dim = 2;

  void validate() const;
};

struct ThresholdPair {
  double prime = 0.0;  ///< T0' or T1'
  double value = 0.0;  ///< T0 or T1
};

/// T0' = min{gamma^2 / (4 C (1 + cbar^2)(1 + B^2)), gamma ln beta, 1 / (4 mu)},
/// T0 = min{T0', ln beta / (2 mu)}. Two-dimensional inputs only.
ThresholdPair compute_T0(const ThresholdInputs& in);

/// T1' = min{(3/4 - sqrt(beta)/2) gamma^{7/2} / ((1 + B^3)(1 + cbar^4) C), gamma ln beta / 2, 1 / (8 mu)},
/// T1 = min{T1', ln beta / (4 mu)}. Three-dimensional inputs only.
ThresholdPair compute_T1(const ThresholdInputs& in);

/// (1 / (C ||u||_C2)) ln(1 + C ||u||_C2 / gamma); 1/gamma in the limit ||u||_C2 -> 0.
double lower_bound_tau2(double c2_norm, double gamma, double C_dim = 1.0);

struct HypothesisReport {
  bool theorem_applies = false;
  double margin = 0.0;  ///< left side / right side
  double lhs = 0.0;
  double threshold = 0.0;
};

/// dim 2: tau2 < T0; dim 3: (1 + grad_u_sup)^{1/2} tau2 < T1. estimate_dim is
/// the dimension of the run that produced tau2.
HypothesisReport hypothesis_check(const ThresholdInputs& in, double tau2, int estimate_dim);

// Calibration of the unspecified constants against fixture runs.

struct HypothesisFixture {
  ThresholdInputs inputs;  ///< C_beta_mu ignored
  double tau2 = 0.0;
  bool certificate_holds = false;
  std::string label;
};

struct ConstantCalibration {
  /// Smallest constant for which every fixture meeting the hypothesis also
  /// meets its certificate (0 when no fixture constrains it).
  double lower = 0.0;
  /// Largest constant for which every certified fixture still meets the
  /// hypothesis (+inf when none is certified or none can meet it).
  double upper = 0.0;
  /// max(lower, upper) when upper is finite, otherwise lower.
  double recommended = 0.0;
  std::vector<double> critical;  ///< per fixture: hypothesis holds iff C < critical
};

/// Calibrates C_beta_mu: the hypothesis is monotone in C, so each fixture has
/// a critical constant above which it fails.
ConstantCalibration calibrate_C_beta_mu(const std::vector<HypothesisFixture>& fixtures);

/// Smallest C_dim with lower_bound_tau2(c2, gamma, C_dim) <= tau2 for every
/// (c2, gamma, tau2); fixtures with c2 == 0 are rejected since the bound then
/// equals 1/gamma for every C_dim.
struct LowerBoundFixture {
  double c2_norm = 0.0;
  double gamma = 0.0;
  double tau2 = 0.0;
};
double calibrate_C_dim(const std::vector<LowerBoundFixture>& fixtures);

}  // namespace chmix
