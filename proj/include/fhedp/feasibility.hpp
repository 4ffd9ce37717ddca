// Copyright 2026 The fhedp Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FHEDP_FEASIBILITY_HPP_
#define FHEDP_FEASIBILITY_HPP_

namespace fhedp {

// Outcome of checking one parameter bundle against the conditions that the
// no-clip algorithm's privacy proof relies on.
struct FeasibilityReport {
  double R = 0.0;
  double m_P = 0.0;
  double M_P = 0.0;
  double alpha_step = 0.0;
  double A = 0.0;
  double B_q = 0.0;
  double C_q = 0.0;
  double eta_max = 0.0;
  double kappa_lhs = 0.0;
  double kappa_rhs = 0.0;
  double sigma = 0.0;
  double c_delta = 0.0;
  double e_f = 0.0;
  double e_B = 0.0;
  bool eta_ok = false;
  bool kappa_ok = false;
  bool monotone_ok = false;
  bool mP_nonneg_ok = false;
  bool error_ok = false;

  bool feasible() const { return eta_ok && kappa_ok && monotone_ok && mP_nonneg_ok && error_ok; }
};

}  // namespace fhedp

#endif  // FHEDP_FEASIBILITY_HPP_
