#pragma once

// Example systems shared across the test suites. The product system is the
// flat workhorse: a hand inverse, a known flat output with its full
// parameterization, and a polynomial reference trajectory that satisfies
// the dynamics exactly at integer steps. The trig system is the
// counterexample whose linearization is unreachable along any trajectory.

#include <utility>
#include <vector>

#include "dtflat/expr.hpp"
#include "dtflat/flatness.hpp"
#include "dtflat/system.hpp"
#include "dtflat/verify.hpp"

namespace dtflat::fixtures {

// x+ = (x1+u1, x2+u2, x3+u1*u2), zeta = (x1, x2), globally invertible.
inline DiscreteTimeSystem product_system(bool with_inverse = true) {
  std::vector<Expr> f = {parse("x1+u1"), parse("x2+u2"), parse("x3+u1*u2")};
  std::vector<Expr> g = {parse("x1"), parse("x2")};
  std::optional<InverseMap> psi;
  if (with_inverse) {
    psi = InverseMap{
        {parse("z1_[-1]"), parse("z2_[-1]"), parse("x3-(x1-z1_[-1])*(x2-z2_[-1])")},
        {parse("x1-z1_[-1]"), parse("x2-z2_[-1]")}};
  }
  return {3, 2, std::move(f), std::move(g), std::move(psi)};
}

inline DiscreteTimeSystem drift_free_nonreachable_system() {
  std::vector<Expr> f = {parse("-sin(x1-x3)+u2"), parse("(1-sin(x1-x3))*u1"), parse("u2")};
  std::vector<Expr> g = {parse("x1"), parse("x2")};
  return {3, 2, std::move(f), std::move(g)};
}

inline Trajectory product_reference_trajectory(const DiscreteTimeSystem& sys) {
  Signal x = Signal::closed_form(
      {parse("1/2*k*(k-1)"), parse("-1/2*k*(k-1)"), parse("-1/6*k*(k-1)*(2*k-1)")});
  Signal u = Signal::closed_form({parse("k"), parse("-k")});
  return {sys, std::move(x), std::move(u)};
}

inline FlatOutputCandidate product_flat_output(const DiscreteTimeSystem& sys) {
  return {sys, {parse("z1_[-1]"), parse("x3-x2*(x1-z1_[-1])")}};
}

// Shared denominator of the input parameterization's second component.
inline const char* product_u2_denominator() {
  return "y1*(y1_[1]-2*y1_[2]+y1_[3])+y1_[1]*(-2*y1_[1]+5*y1_[2]-2*y1_[3])"
         "+y1_[2]*(-2*y1_[2]+y1_[3])";
}

inline Parameterization product_parameterization() {
  std::string den2 = product_u2_denominator();
  std::vector<Expr> F_x = {
      parse("y1_[1]"),
      parse("(y2-y2_[1])/(y1-2*y1_[1]+y1_[2])"),
      parse("(y1*y2_[1]-y1_[1]*(y2+y2_[1])+y1_[2]*y2)/(y1-2*y1_[1]+y1_[2])")};
  std::vector<Expr> F_u = {
      parse("y1_[2]-y1_[1]"),
      parse("(y1*(y2_[1]-y2_[2])+y1_[1]*(-y2-y2_[1]+2*y2_[2]))/(" + den2 + ")" +
            "+(y1_[2]*(2*y2-y2_[1]-y2_[2])+y1_[3]*(-y2+y2_[1]))/(" + den2 + ")")};
  return {3, 2, {3, 2}, std::move(F_x), std::move(F_u)};
}

inline FlatPair product_flat_pair(const DiscreteTimeSystem& sys) {
  return {product_flat_output(sys), product_parameterization()};
}

// Sampling domain keeping parameterization denominators away from zero.
inline SampleDomain product_domain() {
  SampleDomain domain;
  domain.exclusions.push_back({parse("y1-2*y1_[1]+y1_[2]"), 0.1});
  return domain;
}

inline SampleDomain product_rank_domain() {
  SampleDomain domain = product_domain();
  domain.exclusions.push_back({parse("y1_[1]-2*y1_[2]+y1_[3]"), 0.1});
  return domain;
}

// Scalar integrator x+ = x + u with zeta = u; flat output y = x.
inline DiscreteTimeSystem integrator_system() {
  return {1, 1, {parse("x1+u1")}, {parse("u1")}};
}

inline FlatPair integrator_flat_pair(const DiscreteTimeSystem& sys) {
  return {FlatOutputCandidate(sys, {parse("x1")}),
          Parameterization(1, 1, {1}, {parse("y1")}, {parse("y1_[1]-y1")})};
}

}  // namespace dtflat::fixtures
