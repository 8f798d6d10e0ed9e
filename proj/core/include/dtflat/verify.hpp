#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dtflat/expr.hpp"

namespace dtflat {

// Samples where |expr| <= min_abs are rejected before evaluation, keeping
// verification away from singular denominators.
struct Exclusion {
  Expr expr;
  double min_abs = 0.1;
};

struct SampleDomain {
  std::int64_t k_min = -10;
  std::int64_t k_max = 10;
  double box_lo = -2.0;
  double box_hi = 2.0;
  std::map<VarRef, std::pair<double, double>> var_boxes;
  int samples = 100;
  std::uint64_t seed = 0x5eed0001u;
  std::vector<Exclusion> exclusions;

  [[nodiscard]] std::pair<double, double> box_for(VarRef v) const {
    auto it = var_boxes.find(v);
    return it == var_boxes.end() ? std::pair{box_lo, box_hi} : it->second;
  }
  [[nodiscard]] SampleDomain with_seed(std::uint64_t s) const {
    SampleDomain d = *this;
    d.seed = s;
    return d;
  }
  [[nodiscard]] SampleDomain with_samples(int n) const {
    SampleDomain d = *this;
    d.samples = n;
    return d;
  }
};

// Every numeric verdict in the toolkit is wrapped in one of these. A report
// is reproducible from its seed together with the checked objects; renderers
// must not add wall-clock data here.
struct VerificationReport {
  std::string check;
  bool pass = false;
  double tolerance = 0.0;
  double max_abs = 0.0;
  double max_rel = 0.0;
  int samples_evaluated = 0;
  int samples_rejected = 0;  // exclusion hits
  int samples_skipped = 0;   // near-zero denominators during evaluation
  std::uint64_t seed = 0;
  std::string worst_sample;
  std::vector<std::string> notes;

  [[nodiscard]] std::string summary() const;
};

// |a-b| / max(1, |a|, |b|): absolute near zero, relative at scale.
[[nodiscard]] double relative_deviation(double a, double b);

// Deterministic formatting helper shared by all report renderers.
[[nodiscard]] std::string format_double(double v);

// Draws bindings for a fixed variable set in sorted order, so a seed pins
// the whole sample sequence regardless of call-site iteration quirks.
class Sampler {
 public:
  Sampler(const SampleDomain& domain, std::set<VarRef> vars);

  [[nodiscard]] Binding draw();
  [[nodiscard]] bool excluded(const Binding& b) const;
  [[nodiscard]] const std::set<VarRef>& vars() const { return vars_; }

  static std::string render(const Binding& b);

 private:
  const SampleDomain& domain_;
  std::set<VarRef> vars_;
  std::uint64_t state_;
  double uniform(double lo, double hi);
};

// Checks lhs == rhs for every pair at the same sampled binding. The sampled
// variable set is the union over all pairs plus exclusion variables. Throws
// AllSamplesSingularError when no candidate sample survives.
[[nodiscard]] VerificationReport numeric_equal_all(
    const std::vector<std::pair<Expr, Expr>>& pairs, const SampleDomain& domain,
    double tol = 1e-9, const std::string& check_name = "numeric_equal");

[[nodiscard]] VerificationReport numeric_equal(const Expr& a, const Expr& b,
                                               const SampleDomain& domain,
                                               double tol = 1e-9,
                                               const std::string& check_name = "numeric_equal");

}  // namespace dtflat
