#include "dtflat/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dtflat/errors.hpp"

namespace dtflat {

namespace {

// splitmix64: tiny, stateless-stepping generator with full-period 64-bit
// output. Chosen over <random> engines because report bytes must be
// reproducible from the seed across standard library implementations.
std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double unit_double(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace

double relative_deviation(double a, double b) {
  double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) / scale;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string VerificationReport::summary() const {
  std::string line = pass ? "[PASS] " : "[FAIL] ";
  line += check;
  line += ": max_abs=" + format_double(max_abs);
  line += " max_rel=" + format_double(max_rel);
  line += " tol=" + format_double(tolerance);
  line += " samples=" + std::to_string(samples_evaluated);
  if (samples_rejected > 0) line += " rejected=" + std::to_string(samples_rejected);
  if (samples_skipped > 0) line += " skipped=" + std::to_string(samples_skipped);
  line += " seed=" + std::to_string(seed);
  return line;
}

Sampler::Sampler(const SampleDomain& domain, std::set<VarRef> vars)
    : domain_(domain), vars_(std::move(vars)), state_(domain.seed) {}

double Sampler::uniform(double lo, double hi) {
  return lo + (hi - lo) * unit_double(splitmix64(state_));
}

Binding Sampler::draw() {
  Binding b;
  auto range = static_cast<std::uint64_t>(domain_.k_max - domain_.k_min + 1);
  b.k = domain_.k_min + static_cast<std::int64_t>(splitmix64(state_) % range);
  for (VarRef v : vars_) {
    auto [lo, hi] = domain_.box_for(v);
    b.values[v] = uniform(lo, hi);
  }
  return b;
}

bool Sampler::excluded(const Binding& b) const {
  for (const Exclusion& ex : domain_.exclusions) {
    try {
      if (std::abs(evaluate(ex.expr, b)) <= ex.min_abs) return true;
    } catch (const MissingVariableError&) {
      // The predicate lives in coordinates this check does not sample, so
      // it cannot guard anything here.
      continue;
    } catch (const DivisionNearZeroError&) {
      return true;
    }
  }
  return false;
}

std::string Sampler::render(const Binding& b) {
  std::string out = "k=" + std::to_string(b.k);
  for (const auto& [v, val] : b.values) {
    out += ' ';
    out += v.name();
    out += '=';
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", val);
    out += buf;
  }
  return out;
}

VerificationReport numeric_equal_all(const std::vector<std::pair<Expr, Expr>>& pairs,
                                     const SampleDomain& domain, double tol,
                                     const std::string& check_name) {
  std::set<VarRef> vars;
  for (const auto& [lhs, rhs] : pairs) {
    auto vl = lhs.variables();
    auto vr = rhs.variables();
    vars.insert(vl.begin(), vl.end());
    vars.insert(vr.begin(), vr.end());
  }
  for (const Exclusion& ex : domain.exclusions) {
    auto ve = ex.expr.variables();
    vars.insert(ve.begin(), ve.end());
  }

  VerificationReport report;
  report.check = check_name;
  report.tolerance = tol;
  report.seed = domain.seed;

  Sampler sampler(domain, vars);
  const long max_attempts = std::max(50L * domain.samples, 1000L);
  long attempts = 0;
  while (report.samples_evaluated < domain.samples && attempts < max_attempts) {
    ++attempts;
    Binding b = sampler.draw();
    if (sampler.excluded(b)) {
      ++report.samples_rejected;
      continue;
    }
    double sample_abs = 0.0;
    double sample_rel = 0.0;
    bool evaluated = true;
    for (const auto& [lhs, rhs] : pairs) {
      double va;
      double vb;
      try {
        va = evaluate(lhs, b);
        vb = evaluate(rhs, b);
      } catch (const DivisionNearZeroError&) {
        evaluated = false;
        break;
      }
      sample_abs = std::max(sample_abs, std::abs(va - vb));
      sample_rel = std::max(sample_rel, relative_deviation(va, vb));
    }
    if (!evaluated) {
      ++report.samples_skipped;
      continue;
    }
    ++report.samples_evaluated;
    if (report.samples_evaluated == 1 || sample_rel > report.max_rel) {
      report.max_rel = sample_rel;
      report.worst_sample = Sampler::render(b);
    }
    report.max_abs = std::max(report.max_abs, sample_abs);
  }

  if (report.samples_evaluated == 0)
    throw AllSamplesSingularError("check '" + check_name +
                                  "': every sampled point was rejected or singular");
  if (report.samples_evaluated < domain.samples)
    report.notes.push_back("only " + std::to_string(report.samples_evaluated) + " of " +
                           std::to_string(domain.samples) + " requested samples evaluated");

  report.pass = report.max_rel < tol;
  return report;
}

VerificationReport numeric_equal(const Expr& a, const Expr& b, const SampleDomain& domain,
                                 double tol, const std::string& check_name) {
  return numeric_equal_all({{a, b}}, domain, tol, check_name);
}

}  // namespace dtflat
