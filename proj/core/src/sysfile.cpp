#include "dtflat/sysfile.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "dtflat/errors.hpp"

namespace dtflat {
namespace {

std::string trim(const std::string& s) {
  std::size_t first = 0;
  std::size_t last = s.size();
  while (first < last && std::isspace(static_cast<unsigned char>(s[first]))) ++first;
  while (last > first && std::isspace(static_cast<unsigned char>(s[last - 1]))) --last;
  return s.substr(first, last - first);
}

// One `key = value` line with its location kept for diagnostics.
struct Entry {
  int line = 0;
  std::string value;
};

class FileParser {
 public:
  FileParser(const std::string& text, std::string origin) : origin_(std::move(origin)) {
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
      const std::string stripped = trim(raw);
      if (stripped.empty()) continue;
      const auto eq = stripped.find('=');
      if (eq == std::string::npos)
        throw FileFormatError(at(line) + "expected 'key = value', got '" + stripped + "'");
      const std::string key = trim(stripped.substr(0, eq));
      const std::string value = trim(stripped.substr(eq + 1));
      if (key.empty()) throw FileFormatError(at(line) + "empty key");
      if (value.empty()) throw FileFormatError(at(line) + "empty value for '" + key + "'");
      if (key == "exclude") {
        excludes_.push_back({line, value});
        continue;
      }
      if (!entries_.emplace(key, Entry{line, value}).second)
        throw FileFormatError(at(line) + "duplicate key '" + key + "'");
    }
  }

  SystemFile build() {
    const int n = take_int("n");
    const int m = take_int("m");

    std::vector<Expr> f = take_family("f", n);
    std::vector<Expr> g = take_family("g", m);

    std::optional<InverseMap> psi;
    if (family_present("psi.x") || family_present("psi.u"))
      psi = InverseMap{take_family("psi.x", n), take_family("psi.u", m)};

    std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> equilibrium;
    if (entries_.count("equilibrium.x") || entries_.count("equilibrium.u"))
      equilibrium = {take_vector("equilibrium.x", n), take_vector("equilibrium.u", m)};

    std::optional<std::pair<std::vector<Expr>, std::vector<Expr>>> trajectory;
    if (family_present("trajectory.x") || family_present("trajectory.u"))
      trajectory = {take_family("trajectory.x", n), take_family("trajectory.u", m)};

    bool want_pair = entries_.count("param.R") || family_present("flat.y") ||
                     family_present("param.x") || family_present("param.u");
    std::vector<Expr> phi, F_x, F_u;
    std::vector<int> R;
    if (want_pair) {
      phi = take_family("flat.y", m);
      R = take_int_list("param.R", m);
      F_x = take_family("param.x", n);
      F_u = take_family("param.u", m);
    }

    std::optional<SimulationSetup> simulation;
    if (entries_.count("simulate.x0") || family_present("simulate.u") ||
        entries_.count("simulate.steps") || entries_.count("simulate.k0")) {
      SimulationSetup setup;
      setup.x0 = take_vector("simulate.x0", n);
      setup.u = take_family("simulate.u", m);
      setup.steps = take_int("simulate.steps");
      if (entries_.count("simulate.k0")) setup.k0 = take_int("simulate.k0");
      if (setup.steps < 1)
        throw FileFormatError(origin_ + ": simulate.steps must be positive, got " +
                              std::to_string(setup.steps));
      simulation = std::move(setup);
    }

    if (!entries_.empty()) {
      const auto& [key, entry] = *entries_.begin();
      throw FileFormatError(at(entry.line) + "unknown key '" + key + "'");
    }

    SystemFile file{construct<DiscreteTimeSystem>("dynamics", n, m, std::move(f), std::move(g),
                                                  std::move(psi)),
                    std::nullopt,
                    std::nullopt,
                    {},
                    std::move(simulation)};
    file.system.equilibrium = std::move(equilibrium);
    if (trajectory) {
      try {
        file.trajectory = Trajectory(file.system, Signal::closed_form(std::move(trajectory->first)),
                                     Signal::closed_form(std::move(trajectory->second)));
      } catch (const Error& e) {
        throw FileFormatError(origin_ + ": invalid trajectory: " + e.what());
      }
    }
    if (want_pair)
      file.flat_pair = construct<FlatPair>(
          "flat pair", construct<FlatOutputCandidate>("flat output", file.system, std::move(phi)),
          construct<Parameterization>("parameterization", n, m, std::move(R), std::move(F_x),
                                      std::move(F_u)));
    for (const auto& [line, value] : excludes_)
      file.exclusions.push_back({parse_expr(line, "exclude", value)});
    return file;
  }

 private:
  std::string at(int line) const { return origin_ + ":" + std::to_string(line) + ": "; }

  Entry take(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw FileFormatError(origin_ + ": missing key '" + key + "'");
    Entry entry = std::move(it->second);
    entries_.erase(it);
    return entry;
  }

  Expr parse_expr(int line, const std::string& key, const std::string& value) {
    try {
      return parse(value);
    } catch (const ParseError& e) {
      throw FileFormatError(at(line) + "in '" + key + "': " + e.what());
    }
  }

  int take_int(const std::string& key) {
    const Entry entry = take(key);
    int out = 0;
    const char* begin = entry.value.data();
    const char* end = begin + entry.value.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc{} || ptr != end)
      throw FileFormatError(at(entry.line) + "'" + key + "' must be an integer, got '" +
                            entry.value + "'");
    return out;
  }

  std::vector<int> take_int_list(const std::string& key, int count) {
    const Entry entry = take(key);
    std::istringstream in(entry.value);
    std::vector<int> out;
    int value = 0;
    while (in >> value) out.push_back(value);
    std::string rest;
    if (!in.eof() || in >> rest || static_cast<int>(out.size()) != count)
      throw FileFormatError(at(entry.line) + "'" + key + "' must list " + std::to_string(count) +
                            " integers, got '" + entry.value + "'");
    return out;
  }

  Eigen::VectorXd take_vector(const std::string& key, int count) {
    const Entry entry = take(key);
    std::istringstream in(entry.value);
    std::vector<double> out;
    double value = 0;
    while (in >> value) out.push_back(value);
    std::string rest;
    if (!in.eof() || in >> rest || static_cast<int>(out.size()) != count)
      throw FileFormatError(at(entry.line) + "'" + key + "' must list " + std::to_string(count) +
                            " numbers, got '" + entry.value + "'");
    return Eigen::Map<Eigen::VectorXd>(out.data(), count);
  }

  bool family_present(const std::string& prefix) const {
    auto it = entries_.lower_bound(prefix + ".");
    return it != entries_.end() && it->first.rfind(prefix + ".", 0) == 0;
  }

  // Collects `prefix.1` .. `prefix.count` in order, requiring every index.
  std::vector<Expr> take_family(const std::string& prefix, int count) {
    std::vector<Expr> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 1; i <= count; ++i) {
      const std::string key = prefix + "." + std::to_string(i);
      if (!entries_.count(key))
        throw FileFormatError(origin_ + ": missing key '" + key + "' (expected " +
                              std::to_string(count) + " components)");
      const Entry entry = take(key);
      out.push_back(parse_expr(entry.line, key, entry.value));
    }
    return out;
  }

  // Runs a model constructor, turning its validation errors into file
  // diagnostics.
  template <typename T, typename... Args>
  T construct(const char* what, Args&&... args) {
    try {
      return T(std::forward<Args>(args)...);
    } catch (const FileFormatError&) {
      throw;
    } catch (const Error& e) {
      throw FileFormatError(origin_ + ": invalid " + std::string(what) + ": " + e.what());
    }
  }

  std::string origin_;
  std::map<std::string, Entry> entries_;
  std::vector<std::pair<int, std::string>> excludes_;
};

}  // namespace

SampleDomain SystemFile::domain() const {
  SampleDomain domain;
  domain.exclusions = exclusions;
  return domain;
}

SystemFile parse_system_text(const std::string& text, const std::string& origin) {
  return FileParser(text, origin).build();
}

SystemFile load_system_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileFormatError(path + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_system_text(buffer.str(), path);
}

}  // namespace dtflat
