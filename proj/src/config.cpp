#include "lrmr/config.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace lrmr {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

double to_double(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) throw ConfigError(what + ": '" + text + "' is not a number");
  return v;
}

long long to_integer(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) throw ConfigError(what + ": '" + text + "' is not an integer");
  return v;
}

std::string real(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

LambdaRule LambdaRule::parse(const std::string& text) {
  const auto colon = text.find(':');
  LambdaRule rule;
  if (colon == std::string::npos) {
    rule.value = to_double(text, "lambda");
  } else {
    const std::string kind = text.substr(0, colon);
    if (kind == "fixed") {
      rule.kind = Kind::Fixed;
    } else if (kind == "rate") {
      rule.kind = Kind::Rate;
    } else if (kind == "gradient") {
      rule.kind = Kind::Gradient;
    } else {
      throw ConfigError("lambda: unknown rule '" + kind + "' (expected fixed, rate or gradient)");
    }
    rule.value = to_double(text.substr(colon + 1), "lambda");
  }
  if (!std::isfinite(rule.value) || rule.value < 0.0) throw ConfigError("lambda: value must be >= 0");
  return rule;
}

std::string LambdaRule::describe() const {
  switch (kind) {
    case Kind::Fixed:
      return "fixed:" + real(value);
    case Kind::Rate:
      return "rate:" + real(value);
    case Kind::Gradient:
      return "gradient:" + real(value);
  }
  return "";
}

OmegaRule OmegaRule::parse(const std::string& text) {
  const auto words = split_words(text);
  if (words.size() != 2) throw ConfigError("omega: expected 'ratio <k>' or 'fixed <value>'");
  OmegaRule rule;
  if (words[0] == "ratio") {
    rule.kind = Kind::Ratio;
  } else if (words[0] == "fixed") {
    rule.kind = Kind::Fixed;
  } else {
    throw ConfigError("omega: unknown rule '" + words[0] + "'");
  }
  rule.value = to_double(words[1], "omega");
  if (!(rule.value > 0.0)) throw ConfigError("omega: value must be > 0");
  return rule;
}

std::string OmegaRule::describe() const {
  return (kind == Kind::Ratio ? "ratio " : "fixed ") + real(value);
}

void ExperimentConfig::validate() const {
  if (d1 < 1 || d2 < 1) throw ConfigError("d1 and d2 must be >= 1");
  if (spectrum.size() < 1) throw ConfigError("spectrum is required");
  if (rank() > std::min(d1, d2)) throw ConfigError("rank exceeds min(d1, d2)");
  for (Eigen::Index j = 0; j < spectrum.size(); ++j) {
    if (!(spectrum(j) > 0.0) || (j > 0 && spectrum(j) > spectrum(j - 1))) {
      throw ConfigError("spectrum must be positive and nonincreasing");
    }
  }
  if (!(sigma_eps >= 0.0)) throw ConfigError("sigma_eps must be >= 0");
  if (n_grid.empty()) throw ConfigError("n_grid is required");
  for (Eigen::Index n : n_grid) {
    if (n < 1) throw ConfigError("n_grid entries must be >= 1");
  }
  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  if (regularizers.empty()) throw ConfigError("at least one regularizer line is required");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (max_iters < 0 || !(tol > 0.0) || !(shrink > 0.0 && shrink < 1.0)) {
    throw ConfigError("solver settings out of range");
  }
  if (step && !(*step > 0.0)) throw ConfigError("solver.step must be > 0");
  const Eigen::Index m = static_cast<Eigen::Index>(d1) * d2;
  if (sigma_x && sigma_x->dim() != m) throw ConfigError("sigma_x dimension != d1*d2");
  if (sigma_x && !(sigma_x->min_eigenvalue() > 0.0)) throw ConfigError("sigma_x must be positive definite");
  if (const auto* add = std::get_if<AdditiveNoise>(&corruption)) {
    if (add->sigma_w.dim() != m) throw ConfigError("sigma_w dimension != d1*d2");
  }
  const double nuc = spectrum.sum();
  if (omega.kind == OmegaRule::Kind::Fixed && omega.value < nuc) {
    throw ConfigError("omega " + real(omega.value) + " is below ||Theta*||_* = " + real(nuc) +
                      "; the true parameter would be infeasible");
  }
  if (omega.kind == OmegaRule::Kind::Ratio && omega.value < 1.0) {
    throw ConfigError("omega ratio below 1 makes the true parameter infeasible");
  }
  for (const RegularizerRule& reg : regularizers) {
    const double shape = reg.shape;
    if (reg.kind == PenaltyKind::Scad && shape != 0.0 && !(shape > 2.0)) {
      throw ConfigError("SCAD shape must be > 2");
    }
    if (reg.kind == PenaltyKind::Mcp && shape != 0.0 && !(shape > 0.0)) {
      throw ConfigError("MCP shape must be > 0");
    }
    if (step) {
      const double a = shape != 0.0 ? shape
                       : reg.kind == PenaltyKind::Scad ? RegularizerSpec::kDefaultScadShape
                                                       : RegularizerSpec::kDefaultMcpShape;
      const double mu = reg.kind == PenaltyKind::Scad  ? 1.0 / (a - 1.0)
                        : reg.kind == PenaltyKind::Mcp ? 1.0 / a
                                                       : 0.0;
      if (*step * mu >= 1.0) throw ConfigError("solver.step violates step * mu < 1 for a regularizer");
    }
  }
}

namespace {

RegularizerRule parse_regularizer(const std::string& value) {
  const auto words = split_words(value);
  if (words.empty()) throw ConfigError("regularizer: expected '<kind> lambda=<rule> [shape=<a>]'");
  RegularizerRule rule;
  try {
    rule.kind = parse_penalty_kind(words[0]);
  } catch (const Error&) {
    throw ConfigError("regularizer: unknown kind '" + words[0] + "' (expected nuclear, scad or mcp)");
  }
  bool has_lambda = false;
  for (std::size_t i = 1; i < words.size(); ++i) {
    const auto eq = words[i].find('=');
    if (eq == std::string::npos) throw ConfigError("regularizer: expected key=value, got '" + words[i] + "'");
    const std::string key = words[i].substr(0, eq);
    const std::string val = words[i].substr(eq + 1);
    if (key == "lambda") {
      rule.lambda = LambdaRule::parse(val);
      has_lambda = true;
    } else if (key == "shape") {
      rule.shape = to_double(val, "shape");
    } else {
      throw ConfigError("regularizer: unknown field '" + key + "'");
    }
  }
  if (!has_lambda) throw ConfigError("regularizer: lambda is required");
  return rule;
}

Vector parse_spectrum(const std::vector<std::string>& words, long long r) {
  if (words.empty()) throw ConfigError("spectrum: empty");
  if (words[0] == "constant") {
    if (words.size() != 2) throw ConfigError("spectrum: expected 'constant <value>'");
    if (r < 1) throw ConfigError("spectrum: 'constant' needs r to be set first");
    return Vector::Constant(r, to_double(words[1], "spectrum"));
  }
  std::size_t start = words[0] == "list" ? 1 : 0;
  Vector s(static_cast<Eigen::Index>(words.size() - start));
  for (std::size_t i = start; i < words.size(); ++i) s(i - start) = to_double(words[i], "spectrum");
  if (s.size() == 0) throw ConfigError("spectrum: empty list");
  if (r >= 1 && s.size() != r) throw ConfigError("spectrum: length differs from r");
  return s;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  ExperimentConfig cfg;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  bool has_version = false;
  long long r = 0;
  std::string sigma_x_text;
  std::string corruption_text = "none";
  std::string spectrum_text;
  int spectrum_line = 0;
  int corruption_line = 0;
  int sigma_x_line = 0;
  std::map<std::string, int> seen;

  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string where = source + ":" + std::to_string(line_no) + ": " + key;
    if (key != "regularizer" && seen.count(key) != 0) {
      throw ConfigError(where + ": duplicate key (first set on line " + std::to_string(seen[key]) + ")");
    }
    seen[key] = line_no;
    try {
      if (key == "schema_version") {
        const auto v = to_integer(value, "schema_version");
        if (v != kConfigSchemaVersion) {
          throw ConfigError("unsupported schema_version " + value + " (this build reads " +
                            std::to_string(kConfigSchemaVersion) + ")");
        }
        has_version = true;
      } else if (key == "d1") {
        cfg.d1 = static_cast<int>(to_integer(value, key));
      } else if (key == "d2") {
        cfg.d2 = static_cast<int>(to_integer(value, key));
      } else if (key == "r") {
        r = to_integer(value, key);
        if (r < 1) throw ConfigError("r must be >= 1");
      } else if (key == "spectrum") {
        spectrum_text = value;
        spectrum_line = line_no;
      } else if (key == "sigma_x") {
        sigma_x_text = value;
        sigma_x_line = line_no;
      } else if (key == "corruption") {
        corruption_text = value;
        corruption_line = line_no;
      } else if (key == "sigma_eps") {
        cfg.sigma_eps = to_double(value, key);
      } else if (key == "n_grid") {
        for (const auto& w : split_words(value)) cfg.n_grid.push_back(to_integer(w, key));
      } else if (key == "replicates") {
        cfg.replicates = static_cast<int>(to_integer(value, key));
      } else if (key == "regularizer") {
        cfg.regularizers.push_back(parse_regularizer(value));
      } else if (key == "omega") {
        cfg.omega = OmegaRule::parse(value);
      } else if (key == "solver.max_iters") {
        cfg.max_iters = static_cast<int>(to_integer(value, key));
      } else if (key == "solver.tol") {
        cfg.tol = to_double(value, key);
      } else if (key == "solver.step") {
        if (value == "backtracking") {
          cfg.step.reset();
        } else {
          cfg.step = to_double(value, key);
        }
      } else if (key == "solver.shrink") {
        cfg.shrink = to_double(value, key);
      } else if (key == "init") {
        if (value == "zero") {
          cfg.init = InitKind::Zero;
        } else if (value == "random") {
          cfg.init = InitKind::Random;
        } else {
          throw ConfigError("expected zero or random");
        }
      } else if (key == "spectrum_threshold") {
        if (value == "nu") {
          cfg.threshold = SpectrumThreshold::Nu;
        } else if (value == "mu") {
          cfg.threshold = SpectrumThreshold::Mu;
        } else {
          throw ConfigError("expected nu or mu");
        }
      } else if (key == "seed") {
        const auto v = to_integer(value, key);
        if (v < 0) throw ConfigError("seed must be >= 0");
        cfg.seed = static_cast<std::uint64_t>(v);
      } else if (key == "output") {
        cfg.output = value;
      } else if (key == "threads") {
        cfg.threads = static_cast<int>(to_integer(value, key));
      } else if (key == "timing") {
        if (value != "true" && value != "false") throw ConfigError("expected true or false");
        cfg.timing = value == "true";
      } else {
        throw ConfigError("unknown key");
      }
    } catch (const Error& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }

  if (!has_version) throw ConfigError(source + ": missing 'schema_version = 1'");
  if (cfg.d1 < 1 || cfg.d2 < 1) throw ConfigError(source + ": d1 and d2 are required");
  const Eigen::Index m = static_cast<Eigen::Index>(cfg.d1) * cfg.d2;
  auto at = [&](int ln, const std::string& key) {
    return source + ":" + std::to_string(ln) + ": " + key + ": ";
  };
  try {
    cfg.spectrum = parse_spectrum(split_words(spectrum_text), r);
  } catch (const Error& e) {
    throw ConfigError(at(spectrum_line, "spectrum") + e.what());
  }
  if (!sigma_x_text.empty()) {
    try {
      cfg.sigma_x = Covariance::parse(sigma_x_text, m);
    } catch (const Error& e) {
      throw ConfigError(at(sigma_x_line, "sigma_x") + e.what());
    }
  }
  try {
    const auto words = split_words(corruption_text);
    if (words.empty() || words[0] == "none") {
      if (words.size() > 1) throw ConfigError("'none' takes no arguments");
      cfg.corruption = NoCorruption{};
    } else if (words[0] == "additive") {
      const auto rest = trim(corruption_text.substr(corruption_text.find("additive") + 8));
      if (rest.empty()) throw ConfigError("additive needs a Sigma_w, e.g. 'additive identity 0.25'");
      cfg.corruption = AdditiveNoise{Covariance::parse(rest, m)};
    } else if (words[0] == "missing") {
      if (words.size() != 2) throw ConfigError("expected 'missing <rho>'");
      const double rho = to_double(words[1], "rho");
      if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("rho must lie in [0, 1)");
      cfg.corruption = MissingData{rho};
    } else {
      throw ConfigError("unknown corruption '" + words[0] + "' (expected none, additive or missing)");
    }
  } catch (const Error& e) {
    throw ConfigError(at(corruption_line, "corruption") + e.what());
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream os;
  os << is.rdbuf();
  return parse_config(os.str(), path);
}

std::string to_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "schema_version = " << kConfigSchemaVersion << '\n';
  os << "d1 = " << c.d1 << '\n' << "d2 = " << c.d2 << '\n' << "r = " << c.rank() << '\n';
  os << "spectrum = list";
  for (Eigen::Index j = 0; j < c.spectrum.size(); ++j) os << ' ' << real(c.spectrum(j));
  os << '\n';
  if (c.sigma_x) os << "sigma_x = " << c.sigma_x->describe() << '\n';
  if (const auto* add = std::get_if<AdditiveNoise>(&c.corruption)) {
    os << "corruption = additive " << add->sigma_w.describe() << '\n';
  } else if (const auto* mis = std::get_if<MissingData>(&c.corruption)) {
    os << "corruption = missing " << real(mis->rho) << '\n';
  } else {
    os << "corruption = none\n";
  }
  os << "sigma_eps = " << real(c.sigma_eps) << '\n';
  os << "n_grid =";
  for (Eigen::Index n : c.n_grid) os << ' ' << n;
  os << '\n' << "replicates = " << c.replicates << '\n';
  for (const RegularizerRule& reg : c.regularizers) {
    os << "regularizer = " << to_string(reg.kind) << " lambda=" << reg.lambda.describe();
    if (reg.shape != 0.0) os << " shape=" << real(reg.shape);
    os << '\n';
  }
  os << "omega = " << c.omega.describe() << '\n';
  os << "solver.max_iters = " << c.max_iters << '\n';
  os << "solver.tol = " << real(c.tol) << '\n';
  os << "solver.step = " << (c.step ? real(*c.step) : std::string("backtracking")) << '\n';
  os << "solver.shrink = " << real(c.shrink) << '\n';
  os << "init = " << (c.init == InitKind::Zero ? "zero" : "random") << '\n';
  os << "spectrum_threshold = " << (c.threshold == SpectrumThreshold::Nu ? "nu" : "mu") << '\n';
  os << "seed = " << c.seed << '\n';
  if (!c.output.empty()) os << "output = " << c.output << '\n';
  os << "threads = " << c.threads << '\n';
  os << "timing = " << (c.timing ? "true" : "false") << '\n';
  return os.str();
}

namespace {

struct Preset {
  const char* name;
  const char* text;
};

// Scenario presets; experiment.cpp runs them through the same parser.
const Preset kPresets[] = {
    {"smoke", R"(schema_version = 1
d1 = 8
d2 = 6
r = 2
spectrum = constant 3
corruption = additive identity 0.1
sigma_eps = 0.3
n_grid = 300 600
replicates = 2
regularizer = scad lambda=gradient:1
regularizer = nuclear lambda=gradient:1
omega = ratio 1.5
solver.tol = 1e-6
)"},
    {"scaling-additive", R"(schema_version = 1
d1 = 30
d2 = 30
r = 5
spectrum = constant 5
corruption = additive identity 0.25
sigma_eps = 0.5
n_grid = 1000 2000 4000 8000
replicates = 20
regularizer = scad lambda=fixed:1
regularizer = nuclear lambda=gradient:1
omega = ratio 1.0
solver.tol = 1e-6
)"},
    {"scaling-missing", R"(schema_version = 1
d1 = 30
d2 = 30
r = 5
spectrum = constant 5
corruption = missing 0.2
sigma_eps = 0.5
n_grid = 1000 2000 4000 8000
replicates = 20
regularizer = scad lambda=fixed:1
regularizer = nuclear lambda=gradient:1
omega = ratio 1.0
solver.tol = 1e-6
)"},
    {"cone", R"(schema_version = 1
d1 = 20
d2 = 20
r = 4
spectrum = constant 5
corruption = additive identity 0.25
sigma_eps = 0.5
n_grid = 4000
replicates = 50
regularizer = scad lambda=rate:4
omega = ratio 1.5
solver.tol = 1e-6
)"},
    {"dominance", R"(schema_version = 1
d1 = 20
d2 = 20
r = 4
spectrum = list 10 10 10 1
corruption = additive identity 0.25
sigma_eps = 0.5
n_grid = 4000
replicates = 50
regularizer = scad lambda=fixed:1
omega = ratio 1.5
solver.tol = 1e-6
)"},
};

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const Preset& p : kPresets) out.emplace_back(p.name);
  return out;
}

std::string preset_text(const std::string& name) {
  for (const Preset& p : kPresets) {
    if (name == p.name) return p.text;
  }
  std::string known;
  for (const Preset& p : kPresets) known += std::string(known.empty() ? "" : ", ") + p.name;
  throw ConfigError("unknown preset '" + name + "' (available: " + known + ")");
}

ExperimentConfig preset_config(const std::string& name) {
  return parse_config(preset_text(name), "preset:" + name);
}

}  // namespace lrmr
