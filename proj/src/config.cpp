#include "maxquad/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "maxquad/util.hpp"

namespace maxquad {

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& msg) {
  throw std::invalid_argument("config [" + where + "]: " + msg);
}

std::string trim(const std::string& s) {
  const auto lo = s.find_first_not_of(" \t\r\n");
  if (lo == std::string::npos) return {};
  const auto hi = s.find_last_not_of(" \t\r\n");
  return s.substr(lo, hi - lo + 1);
}

double parse_double(const std::string& where, const std::string& value) {
  try {
    size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    bad(where, "cannot parse number '" + value + "'");
  }
}

int64_t parse_int(const std::string& where, const std::string& value) {
  try {
    size_t used = 0;
    const int64_t v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    bad(where, "cannot parse integer '" + value + "'");
  }
}

bool parse_bool(const std::string& where, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  bad(where, "cannot parse boolean '" + value + "'");
}

std::vector<double> parse_list(const std::string& where, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(where, trim(item)));
  if (out.empty()) bad(where, "empty list");
  return out;
}

std::vector<Interval> parse_box(const std::string& where, const std::string& value,
                                int dim) {
  const auto nums = parse_list(where, value);
  if (int(nums.size()) != 2 * dim)
    bad(where, "expected " + std::to_string(2 * dim) + " numbers (lo,hi per coordinate)");
  std::vector<Interval> box(static_cast<size_t>(dim));
  for (int k = 0; k < dim; ++k) {
    box[size_t(k)] = {nums[size_t(2 * k)], nums[size_t(2 * k + 1)]};
    if (!(box[size_t(k)].lo < box[size_t(k)].hi)) bad(where, "interval lo must be < hi");
  }
  return box;
}

MatrixXd parse_matrix(const std::string& where, const std::string& value, int dim) {
  const auto nums = parse_list(where, value);
  if (int(nums.size()) != dim * dim)
    bad(where, "expected " + std::to_string(dim * dim) + " row-major entries");
  MatrixXd m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = nums[size_t(i * dim + j)];
  return m;
}

VectorXd parse_vector(const std::string& where, const std::string& value, int dim) {
  const auto nums = parse_list(where, value);
  if (int(nums.size()) != dim) bad(where, "expected " + std::to_string(dim) + " entries");
  VectorXd v(dim);
  for (int k = 0; k < dim; ++k) v[k] = nums[size_t(k)];
  return v;
}

struct Entry {
  std::string key, value;
  bool used = false;
};

struct Section {
  std::string name;
  std::vector<Entry> entries;

  const std::string* find(const std::string& key) {
    for (auto& e : entries)
      if (e.key == key) {
        e.used = true;
        return &e.value;
      }
    return nullptr;
  }
};

std::vector<Section> tokenize(const std::string& text) {
  std::vector<Section> sections;
  std::stringstream ss(text);
  std::string line;
  Section* current = nullptr;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": malformed section header");
      sections.push_back({trim(t.substr(1, t.size() - 2)), {}});
      current = &sections.back();
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos || current == nullptr)
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected 'key = value' inside a section");
    current->entries.push_back({trim(t.substr(0, eq)), trim(t.substr(eq + 1)), false});
  }
  return sections;
}

ControlMode parse_mode(Section& section, int dim) {
  const std::string label = section.name.substr(std::string("mode.").size());
  if (label.empty()) bad(section.name, "empty mode label");
  if (label.find(',') != std::string::npos) bad(section.name, "mode label contains a comma");
  const std::string where = section.name;

  const std::string* sigma1 = section.find("sigma1");
  const std::string* sigma2 = section.find("sigma2");
  const std::string* rho = section.find("rho");
  const bool lognormal = sigma1 || sigma2 || rho;

  ControlMode mode;
  if (lognormal) {
    if (dim != 2) bad(where, "sigma1/sigma2/rho modes require d = 2");
    if (!sigma1 || !sigma2 || !rho) bad(where, "need all of sigma1, sigma2, rho");
    mode = make_lognormal_mode(label, parse_double(where, *sigma1),
                               parse_double(where, *sigma2), parse_double(where, *rho));
  } else {
    mode.label = label;
    mode.drift = AffineMap::zero(dim);
    mode.diffusion.constant = MatrixXd::Zero(dim, dim);
    mode.diffusion.per_coord.assign(size_t(dim), MatrixXd::Zero(dim, dim));
    if (const auto* v = section.find("sigma_const"))
      mode.diffusion.constant = parse_matrix(where, *v, dim);
    bool any_sigma = !mode.diffusion.constant.isZero(0.0);
    for (int k = 0; k < dim; ++k)
      if (const auto* v = section.find("sigma_x" + std::to_string(k))) {
        mode.diffusion.per_coord[size_t(k)] = parse_matrix(where, *v, dim);
        any_sigma = true;
      }
    if (!any_sigma) bad(where, "mode defines no diffusion");
  }
  if (const auto* v = section.find("drift_A")) mode.drift.A = parse_matrix(where, *v, dim);
  if (const auto* v = section.find("drift_b")) mode.drift.b = parse_vector(where, *v, dim);
  if (const auto* v = section.find("delta")) {
    mode.discount = parse_double(where, *v);
    if (mode.discount < 0.0) bad(where, "delta must be nonnegative");
  }
  const std::string* rq = section.find("reward_Q");
  const std::string* rb = section.find("reward_b");
  const std::string* rc = section.find("reward_c");
  if (rq || rb || rc) {
    MatrixXd q = rq ? parse_matrix(where, *rq, dim) : MatrixXd::Zero(dim, dim);
    VectorXd b = rb ? parse_vector(where, *rb, dim) : VectorXd::Zero(dim);
    const double c = rc ? parse_double(where, *rc) : 0.0;
    mode.running_reward = QuadraticForm(std::move(q), std::move(b), c);
  }
  return mode;
}

void reject_unused(const std::vector<Section>& sections) {
  for (const auto& section : sections)
    for (const auto& entry : section.entries)
      if (!entry.used)
        throw std::invalid_argument("config [" + section.name + "]: unknown key '" +
                                    entry.key + "'");
}

}  // namespace

RunConfig default_config() { return parse_config_text(""); }

RunConfig parse_config_text(const std::string& text) {
  std::vector<Section> sections = tokenize(text);
  const std::set<std::string> known = {"problem", "payoff", "sampling", "run"};
  for (const auto& section : sections)
    if (!known.count(section.name) && section.name.rfind("mode.", 0) != 0)
      throw std::invalid_argument("config: unknown section [" + section.name + "]");

  auto find_section = [&sections](const std::string& name) -> Section* {
    for (auto& s : sections)
      if (s.name == name) return &s;
    return nullptr;
  };

  RunConfig config{ProblemSpec{2, 0.25, 0.05, 0.75, {},
                               MaxPlusFunction(2, {QuadraticForm(MatrixXd::Zero(2, 2),
                                                                 VectorXd::Zero(2), 0.0)}),
                               {}, {}, {}, {}},
                   SamplePlan{}, RunOptions{}, PayoffConfig{}, 0.0};
  ProblemSpec& spec = config.spec;

  // [problem]
  std::string state_box_text = "20,80,30,70";
  std::string guard_box_text = "0.01,1e7,0.01,1e7";
  if (Section* s = find_section("problem")) {
    if (const auto* v = s->find("d")) {
      spec.dim = int(parse_int("problem.d", *v));
      if (spec.dim < 1) bad("problem.d", "dimension must be >= 1");
    }
    if (const auto* v = s->find("T")) spec.horizon = parse_double("problem.T", *v);
    if (const auto* v = s->find("h")) spec.step = parse_double("problem.h", *v);
    if (const auto* v = s->find("epsilon"))
      spec.epsilon = parse_double("problem.epsilon", *v);
    if (const auto* v = s->find("state_box")) state_box_text = *v;
    if (const auto* v = s->find("guard_box")) guard_box_text = *v;
  }
  const int d = spec.dim;
  spec.state_box = parse_box("problem.state_box", state_box_text, d);
  if (guard_box_text != "none")
    spec.guard_box = parse_box("problem.guard_box", guard_box_text, d);
  if (!(spec.horizon > 0.0)) bad("problem.T", "horizon must be positive");
  if (!(spec.step > 0.0)) bad("problem.h", "step must be positive");
  {
    const double ratio = spec.horizon / spec.step;
    const int n = int(std::lround(ratio));
    if (n < 1 || std::abs(ratio - double(n)) > 1e-9 * std::max(1.0, ratio))
      bad("problem.h", "T/h must be a positive integer");
  }
  if (!(spec.epsilon > 0.0 && spec.epsilon <= 1.0))
    bad("problem.epsilon", "epsilon must lie in (0, 1]");
  {
    const double floor2 = double(d) / double(d + 2);
    if (spec.epsilon * spec.epsilon < floor2 - 1e-12)
      bad("problem.epsilon", "epsilon^2 must be >= d/(d+2) = " + format_double(floor2) +
                                 " for the proportional split");
  }

  // [mode.*] sections replace the default mode pair entirely.
  bool any_mode = false;
  for (auto& section : sections)
    if (section.name.rfind("mode.", 0) == 0) {
      spec.modes.push_back(parse_mode(section, d));
      any_mode = true;
    }
  if (!any_mode) {
    if (d != 2) bad("problem.d", "non-default dimension requires explicit [mode.*] sections");
    spec.modes.push_back(make_lognormal_mode("rho=-0.8", 0.4, 0.3, -0.8));
    spec.modes.push_back(make_lognormal_mode("rho=0.8", 0.4, 0.3, 0.8));
  }

  // [payoff]
  PayoffConfig& payoff = config.payoff;
  payoff.direction = VectorXd(2);
  payoff.direction << 1.0, -1.0;
  payoff.approx.piece_curvature = 0.5;  // flat-piece anchors stay nearly linear
  if (Section* s = find_section("payoff")) {
    if (const auto* v = s->find("K1")) payoff.k1 = parse_double("payoff.K1", *v);
    if (const auto* v = s->find("K2")) payoff.k2 = parse_double("payoff.K2", *v);
    if (const auto* v = s->find("direction"))
      payoff.direction = parse_vector("payoff.direction", *v, d);
    if (const auto* v = s->find("band_lo"))
      payoff.approx.band_lo = parse_double("payoff.band_lo", *v);
    if (const auto* v = s->find("band_hi"))
      payoff.approx.band_hi = parse_double("payoff.band_hi", *v);
    if (const auto* v = s->find("n_forms"))
      payoff.approx.n_forms = int(parse_int("payoff.n_forms", *v));
    if (const auto* v = s->find("c_kink"))
      payoff.approx.kink_curvature = parse_double("payoff.c_kink", *v);
    if (const auto* v = s->find("c_piece")) {
      if (*v == "c_kink")
        payoff.approx.piece_curvature.reset();
      else
        payoff.approx.piece_curvature = parse_double("payoff.c_piece", *v);
    }
    if (const auto* v = s->find("transverse"))
      payoff.approx.transverse_curvature = parse_double("payoff.transverse", *v);
    if (const auto* v = s->find("target_eps"))
      payoff.approx.target_eps = parse_double("payoff.target_eps", *v);
  }
  if (int(payoff.direction.size()) != d) bad("payoff.direction", "dimension mismatch");
  if (!(payoff.k1 < payoff.k2)) bad("payoff.K1", "requires K1 < K2");
  {
    RidgePayoff ridge{payoff.direction, PiecewiseLinear::butterfly(payoff.k1, payoff.k2)};
    PayoffApproxResult approx = approximate_payoff(ridge, payoff.approx);
    spec.exact_payoff = std::move(ridge);
    spec.payoff_band = Interval{payoff.approx.band_lo, payoff.approx.band_hi};
    config.payoff_achieved_eps = approx.achieved_eps;
    spec.terminal = std::move(approx.forms);
  }

  // [sampling]
  if (Section* s = find_section("sampling")) {
    if (const auto* v = s->find("N_in"))
      config.plan.n_init = int(parse_int("sampling.N_in", *v));
    if (const auto* v = s->find("N_rg"))
      config.plan.n_reg = int(parse_int("sampling.N_rg", *v));
    if (const auto* v = s->find("N_x"))
      config.plan.n_states = int(parse_int("sampling.N_x", *v));
    if (const auto* v = s->find("N_w"))
      config.plan.n_incr = int(parse_int("sampling.N_w", *v));
    if (const auto* v = s->find("method")) {
      const int64_t m = parse_int("sampling.method", *v);
      if (m < 1 || m > 5) bad("sampling.method", "method must be in {1,...,5}");
      config.plan.method = SamplingMethod(int(m));
    }
    if (const auto* v = s->find("moment_match"))
      config.run.solve.moment_match = parse_bool("sampling.moment_match", *v);
  }
  config.plan.validate("config [sampling]");

  // [run]
  if (Section* s = find_section("run")) {
    if (const auto* v = s->find("seed"))
      config.run.seed = uint64_t(parse_int("run.seed", *v));
    if (const auto* v = s->find("threads"))
      config.run.threads = int(parse_int("run.threads", *v));
    if (const auto* v = s->find("out_dir")) config.run.out_dir = *v;
    if (const auto* v = s->find("oracle_nodes"))
      config.run.oracle_nodes = int(parse_int("run.oracle_nodes", *v));
    if (const auto* v = s->find("grid_lo"))
      config.run.grid.xi1_lo = parse_double("run.grid_lo", *v);
    if (const auto* v = s->find("grid_hi"))
      config.run.grid.xi1_hi = parse_double("run.grid_hi", *v);
    if (const auto* v = s->find("grid_step"))
      config.run.grid.xi1_step = parse_double("run.grid_step", *v);
    if (const auto* v = s->find("grid_xi2"))
      config.run.grid.xi2 = parse_double("run.grid_xi2", *v);
    if (const auto* v = s->find("eta_min"))
      config.run.solve.eta_min = parse_double("run.eta_min", *v);
    if (const auto* v = s->find("enforce_concavity"))
      config.run.solve.enforce_concavity = parse_bool("run.enforce_concavity", *v);
    if (const auto* v = s->find("ridge"))
      config.run.solve.ridge = parse_double("run.ridge", *v);
    if (const auto* v = s->find("dump_paths"))
      config.run.dump_paths = parse_bool("run.dump_paths", *v);
  }
  if (config.run.oracle_nodes < 2) bad("run.oracle_nodes", "need at least 2 nodes");
  config.run.grid.size();  // validates the grid shape

  reject_unused(sections);
  return config;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

namespace {

std::string matrix_text(const MatrixXd& m) {
  std::string out;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) {
      if (!out.empty()) out += ',';
      out += format_double(m(i, j));
    }
  return out;
}

std::string vector_text(const VectorXd& v) {
  std::string out;
  for (int k = 0; k < v.size(); ++k) {
    if (!out.empty()) out += ',';
    out += format_double(v[k]);
  }
  return out;
}

std::string box_text(const std::vector<Interval>& box) {
  std::string out;
  for (const auto& iv : box) {
    if (!out.empty()) out += ',';
    out += format_double(iv.lo) + ',' + format_double(iv.hi);
  }
  return out;
}

}  // namespace

std::string serialize_config(const RunConfig& config) {
  std::ostringstream os;
  const ProblemSpec& spec = config.spec;
  os << "[problem]\n";
  os << "d = " << spec.dim << '\n';
  os << "T = " << format_double(spec.horizon) << '\n';
  os << "h = " << format_double(spec.step) << '\n';
  os << "epsilon = " << format_double(spec.epsilon) << '\n';
  os << "state_box = " << box_text(spec.state_box) << '\n';
  os << "guard_box = " << (spec.guard_box ? box_text(*spec.guard_box) : "none") << '\n';
  for (const auto& mode : spec.modes) {
    os << "\n[mode." << mode.label << "]\n";
    if (mode.lognormal) {
      os << "sigma1 = " << format_double(mode.lognormal->sigma1) << '\n';
      os << "sigma2 = " << format_double(mode.lognormal->sigma2) << '\n';
      os << "rho = " << format_double(mode.lognormal->rho) << '\n';
    } else {
      os << "sigma_const = " << matrix_text(mode.diffusion.constant) << '\n';
      for (size_t k = 0; k < mode.diffusion.per_coord.size(); ++k)
        os << "sigma_x" << k << " = " << matrix_text(mode.diffusion.per_coord[k]) << '\n';
    }
    if (!mode.drift.is_zero()) {
      os << "drift_A = " << matrix_text(mode.drift.A) << '\n';
      os << "drift_b = " << vector_text(mode.drift.b) << '\n';
    }
    if (mode.discount != 0.0) os << "delta = " << format_double(mode.discount) << '\n';
    if (mode.running_reward) {
      os << "reward_Q = " << matrix_text(mode.running_reward->Q) << '\n';
      os << "reward_b = " << vector_text(mode.running_reward->b) << '\n';
      os << "reward_c = " << format_double(mode.running_reward->c) << '\n';
    }
  }
  os << "\n[payoff]\n";
  os << "K1 = " << format_double(config.payoff.k1) << '\n';
  os << "K2 = " << format_double(config.payoff.k2) << '\n';
  os << "direction = " << vector_text(config.payoff.direction) << '\n';
  os << "band_lo = " << format_double(config.payoff.approx.band_lo) << '\n';
  os << "band_hi = " << format_double(config.payoff.approx.band_hi) << '\n';
  os << "n_forms = " << config.payoff.approx.n_forms << '\n';
  os << "c_kink = " << format_double(config.payoff.approx.kink_curvature) << '\n';
  os << "c_piece = "
     << (config.payoff.approx.piece_curvature
             ? format_double(*config.payoff.approx.piece_curvature)
             : std::string("c_kink"))
     << '\n';
  os << "transverse = " << format_double(config.payoff.approx.transverse_curvature)
     << '\n';
  os << "target_eps = " << format_double(config.payoff.approx.target_eps) << '\n';
  os << "\n[sampling]\n";
  os << "N_in = " << config.plan.n_init << '\n';
  os << "N_rg = " << config.plan.n_reg << '\n';
  os << "N_x = " << config.plan.n_states << '\n';
  os << "N_w = " << config.plan.n_incr << '\n';
  os << "method = " << int(config.plan.method) << '\n';
  os << "moment_match = " << (config.run.solve.moment_match ? "true" : "false") << '\n';
  os << "\n[run]\n";
  os << "seed = " << config.run.seed << '\n';
  os << "threads = " << config.run.threads << '\n';
  os << "out_dir = " << config.run.out_dir << '\n';
  os << "oracle_nodes = " << config.run.oracle_nodes << '\n';
  os << "grid_lo = " << format_double(config.run.grid.xi1_lo) << '\n';
  os << "grid_hi = " << format_double(config.run.grid.xi1_hi) << '\n';
  os << "grid_step = " << format_double(config.run.grid.xi1_step) << '\n';
  os << "grid_xi2 = " << format_double(config.run.grid.xi2) << '\n';
  os << "eta_min = " << format_double(config.run.solve.eta_min) << '\n';
  os << "enforce_concavity = " << (config.run.solve.enforce_concavity ? "true" : "false")
     << '\n';
  os << "ridge = " << format_double(config.run.solve.ridge) << '\n';
  os << "dump_paths = " << (config.run.dump_paths ? "true" : "false") << '\n';
  return os.str();
}

uint64_t config_hash(const RunConfig& config) { return fnv1a(serialize_config(config)); }

}  // namespace maxquad
