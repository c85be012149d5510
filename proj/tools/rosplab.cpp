#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rosplab/bellman.hpp"
#include "rosplab/evaluate.hpp"
#include "rosplab/io.hpp"

using json = nlohmann::json;
using namespace rosplab;

namespace {

constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Global {
  std::string config;
  unsigned workers = 0;
  std::uint64_t seed = 1;
};

/// Destination for the main output. "-" is stdout; for a file the resolved
/// configuration goes to a sidecar "<path>.json", otherwise to stderr.
class Sink {
 public:
  explicit Sink(std::string path) : path_(std::move(path)) {
    if (path_ != "-") {
      file_ = std::make_unique<std::ofstream>(path_, std::ios::binary);
      if (!*file_) throw UsageError("cannot write output file: " + path_);
    }
  }

  std::ostream& out() { return file_ ? static_cast<std::ostream&>(*file_) : std::cout; }

  void finish(const json& sidecar) {
    out().flush();
    if (!out()) throw UsageError("failed writing output: " + path_);
    if (!file_) {
      std::cerr << "# config: " << sidecar.value("config", json::object()).dump() << '\n';
      return;
    }
    std::ofstream side(path_ + ".json", std::ios::binary);
    if (!side) throw UsageError("cannot write sidecar file: " + path_ + ".json");
    side << sidecar.dump(2) << '\n';
  }

 private:
  std::string path_;
  std::unique_ptr<std::ofstream> file_;
};

/// Fills options that were not given on the command line from a flat JSON
/// object whose keys are long option names ('_' and '-' both accepted).
void apply_config(CLI::App& app, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    throw UsageError("config file " + path + ": " + e.what());
  }
  if (!cfg.is_object()) throw UsageError("config file must hold a JSON object");

  std::vector<CLI::App*> chain{&app};
  for (;;) {
    auto subs = chain.back()->get_subcommands();
    if (subs.empty()) break;
    chain.push_back(subs.front());
  }
  for (const auto& [key, value] : cfg.items()) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    if (name == "config") continue;
    CLI::Option* opt = nullptr;
    for (auto it = chain.rbegin(); it != chain.rend() && !opt; ++it) opt = (*it)->get_option_no_throw("--" + name);
    if (!opt) throw UsageError("unknown config key '" + key + "'");
    if (opt->count() > 0) continue;  // command line wins
    std::vector<std::string> items;
    auto text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (value.is_array()) {
      for (const auto& v : value) items.push_back(text(v));
    } else {
      items.push_back(text(value));
    }
    for (const auto& s : items) opt->add_result(s);
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw UsageError("config key '" + key + "': " + e.what());
    }
  }
}

// ---------------------------------------------------------------------------
// Shared option groups
// ---------------------------------------------------------------------------

struct ModelOptions {
  double beta = 0.99;
  double x1 = 1.0;
  double kappa = 1.0;
  double c0 = 0.0;

  void add(CLI::App* sub) {
    sub->add_option("--beta", beta, "Discount factor in (0,1)")->capture_default_str();
    sub->add_option("--x1", x1, "Initial inventory")->capture_default_str();
    sub->add_option("--kappa", kappa, "Quadratic storage cost coefficient")->capture_default_str();
    sub->add_option("--c0", c0, "Linear storage cost coefficient, c(0)")->capture_default_str();
  }

  rosp::CostModel cost() const { return rosp::CostModel::affine_quadratic(c0, kappa); }

  void check() const {
    if (!(beta > 0.0 && beta < 1.0)) throw UsageError("--beta must lie in (0, 1)");
    if (!(x1 >= 0.0)) throw UsageError("--x1 must be >= 0");
  }

  json to_json() const { return {{"beta", beta}, {"x1", x1}, {"kappa", kappa}, {"c0", c0}}; }
};

struct SampleOptions {
  std::vector<double> samples;
  std::size_t n = 0;

  void add(CLI::App* sub) {
    sub->add_option("--samples", samples, "Explicit price samples")->delimiter(',');
    sub->add_option("--n", n, "Number of samples to draw from the distribution (with --seed)");
  }

  rosp::SampleSet resolve(const dist::Distribution& truth, std::uint64_t seed) const {
    if (!samples.empty()) {
      if (n != 0 && n != samples.size()) throw UsageError("--n disagrees with the number of --samples");
      return rosp::SampleSet(samples);
    }
    if (n == 0) throw UsageError("give --samples or --n");
    RandomStream stream(seed, {0, 0});
    std::vector<double> drawn(n);
    for (double& p : drawn) p = truth.sample(stream);
    return rosp::SampleSet(drawn);
  }
};

json samples_json(const rosp::SampleSet& s) { return s.prices(); }

// ---------------------------------------------------------------------------
// figure
// ---------------------------------------------------------------------------

struct FigureCmd {
  int id = 0;
  std::size_t outer = 100000;
  std::vector<std::size_t> sizes;
  std::string inner = "semi-analytic";
  std::size_t horizon = 1000;
  std::size_t paths = 100;
  std::size_t grid_points = 41;
  double p_max = 4.0;
  std::string out;
  ModelOptions model;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("figure", "Reproduce one of the performance figures (1-6)");
    sub->add_option("--id", id, "Figure id 1..6")->required();
    sub->add_option("--outer", outer, "Outer realizations (sample sets per N)")->capture_default_str();
    sub->add_option("--sizes", sizes, "Sample sizes N (figure preset when omitted)")->delimiter(',');
    sub->add_option("--inner", inner, "Inner evaluator: semi-analytic or mc")->capture_default_str();
    sub->add_option("--horizon", horizon, "Monte Carlo horizon T (inner mc)")->capture_default_str();
    sub->add_option("--paths", paths, "Monte Carlo paths per evaluation (inner mc)")->capture_default_str();
    sub->add_option("--grid-points", grid_points, "Grid points per axis (figure 6)")->capture_default_str();
    sub->add_option("--p-max", p_max, "Upper end of the sample grid (figure 6)")->capture_default_str();
    sub->add_option("--out", out, "Output CSV path ('-' for stdout; default figure<id>.csv)");
    model.add(sub);
    sub->callback([this] { selected = true; });
  }

  bool selected = false;

  static dist::Distribution preset(int id) {
    switch (id) {
      case 1: return dist::Distribution::triangular(0.0, 1.5, 1.5);
      case 2: return dist::Distribution::triangular(0.5, 0.5, 2.0);
      case 3: return dist::Distribution::triangular(0.0, 0.0, 3.0);
      case 4: return dist::Distribution::exponential(1.0);
      default: return dist::Distribution::lognormal(-0.5, 1.0);
    }
  }

  static std::vector<std::size_t> preset_sizes(int id) {
    if (id == 5) return {1, 2, 3, 5, 10, 20, 30, 40, 50, 60, 80, 100};
    if (id == 4) return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 15, 20};
    return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  }

  int run(const Global& g) {
    if (id < 1 || id > 6) throw UsageError("--id must be in 1..6");
    model.check();
    if (out.empty()) out = "figure" + std::to_string(id) + ".csv";
    const auto truth = preset(id);
    json cfg = {{"command", "figure"}, {"id", id}, {"seed", g.seed}, {"distribution", io::to_json(truth)},
                {"model", model.to_json()}};

    if (id == 6) {
      if (grid_points < 2 || !(p_max > 0.0)) throw UsageError("figure 6 needs --grid-points >= 2 and --p-max > 0");
      std::vector<double> grid(grid_points);
      for (std::size_t i = 0; i < grid_points; ++i) {
        grid[i] = p_max * static_cast<double>(i) / static_cast<double>(grid_points - 1);
      }
      const auto map = evaluate::difference_map(truth, model.beta, model.cost(), model.x1, grid, grid, g.workers);
      Sink sink(out);
      sink.out() << "p1,p2,sdp_minus_mpc\n";
      double lo = map[0][0], hi = map[0][0];
      for (std::size_t i = 0; i < grid.size(); ++i) {
        for (std::size_t j = 0; j < grid.size(); ++j) {
          sink.out() << io::number(grid[i]) << ',' << io::number(grid[j]) << ',' << io::number(map[i][j]) << '\n';
          lo = std::min(lo, map[i][j]);
          hi = std::max(hi, map[i][j]);
        }
      }
      cfg["grid_points"] = grid_points;
      cfg["p_max"] = p_max;
      sink.finish({{"config", cfg}, {"summary", {{"min_difference", lo}, {"max_difference", hi}}}});
      return kOk;
    }

    if (sizes.empty()) sizes = preset_sizes(id);
    evaluate::OuterStudy study;
    study.truth = truth;
    study.sample_sizes = sizes;
    study.outer = outer;
    study.beta = model.beta;
    study.x1 = model.x1;
    study.cost = model.cost();
    study.seed = g.seed;
    study.workers = g.workers;
    std::string inner_label;
    if (inner == "semi-analytic" || inner == "analytic") {
      study.inner.method = evaluate::EvalMethod::SemiAnalytic;
      inner_label = "semi-analytic";
    } else if (inner == "mc" || inner == "monte-carlo") {
      study.inner.method = evaluate::EvalMethod::MonteCarlo;
      study.inner.horizon = horizon;
      study.inner.paths = paths;
      inner_label = "monte-carlo(T=" + std::to_string(horizon) + " R=" + std::to_string(paths) + ")";
    } else {
      throw UsageError("--inner must be semi-analytic or mc");
    }
    if (outer < 1) throw UsageError("--outer must be >= 1");
    for (std::size_t n : sizes) {
      if (n < 1) throw UsageError("--sizes entries must be >= 1");
    }

    const auto rows = evaluate::expected_performance(study);
    Sink sink(out);
    io::write_study_header(sink.out());
    json diffs = json::array();
    const std::string study_id = "figure" + std::to_string(id);
    for (const auto& r : rows) {
      for (const auto& [name, stats] : {std::pair{"sdp", r.sdp}, std::pair{"mpc", r.mpc}}) {
        io::write_study_row(sink.out(), {study_id, name, r.n, model.beta, truth.label(), stats.mean, stats.std_error,
                                         stats.count, g.seed, inner_label});
      }
      diffs.push_back({{"N", r.n}, {"sdp_minus_mpc", r.difference.mean}, {"stderr", r.difference.std_error}});
      std::cerr << "N=" << r.n << " sdp-mpc=" << io::number(r.difference.mean)
                << " se=" << io::number(r.difference.std_error) << '\n';
    }
    cfg["outer"] = outer;
    cfg["sizes"] = sizes;
    cfg["inner"] = inner_label;
    sink.finish({{"config", cfg}, {"summary", {{"differences", diffs}}}});
    return kOk;
  }
};

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalCmd {
  std::string method = "sdp";
  std::string dist_text;
  std::string mode = "analytic";
  std::size_t horizon = 1000;
  std::size_t paths = 100000;
  bool verbose = false;
  std::string out = "-";
  ModelOptions model;
  SampleOptions samples;
  bool selected = false;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("eval", "Evaluate one policy out of sample");
    sub->add_option("--method", method, "oracle, sdp or mpc")->capture_default_str();
    sub->add_option("--dist", dist_text, "True price law, e.g. 'exponential(1)' or a JSON record")->required();
    sub->add_option("--mode", mode, "analytic or mc")->capture_default_str();
    sub->add_option("--horizon", horizon, "Monte Carlo horizon T")->capture_default_str();
    sub->add_option("--paths", paths, "Monte Carlo paths R")->capture_default_str();
    sub->add_flag("--verbose", verbose, "Log policy thresholds to stderr");
    sub->add_option("--out", out, "Output CSV path ('-' for stdout)")->capture_default_str();
    model.add(sub);
    samples.add(sub);
    sub->callback([this] { selected = true; });
  }

  int run(const Global& g) {
    model.check();
    const auto truth = io::parse_distribution(dist_text);
    std::optional<rosp::SampleSet> set;
    std::optional<rosp::PolicySpec> spec;
    if (method == "oracle") {
      spec = rosp::PolicySpec::oracle(truth, model.beta, model.cost());
    } else if (method == "sdp" || method == "mpc") {
      set = samples.resolve(truth, g.seed);
      spec = method == "sdp" ? rosp::PolicySpec::sdp(*set, model.beta, model.cost())
                             : rosp::PolicySpec::mpc(*set, model.beta, model.cost());
    } else {
      throw UsageError("--method must be oracle, sdp or mpc");
    }

    evaluate::EvalReport rep;
    std::string inner_label;
    if (mode == "analytic" || mode == "semi-analytic") {
      if (!truth.is_atomless()) throw UsageError("analytic mode needs an atomless true distribution");
      rep = evaluate::semianalytic_value(*spec, truth, model.x1);
      inner_label = "semi-analytic";
    } else if (mode == "mc") {
      if (paths < 2) throw UsageError("--paths must be >= 2");
      if (horizon < 1) throw UsageError("--horizon must be >= 1");
      rep = evaluate::mc_value(*spec, truth, model.x1, horizon, paths, g.seed, g.workers);
      inner_label = "monte-carlo(T=" + std::to_string(horizon) + " R=" + std::to_string(paths) + ")";
    } else {
      throw UsageError("--mode must be analytic or mc");
    }

    if (verbose) {
      std::cerr << "min_acceptable_price(x1)=" << io::number(rosp::min_acceptable_price(*spec, model.x1))
                << " min_acceptable_price(0)=" << io::number(rosp::min_acceptable_price(*spec, 0.0));
      if (set) std::cerr << " mu=" << io::number(set->mu());
      std::cerr << " truncation_bound=" << io::number(rep.truncation_bound) << '\n';
    }

    Sink sink(out);
    io::write_study_header(sink.out());
    io::write_study_row(sink.out(), {"eval", method, set ? set->size() : 0, model.beta, truth.label(), rep.value,
                                     rep.std_error, rep.realizations, g.seed, inner_label});
    json cfg = {{"command", "eval"}, {"method", method}, {"distribution", io::to_json(truth)},
                {"model", model.to_json()}, {"mode", inner_label}, {"seed", g.seed}};
    if (set) cfg["samples"] = samples_json(*set);
    sink.finish({{"config", cfg},
                 {"summary",
                  {{"value", rep.value},
                   {"stderr", rep.std_error},
                   {"truncation_bound", rep.truncation_bound},
                   {"quadrature_error", rep.quadrature_error}}}});
    return kOk;
  }
};

// ---------------------------------------------------------------------------
// check-prop5
// ---------------------------------------------------------------------------

struct SampleConditionCmd {
  std::string dist_text;
  std::size_t grid_points = 1001;
  std::string out = "-";
  ModelOptions model;
  SampleOptions samples;
  bool selected = false;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("check-prop5", "Check the sample condition under which MPC beats SDP");
    sub->add_option("--dist", dist_text, "True price law")->required();
    sub->add_option("--grid-points", grid_points, "Scan points on [0, x1]")->capture_default_str();
    sub->add_option("--out", out, "Report path ('-' for stdout)")->capture_default_str();
    model.add(sub);
    samples.add(sub);
    sub->callback([this] { selected = true; });
  }

  int run(const Global& g) {
    model.check();
    if (grid_points < 2) throw UsageError("--grid-points must be >= 2");
    const auto truth = io::parse_distribution(dist_text);
    if (!truth.is_atomless()) throw UsageError("check-prop5 needs an atomless true distribution");
    const auto set = samples.resolve(truth, g.seed);
    const auto r = evaluate::check_prop5(set, truth, model.beta, model.cost(), model.x1, grid_points);
    const json report = {{"holds", r.holds},
                         {"worst_margin", r.worst_margin},
                         {"argmin_x", r.argmin_x},
                         {"margin_at_zero", r.margin_at_zero},
                         {"points", r.points}};
    Sink sink(out);
    sink.out() << report.dump(2) << '\n';
    sink.finish({{"config",
                  {{"command", "check-prop5"}, {"distribution", io::to_json(truth)}, {"model", model.to_json()},
                   {"samples", samples_json(set)}, {"grid_points", grid_points}, {"seed", g.seed}}},
                 {"summary", report}});
    if (!r.holds) {
      std::cerr << "condition fails: worst margin " << io::number(r.worst_margin) << " at x=" << io::number(r.argmin_x)
                << '\n';
      return kViolation;
    }
    return kOk;
  }
};

// ---------------------------------------------------------------------------
// prop6
// ---------------------------------------------------------------------------

struct DiscountSweepCmd {
  std::vector<double> betas = {0.9, 0.99, 0.999};
  std::size_t n = 2;
  std::size_t outer = 10000;
  std::string out = "-";
  bool selected = false;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("prop6", "Discount-factor sweep under Exponential(1) prices");
    sub->add_option("--betas", betas, "Strictly increasing discount factors")->delimiter(',');
    sub->add_option("--n", n, "Sample size N")->capture_default_str();
    sub->add_option("--outer", outer, "Outer realizations per beta")->capture_default_str();
    sub->add_option("--out", out, "Output CSV path ('-' for stdout)")->capture_default_str();
    sub->callback([this] { selected = true; });
  }

  int run(const Global& g) {
    if (betas.empty()) throw UsageError("--betas must not be empty");
    if (n < 1 || outer < 2) throw UsageError("--n must be >= 1 and --outer >= 2");
    std::vector<evaluate::DiscountSweepRow> rows;
    try {
      rows = evaluate::prop6_sweep(betas, n, outer, g.seed, g.workers);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    const auto truth = dist::Distribution::exponential(1.0);
    Sink sink(out);
    io::write_study_header(sink.out());
    for (const auto& r : rows) {
      for (const auto& [name, stats] : {std::pair{"sdp", r.row.sdp}, std::pair{"mpc", r.row.mpc}}) {
        io::write_study_row(sink.out(), {"prop6", name, n, r.beta, truth.label(), stats.mean, stats.std_error,
                                         stats.count, g.seed, "semi-analytic"});
      }
    }

    // E[V_S] strictly decreasing with every pairwise gap above 3 combined SE.
    bool sdp_decreasing = true;
    double min_gap_in_se = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = i + 1; j < rows.size(); ++j) {
        const auto& a = rows[i].row.sdp;
        const auto& b = rows[j].row.sdp;
        const double se = std::hypot(a.std_error, b.std_error);
        const double z = se > 0.0 ? (a.mean - b.mean) / se : (a.mean > b.mean ? INFINITY : -INFINITY);
        min_gap_in_se = std::min(min_gap_in_se, z);
        if (!(z > 3.0)) sdp_decreasing = false;
      }
    }
    const auto& last = rows.back().row;
    const bool mpc_above = last.mpc.mean >= -4.0;
    const bool mpc_below = last.mpc.mean <= last.one_plus_max.mean;
    const bool ok = sdp_decreasing && mpc_above && mpc_below;

    json table = json::array();
    for (const auto& r : rows) {
      table.push_back({{"beta", r.beta},
                       {"sdp_mean", r.row.sdp.mean},
                       {"sdp_stderr", r.row.sdp.std_error},
                       {"mpc_mean", r.row.mpc.mean},
                       {"mpc_stderr", r.row.mpc.std_error},
                       {"sdp_minus_mpc", r.row.difference.mean},
                       {"sdp_minus_mpc_stderr", r.row.difference.std_error},
                       {"one_plus_max_mean", r.row.one_plus_max.mean}});
    }
    const json summary = {{"rows", table},
                          {"sdp_decreasing", sdp_decreasing},
                          {"min_pairwise_gap_in_se", min_gap_in_se},
                          {"mpc_last_at_least_minus_4", mpc_above},
                          {"mpc_last_below_one_plus_max", mpc_below},
                          {"holds", ok}};
    sink.finish({{"config", {{"command", "prop6"}, {"betas", betas}, {"n", n}, {"outer", outer}, {"seed", g.seed}}},
                 {"summary", summary}});
    std::cerr << "sdp_decreasing=" << sdp_decreasing << " mpc_within_envelope=" << (mpc_above && mpc_below) << '\n';
    return ok ? kOk : kViolation;
  }
};

// ---------------------------------------------------------------------------
// bellman
// ---------------------------------------------------------------------------

struct InstanceOptions {
  std::string instance;
  std::string example;
  std::string shape;

  void add(CLI::App* sub) {
    sub->add_option("--instance", instance, "Instance JSON file");
    sub->add_option("--example", example, "Built-in instance: 1, 2 or rosp");
    sub->add_option("--shape", shape, "concave or convex (default from the example; concave for files)");
  }

  bellman::FiniteInstance load() const {
    if (!instance.empty() && !example.empty()) throw UsageError("give either --instance or --example");
    try {
      if (!instance.empty()) return bellman::load_instance(instance);
      if (example == "1") return bellman::build_example1({});
      if (example == "2") return bellman::build_example2({});
      if (example == "rosp") return bellman::build_rosp_grid({});
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    throw UsageError("give --instance FILE or --example 1|2|rosp");
  }

  bellman::Shape direction() const {
    if (shape == "concave") return bellman::Shape::Concave;
    if (shape == "convex") return bellman::Shape::Convex;
    if (!shape.empty()) throw UsageError("--shape must be concave or convex");
    return example == "2" ? bellman::Shape::Convex : bellman::Shape::Concave;
  }
};

bellman::Operator parse_operator(const std::string& name, const bellman::FiniteInstance& inst) {
  if (name == "mpc") return bellman::Operator::mpc();
  if (name == "sdp") return bellman::Operator::sdp();
  if (name == "dro") return bellman::Operator::dro(bellman::default_ambiguity(inst));
  if (name == "doo") return bellman::Operator::doo(bellman::default_ambiguity(inst));
  throw UsageError("--operator must be mpc, sdp, dro or doo");
}

struct BellmanCmd {
  CLI::App* t1 = nullptr;
  CLI::App* t2 = nullptr;
  CLI::App* t3 = nullptr;
  CLI::App* shape = nullptr;
  CLI::App* export_cmd = nullptr;
  bool selected = false;

  InstanceOptions t1_inst, t2_inst, shape_inst;
  double epsilon = 1e-9;
  std::size_t trials = 100;
  std::string op_name = "mpc";
  std::size_t instances = 20;
  std::size_t states = 6;
  std::size_t atoms = 3;
  std::size_t actions = 3;
  double beta = 0.9;
  std::string export_example;
  std::string out = "-";

  void add(CLI::App& app) {
    auto* b = app.add_subcommand("bellman", "Finite dynamic-programming checks");
    b->require_subcommand(1);
    b->fallthrough();
    b->callback([this] { selected = true; });

    t1 = b->add_subcommand("verify-theorem1", "MPC fixed point against the robust/optimistic fixed point");
    t1_inst.add(t1);
    t1->add_option("--epsilon", epsilon, "Value iteration accuracy")->capture_default_str();
    t1->add_option("--trials", trials, "Random seed tables for the shape check")->capture_default_str();
    t1->add_option("--out", out, "Report path ('-' for stdout)")->capture_default_str();

    t2 = b->add_subcommand("verify-theorem2", "Predicted MPC value against realized cost");
    t2_inst.add(t2);
    t2->add_option("--epsilon", epsilon, "Value iteration accuracy")->capture_default_str();
    t2->add_option("--out", out, "Report path ('-' for stdout)")->capture_default_str();

    t3 = b->add_subcommand("verify-theorem3", "Policy-switch comparison on random instances");
    t3->add_option("--instances", instances, "Number of random instances")->capture_default_str();
    t3->add_option("--states", states, "States per instance")->capture_default_str();
    t3->add_option("--atoms", atoms, "Noise atoms per instance")->capture_default_str();
    t3->add_option("--actions", actions, "Maximum actions per cell")->capture_default_str();
    t3->add_option("--beta", beta, "Discount factor")->capture_default_str();
    t3->add_option("--out", out, "Report path ('-' for stdout)")->capture_default_str();

    shape = b->add_subcommand("shape", "Shape-preservation check of one operator");
    shape_inst.add(shape);
    shape->add_option("--operator", op_name, "mpc, sdp, dro or doo")->capture_default_str();
    shape->add_option("--trials", trials, "Random seed tables")->capture_default_str();
    shape->add_option("--out", out, "Report path ('-' for stdout)")->capture_default_str();

    export_cmd = b->add_subcommand("export-example", "Write a built-in instance as JSON");
    export_cmd->add_option("--example", export_example, "1, 2 or rosp")->required();
    export_cmd->add_option("--out", out, "Output path ('-' for stdout)")->capture_default_str();
  }

  static int emit(const std::string& path, const json& report, const json& config, bool ok) {
    Sink sink(path);
    sink.out() << report.dump(2) << '\n';
    sink.finish({{"config", config}, {"summary", report}});
    return ok ? kOk : kViolation;
  }

  int run(const Global& g) {
    if (t1->parsed()) return equivalence(g);
    if (t2->parsed()) return bound(g);
    if (t3->parsed()) return switch_check(g);
    if (shape->parsed()) return shape_check(g);
    return export_instance();
  }

  int equivalence(const Global& g) {
    if (!(epsilon > 0.0)) throw UsageError("--epsilon must be > 0");
    const auto inst = t1_inst.load();
    const auto dir = t1_inst.direction();
    const auto amb = bellman::default_ambiguity(inst);
    const auto robust = dir == bellman::Shape::Concave ? bellman::OperatorKind::DRO : bellman::OperatorKind::DOO;
    const auto other = robust == bellman::OperatorKind::DRO ? bellman::OperatorKind::DOO : bellman::OperatorKind::DRO;
    const auto sc = bellman::check_shape_preservation(inst, bellman::Operator::mpc(), dir, trials, g.seed);
    const auto rep = bellman::verify_equivalence(inst, amb, robust, epsilon, g.workers);
    const auto cross = bellman::verify_equivalence(inst, amb, other, epsilon, g.workers);
    const bool ok = rep.holds() && sc.passed;
    const json report = {{"instance", inst.name},
                         {"shape", bellman::shape_name(dir)},
                         {"robust_operator", bellman::operator_name(robust)},
                         {"gap", rep.gap},
                         {"bound", 2.0 * epsilon},
                         {"gap_holds", rep.holds()},
                         {"other_operator", bellman::operator_name(other)},
                         {"other_gap", cross.gap},
                         {"shape_passed", sc.passed},
                         {"shape_trials", sc.trials},
                         {"shape_worst_violation", sc.worst_violation},
                         {"ambiguity_members", amb.members},
                         {"holds", ok}};
    if (!ok) std::cerr << "violation: gap " << io::number(rep.gap) << " vs bound " << io::number(2.0 * epsilon) << '\n';
    return emit(out, report, {{"command", "bellman verify-theorem1"}, {"epsilon", epsilon}, {"trials", trials},
                              {"seed", g.seed}, {"instance", t1_inst.instance}, {"example", t1_inst.example}},
                ok);
  }

  int bound(const Global& g) {
    if (!(epsilon > 0.0)) throw UsageError("--epsilon must be > 0");
    const auto inst = t2_inst.load();
    const auto dir = t2_inst.direction();
    bellman::BoundReport rep;
    try {
      rep = bellman::verify_bound(inst, dir, epsilon, g.workers);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    const json report = {{"instance", inst.name},
                         {"shape", bellman::shape_name(dir)},
                         {"predicted", rep.predicted},
                         {"realized", rep.realized},
                         {"margin", rep.margin},
                         {"worst_margin", rep.worst_margin},
                         {"worst_state", rep.worst_state},
                         {"violations", rep.violations},
                         {"holds", rep.holds()}};
    if (!rep.holds()) std::cerr << "violation: worst margin " << io::number(rep.worst_margin) << '\n';
    return emit(out, report, {{"command", "bellman verify-theorem2"}, {"epsilon", epsilon}, {"seed", g.seed},
                              {"instance", t2_inst.instance}, {"example", t2_inst.example}},
                rep.holds());
  }

  int switch_check(const Global& g) {
    if (instances < 1 || states < 1 || atoms < 1 || actions < 1) throw UsageError("dimensions must be >= 1");
    if (!(beta > 0.0 && beta < 1.0)) throw UsageError("--beta must lie in (0, 1)");
    const auto st = bellman::switch_study(g.seed, instances, states, atoms, actions, beta);
    const bool ok = st.holds();
    const json report = {{"instances", st.instances},
                         {"pairs", st.pairs},
                         {"premise_held", st.premise_held},
                         {"conclusion_violations", st.violations},
                         {"worst_conclusion_slack", st.premise_held ? json(st.worst_conclusion_slack) : json(nullptr)},
                         {"worst_rate_ratio", st.worst_rate_ratio},
                         {"rate_holds", st.rate_holds()},
                         {"holds", ok}};
    return emit(out, report, {{"command", "bellman verify-theorem3"}, {"instances", instances}, {"states", states},
                              {"atoms", atoms}, {"actions", actions}, {"beta", beta}, {"seed", g.seed}},
                ok);
  }

  int shape_check(const Global& g) {
    const auto inst = shape_inst.load();
    const auto dir = shape_inst.direction();
    const auto op = parse_operator(op_name, inst);
    bellman::ShapeReport rep;
    try {
      rep = bellman::check_shape_preservation(inst, op, dir, trials, g.seed);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    const json report = {{"instance", inst.name},
                         {"operator", op_name},
                         {"shape", bellman::shape_name(dir)},
                         {"trials", rep.trials},
                         {"failing_trials", rep.failing_trials},
                         {"worst_violation", rep.worst_violation},
                         {"holds", rep.passed}};
    return emit(out, report, {{"command", "bellman shape"}, {"operator", op_name}, {"trials", trials},
                              {"seed", g.seed}, {"instance", shape_inst.instance}, {"example", shape_inst.example}},
                rep.passed);
  }

  int export_instance() {
    bellman::FiniteInstance inst;
    if (export_example == "1") inst = bellman::build_example1({});
    else if (export_example == "2") inst = bellman::build_example2({});
    else if (export_example == "rosp") inst = bellman::build_rosp_grid({});
    else throw UsageError("--example must be 1, 2 or rosp");
    if (out == "-") {
      std::cout << bellman::to_json(inst).dump(1) << '\n';
    } else {
      try {
        bellman::save_instance(inst, out);
      } catch (const std::runtime_error& e) {
        throw UsageError(e.what());
      }
    }
    return kOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Revenue-optimization SDP/MPC laboratory"};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--config", g.config, "JSON file with option values (command-line flags take precedence)");
  app.add_option("--workers", g.workers, "Worker threads (0 = all cores); results do not depend on it")
      ->capture_default_str();
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();

  FigureCmd figure;
  EvalCmd eval;
  SampleConditionCmd prop5;
  DiscountSweepCmd prop6;
  BellmanCmd bell;
  figure.add(app);
  eval.add(app);
  prop5.add(app);
  prop6.add(app);
  bell.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (!g.config.empty()) apply_config(app, g.config);
    if (figure.selected) return figure.run(g);
    if (eval.selected) return eval.run(g);
    if (prop5.selected) return prop5.run(g);
    if (prop6.selected) return prop6.run(g);
    if (bell.selected) return bell.run(g);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
