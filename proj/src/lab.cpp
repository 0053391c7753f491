#include "percoldp/lab.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "percoldp/clusters.hpp"
#include "percoldp/corrector_field.hpp"
#include "percoldp/error.hpp"
#include "percoldp/parallel.hpp"
#include "percoldp/rate_functional.hpp"
#include "percoldp/transfer_spectral.hpp"

#ifndef PERCOLDP_VERSION
#define PERCOLDP_VERSION "unknown"
#endif

namespace percoldp::lab {
namespace {

using json = nlohmann::json;

// Stream tags for randomness derived from --seed.
constexpr std::uint64_t kWalkStream = 0x57414C4BULL;
constexpr std::uint64_t kPairStream = 0x50414952ULL;

/// Seed of replicate r at side L for the multi-environment commands.
std::uint64_t replicate_seed(std::uint64_t seed, std::int64_t side, std::size_t r) {
  return derive_seed(derive_seed(seed, static_cast<std::uint64_t>(side)), r);
}

class GapError : public Error {
 public:
  using Error::Error;
};

struct EnvOptions {
  std::string env_file;
  int d = 2;
  std::int64_t L = 16;
  double p = 0.75;
  std::uint64_t seed = 7;
  std::size_t max_tries = 1000;
  bool all_open = false;
};

struct KernelOptions {
  std::string kind = "srw";
  double beta = 2.0;
};

void add_env_options(CLI::App* cmd, EnvOptions& o, bool single) {
  if (single) {
    cmd->add_option("--env", o.env_file, "PERC environment file (overrides sampling flags)")->check(CLI::ExistingFile);
    cmd->add_flag("--all-open", o.all_open, "use the lattice with every bond open");
    cmd->add_option("--L", o.L, "torus side")->check(CLI::Range(std::int64_t{2}, std::int64_t{1} << 20));
  }
  cmd->add_option("--d", o.d, "dimension")->check(CLI::Range(2, 6));
  cmd->add_option("--p", o.p, "bond probability")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--max-tries", o.max_tries, "resampling cap for the origin-in-giant event")
      ->check(CLI::PositiveNumber);
}

void add_kernel_options(CLI::App* cmd, KernelOptions& o) {
  cmd->add_option("--kernel", o.kind, "reference kernel")->check(CLI::IsMember({"srw", "beta"}));
  cmd->add_option("--beta", o.beta, "bias for --kernel beta")->check(CLI::Range(1.0, 1e6));
}

ClusterPtr load_cluster(const EnvOptions& o, std::int64_t side, std::uint64_t seed) {
  if (!o.env_file.empty()) {
    Environment env = read_environment(o.env_file);
    ClusterLabeling labels = label_clusters(env);
    if (!labels.origin_in_giant) throw ParameterError("origin of " + o.env_file + " is not in the giant cluster");
    return make_cluster(std::move(env), std::move(labels));
  }
  if (o.all_open) return make_cluster(all_open(o.d, side));
  ConditionedSample s = condition_on_origin(o.d, side, o.p, seed, ConditionOptions{o.max_tries, 0.5});
  return make_cluster(std::move(s.env), std::move(s.labels));
}

TransitionKernel make_kernel(const ClusterPtr& c, const KernelOptions& k) {
  if (k.kind == "beta" && k.beta > 1.0) return beta_kernel(c, k.beta);
  return srw_kernel(c);
}

std::vector<double> tilt(const std::vector<double>& theta, int d) {
  if (theta.empty()) return std::vector<double>(static_cast<std::size_t>(d), 0.0);
  if (theta.size() != static_cast<std::size_t>(d))
    throw ParameterError("--theta needs " + std::to_string(d) + " components");
  return theta;
}

void write_csv_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
  if (path.empty()) return;
  std::ofstream f(path);
  if (!f) throw ParameterError("cannot open " + path + " for writing");
  body(f);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Echo of every option that has a value, keyed by its long name.
json config_echo(const CLI::App* cmd) {
  json cfg = json::object();
  for (const CLI::Option* opt : cmd->get_options()) {
    std::string name = opt->get_single_name();
    if (name.empty() || name == "help") continue;
    const bool is_list = opt->get_items_expected_max() > 1;
    std::vector<std::string> vals = opt->count() ? opt->results() : std::vector<std::string>{};
    if (vals.empty() && !opt->get_default_str().empty()) {
      std::string def = opt->get_default_str();
      // List defaults are captured as "[a,b,...]".
      if (is_list && def == "{}") {
        cfg[name] = json::array();
        continue;
      }
      if (is_list && def.size() >= 2 && def.front() == '[' && def.back() == ']') {
        std::stringstream items(def.substr(1, def.size() - 2));
        for (std::string item; std::getline(items, item, ',');) vals.push_back(item);
      } else {
        vals = {def};
      }
    }
    if (vals.empty()) continue;
    cfg[name] = is_list ? json(vals) : json(vals.front());
  }
  return cfg;
}

json versions() {
  return {{"percoldp", PERCOLDP_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"cli11", CLI11_VERSION},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

// ---- commands ---------------------------------------------------------------

struct SampleCmd {
  EnvOptions env;
  std::string out;
  json operator()() const {
    ConditionedSample s = condition_on_origin(env.d, env.L, env.p, env.seed, ConditionOptions{env.max_tries, 0.5});
    write_environment(s.env, out);
    const double sites = static_cast<double>(s.env.lattice().site_count());
    return {{"out", out},
            {"tries", s.tries},
            {"giant_size", s.labels.giant_size()},
            {"giant_fraction", static_cast<double>(s.labels.giant_size()) / sites},
            {"open_bonds", s.env.open_bond_count()}};
  }
};

struct MgfCmd {
  EnvOptions env;
  KernelOptions kernel;
  std::vector<double> theta{0.5, 0.0};
  std::vector<std::size_t> horizons{128, 256, 512, 1024, 2048, 4096};
  std::size_t samples = 0;
  std::size_t mc_n = 256;
  double perron_tol = 1e-12;
  std::string trace_csv, csv;

  json operator()() const {
    const ClusterPtr c = load_cluster(env, env.L, env.seed);
    const TransitionKernel k = make_kernel(c, kernel);
    const auto f = TestFunction::linear(tilt(theta, c->lattice().dim()));
    const TiltedOperator op = build_tilted(k, f);
    PerronOptions po;
    po.tol = perron_tol;
    po.record_trace = !trace_csv.empty();
    const PerronResult pr = log_perron(op, po);
    write_csv_file(trace_csv, [&](std::ostream& o) { write_trace_csv(pr, o); });
    const auto lam = finite_n_mgf_at(op, c->anchor(), horizons);
    std::vector<double> scaled(lam.size());
    for (std::size_t i = 0; i < lam.size(); ++i)
      scaled[i] = static_cast<double>(horizons[i]) * std::abs(lam[i] - pr.log_rho);
    write_csv_file(csv, [&](std::ostream& o) {
      o << "n,lambda_n,n_gap\n";
      o.precision(17);
      for (std::size_t i = 0; i < lam.size(); ++i) o << horizons[i] << ',' << lam[i] << ',' << scaled[i] << '\n';
    });
    json out = {{"giant_size", c->size()},
                {"log_perron", pr.log_rho},
                {"perron_iterations", pr.iterations},
                {"perron_residual", pr.residual},
                {"n", horizons},
                {"lambda_n", lam},
                {"n_gap", scaled}};
    if (samples > 0) {
      const McMgfResult mc = mc_mgf(k, f, mc_n, samples, derive_seed(env.seed, kWalkStream));
      const double exact = finite_n_mgf(op, c->anchor(), mc_n);
      out["mc_n"] = mc_n;
      out["mc_estimate"] = mc.estimate;
      out["mc_stderr"] = mc.std_error;
      out["mc_exact"] = exact;
      out["mc_z"] = mc.std_error > 0.0 ? (mc.estimate - exact) / mc.std_error : 0.0;
    }
    return out;
  }
};

struct RateCmd {
  EnvOptions env;
  KernelOptions kernel;
  double theta_half_width = 1.5;
  std::size_t theta_count = 61;
  double x_half_width = 0.3;
  std::size_t x_count = 13;
  std::vector<double> check;
  std::string csv, hbar_csv;

  json operator()() const {
    const ClusterPtr c = load_cluster(env, env.L, env.seed);
    const TransitionKernel k = make_kernel(c, kernel);
    const int d = c->lattice().dim();
    const LevelOneCurve curve =
        level1_rate(k, box_grid(d, theta_half_width, theta_count), box_grid(d, x_half_width, x_count));
    write_csv_file(csv, [&](std::ostream& o) { write_level1_csv(curve, o); });
    write_csv_file(hbar_csv, [&](std::ostream& o) { write_hbar_csv(curve, o); });
    const auto best = std::min_element(curve.J.begin(), curve.J.end()) - curve.J.begin();
    const auto saturated = std::count(curve.saturated.begin(), curve.saturated.end(), true);
    json out = {{"giant_size", c->size()},
                {"J_min", curve.J[static_cast<std::size_t>(best)]},
                {"argmin_x", curve.x[static_cast<std::size_t>(best)]},
                {"saturated_points", saturated},
                {"x_points", curve.x.size()}};
    if (check.size() % static_cast<std::size_t>(d) != 0)
      throw ParameterError("--check needs a multiple of " + std::to_string(d) + " values");
    json rows = json::array();
    for (std::size_t i = 0; i < check.size(); i += static_cast<std::size_t>(d)) {
      const std::vector<double> x(check.begin() + static_cast<std::ptrdiff_t>(i),
                                  check.begin() + static_cast<std::ptrdiff_t>(i) + d);
      const double legendre = level1_rate(k, curve.theta, {x}).J.front();
      const ConstrainedRate cr = constrained_rate(k, x);
      rows.push_back({{"x", x}, {"legendre", legendre}, {"constrained", cr.value}, {"gap", std::abs(legendre - cr.value)}});
    }
    if (!rows.empty()) out["check"] = rows;
    return out;
  }
};

struct DualityCmd {
  EnvOptions env;
  KernelOptions kernel;
  std::vector<double> theta{0.5, 0.0};
  double tol = 1e-6;

  json operator()() const {
    const ClusterPtr c = load_cluster(env, env.L, env.seed);
    const TransitionKernel k = make_kernel(c, kernel);
    const auto f = TestFunction::linear(tilt(theta, c->lattice().dim())).tabulate(*c);
    const double hb = h_bar(k, f).value;
    const double ml = minimize_lambda(k, f).value;
    const double lp = log_perron(build_tilted(k, f)).log_rho;
    const double g1 = std::abs(hb - ml), g2 = std::abs(hb - lp), g3 = std::abs(ml - lp);
    json out = {{"giant_size", c->size()}, {"h_bar", hb},         {"minimize_lambda", ml}, {"log_perron", lp},
                {"gap_hbar_minlambda", g1}, {"gap_hbar_perron", g2}, {"gap_minlambda_perron", g3}};
    if (std::max({g1, g2, g3}) > tol) throw GapError(out.dump());
    return out;
  }
};

struct CorrectorCmd {
  EnvOptions env;
  std::vector<std::int64_t> sides{64, 128, 256};
  std::size_t seeds = 20;
  std::vector<double> theta{0.5, 0.0};
  double perron_tol = 1e-10;
  std::string csv;

  json operator()() const {
    struct Job {
      std::int64_t L;
      std::size_t r;
    };
    std::vector<Job> jobs;
    for (const auto L : sides)
      for (std::size_t r = 0; r < seeds; ++r) jobs.push_back({L, r});
    std::vector<std::vector<SublinearityRow>> rows(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t i) {
      const std::uint64_t s = replicate_seed(env.seed, jobs[i].L, jobs[i].r);
      const ClusterPtr c = load_cluster(env, jobs[i].L, s);
      const TransitionKernel k = srw_kernel(c);
      const auto f = TestFunction::linear(tilt(theta, c->lattice().dim())).tabulate(*c);
      PerronOptions po;
      po.tol = perron_tol;
      rows[i] = sublinearity_scan(corrector(perron_field(k, f, po), s), 100, derive_seed(s, kWalkStream));
    });
    std::vector<SublinearityRow> flat;
    for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
    write_csv_file(csv, [&](std::ostream& o) { write_scan_csv(flat, o); });

    json per_l = json::array();
    for (const auto L : sides) {
      std::vector<double> max_half, max_quarter, frac10, frac05, cfit;
      for (const auto& r : flat) {
        if (r.L != L) continue;
        if (r.n == L / 2) {
          max_half.push_back(r.max_psi_over_n);
          frac10.push_back(r.fraction_eps10);
          frac05.push_back(r.fraction_eps05);
          cfit.push_back(r.fitted_c_eps);
        } else {
          max_quarter.push_back(r.max_psi_over_n);
        }
      }
      auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (const double x : v) s += x;
        return v.empty() ? 0.0 : s / static_cast<double>(v.size());
      };
      per_l.push_back({{"L", L},
                       {"median_max_psi_over_half_L", median(max_half)},
                       {"median_max_psi_over_quarter_L", median(max_quarter)},
                       {"mean_fraction_eps05", mean(frac05)},
                       {"mean_fraction_eps10", mean(frac10)},
                       {"median_fitted_c_eps", median(cfit)}});
    }
    return {{"per_L", per_l}, {"rows", flat.size()}};
  }
};

struct ChemdistCmd {
  EnvOptions env;
  std::vector<std::int64_t> sides{64, 256};
  std::size_t pairs = 10000;
  std::string csv;

  json operator()() const {
    json per_l = json::array();
    std::ofstream file;
    if (!csv.empty()) {
      file.open(csv);
      if (!file) throw ParameterError("cannot open " + csv + " for writing");
      file << "L,x,y,l1,chemical,ratio\n";
      file.precision(17);
    }
    for (const auto L : sides) {
      const std::uint64_t s = replicate_seed(env.seed, L, 0);
      const ClusterPtr c = load_cluster(env, L, s);
      CounterRng rng(derive_seed(s, kPairStream));
      const ChemDistReport rep = chemdist_survey(c->env(), c->labels(), pairs, rng);
      if (file)
        for (const auto& q : rep.pairs)
          file << L << ',' << q.x << ',' << q.y << ',' << q.l1 << ',' << q.chemical << ',' << q.ratio() << '\n';
      per_l.push_back({{"L", L}, {"p50", rep.p50}, {"p90", rep.p90}, {"p99", rep.p99}, {"max", rep.max}});
    }
    return {{"per_L", per_l}};
  }
};

struct SpeedCmd {
  EnvOptions env;
  std::vector<double> betas{1.5, 10.0};
  std::size_t n = 100000;
  std::size_t seeds = 50;
  std::string csv;

  json operator()() const {
    std::vector<std::vector<double>> speed(betas.size(), std::vector<double>(seeds, 0.0));
    parallel_for(seeds, [&](std::size_t r) {
      const std::uint64_t s = replicate_seed(env.seed, env.L, r);
      const ClusterPtr c = load_cluster(env, env.L, s);
      for (std::size_t b = 0; b < betas.size(); ++b) {
        const TransitionKernel k = betas[b] > 1.0 ? beta_kernel(c, betas[b]) : srw_kernel(c);
        const Trajectory t = simulate(k, c->anchor(), n, derive_seed(derive_seed(s, kWalkStream), b));
        speed[b][r] = mean_velocity(t)[0];
      }
    });
    write_csv_file(csv, [&](std::ostream& o) {
      o << "seed_index,beta,speed\n";
      o.precision(17);
      for (std::size_t r = 0; r < seeds; ++r)
        for (std::size_t b = 0; b < betas.size(); ++b) o << r << ',' << betas[b] << ',' << speed[b][r] << '\n';
    });
    json per_beta = json::array();
    for (std::size_t b = 0; b < betas.size(); ++b) {
      double m = 0.0;
      for (const double v : speed[b]) m += v;
      per_beta.push_back({{"beta", betas[b]}, {"mean_speed", m / static_cast<double>(seeds)}, {"speeds", speed[b]}});
    }
    json out = {{"per_beta", per_beta}};
    if (betas.size() >= 2) {
      std::size_t slower = 0;
      for (std::size_t r = 0; r < seeds; ++r) slower += speed.back()[r] < speed.front()[r];
      out["fraction_last_below_first"] = static_cast<double>(slower) / static_cast<double>(seeds);
    }
    return out;
  }
};

}  // namespace

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config needs a file");
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (path.empty()) return rest;
  std::ifstream in(path);
  if (!in) throw CLI::FileError::Missing(path);

  auto given = [&rest](const std::string& flag) {
    return std::any_of(rest.begin(), rest.end(),
                       [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
  };
  std::vector<std::string> extra;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos)
      throw CLI::ConversionError(path + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string flag = "--" + key;
    if (given(flag) || value == "false") continue;
    extra.push_back(flag);
    if (!value.empty() && value != "true") extra.push_back(value);
  }
  // Insert right after the subcommand name.
  static const std::vector<std::string> kCommands{"sample", "mgf", "rate", "duality", "corrector", "chemdist", "speed"};
  auto pos = std::find_first_of(rest.begin(), rest.end(), kCommands.begin(), kCommands.end());
  if (pos != rest.end()) ++pos;
  rest.insert(pos, extra.begin(), extra.end());
  return rest;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quenched large deviations for random walks on percolation clusters"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  std::size_t threads = 0;
  std::string json_path;
  app.add_option("--threads", threads, "worker cap (PERCOLDP_THREADS when unset)")->check(CLI::PositiveNumber);
  app.add_option("--json", json_path, "append ResultRecords to this file instead of stdout");
  app.add_option("--config", "flat key = value file; command-line flags take precedence");

  std::function<json()> action;
  std::string command;
  auto bind = [&](CLI::App* cmd, auto& state) {
    cmd->callback([&action, &command, &state, cmd] {
      command = cmd->get_name();
      action = [&state] { return state(); };
    });
  };

  SampleCmd sample;
  auto* c_sample = app.add_subcommand("sample", "sample an environment conditioned on the origin being in the giant cluster");
  add_env_options(c_sample, sample.env, false);
  c_sample->add_option("--L", sample.env.L, "torus side")->check(CLI::Range(std::int64_t{2}, std::int64_t{1} << 20));
  c_sample->add_option("--out", sample.out, "output PERC file")->required();
  bind(c_sample, sample);

  MgfCmd mgf;
  auto* c_mgf = app.add_subcommand("mgf", "Perron root, finite-n log-MGFs and the Monte Carlo estimate");
  add_env_options(c_mgf, mgf.env, true);
  add_kernel_options(c_mgf, mgf.kernel);
  c_mgf->add_option("--theta", mgf.theta, "tilt vector")->delimiter(',');
  c_mgf->add_option("--n", mgf.horizons, "horizons")->delimiter(',')->check(CLI::PositiveNumber);
  c_mgf->add_option("--samples", mgf.samples, "Monte Carlo trajectories (0 skips)");
  c_mgf->add_option("--mc-n", mgf.mc_n, "Monte Carlo horizon")->check(CLI::PositiveNumber);
  c_mgf->add_option("--perron-tol", mgf.perron_tol, "Perron residual tolerance")->check(CLI::PositiveNumber);
  c_mgf->add_option("--trace", mgf.trace_csv, "Perron convergence trace CSV");
  c_mgf->add_option("--csv", mgf.csv, "n, lambda_n, n_gap CSV");
  bind(c_mgf, mgf);

  RateCmd rate;
  auto* c_rate = app.add_subcommand("rate", "level-1 rate function by Legendre transform");
  add_env_options(c_rate, rate.env, true);
  add_kernel_options(c_rate, rate.kernel);
  c_rate->add_option("--theta-half-width", rate.theta_half_width)->check(CLI::NonNegativeNumber);
  c_rate->add_option("--theta-count", rate.theta_count)->check(CLI::PositiveNumber);
  c_rate->add_option("--x-half-width", rate.x_half_width)->check(CLI::NonNegativeNumber);
  c_rate->add_option("--x-count", rate.x_count)->check(CLI::PositiveNumber);
  c_rate->add_option("--check", rate.check, "velocities (flattened) for the constrained-program cross-check")
      ->delimiter(',');
  c_rate->add_option("--csv", rate.csv, "J curve CSV");
  c_rate->add_option("--hbar-csv", rate.hbar_csv, "h_bar sweep CSV");
  bind(c_rate, rate);

  DualityCmd duality;
  auto* c_dual = app.add_subcommand("duality", "compare h_bar, minimize_lambda and the Perron root");
  add_env_options(c_dual, duality.env, true);
  add_kernel_options(c_dual, duality.kernel);
  c_dual->add_option("--theta", duality.theta, "tilt vector")->delimiter(',');
  c_dual->add_option("--tol", duality.tol, "largest accepted pairwise gap")->check(CLI::PositiveNumber);
  bind(c_dual, duality);

  CorrectorCmd corr;
  auto* c_corr = app.add_subcommand("corrector", "corrector sublinearity scan over growing tori");
  add_env_options(c_corr, corr.env, false);
  c_corr->add_option("--L", corr.sides, "torus sides")->delimiter(',')->check(CLI::Range(std::int64_t{4}, std::int64_t{1} << 20));
  c_corr->add_option("--seeds", corr.seeds, "environments per side")->check(CLI::PositiveNumber);
  c_corr->add_option("--theta", corr.theta, "tilt defining the Perron potential")->delimiter(',');
  c_corr->add_option("--perron-tol", corr.perron_tol)->check(CLI::PositiveNumber);
  c_corr->add_option("--csv", corr.csv, "scan CSV");
  bind(c_corr, corr);

  ChemdistCmd chem;
  auto* c_chem = app.add_subcommand("chemdist", "chemical-distance ratios on the giant cluster");
  add_env_options(c_chem, chem.env, false);
  c_chem->add_option("--L", chem.sides, "torus sides")->delimiter(',')->check(CLI::Range(std::int64_t{2}, std::int64_t{1} << 20));
  c_chem->add_option("--pairs", chem.pairs, "pairs per side")->check(CLI::PositiveNumber);
  c_chem->add_option("--csv", chem.csv, "per-pair CSV");
  bind(c_chem, chem);

  SpeedCmd speed;
  speed.env.L = 64;
  speed.env.p = 0.7;
  auto* c_speed = app.add_subcommand("speed", "biased-walk speed per bias");
  add_env_options(c_speed, speed.env, false);
  c_speed->add_option("--L", speed.env.L, "torus side")->check(CLI::Range(std::int64_t{2}, std::int64_t{1} << 20));
  c_speed->add_option("--beta", speed.betas, "biases (1 means the simple walk)")->delimiter(',')->check(CLI::Range(1.0, 1e6));
  c_speed->add_option("--n", speed.n, "steps")->check(CLI::PositiveNumber);
  c_speed->add_option("--seeds", speed.seeds, "environments")->check(CLI::PositiveNumber);
  c_speed->add_option("--csv", speed.csv, "per-seed CSV");
  bind(c_speed, speed);

  try {
    std::vector<std::string> expanded = expand_config(args);
    std::reverse(expanded.begin(), expanded.end());  // CLI11 consumes a reversed vector
    app.parse(expanded);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  if (threads > 0) set_thread_count(threads);

  const CLI::App* cmd = app.get_subcommands().front();
  const auto start = std::chrono::steady_clock::now();
  json record = {{"command", command}, {"config", config_echo(cmd)}};
  int code = kOk;
  try {
    record["outputs"] = action();
  } catch (const GapError& e) {
    record["outputs"] = json::parse(e.what());
    err << "error: oracle gap above tolerance\n";
    code = kGap;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConditioningError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const AdmissibilityError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumeric;
  }
  record["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  record["versions"] = versions();
  if (json_path.empty()) {
    out << record.dump() << '\n';
  } else {
    std::ofstream f(json_path, std::ios::app);
    if (!f) {
      err << "error: cannot open " << json_path << '\n';
      return kUsage;
    }
    f << record.dump() << '\n';
  }
  return code;
}

}  // namespace percoldp::lab
