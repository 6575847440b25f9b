#pragma once

// Command-line driver. Every command writes one JSON report (or CSV for
// `table`) to the output stream and maps failures onto exit codes.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mermin/angle_opt.hpp"
#include "mermin/bell.hpp"
#include "mermin/error.hpp"
#include "mermin/random.hpp"
#include "mermin/settings_io.hpp"
#include "mermin/spectra.hpp"

namespace mermin::cli {

enum ExitCode : int { kPass = 0, kVerificationFailure = 1, kUsage = 2, kResource = 3 };

using nlohmann::json;

/// Accumulates checks; the report fails iff any check fails.
class RunReport {
 public:
  RunReport(std::string command, json parameters, bool timestamps)
      : command_(std::move(command)), parameters_(std::move(parameters)), timestamps_(timestamps) {}

  /// Times `body`, which fills in the check's fields and returns pass/fail.
  template <class F>
  bool check(const std::string& name, F&& body) {
    json c = {{"name", name}};
    const auto t0 = std::chrono::steady_clock::now();
    const bool pass = body(c);
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    c["status"] = pass ? "pass" : "fail";
    if (timestamps_) c["wall_time_s"] = dt.count();
    checks_.push_back(std::move(c));
    passed_ = passed_ && pass;
    return pass;
  }

  void set_result(json r) { result_ = std::move(r); }
  bool passed() const { return passed_; }

  json to_json() const {
    json j = {{"command", command_}, {"parameters", parameters_}};
    if (timestamps_) {
      const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
      std::tm tm{};
      gmtime_r(&now, &tm);
      std::ostringstream ts;
      ts << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
      j["timestamp"] = ts.str();
    }
    j["checks"] = checks_;
    if (!result_.is_null()) j["result"] = result_;
    j["status"] = passed_ ? "pass" : "fail";
    return j;
  }

 private:
  std::string command_;
  json parameters_;
  bool timestamps_;
  json checks_ = json::array();
  json result_;
  bool passed_ = true;
};

// ---------------------------------------------------------------------------
// JSON views of library results

inline json to_json(const SpectralReport& r) {
  json clusters = json::array();
  for (const auto& c : r.multiplicities) clusters.push_back({{"value", c.value}, {"count", c.count}});
  return {{"eigenvalues", r.eigenvalues}, {"multiplicities", clusters}, {"max_abs", r.max_abs}};
}

inline json to_json(const ReductionReport& r) {
  json j = {{"n", r.n},
            {"m", r.m},
            {"factor", r.factor},
            {"residual", r.residual},
            {"survivors", r.survivors},
            {"eigen_computed", r.eigen_computed}};
  if (r.eigen_computed) {
    j["mu_max_full"] = r.mu_max_full;
    j["mu_max_reduced"] = r.mu_max_reduced;
    j["eigenvalue_law_ratio"] = r.eigenvalue_law_ratio;
    j["max_eigenvalue_ratio"] = r.max_eigenvalue_ratio;
    j["observed_max_eigenvalue"] = r.observed_max_eigenvalue;
  }
  j["perpendicular_max_eigenvalue"] = r.perpendicular_max_eigenvalue;
  return j;
}

inline json to_json(const LhvResult& r) {
  json w = json::array();
  for (const auto& a : r.witness) w.push_back({{"a", a.a}, {"a_prime", a.a_prime}});
  return {{"max_value", r.max_value}, {"encoding", r.encoding}, {"witness", w}};
}

inline double max_abs_cos(const PlanarSettings& p) {
  double m = 0.0;
  for (double t : p.thetas()) m = std::max(m, std::abs(std::cos(t)));
  return m;
}

inline json angles_json(const PlanarSettings& p) {
  json a = json::array();
  for (const auto& x : p.angles()) a.push_back({{"phi", x.phi}, {"phi_prime", x.phi_prime}, {"theta", x.theta()}});
  return a;
}

// ---------------------------------------------------------------------------
// Commands

struct Options {
  std::optional<std::size_t> n;
  std::optional<std::size_t> m;
  std::size_t n_min = 3;
  std::size_t n_max = 6;
  std::size_t trials = 20;
  std::uint64_t seed = 0;
  double tol = 1e-10;
  std::string settings;
  std::string objective = "spectral";
  std::string family = "mermin";
  std::size_t restarts = 8;
  std::size_t max_n = 8;
  bool no_timestamp = false;
  std::optional<std::string> format;
};

inline bool within(json& c, double residual, double tol) {
  c["residual"] = residual;
  c["tolerance"] = tol;
  return residual <= tol;
}

inline int cmd_verify(const Options& o, std::ostream& out) {
  if (o.n_min < 3 || o.n_min > o.n_max || o.n_max > 8) {
    throw ContractError("verify: need 3 <= n-min <= n-max <= 8");
  }
  if (o.trials < 1) throw ContractError("verify: trials must be >= 1");
  RunReport report("verify",
                   {{"n_min", o.n_min}, {"n_max", o.n_max}, {"trials", o.trials}, {"seed", o.seed}, {"tol", o.tol}},
                   !o.no_timestamp);
  Rng rng(o.seed);

  report.check("chsh_square_expansion", [&](json& c) {
    double worst = 0.0;
    for (std::size_t t = 0; t < o.trials; ++t) worst = std::max(worst, chsh_square_expansion(random_settings(2, rng)).residual);
    return within(c, worst, o.tol);
  });
  if (o.n_min == 3) {
    report.check("three_particle_square_expansion", [&](json& c) {
      double worst = 0.0;
      for (std::size_t t = 0; t < o.trials; ++t) {
        worst = std::max(worst, three_particle_square_expansion(random_settings(3, rng)).residual);
      }
      return within(c, worst, o.tol);
    });
  }
  for (std::size_t n = o.n_min; n <= o.n_max; ++n) {
    report.check("mermin_square_expansion_n" + std::to_string(n), [&](json& c) {
      c["n"] = n;
      double worst = 0.0;
      for (std::size_t t = 0; t < o.trials; ++t) {
        worst = std::max(worst, mermin_square_expansion(random_settings(n, rng)).residual);
      }
      return within(c, worst, o.tol);
    });
    report.check("dense_square_n" + std::to_string(n), [&](json& c) {
      c["n"] = n;
      const auto s = random_settings(n, rng);
      const auto b = to_dense(mermin_operator(s));
      return within(c, max_abs_diff(to_dense(mermin_square_expansion(s).expansion), b * b), o.tol);
    });
    report.check("reduction_n" + std::to_string(n), [&](json& c) {
      c["n"] = n;
      double worst = 0.0;
      for (std::size_t m = 0; m + 3 <= n; ++m) {
        const auto spec = ReductionSpec::standard(n, m);
        worst = std::max(worst, reduction_check(degenerate_settings(random_settings(n, rng), spec), spec).residual);
      }
      return within(c, worst, o.tol);
    });
  }
  out << report.to_json().dump(2) << '\n';
  return report.passed() ? kPass : kVerificationFailure;
}

inline int cmd_table(const Options& o, std::ostream& out) {
  if (o.max_n < 3) throw ContractError("table: max-n must be at least 3");
  if (o.max_n > kLhvEnumerationLimit) {
    throw ResourceError("table: max-n " + std::to_string(o.max_n) + " exceeds enumeration limit " +
                        std::to_string(kLhvEnumerationLimit));
  }
  const auto rows = violation_table(o.max_n);
  if (o.format.value_or("csv") == "csv") {
    out << "n,lhv_bound,quantum_max,ratio\n";
    for (const auto& r : rows) out << r.n << ',' << r.lhv_bound << ',' << r.quantum_max << ',' << r.ratio << '\n';
    return kPass;
  }
  RunReport report("table", {{"max_n", o.max_n}}, !o.no_timestamp);
  json table = json::array();
  for (const auto& r : rows) {
    table.push_back({{"n", r.n}, {"lhv_bound", r.lhv_bound}, {"quantum_max", r.quantum_max}, {"ratio", r.ratio}});
    report.check("lhv_enumeration_n" + std::to_string(r.n), [&](json& c) {
      c["expected"] = r.lhv_bound;
      c["value"] = *r.lhv_enumerated;
      return *r.lhv_enumerated == r.lhv_bound;
    });
  }
  report.set_result({{"rows", table}});
  out << report.to_json().dump(2) << '\n';
  return report.passed() ? kPass : kVerificationFailure;
}

inline int cmd_reduce(const Options& o, std::ostream& out) {
  std::optional<SettingsDocument> doc;
  if (!o.settings.empty()) doc = load_settings(o.settings);
  const std::size_t n = doc ? settings_size(*doc) : o.n.value_or(0);
  if (o.n && *o.n != n) throw ContractError("reduce: --n disagrees with the settings file");
  if (n == 0) throw ContractError("reduce: --n or --settings is required");
  if (!o.m) throw ContractError("reduce: --m is required");
  const auto spec = ReductionSpec::standard(n, *o.m);
  spec.validate(n);

  json params = {{"n", n}, {"m", *o.m}, {"seed", o.seed}, {"tol", o.tol}};
  if (!o.settings.empty()) params["settings"] = o.settings;
  RunReport report("reduce", params, !o.no_timestamp);

  ReductionReport r;
  if (doc && std::holds_alternative<PlanarSettings>(*doc)) {
    r = reduction_check(std::get<PlanarSettings>(*doc), spec);
  } else {
    Rng rng(o.seed);
    const auto base = doc ? std::get<MeasurementSettings>(*doc) : random_settings(n, rng);
    r = reduction_check(degenerate_settings(base, spec), spec);
  }
  report.check("operator_identity", [&](json& c) { return within(c, r.residual, o.tol); });
  if (r.eigen_computed) {
    report.check("eigenvalue_law", [&](json& c) {
      c["ratio"] = r.eigenvalue_law_ratio;
      return within(c, std::abs(r.eigenvalue_law_ratio - 1.0), 1e-8);
    });
  }
  report.set_result(to_json(r));
  out << report.to_json().dump(2) << '\n';
  return report.passed() ? kPass : kVerificationFailure;
}

inline BellFamily parse_family(const std::string& f) { return f == "chsh" ? BellFamily::chsh : BellFamily::mermin; }

inline int cmd_spectrum(const Options& o, std::ostream& out) {
  const BellFamily family = parse_family(o.family);
  MeasurementSettings settings = MeasurementSettings::canonical(2);
  json params = {{"family", o.family}};
  if (!o.settings.empty()) {
    settings = as_measurement(load_settings(o.settings));
    params["settings"] = o.settings;
  } else if (o.n) {
    settings = MeasurementSettings::canonical(*o.n);
    params["n"] = *o.n;
  } else {
    throw ContractError("spectrum: --settings or --n is required");
  }
  const std::size_t n = settings.n();
  const auto op = family == BellFamily::chsh ? chsh_operator(settings) : mermin_operator(settings);
  if (n > kDefaultDenseLimit) {
    throw ResourceError("spectrum: n = " + std::to_string(n) + " exceeds dense limit " +
                        std::to_string(kDefaultDenseLimit));
  }
  RunReport report("spectrum", params, !o.no_timestamp);
  const auto spec = eigen_hermitian(to_dense(op));
  const double bound = family == BellFamily::chsh ? 2 * std::numbers::sqrt2 : pow2(static_cast<int>(n) - 1);
  report.check("within_quantum_bound", [&](json& c) {
    c["value"] = spec.max_abs;
    c["bound"] = bound;
    return spec.max_abs <= bound + 1e-9;
  });
  json result = to_json(spec);
  result["n"] = n;
  report.set_result(result);
  out << report.to_json().dump(2) << '\n';
  return report.passed() ? kPass : kVerificationFailure;
}

inline int cmd_lhv(const Options& o, std::ostream& out) {
  if (!o.n) throw ContractError("lhv: --n is required");
  const BellFamily family = parse_family(o.family);
  RunReport report("lhv", {{"n", *o.n}, {"family", o.family}}, !o.no_timestamp);
  const auto r = lhv_max(*o.n, family);
  const long long expected = family == BellFamily::chsh ? 2 : classical_bound(*o.n);
  report.check("classical_bound", [&](json& c) {
    c["expected"] = expected;
    c["value"] = r.max_value;
    return r.max_value == expected;
  });
  report.check("witness_value", [&](json& c) {
    const long long v = lhv_value(family, r.witness);
    c["value"] = v;
    return (v < 0 ? -v : v) == r.max_value;
  });
  report.set_result(to_json(r));
  out << report.to_json().dump(2) << '\n';
  return report.passed() ? kPass : kVerificationFailure;
}

inline int cmd_optimize(const Options& o, std::ostream& out) {
  if (!o.n) throw ContractError("optimize: --n is required");
  OptimizeConfig config;
  config.n = *o.n;
  config.objective = o.objective == "ghz" ? Objective::ghz_expectation : Objective::planar_spectral_max;
  config.restarts = o.restarts;
  config.seed = o.seed;
  RunReport report("optimize",
                   {{"n", config.n}, {"objective", o.objective}, {"restarts", config.restarts}, {"seed", config.seed}},
                   !o.no_timestamp);
  const auto r = optimize_angles(config);
  const double ceiling = objective_ceiling(config.n, config.objective);

  report.check("reaches_ceiling", [&](json& c) {
    c["value"] = r.best_value;
    c["ceiling"] = ceiling;
    return std::abs(r.best_value - ceiling) <= 1e-6 * ceiling;
  });
  report.check("never_exceeds_ceiling", [&](json& c) {
    double worst = -ceiling;
    for (const auto& x : r.restarts) worst = std::max(worst, x.value - ceiling);
    c["max_excess"] = worst;
    return worst <= 1e-9;
  });
  report.check("near_max_runs_perpendicular", [&](json& c) {
    double worst = 0.0;
    std::size_t count = 0;
    for (const auto& x : r.restarts) {
      if (x.value < ceiling - 1e-6 * ceiling) continue;
      ++count;
      worst = std::max(worst, max_abs_cos(x.angles));
    }
    c["near_max_runs"] = count;
    c["max_abs_cos_theta"] = worst;
    return worst < 1e-3;
  });

  json restarts = json::array();
  for (const auto& x : r.restarts) {
    restarts.push_back({{"value", x.value},
                        {"iterations", x.iterations},
                        {"converged", x.converged},
                        {"max_abs_cos_theta", max_abs_cos(x.angles)}});
  }
  report.set_result({{"best_value", r.best_value},
                     {"best_angles", angles_json(r.best_angles)},
                     {"best_restart", r.best_restart},
                     {"iterations", r.iterations},
                     {"converged", r.converged},
                     {"ceiling", ceiling},
                     {"restarts", restarts}});
  out << report.to_json().dump(2) << '\n';
  return report.passed() ? kPass : kVerificationFailure;
}

// ---------------------------------------------------------------------------

/// Runs one command line (without the program name).
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mermin-operator verification and analysis toolkit", "mermin"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_flag("--no-timestamp", o.no_timestamp, "Omit timestamps and wall times");
    sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  };
  auto* verify = app.add_subcommand("verify", "Expansion and reduction identity suites");
  verify->add_option("--n-min", o.n_min, "Smallest particle count")->capture_default_str();
  verify->add_option("--n-max", o.n_max, "Largest particle count")->capture_default_str();
  verify->add_option("--trials", o.trials, "Random settings per check")->capture_default_str();
  verify->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
  verify->add_option("--tol", o.tol, "Residual tolerance")->capture_default_str();

  auto* table = app.add_subcommand("table", "Classical bound, quantum maximum and violation factor");
  table->add_option("--max-n", o.max_n, "Largest particle count")->capture_default_str();

  auto* reduce = app.add_subcommand("reduce", "Check the reduction law for m degenerate particles");
  reduce->add_option("--n", o.n, "Particle count");
  reduce->add_option("--m", o.m, "Degenerate particles")->required();
  reduce->add_option("--settings", o.settings, "Settings JSON file");
  reduce->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
  reduce->add_option("--tol", o.tol, "Residual tolerance")->capture_default_str();

  auto* spectrum = app.add_subcommand("spectrum", "Eigenvalues of a Bell operator");
  spectrum->add_option("--settings", o.settings, "Settings JSON file");
  spectrum->add_option("--n", o.n, "Canonical x/y settings for n particles");
  spectrum->add_option("--family", o.family, "Operator family")->check(CLI::IsMember({"mermin", "chsh"}));

  auto* lhv = app.add_subcommand("lhv", "Exhaustive local-hidden-variable bound");
  lhv->add_option("--n", o.n, "Particle count")->required();
  lhv->add_option("--family", o.family, "Operator family")->check(CLI::IsMember({"mermin", "chsh"}));

  auto* optimize = app.add_subcommand("optimize", "Maximize over planar measurement angles");
  optimize->add_option("--n", o.n, "Particle count")->required();
  optimize->add_option("--objective", o.objective, "ghz or spectral")->check(CLI::IsMember({"ghz", "spectral"}));
  optimize->add_option("--restarts", o.restarts, "Random restarts")->capture_default_str();
  optimize->add_option("--seed", o.seed, "RNG seed")->capture_default_str();

  for (auto* sub : {verify, table, reduce, spectrum, lhv, optimize}) common(sub);

  std::vector<std::string> argv_store{"mermin"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kPass : kUsage;
  }

  try {
    if (o.format == "csv" && !table->parsed()) throw ContractError("--format csv is only available for table");
    if (verify->parsed()) return cmd_verify(o, out);
    if (table->parsed()) return cmd_table(o, out);
    if (reduce->parsed()) return cmd_reduce(o, out);
    if (spectrum->parsed()) return cmd_spectrum(o, out);
    if (lhv->parsed()) return cmd_lhv(o, out);
    return cmd_optimize(o, out);
  } catch (const ResourceError& e) {
    err << "resource limit: " << e.what() << '\n';
    return kResource;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::logic_error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace mermin::cli
