#include "priorlens/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "priorlens/criteria.hpp"
#include "priorlens/errors.hpp"
#include "priorlens/estimate.hpp"
#include "priorlens/quadrature.hpp"
#include "priorlens/relation.hpp"

namespace priorlens {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ConfigError {
  std::string message;
};

// Output locations come from user flags, so a path that cannot be created
// or opened is reported as a configuration problem, not a numerical one.
void ensure_output_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw ConfigError{"cannot create output directory " + dir + ": " +
                      ec.message()};
  }
}

unsigned thread_budget() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("PRIORLENS_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) {
      hw = static_cast<unsigned>(std::min<unsigned long>(hw, v));
    }
  }
  return hw;
}

// Replications are independent; each owns its RNG stream, so the schedule
// does not affect results. Bodies must not throw.
void parallel_reps(std::size_t reps,
                   const std::function<void(std::size_t)>& body) {
  const std::size_t T =
      std::min<std::size_t>(thread_budget(), std::max<std::size_t>(reps, 1));
  if (T <= 1) {
    for (std::size_t r = 0; r < reps; ++r) body(r);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(T);
  for (std::size_t i = 0; i < T; ++i) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t r = next.fetch_add(1);
        if (r >= reps) return;
        body(r);
      }
    });
  }
  for (auto& th : pool) th.join();
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  return (k % 2 == 1) ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_short(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace

std::vector<double> GridSpec::points() const {
  if (!(low < high)) throw OutOfDomain("GridSpec: low must be below high");
  if (count < 2) throw OutOfDomain("GridSpec: count must be >= 2");
  std::vector<double> out;
  out.reserve(count);
  // An open endpoint is excluded by moving one uniform step inward; the
  // number of realized points is always `count`.
  const int intervals =
      count - 1 + (closed_low ? 0 : 1) + (closed_high ? 0 : 1);
  const double step = (high - low) / static_cast<double>(intervals);
  const int first = closed_low ? 0 : 1;
  for (int k = 0; k < count; ++k) {
    out.push_back(low + static_cast<double>(first + k) * step);
  }
  return out;
}

std::pair<double, bool> grid_minimize(
    const std::vector<std::pair<double, double>>& values) {
  if (values.empty()) throw OutOfDomain("grid_minimize: empty value list");
  for (const auto& [h, v] : values) {
    if (!std::isfinite(v)) {
      throw NonFinite("grid_minimize: non-finite criterion value");
    }
    (void)h;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const auto& [h, v] = values[i];
    const auto& [bh, bv] = values[best];
    if (v < bv || (v == bv && h < bh)) best = i;
  }
  const bool diverged = (best == 0 || best + 1 == values.size());
  return {values[best].first, diverged};
}

ResultRow ResultTable::row(std::size_t i) const {
  const std::size_t C = criteria.size();
  ResultRow r;
  r.replication = rep_of_row[i];
  r.hyper = hyper_of_row[i];
  r.values.resize(C);
  r.chosen.resize(C);
  for (std::size_t c = 0; c < C; ++c) {
    const double v = cell[i * C + c];
    if (!std::isnan(v)) r.values[c] = v;
    r.chosen[c] = flag[i * C + c] != 0;
  }
  return r;
}

std::size_t ResultTable::criterion_index(const std::string& name) const {
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    if (criteria[c] == name) return c;
  }
  throw OutOfDomain("ResultTable: unknown criterion " + name);
}

std::vector<double> ResultTable::chosen_of(const std::string& name) const {
  const std::size_t c = criterion_index(name);
  const std::size_t C = criteria.size();
  std::vector<double> out;
  for (std::size_t i = 0; i < row_count(); ++i) {
    if (flag[i * C + c] != 0) out.push_back(hyper_of_row[i]);
  }
  return out;
}

double chosen_agreement_fraction(const ResultTable& table,
                                 const std::string& crit_a,
                                 const std::string& crit_b) {
  const std::vector<double> a = table.chosen_of(crit_a);
  const std::vector<double> b = table.chosen_of(crit_b);
  if (a.size() != b.size() || a.empty()) {
    throw OutOfDomain("chosen_agreement_fraction: mismatched chosen lists");
  }
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) ++same;
  }
  return static_cast<double>(same) / static_cast<double>(a.size());
}

// ---------------------------------------------------------------------------
// Experiment engine

namespace {

struct RepOutput {
  bool ok = false;
  std::vector<std::string> warnings;
};

// Shared replication loop: `body` fills the cell/flag slices for one
// replication and returns success. Failures are recorded, counted, excluded.
void run_replications(
    ResultTable& table, std::size_t reps,
    const std::function<void(std::size_t, Rng&, double*, std::uint8_t*,
                             RepOutput&)>& body,
    std::uint64_t seed) {
  const std::size_t G = table.grid.size();
  const std::size_t C = table.criteria.size();
  std::vector<double> vals(reps * G * C, kNaN);
  std::vector<std::uint8_t> flags(reps * G * C, 0);
  std::vector<RepOutput> outs(reps);

  parallel_reps(reps, [&](std::size_t r) {
    Rng rng = Rng::stream(seed, r);
    RepOutput& out = outs[r];
    try {
      body(r, rng, &vals[r * G * C], &flags[r * G * C], out);
      out.ok = true;
    } catch (const Error& e) {
      out.ok = false;
      out.warnings.push_back("replication " + std::to_string(r) +
                             " failed: " + e.what());
    } catch (const std::exception& e) {
      out.ok = false;
      out.warnings.push_back("replication " + std::to_string(r) +
                             " failed unexpectedly: " + e.what());
    }
  });

  std::size_t ok_count = 0;
  for (const RepOutput& o : outs) ok_count += o.ok ? 1 : 0;
  table.replications = reps;
  table.failed_replications = reps - ok_count;
  table.rep_of_row.reserve(ok_count * G);
  table.hyper_of_row.reserve(ok_count * G);
  table.cell.reserve(ok_count * G * C);
  table.flag.reserve(ok_count * G * C);
  for (std::size_t r = 0; r < reps; ++r) {
    for (const std::string& w : outs[r].warnings) table.warnings.push_back(w);
    if (!outs[r].ok) continue;
    for (std::size_t g = 0; g < G; ++g) {
      table.rep_of_row.push_back(static_cast<std::uint32_t>(r));
      table.hyper_of_row.push_back(table.grid[g]);
      for (std::size_t c = 0; c < C; ++c) {
        table.cell.push_back(vals[(r * G + g) * C + c]);
        table.flag.push_back(flags[(r * G + g) * C + c]);
      }
    }
  }
}

// Chosen-hyperparameter flags for one replication: one argmin per criterion
// over its defined grid points, divergence warnings recorded.
void mark_chosen(const std::vector<double>& grid,
                 const std::vector<std::string>& criteria, std::size_t rep,
                 double* cells, std::uint8_t* flags, RepOutput& out) {
  const std::size_t G = grid.size();
  const std::size_t C = criteria.size();
  for (std::size_t c = 0; c < C; ++c) {
    std::vector<std::pair<double, double>> defined;
    std::vector<std::size_t> where;
    for (std::size_t g = 0; g < G; ++g) {
      const double v = cells[g * C + c];
      if (!std::isnan(v)) {
        defined.push_back({grid[g], v});
        where.push_back(g);
      }
    }
    if (defined.empty()) continue;
    const auto [h, diverged] = grid_minimize(defined);
    for (std::size_t k = 0; k < defined.size(); ++k) {
      if (defined[k].first == h) {
        flags[where[k] * C + c] = 1;
        break;
      }
    }
    if (diverged) {
      out.warnings.push_back("DivergenceWarning: " + criteria[c] +
                             " argmin on grid boundary in replication " +
                             std::to_string(rep));
    }
  }
}

void attach_stats(ResultTable& table,
                  const std::vector<std::pair<std::string, double>>& points) {
  const std::size_t C = table.criteria.size();
  for (std::size_t c = 0; c < C; ++c) {
    std::vector<double> chosen = table.chosen_of(table.criteria[c]);
    if (chosen.empty()) continue;
    ChosenStats st;
    st.mean = mean_of(chosen);
    st.stddev = sample_std(chosen);
    for (double h : chosen) st.histogram[h] += 1;
    table.chosen_stats[table.criteria[c]] = st;
  }
  for (const auto& [label, target] : points) {
    std::size_t gi = table.grid.size();
    for (std::size_t g = 0; g < table.grid.size(); ++g) {
      if (std::abs(table.grid[g] - target) < 1e-9) {
        gi = g;
        break;
      }
    }
    if (gi == table.grid.size()) continue;
    const std::size_t G = table.grid.size();
    for (std::size_t c = 0; c < C; ++c) {
      std::vector<double> vals;
      for (std::size_t row = gi; row < table.row_count(); row += G) {
        const double v = table.cell[row * C + c];
        if (!std::isnan(v)) vals.push_back(v);
      }
      if (vals.empty()) continue;
      table.value_stats[label][table.criteria[c]] = {mean_of(vals),
                                                     sample_std(vals)};
    }
  }
}

std::vector<std::string> pick_criteria(
    const std::vector<std::string>& defaults,
    const std::set<std::string>& enabled) {
  if (enabled.empty()) return defaults;
  std::vector<std::string> out;
  for (const std::string& c : defaults) {
    if (enabled.count(c)) out.push_back(c);
  }
  if (out.size() != enabled.size()) {
    for (const std::string& c : enabled) {
      if (std::find(defaults.begin(), defaults.end(), c) == defaults.end()) {
        throw OutOfDomain("unknown criterion: " + c);
      }
    }
  }
  if (out.empty()) throw OutOfDomain("no known criterion enabled");
  return out;
}

double fixed_or(const std::map<std::string, double>& m, const std::string& k,
                double fallback) {
  const auto it = m.find(k);
  return it == m.end() ? fallback : it->second;
}

}  // namespace

ResultTable run_normal_experiment(const ExperimentConfig& cfg) {
  if (cfg.experiment != ExperimentKind::Normal) {
    throw OutOfDomain("run_normal_experiment: config is not a normal run");
  }
  const std::size_t n = (cfg.n == 0) ? 25 : cfg.n;
  const std::size_t reps = (cfg.replications == 0) ? 10000 : cfg.replications;
  if (n < 2) throw OutOfDomain("run_normal_experiment: need n >= 2");
  GridSpec gs{-2.5, 2.5, 100, false, true};
  if (const auto it = cfg.grid.find("mu"); it != cfg.grid.end()) {
    gs = it->second;
  } else if (!cfg.grid.empty()) {
    gs = cfg.grid.begin()->second;
  }
  const double lambda_fix = fixed_or(cfg.fixed_hypers, "lambda", 0.01);
  const double eps_fix = fixed_or(cfg.fixed_hypers, "epsilon", 0.01);

  ResultTable table;
  table.hyper_label = "mu";
  table.grid = gs.points();
  table.n = n;
  table.criteria = pick_criteria(
      {"dCV", "dWAIC", "WAICR", "WAICRS", "dDIC", "dG", "F"},
      cfg.criteria_enabled);

  const auto model = model_family_normal();
  const auto prior = prior_family_normal();
  const HermiteRule rule = gauss_hermite(128);
  const std::vector<double>& grid = table.grid;
  const std::vector<std::string>& crits = table.criteria;
  const std::size_t C = crits.size();

  auto want = [&](const char* name) {
    return std::find(crits.begin(), crits.end(), name) != crits.end();
  };
  const bool w_cv = want("dCV"), w_waic = want("dWAIC"), w_r = want("WAICR"),
             w_rs = want("WAICRS"), w_dic = want("dDIC"), w_g = want("dG");

  run_replications(
      table, reps,
      [&](std::size_t r, Rng& rng, double* cells, std::uint8_t* flags,
          RepOutput& out) {
        const Data data = generate_normal_data(1.0, 1.0, n, rng);
        const NormalSuffStats stats = NormalSuffStats::from_data(data);
        const NormalHyper h0{};
        const NormalExactEvaluator e0(stats, h0);
        const double nn = static_cast<double>(n);

        const double cv0 = w_cv ? cv(e0, data) : 0.0;
        const double waic0 = w_waic ? waic(e0, data) : 0.0;
        const double dic0 = w_dic ? dic(e0, *model, data) : 0.0;
        const double g0 =
            w_g ? -normal_expectation(rule, 1.0, 1.0,
                                      [&](double x) {
                                        return e0.log_expect_alpha(
                                            Sample::scalar(x), 1.0);
                                      })
                : 0.0;

        RelationCoefficients ce, cs;
        Vec w_hat;
        if (w_r || w_rs) {
          const double mhat = stats.sum_x / nn;
          const double m2 = stats.sum_x2 / nn - mhat * mhat;
          Vec init(2);
          init << mhat, 1.0 / m2;
          w_hat = find_map(*model, *prior, data, init);
          const EmpiricalTensors t =
              assemble_tensors(*model, *prior, data, w_hat);
          if (w_r) ce = relation_coefficients(t);
          if (w_rs) cs = self_average_coefficients(*model, w_hat, data);
        }

        for (std::size_t g = 0; g < grid.size(); ++g) {
          const NormalHyper h{lambda_fix, grid[g], eps_fix};
          const NormalExactEvaluator ev(stats, h);
          const Hyper hy = h.to_hyper();
          double* cell = cells + g * C;
          std::size_t c = 0;
          for (const std::string& name : crits) {
            double v = kNaN;
            if (name == "dCV") {
              v = cv(ev, data) - cv0;
            } else if (name == "dWAIC") {
              v = waic(ev, data) - waic0;
            } else if (name == "WAICR") {
              v = waicr(relation_value(ce, prior->grad_log_ratio(w_hat, hy),
                                       prior->hess_log_ratio(w_hat, hy)),
                        n);
            } else if (name == "WAICRS") {
              v = waicrs(relation_value(cs, prior->grad_log_ratio(w_hat, hy),
                                        prior->hess_log_ratio(w_hat, hy)),
                         n);
            } else if (name == "dDIC") {
              v = dic(ev, *model, data) - dic0;
            } else if (name == "dG") {
              v = -normal_expectation(rule, 1.0, 1.0,
                                      [&](double x) {
                                        return ev.log_expect_alpha(
                                            Sample::scalar(x), 1.0);
                                      }) -
                  g0;
            } else if (name == "F") {
              if (h.proper()) v = free_energy(ev, *prior, hy);
            }
            cell[c++] = v;
          }
        }
        mark_chosen(grid, crits, r, cells, flags, out);
      },
      cfg.seed);

  attach_stats(table, {{"mu=-1", -1.0}, {"mu=+1", 1.0}});
  if (!cfg.output_path.empty()) {
    ensure_output_dir(cfg.output_path);
    write_csv(table, cfg.output_path + "/results.csv");
    write_summary_json(table, cfg, cfg.output_path + "/summary.json");
  }
  return table;
}

ResultTable run_ridge_experiment(const ExperimentConfig& cfg) {
  if (cfg.experiment != ExperimentKind::Ridge) {
    throw OutOfDomain("run_ridge_experiment: config is not a ridge run");
  }
  const int d = 5;
  const std::size_t n = (cfg.n == 0) ? 100 : cfg.n;
  const std::size_t reps = (cfg.replications == 0) ? 1000 : cfg.replications;
  if (n <= static_cast<std::size_t>(d)) {
    throw OutOfDomain("run_ridge_experiment: need n > input dimension");
  }
  GridSpec gs{0.0, 10.0, 100, false, true};
  if (const auto it = cfg.grid.find("lambda"); it != cfg.grid.end()) {
    gs = it->second;
  } else if (!cfg.grid.empty()) {
    gs = cfg.grid.begin()->second;
  }
  const double sigma = fixed_or(cfg.fixed_hypers, "sigma", 0.1);
  const std::size_t g_budget = static_cast<std::size_t>(
      fixed_or(cfg.fixed_hypers, "gen_loss_budget", 300.0));

  ResultTable table;
  table.hyper_label = "lambda";
  table.grid = gs.points();
  table.n = n;
  table.criteria =
      pick_criteria({"dCV", "dWAIC", "WAICR", "WAICRS", "dDIC", "F", "dG"},
                    cfg.criteria_enabled.empty()
                        ? std::set<std::string>{"dCV", "dWAIC", "WAICR",
                                                "WAICRS", "dDIC", "F"}
                        : cfg.criteria_enabled);

  const auto model = model_family_ridge(sigma, d);
  const auto prior = prior_family_ridge(d);
  const Vec ones = Vec::Ones(d);
  const std::vector<double>& grid = table.grid;
  const std::vector<std::string>& crits = table.criteria;
  const std::size_t C = crits.size();

  auto want = [&](const char* name) {
    return std::find(crits.begin(), crits.end(), name) != crits.end();
  };
  const bool w_cv = want("dCV"), w_waic = want("dWAIC"),
             w_dic = want("dDIC"), w_g = want("dG");

  std::vector<double> lam_star(reps, kNaN);

  run_replications(
      table, reps,
      [&](std::size_t r, Rng& rng, double* cells, std::uint8_t* flags,
          RepOutput& out) {
        const Data data = generate_ridge_data(ones, ones, sigma, n, rng);
        const RidgeHyper h0{};
        const RidgeExactEvaluator e0(data, h0, sigma);

        const double cv0 = w_cv ? cv(e0, data) : 0.0;
        const double waic0 = w_waic ? waic(e0, data) : 0.0;
        const double dic0 = w_dic ? dic(e0, *model, data) : 0.0;

        const Vec w_hat = find_map(*model, *prior, data, Vec::Zero(d));
        const EmpiricalTensors t =
            assemble_tensors(*model, *prior, data, w_hat);
        const RelationCoefficients ce = relation_coefficients(t);
        const RelationCoefficients cs =
            self_average_coefficients(*model, w_hat, data);
        lam_star[r] = optimal_ridge_lambda(t);

        // Outer inputs for the generalization loss, shared across the grid
        // so grid differences carry no extra Monte Carlo noise.
        std::vector<Vec> xs;
        double g0 = 0.0;
        auto gen_loss = [&](const RidgeExactEvaluator& ev) {
          double acc = 0.0;
          for (const Vec& x : xs) {
            const auto [mu, var] = ev.predictive_moments(x);
            const double truth_mean = ones.dot(x);
            acc += 0.5 * std::log(2.0 * M_PI * var) +
                   (sigma * sigma + (truth_mean - mu) * (truth_mean - mu)) /
                       (2.0 * var);
          }
          return acc / static_cast<double>(xs.size());
        };
        if (w_g) {
          xs.resize(g_budget);
          for (Vec& x : xs) {
            x.resize(d);
            for (int k = 0; k < d; ++k) x(k) = 1.0 + rng.normal();
          }
          g0 = gen_loss(e0);
        }

        for (std::size_t g = 0; g < grid.size(); ++g) {
          const RidgeHyper h{grid[g]};
          const RidgeExactEvaluator ev(data, h, sigma);
          const Hyper hy = h.to_hyper();
          double* cell = cells + g * C;
          std::size_t c = 0;
          for (const std::string& name : crits) {
            double v = kNaN;
            if (name == "dCV") {
              v = cv(ev, data) - cv0;
            } else if (name == "dWAIC") {
              v = waic(ev, data) - waic0;
            } else if (name == "WAICR") {
              v = waicr(relation_value(ce, prior->grad_log_ratio(w_hat, hy),
                                       prior->hess_log_ratio(w_hat, hy)),
                        n);
            } else if (name == "WAICRS") {
              v = waicrs(relation_value(cs, prior->grad_log_ratio(w_hat, hy),
                                        prior->hess_log_ratio(w_hat, hy)),
                         n);
            } else if (name == "dDIC") {
              v = dic(ev, *model, data) - dic0;
            } else if (name == "F") {
              if (h.proper()) v = free_energy(ev, *prior, hy);
            } else if (name == "dG") {
              v = gen_loss(ev) - g0;
            }
            cell[c++] = v;
          }
        }
        mark_chosen(grid, crits, r, cells, flags, out);
      },
      cfg.seed);

  // Keep lambda_star only for replications that survived into the table.
  std::vector<std::uint8_t> kept(reps, 0);
  for (std::size_t i = 0; i < table.row_count(); i += grid.size()) {
    kept[table.rep_of_row[i]] = 1;
  }
  for (std::size_t r = 0; r < reps; ++r) {
    if (kept[r] && !std::isnan(lam_star[r])) {
      table.lambda_star.push_back(lam_star[r]);
    }
  }

  attach_stats(table, {});
  if (!cfg.output_path.empty()) {
    ensure_output_dir(cfg.output_path);
    write_csv(table, cfg.output_path + "/results.csv");
    write_summary_json(table, cfg, cfg.output_path + "/summary.json");
  }
  return table;
}

// ---------------------------------------------------------------------------
// Rate checks

namespace {

SlopeFit fit_slope(const std::vector<double>& ns,
                   const std::vector<double>& levels) {
  SlopeFit f;
  f.n_values = ns;
  f.levels = levels;
  const std::size_t k = ns.size();
  std::vector<double> lx(k), ly(k);
  for (std::size_t i = 0; i < k; ++i) {
    lx[i] = std::log(ns[i]);
    ly[i] = std::log(levels[i]);
  }
  const double mx = mean_of(lx), my = mean_of(ly);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  f.slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double fit = my + f.slope * (lx[i] - mx);
    rss += (ly[i] - fit) * (ly[i] - fit);
  }
  f.std_error =
      (k > 2) ? std::sqrt(rss / static_cast<double>(k - 2) / sxx) : 0.0;
  return f;
}

}  // namespace

RateReport run_rate_checks(const std::vector<std::size_t>& n_values,
                           std::size_t replications, std::uint64_t seed,
                           const NormalHyper& probe) {
  if (n_values.size() < 3) {
    throw OutOfDomain("run_rate_checks: need at least 3 sample sizes");
  }
  if (replications < 2) {
    throw OutOfDomain("run_rate_checks: need at least 2 replications");
  }
  RateReport report;
  if (probe.lambda == 0.0 && probe.mu == 0.0 && probe.epsilon == 0.0) {
    // Candidate equals the base prior: every difference is identically zero
    // and no rate is defined.
    report.degenerate = true;
    return report;
  }

  const auto model = model_family_normal();
  const auto prior = prior_family_normal();
  const HermiteRule rule = gauss_hermite(128);
  const Hyper hy = probe.to_hyper();

  std::vector<double> ns, med_gap, std_dg, med_resid, std_selfgap;
  for (std::size_t ni = 0; ni < n_values.size(); ++ni) {
    const std::size_t n = n_values[ni];
    if (n < 2) throw OutOfDomain("run_rate_checks: need n >= 2");
    const double nn = static_cast<double>(n);
    std::vector<double> gaps(replications), dgs(replications),
        resid(replications), selfgap(replications);
    std::atomic<bool> failed{false};
    std::string fail_what;
    parallel_reps(replications, [&](std::size_t r) {
      try {
        Rng rng = Rng::stream(seed, ni * replications + r);
        const Data data = generate_normal_data(1.0, 1.0, n, rng);
        const NormalSuffStats stats = NormalSuffStats::from_data(data);
        const NormalExactEvaluator e0(stats, NormalHyper{});
        const NormalExactEvaluator ep(stats, probe);

        const double cv0 = cv(e0, data);
        const double cvp = cv(ep, data);
        const double waicp = waic(ep, data);
        gaps[r] = std::abs(cvp - waicp);

        auto gen = [&](const NormalExactEvaluator& ev) {
          return -normal_expectation(rule, 1.0, 1.0, [&](double x) {
            return ev.log_expect_alpha(Sample::scalar(x), 1.0);
          });
        };
        dgs[r] = gen(ep) - gen(e0);

        const double mhat = stats.sum_x / nn;
        const double m2 = stats.sum_x2 / nn - mhat * mhat;
        Vec init(2);
        init << mhat, 1.0 / m2;
        const Vec w_hat = find_map(*model, *prior, data, init);
        const EmpiricalTensors t =
            assemble_tensors(*model, *prior, data, w_hat);
        const Vec g = prior->grad_log_ratio(w_hat, hy);
        const SymMatrix H = prior->hess_log_ratio(w_hat, hy);
        const double m_emp = relation_value(relation_coefficients(t), g, H);
        const double m_self = relation_value(
            self_average_coefficients(*model, w_hat, data), g, H);
        resid[r] = std::abs(nn * nn * (cvp - cv0) - m_emp);
        selfgap[r] = m_self - m_emp;
      } catch (const std::exception& e) {
        if (!failed.exchange(true)) fail_what = e.what();
      }
    });
    if (failed.load()) {
      throw NoConvergence("run_rate_checks: replication failed: " + fail_what);
    }
    ns.push_back(nn);
    med_gap.push_back(median_of(gaps));
    std_dg.push_back(sample_std(dgs));
    med_resid.push_back(median_of(resid));
    std_selfgap.push_back(sample_std(selfgap));
  }

  report.cv_waic_gap = fit_slope(ns, med_gap);
  report.gen_gap_std = fit_slope(ns, std_dg);
  report.relation_residual = fit_slope(ns, med_resid);
  report.self_gap_std = fit_slope(ns, std_selfgap);
  return report;
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

}  // namespace

void write_csv(const ResultTable& table, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError{"write_csv: cannot open " + path};
  f << "replication," << csv_field(table.hyper_label);
  for (const std::string& c : table.criteria) f << ',' << csv_field(c);
  for (const std::string& c : table.criteria) {
    f << ',' << csv_field("chosen_" + c);
  }
  f << '\n';
  const std::size_t C = table.criteria.size();
  for (std::size_t i = 0; i < table.row_count(); ++i) {
    f << table.rep_of_row[i] << ',' << format_double(table.hyper_of_row[i]);
    for (std::size_t c = 0; c < C; ++c) {
      const double v = table.cell[i * C + c];
      f << ',';
      if (!std::isnan(v)) f << format_double(v);
    }
    for (std::size_t c = 0; c < C; ++c) {
      f << ',' << (table.flag[i * C + c] != 0 ? '1' : '0');
    }
    f << '\n';
  }
  if (!f.good()) throw OutOfDomain("write_csv: write failed for " + path);
}

void write_summary_json(const ResultTable& table, const ExperimentConfig& cfg,
                        const std::string& path) {
  nlohmann::ordered_json j;
  switch (cfg.experiment) {
    case ExperimentKind::Normal: j["experiment"] = "normal"; break;
    case ExperimentKind::Ridge: j["experiment"] = "ridge"; break;
    case ExperimentKind::Custom: j["experiment"] = "custom"; break;
  }
  j["n"] = table.n;
  j["replications"] = table.replications;
  j["failed_replications"] = table.failed_replications;
  j["seed"] = cfg.seed;
  j["hyper"] = table.hyper_label;
  j["criteria"] = table.criteria;
  nlohmann::ordered_json chosen = nlohmann::ordered_json::object();
  for (const std::string& c : table.criteria) {
    const auto it = table.chosen_stats.find(c);
    if (it == table.chosen_stats.end()) continue;
    nlohmann::ordered_json entry;
    entry["mean"] = it->second.mean;
    entry["std"] = it->second.stddev;
    nlohmann::ordered_json hist = nlohmann::ordered_json::object();
    for (const auto& [h, cnt] : it->second.histogram) {
      hist[format_short(h)] = cnt;
    }
    entry["histogram"] = hist;
    chosen[c] = entry;
  }
  j["chosen"] = chosen;
  if (!table.value_stats.empty()) {
    nlohmann::ordered_json pts = nlohmann::ordered_json::object();
    for (const auto& [label, per_crit] : table.value_stats) {
      nlohmann::ordered_json e = nlohmann::ordered_json::object();
      for (const auto& [c, st] : per_crit) {
        e[c] = {{"mean", st.mean}, {"std", st.stddev}};
      }
      pts[label] = e;
    }
    j["values_at"] = pts;
  }
  if (!table.lambda_star.empty()) {
    j["lambda_star"] = {{"mean", mean_of(table.lambda_star)},
                        {"std", sample_std(table.lambda_star)}};
  }
  j["warnings"] = table.warnings;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError{"write_summary_json: cannot open " + path};
  f << j.dump(2) << '\n';
  if (!f.good()) {
    throw OutOfDomain("write_summary_json: write failed for " + path);
  }
}

// ---------------------------------------------------------------------------
// CLI

namespace {

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError{"cannot open config file: " + path};
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    std::string s = line;
    const auto hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    auto trim = [](std::string t) {
      const auto b = t.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = t.find_last_not_of(" \t\r");
      return t.substr(b, e - b + 1);
    };
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError{"config line " + std::to_string(lineno) +
                        ": expected key = value"};
    }
    std::string key = trim(s.substr(0, eq));
    std::string val = trim(s.substr(eq + 1));
    if (val.size() >= 2 && val.front() == '"' && val.back() == '"') {
      val = val.substr(1, val.size() - 2);
    }
    if (key.empty()) {
      throw ConfigError{"config line " + std::to_string(lineno) +
                        ": empty key"};
    }
    kv[key] = val;
  }
  return kv;
}

double parse_real(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0' || !std::isfinite(x)) {
    throw ConfigError{"config key " + key + ": bad numeric value '" + v + "'"};
  }
  return x;
}

std::uint64_t parse_count(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') {
    throw ConfigError{"config key " + key + ": bad integer value '" + v + "'"};
  }
  return x;
}

const char* const kKnownKeys[] = {"n",          "reps",     "seed",
                                  "grid_low",   "grid_high", "grid_count",
                                  "out",        "criteria",  "lambda",
                                  "epsilon",    "sigma",     "gen_loss_budget"};

// Applies a config file to an experiment config; CLI flags override later.
void apply_config_file(const std::string& path, ExperimentConfig& cfg,
                       GridSpec& gs) {
  const auto kv = parse_config_file(path);
  for (const auto& [k, v] : kv) {
    bool known = false;
    for (const char* kk : kKnownKeys) known = known || k == kk;
    if (!known) throw ConfigError{"unknown config key: " + k};
    (void)v;
  }
  for (const char* req : {"n", "reps", "grid_low", "grid_high", "grid_count"}) {
    if (!kv.count(req)) {
      throw ConfigError{std::string("missing config key: ") + req};
    }
  }
  cfg.n = parse_count("n", kv.at("n"));
  cfg.replications = parse_count("reps", kv.at("reps"));
  if (kv.count("seed")) cfg.seed = parse_count("seed", kv.at("seed"));
  gs.low = parse_real("grid_low", kv.at("grid_low"));
  gs.high = parse_real("grid_high", kv.at("grid_high"));
  gs.count = static_cast<int>(parse_count("grid_count", kv.at("grid_count")));
  if (kv.count("out")) cfg.output_path = kv.at("out");
  if (kv.count("criteria")) {
    std::stringstream ss(kv.at("criteria"));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) cfg.criteria_enabled.insert(tok);
    }
  }
  for (const char* fk : {"lambda", "epsilon", "sigma", "gen_loss_budget"}) {
    if (kv.count(fk)) cfg.fixed_hypers[fk] = parse_real(fk, kv.at(fk));
  }
}

void print_report_json(const CriterionReport& rep, std::ostream& os) {
  nlohmann::ordered_json j;
  j["n"] = rep.n;
  nlohmann::ordered_json hy = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < rep.hyper.values.size(); ++i) {
    const std::string label = (i < rep.hyper.labels.size())
                                  ? rep.hyper.labels[i]
                                  : "h" + std::to_string(i);
    hy[label] = rep.hyper.values[i];
  }
  j["hyper"] = hy;
  j["cv"] = rep.cv;
  j["waic"] = rep.waic;
  j["training_error"] = rep.training_error;
  j["functional_variance"] = rep.functional_variance;
  j["dic"] = rep.dic;
  if (rep.free_energy) j["free_energy"] = *rep.free_energy;
  if (rep.gen_loss) j["gen_loss"] = *rep.gen_loss;
  os << j.dump(2) << '\n';
}

int run_experiment_command(ExperimentKind kind, const std::string& config_path,
                           std::vector<std::size_t>& n_given,
                           std::size_t reps_given, bool reps_set,
                           std::uint64_t seed_given, bool seed_set,
                           double grid_low, bool low_set, double grid_high,
                           bool high_set, int grid_count, bool count_set,
                           const std::string& out_dir,
                           const std::string& criteria_csv,
                           const std::map<std::string, double>& fixed) {
  ExperimentConfig cfg;
  cfg.experiment = kind;
  GridSpec gs = (kind == ExperimentKind::Normal)
                    ? GridSpec{-2.5, 2.5, 100, false, true}
                    : GridSpec{0.0, 10.0, 100, false, true};
  if (!config_path.empty()) apply_config_file(config_path, cfg, gs);
  if (!n_given.empty()) cfg.n = n_given.front();
  if (reps_set) cfg.replications = reps_given;
  if (seed_set) cfg.seed = seed_given;
  if (low_set) gs.low = grid_low;
  if (high_set) gs.high = grid_high;
  if (count_set) gs.count = grid_count;
  if (!out_dir.empty()) cfg.output_path = out_dir;
  if (!criteria_csv.empty()) {
    cfg.criteria_enabled.clear();
    std::stringstream ss(criteria_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) cfg.criteria_enabled.insert(tok);
    }
  }
  const std::vector<std::string> allowed =
      (kind == ExperimentKind::Normal)
          ? std::vector<std::string>{"dCV",   "dWAIC", "WAICR", "WAICRS",
                                     "dDIC",  "dG",    "F"}
          : std::vector<std::string>{"dCV",  "dWAIC", "WAICR", "WAICRS",
                                     "dDIC", "F"};
  for (const std::string& name : cfg.criteria_enabled) {
    if (std::find(allowed.begin(), allowed.end(), name) == allowed.end()) {
      throw ConfigError{"unknown criterion for this experiment: " + name};
    }
  }
  for (const auto& [k, v] : fixed) cfg.fixed_hypers[k] = v;
  cfg.grid[(kind == ExperimentKind::Normal) ? "mu" : "lambda"] = gs;

  const ResultTable table = (kind == ExperimentKind::Normal)
                                ? run_normal_experiment(cfg)
                                : run_ridge_experiment(cfg);
  const double failure_rate =
      table.replications == 0
          ? 0.0
          : static_cast<double>(table.failed_replications) /
                static_cast<double>(table.replications);
  std::fprintf(stderr, "replications: %zu, failed: %zu, rows: %zu\n",
               table.replications, table.failed_replications,
               table.row_count());
  if (failure_rate >= 0.001 && table.failed_replications > 0) {
    std::fprintf(stderr, "failure rate %.4f exceeds 0.1%% budget\n",
                 failure_rate);
    return 3;
  }
  return 0;
}

Data load_data_file(const std::string& path, bool regression) {
  std::ifstream f(path);
  if (!f) throw ConfigError{"cannot open data file: " + path};
  Data data;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> nums;
    while (std::getline(ss, tok, ',')) {
      nums.push_back(parse_real("data line " + std::to_string(lineno), tok));
    }
    if (!regression) {
      if (nums.size() != 1) {
        throw ConfigError{"data line " + std::to_string(lineno) +
                          ": expected one value"};
      }
      data.push_back(Sample::scalar(nums[0]));
    } else {
      if (nums.size() < 2) {
        throw ConfigError{"data line " + std::to_string(lineno) +
                          ": expected x...,y"};
      }
      Vec x(static_cast<int>(nums.size()) - 1);
      for (std::size_t i = 0; i + 1 < nums.size(); ++i) {
        x(static_cast<int>(i)) = nums[i];
      }
      data.push_back(Sample::regression(std::move(x), nums.back()));
    }
  }
  if (data.empty()) throw ConfigError{"data file is empty: " + path};
  return data;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"predictive prior-design criteria over conjugate models"};
  app.require_subcommand(1);

  std::string config_path, out_dir, criteria_csv;
  std::vector<std::size_t> n_list;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  double grid_low = 0.0, grid_high = 0.0;
  int grid_count = 0;
  double lambda = 0.0, mu = 0.0, epsilon = 0.0, sigma = 0.1;
  std::string data_path, model_name;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value config file");
    sub->add_option("--n", n_list, "sample size(s)");
    sub->add_option("--reps", reps, "replication count");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--grid-low", grid_low, "grid interval lower end (open)");
    sub->add_option("--grid-high", grid_high,
                    "grid interval upper end (closed)");
    sub->add_option("--grid-count", grid_count, "number of grid points");
    sub->add_option("--out", out_dir,
                    "output directory for results.csv and summary.json");
    sub->add_option("--criteria", criteria_csv,
                    "comma-separated criterion subset");
  };

  CLI::App* normal = app.add_subcommand("normal", "scalar-normal experiment");
  add_common(normal);
  normal->add_option("--lambda", lambda, "fixed prior lambda");
  normal->add_option("--epsilon", epsilon, "fixed prior epsilon");

  CLI::App* ridge = app.add_subcommand("ridge", "ridge-regression experiment");
  add_common(ridge);
  ridge->add_option("--sigma", sigma, "observation noise scale");

  CLI::App* rates = app.add_subcommand("rates", "asymptotic-rate checks");
  rates->add_option("--n", n_list, "sample sizes (need at least 3)");
  rates->add_option("--reps", reps, "replications per sample size");
  rates->add_option("--seed", seed, "master seed");
  rates->add_option("--lambda", lambda, "probe prior lambda");
  rates->add_option("--mu", mu, "probe prior mu");
  rates->add_option("--epsilon", epsilon, "probe prior epsilon");
  rates->add_option("--out", out_dir, "output directory for rates.json");

  CLI::App* crit = app.add_subcommand("criteria",
                                      "one-shot criteria on a dataset");
  crit->add_option("--model", model_name, "normal or ridge")->required();
  crit->add_option("--data", data_path, "csv dataset")->required();
  crit->add_option("--lambda", lambda, "prior lambda");
  crit->add_option("--mu", mu, "prior mu (normal model)");
  crit->add_option("--epsilon", epsilon, "prior epsilon (normal model)");
  crit->add_option("--sigma", sigma, "noise scale (ridge model)");

  CLI::App* check = app.add_subcommand("check", "derivative diagnostics");
  check->add_option("--model", model_name, "normal or ridge")->required();
  check->add_option("--sigma", sigma, "noise scale (ridge model)");

  std::vector<const char*> argv;
  argv.push_back("priorlens");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (normal->parsed() || ridge->parsed()) {
      const bool is_normal = normal->parsed();
      CLI::App* sub = is_normal ? normal : ridge;
      std::map<std::string, double> fixed;
      if (is_normal) {
        if (sub->count("--lambda")) fixed["lambda"] = lambda;
        if (sub->count("--epsilon")) fixed["epsilon"] = epsilon;
      } else {
        if (sub->count("--sigma")) fixed["sigma"] = sigma;
      }
      return run_experiment_command(
          is_normal ? ExperimentKind::Normal : ExperimentKind::Ridge,
          config_path, n_list, reps, sub->count("--reps") > 0, seed,
          sub->count("--seed") > 0, grid_low, sub->count("--grid-low") > 0,
          grid_high, sub->count("--grid-high") > 0, grid_count,
          sub->count("--grid-count") > 0, out_dir, criteria_csv, fixed);
    }
    if (rates->parsed()) {
      std::vector<std::size_t> ns = n_list;
      if (ns.empty()) ns = {25, 50, 100, 200, 400};
      const std::size_t R = (reps == 0) ? 2000 : reps;
      NormalHyper probe{lambda, mu, epsilon};
      if (rates->count("--lambda") + rates->count("--mu") +
              rates->count("--epsilon") ==
          0) {
        probe = NormalHyper{0.01, -1.0, 0.01};
      }
      const RateReport rep = run_rate_checks(ns, R, seed, probe);
      nlohmann::ordered_json j;
      j["degenerate"] = rep.degenerate;
      auto put = [&](const char* name, const SlopeFit& f) {
        j[name] = {{"slope", f.slope},
                   {"std_error", f.std_error},
                   {"n", f.n_values},
                   {"levels", f.levels}};
      };
      if (!rep.degenerate) {
        put("cv_waic_gap", rep.cv_waic_gap);
        put("gen_gap_std", rep.gen_gap_std);
        put("relation_residual", rep.relation_residual);
        put("self_gap_std", rep.self_gap_std);
      }
      const std::string text = j.dump(2) + "\n";
      std::fputs(text.c_str(), stdout);
      if (!out_dir.empty()) {
        ensure_output_dir(out_dir);
        std::ofstream f(out_dir + "/rates.json", std::ios::binary);
        if (!f) throw ConfigError{"cannot open " + out_dir + "/rates.json"};
        f << text;
      }
      return 0;
    }
    if (crit->parsed()) {
      if (model_name == "normal") {
        const Data data = load_data_file(data_path, false);
        const NormalHyper h{lambda, mu, epsilon};
        const NormalExactEvaluator ev(data, h);
        const auto model = model_family_normal();
        const auto prior = prior_family_normal();
        CriterionReport rep = compute_report(ev, *model, data, h.to_hyper());
        if (h.proper()) rep.free_energy = free_energy(ev, *prior, h.to_hyper());
        print_report_json(rep, std::cout);
        return 0;
      }
      if (model_name == "ridge") {
        const Data data = load_data_file(data_path, true);
        const int d = static_cast<int>(data.front().x.size());
        const RidgeHyper h{lambda};
        const RidgeExactEvaluator ev(data, h, sigma);
        const auto model = model_family_ridge(sigma, d);
        const auto prior = prior_family_ridge(d);
        CriterionReport rep = compute_report(ev, *model, data, h.to_hyper());
        if (h.proper()) rep.free_energy = free_energy(ev, *prior, h.to_hyper());
        print_report_json(rep, std::cout);
        return 0;
      }
      throw ConfigError{"unknown model: " + model_name};
    }
    if (check->parsed()) {
      DiagnosticsReport rep;
      if (model_name == "normal") {
        const auto model = model_family_normal();
        const auto prior = prior_family_normal();
        std::vector<ProbePoint> probes;
        Vec w1(2), w2(2);
        w1 << 0.2, 1.3;
        w2 << -0.5, 0.7;
        probes.push_back({Sample::scalar(0.3), w1,
                          NormalHyper{0.5, 0.7, 0.9}.to_hyper()});
        probes.push_back({Sample::scalar(-1.2), w2,
                          NormalHyper{1.5, -0.2, 0.4}.to_hyper()});
        rep = check_derivatives(*model, *prior, probes);
      } else if (model_name == "ridge") {
        const int d = 3;
        const auto model = model_family_ridge(sigma, d);
        const auto prior = prior_family_ridge(d);
        Vec x1(d), x2(d), w1(d), w2(d);
        x1 << 0.5, -0.3, 1.0;
        x2 << 1.2, 0.4, -0.8;
        w1 << 0.3, 0.9, -0.4;
        w2 << -1.0, 0.2, 0.6;
        std::vector<ProbePoint> probes;
        probes.push_back({Sample::regression(x1, 0.7), w1,
                          RidgeHyper{0.8}.to_hyper()});
        probes.push_back({Sample::regression(x2, -0.2), w2,
                          RidgeHyper{2.5}.to_hyper()});
        rep = check_derivatives(*model, *prior, probes);
      } else {
        throw ConfigError{"unknown model: " + model_name};
      }
      for (const auto& e : rep.entries) {
        std::printf("%-24s %12.3e  %s\n", e.what.c_str(), e.max_err,
                    e.pass ? "pass" : "FAIL");
      }
      return rep.pass ? 0 : 3;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.message.c_str());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "failure: %s\n", e.what());
    return 3;
  }
  return 2;
}

}  // namespace priorlens
