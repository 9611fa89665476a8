#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "priorlens/errors.hpp"
#include "priorlens/harness.hpp"

using namespace priorlens;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

}  // namespace

TEST_CASE("grid realizations for every endpoint closure") {
  SUBCASE("half-open (0, 10] keeps the count and drops the origin") {
    GridSpec gs{0.0, 10.0, 100, false, true};
    const std::vector<double> p = gs.points();
    REQUIRE(p.size() == 100);
    CHECK(p.front() == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(p.back() == doctest::Approx(10.0).epsilon(1e-12));
    for (std::size_t i = 1; i < p.size(); ++i) CHECK(p[i] > p[i - 1]);
  }
  SUBCASE("closed interval is a plain linspace") {
    GridSpec gs{-2.0, 2.0, 5, true, true};
    const std::vector<double> p = gs.points();
    REQUIRE(p.size() == 5);
    for (int k = 0; k < 5; ++k) {
      CHECK(p[k] == doctest::Approx(-2.0 + k).epsilon(1e-14));
    }
  }
  SUBCASE("half-open [0, 1) drops the top end") {
    GridSpec gs{0.0, 1.0, 4, true, false};
    const std::vector<double> p = gs.points();
    REQUIRE(p.size() == 4);
    CHECK(p.front() == 0.0);
    CHECK(p.back() == doctest::Approx(0.75).epsilon(1e-14));
  }
  SUBCASE("open interval steps in from both ends") {
    GridSpec gs{0.0, 1.0, 3, false, false};
    const std::vector<double> p = gs.points();
    REQUIRE(p.size() == 3);
    CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(0.50).epsilon(1e-14));
    CHECK(p[2] == doctest::Approx(0.75).epsilon(1e-14));
  }
  SUBCASE("degenerate specifications are rejected") {
    const GridSpec too_few{0.0, 1.0, 1, true, true};
    const GridSpec zero_width{1.0, 1.0, 5, true, true};
    const GridSpec reversed{2.0, -1.0, 5, true, true};
    CHECK_THROWS_AS((void)too_few.points(), OutOfDomain);
    CHECK_THROWS_AS((void)zero_width.points(), OutOfDomain);
    CHECK_THROWS_AS((void)reversed.points(), OutOfDomain);
  }
}

TEST_CASE("grid argmin with ties, boundaries, and bad values") {
  using P = std::pair<double, double>;
  SUBCASE("interior minimum") {
    const auto [h, div] = grid_minimize({P{0, 5}, P{1, 3}, P{2, 4}});
    CHECK(h == 1.0);
    CHECK_FALSE(div);
  }
  SUBCASE("ties go to the smaller hyperparameter") {
    const auto [h, div] = grid_minimize({P{0, 2}, P{1, 1}, P{2, 1}, P{3, 2}});
    CHECK(h == 1.0);
    CHECK_FALSE(div);
  }
  SUBCASE("monotone series flags the boundary") {
    const auto inc = grid_minimize({P{0, 1}, P{1, 2}, P{2, 3}});
    CHECK(inc.first == 0.0);
    CHECK(inc.second);
    const auto dec = grid_minimize({P{0, 3}, P{1, 2}, P{2, 1}});
    CHECK(dec.first == 2.0);
    CHECK(dec.second);
  }
  SUBCASE("a single point is always a boundary") {
    const auto [h, div] = grid_minimize({P{0.5, 1.0}});
    CHECK(h == 0.5);
    CHECK(div);
  }
  SUBCASE("non-finite values and empty lists throw") {
    CHECK_THROWS_AS((void)grid_minimize({P{0, 1}, P{1, kNan}}), NonFinite);
    CHECK_THROWS_AS(
        (void)grid_minimize(
            {P{0, 1}, P{1, std::numeric_limits<double>::infinity()}}),
        NonFinite);
    CHECK_THROWS_AS((void)grid_minimize({}), OutOfDomain);
  }
}

TEST_CASE("base-prior grid point yields exact zeros for every difference") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::Normal;
  cfg.n = 20;
  cfg.replications = 3;
  cfg.seed = 777;
  cfg.grid["mu"] = GridSpec{-2.0, 2.0, 5, true, true};
  cfg.fixed_hypers["lambda"] = 0.0;
  cfg.fixed_hypers["epsilon"] = 0.0;

  const ResultTable table = run_normal_experiment(cfg);
  REQUIRE(table.criteria ==
          std::vector<std::string>{"dCV", "dWAIC", "WAICR", "WAICRS", "dDIC",
                                   "dG", "F"});
  CHECK(table.hyper_label == "mu");
  REQUIRE(table.grid.size() == 5);
  CHECK(table.failed_replications == 0);
  REQUIRE(table.row_count() == 3 * 5);

  const std::size_t fcol = table.criterion_index("F");
  std::size_t zero_rows = 0;
  for (std::size_t i = 0; i < table.row_count(); ++i) {
    const ResultRow r = table.row(i);
    // Improper candidates leave the free-energy cell undefined.
    CHECK_FALSE(r.values[fcol].has_value());
    if (r.hyper == 0.0) {
      ++zero_rows;
      for (std::size_t c = 0; c < table.criteria.size(); ++c) {
        if (c == fcol) continue;
        REQUIRE(r.values[c].has_value());
        // At the base prior every criterion difference vanishes identically:
        // the same floating-point path is evaluated on both sides.
        CHECK(*r.values[c] == 0.0);
      }
    }
  }
  CHECK(zero_rows == 3);

  // No chosen statistics for a criterion with no defined cells.
  CHECK(table.chosen_stats.count("F") == 0);
  CHECK(table.chosen_stats.count("dCV") == 1);

  // Value statistics are attached at the labeled probe points.
  REQUIRE(table.value_stats.count("mu=-1") == 1);
  REQUIRE(table.value_stats.count("mu=+1") == 1);
  const auto& at_minus = table.value_stats.at("mu=-1");
  REQUIRE(at_minus.count("dCV") == 1);
  CHECK(std::isfinite(at_minus.at("dCV").mean));
}

TEST_CASE("experiment output is byte-identical across repeated runs") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::Normal;
  cfg.n = 25;
  cfg.replications = 10;
  cfg.seed = 90210;
  cfg.grid["mu"] = GridSpec{-2.5, 2.5, 30, false, true};

  const std::string path_a = "harness_bytes_a.csv";
  const std::string path_b = "harness_bytes_b.csv";
  const ResultTable ta = run_normal_experiment(cfg);
  const ResultTable tb = run_normal_experiment(cfg);
  write_csv(ta, path_a);
  write_csv(tb, path_b);
  const std::string bytes_a = slurp(path_a);
  const std::string bytes_b = slurp(path_b);
  CHECK(bytes_a == bytes_b);
  CHECK(bytes_a.size() > 1000);
  // Header names the hyperparameter, every criterion, and the chosen marks.
  CHECK(bytes_a.rfind("replication,mu,dCV,", 0) == 0);
  CHECK(bytes_a.find("chosen_dCV") != std::string::npos);
  std::remove(path_a.c_str());
  std::remove(path_b.c_str());

  // The in-memory tables agree cell for cell as well.
  REQUIRE(ta.cell.size() == tb.cell.size());
  bool same = true;
  for (std::size_t i = 0; i < ta.cell.size(); ++i) {
    const bool nan_a = std::isnan(ta.cell[i]);
    const bool nan_b = std::isnan(tb.cell[i]);
    if (nan_a != nan_b || (!nan_a && ta.cell[i] != tb.cell[i])) {
      same = false;
      break;
    }
  }
  CHECK(same);
}

TEST_CASE("cross-validation and information-criterion picks converge") {
  // With more data the two first-order criteria select the same grid point
  // more often; the agreement fraction must reflect that.
  auto agreement_at = [](std::size_t n) {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::Normal;
    cfg.n = n;
    cfg.replications = 400;
    cfg.seed = 5150;
    cfg.criteria_enabled = {"dCV", "dWAIC"};
    const ResultTable t = run_normal_experiment(cfg);
    REQUIRE(t.failed_replications == 0);
    return chosen_agreement_fraction(t, "dCV", "dWAIC");
  };
  const double small_n = agreement_at(25);
  const double large_n = agreement_at(400);
  CHECK(small_n > 0.0);
  CHECK(small_n <= 1.0);
  CHECK(large_n > small_n);
}

TEST_CASE("ridge experiment structure and per-replication optimum") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::Ridge;
  cfg.n = 50;
  cfg.replications = 40;
  cfg.seed = 31415;
  cfg.grid["lambda"] = GridSpec{0.0, 10.0, 26, false, true};

  const ResultTable table = run_ridge_experiment(cfg);
  REQUIRE(table.criteria ==
          std::vector<std::string>{"dCV", "dWAIC", "WAICR", "WAICRS", "dDIC",
                                   "F"});
  CHECK(table.hyper_label == "lambda");
  CHECK(table.failed_replications == 0);
  REQUIRE(table.row_count() == 40 * 26);
  REQUIRE(table.lambda_star.size() == 40);
  for (double l : table.lambda_star) {
    CHECK(l > 0.0);
    CHECK(std::isfinite(l));
  }
  // All enabled criteria produced chosen-hyperparameter statistics.
  for (const std::string& c : table.criteria) {
    REQUIRE(table.chosen_stats.count(c) == 1);
    const ChosenStats& st = table.chosen_stats.at(c);
    std::size_t total = 0;
    for (const auto& [h, k] : st.histogram) total += k;
    CHECK(total == 40);
    CHECK(st.mean > 0.0);
    CHECK(st.mean <= 10.0);
  }
}

TEST_CASE("rate-check guards and a minimal slope run") {
  const NormalHyper probe{0.01, -1.0, 0.01};
  CHECK_THROWS_AS((void)run_rate_checks({25, 50}, 10, 1, probe), OutOfDomain);
  CHECK_THROWS_AS((void)run_rate_checks({25, 50, 100}, 1, 1, probe),
                  OutOfDomain);

  const RateReport degenerate =
      run_rate_checks({10, 20, 40}, 5, 1, NormalHyper{0.0, 0.0, 0.0});
  CHECK(degenerate.degenerate);

  const RateReport r = run_rate_checks({10, 20, 40}, 30, 99, probe);
  CHECK_FALSE(r.degenerate);
  REQUIRE(r.cv_waic_gap.n_values.size() == 3);
  REQUIRE(r.cv_waic_gap.levels.size() == 3);
  for (double v : r.cv_waic_gap.levels) CHECK(v > 0.0);
  // Loose direction checks only; the calibrated bands need larger budgets.
  CHECK(r.cv_waic_gap.slope < -1.0);
  CHECK(r.relation_residual.slope < -0.5);
  CHECK(std::isfinite(r.gen_gap_std.slope));
  CHECK(std::isfinite(r.self_gap_std.slope));
}

TEST_CASE("result table lookups reject unknown criteria") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::Normal;
  cfg.n = 10;
  cfg.replications = 2;
  cfg.seed = 1;
  cfg.grid["mu"] = GridSpec{-1.0, 1.0, 3, true, true};
  cfg.criteria_enabled = {"dCV"};
  const ResultTable t = run_normal_experiment(cfg);
  CHECK(t.criterion_index("dCV") == 0);
  CHECK_THROWS_AS((void)t.criterion_index("nope"), OutOfDomain);
  CHECK(t.chosen_of("dCV").size() == 2);
  CHECK_THROWS_AS((void)run_normal_experiment([] {
                    ExperimentConfig bad;
                    bad.experiment = ExperimentKind::Ridge;
                    return bad;
                  }()),
                  OutOfDomain);
  CHECK_THROWS_AS((void)run_normal_experiment([] {
                    ExperimentConfig bad;
                    bad.experiment = ExperimentKind::Normal;
                    bad.criteria_enabled = {"bogus"};
                    bad.n = 10;
                    bad.replications = 2;
                    return bad;
                  }()),
                  OutOfDomain);
}
