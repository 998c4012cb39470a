#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mismpc/errors.hpp"
#include "mismpc/io.hpp"
#include "mismpc/model.hpp"
#include "mismpc/scenario.hpp"

using namespace mismpc;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string temp_path(const char* name) {
  return std::string("scenario_cli_test_") + name;
}

}  // namespace

TEST_CASE("scenario registry lists all four names and rejects unknowns") {
  auto names = scenario_names();
  REQUIRE(names.size() == 4);
  CHECK(names[0] == "integrator");
  CHECK(names[1] == "signed-sqrt");
  CHECK(names[2] == "sin");
  CHECK(names[3] == "pendulum");
  for (const auto& n : names) {
    auto sc = make_scenario(n);  // spot checks run here; throwing fails the test
    CHECK(sc.name == n);
    CHECK(sc.plant.f);
    CHECK(sc.prob.N >= 1);
    CHECK(sc.default_rho > 0.0);
  }
  CHECK_THROWS_AS(make_scenario("pendlum"), invalid_input);
}

TEST_CASE("every plant fixes the origin for every parameter") {
  for (const auto& n : scenario_names()) {
    auto sc = make_scenario(n);
    const Vec x0(static_cast<size_t>(sc.plant.n), 0.0);
    const Vec u0(static_cast<size_t>(sc.plant.m), 0.0);
    for (double t : {-1.0, -0.5, 0.5, 1.0}) {
      Vec th(static_cast<size_t>(sc.plant.n_theta), 0.0);
      for (auto& c : th) c = t;
      const Vec y = sc.plant.f(x0, u0, th);
      for (double yi : y) CHECK(yi == 0.0);
    }
  }
}

TEST_CASE("pendulum blend endpoints reuse the exact code paths bitwise") {
  Discretization disc;
  auto plant = pendulum_plant(disc);
  auto ode = pendulum_ode();
  const Vec x{0.8, -0.3};
  const Vec u{0.4};

  Vec th_euler{0.2, 1.5, 0.0};
  Vec euler{x[0] + disc.delta * x[1],
            x[1] + disc.delta * (std::sin(x[0]) - th_euler[0] * th_euler[0] * x[1] +
                                 (5.0 + th_euler[1]) * u[0])};
  const Vec y0 = plant.f(x, u, th_euler);
  CHECK(y0[0] == euler[0]);
  CHECK(y0[1] == euler[1]);

  Vec th_exact{0.2, 1.5, 1.0};
  const Vec y1 = plant.f(x, u, th_exact);
  const Vec yref = exact_discretize(ode, x, u, th_exact, disc);
  CHECK(y1[0] == yref[0]);
  CHECK(y1[1] == yref[1]);

  // Interior blends sit between the endpoints via the residual correction.
  Vec th_mid{0.2, 1.5, 0.5};
  const Vec ym = plant.f(x, u, th_mid);
  CHECK(ym[1] == doctest::Approx(0.5 * (y0[1] + y1[1])).epsilon(1e-12));
}

TEST_CASE("sinusoid nonlinearity values") {
  CHECK(sin_gamma(0.0) == 0.0);
  CHECK(sin_gamma(2.0) == doctest::Approx(2.0 * std::sin(M_PI)).epsilon(1e-15));
  CHECK(sin_gamma(0.8) == doctest::Approx(0.8 * std::sin(2.0 * M_PI / 0.8)));
  CHECK(sin_gamma(-0.8) == doctest::Approx(0.8 * std::sin(-2.0 * M_PI / 0.8)));
  CHECK(std::abs(sin_gamma(1e-9)) <= 1e-9);
}

TEST_CASE("csv cells print round-trippable doubles and non-finite literals") {
  CHECK(format_cell(0.1) == "0.10000000000000001");
  CHECK(format_cell(1.0) == "1");
  CHECK(format_cell(-0.0) == "-0");
  CHECK(format_cell(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_cell(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(format_cell(std::numeric_limits<double>::quiet_NaN()) == "nan");
}

TEST_CASE("csv writer is byte deterministic and validates shape") {
  const std::string path = temp_path("a.csv");
  write_csv(path, {"x", "y"}, {{1.0, 2.0}, {0.5, std::numeric_limits<double>::infinity()}});
  const std::string first = slurp(path);
  CHECK(first == "x,y\n1,2\n0.5,inf\n");
  write_csv(path, {"x", "y"}, {{1.0, 2.0}, {0.5, std::numeric_limits<double>::infinity()}});
  CHECK(slurp(path) == first);
  CHECK_THROWS_AS(write_csv(path, {}, {}), invalid_input);
  CHECK_THROWS_AS(write_csv(path, {"x"}, {{1.0, 2.0}}), invalid_input);
  std::remove(path.c_str());
}

TEST_CASE("marching squares recovers a diagonal zero set") {
  // field(x, t) = |t| - |x| on [0,1]^2: zero set is the diagonal t = x.
  std::vector<double> xs, ts;
  for (int i = 0; i <= 20; ++i) xs.push_back(i / 20.0);
  for (int j = 0; j <= 20; ++j) ts.push_back(j / 20.0);
  std::vector<double> field(xs.size() * ts.size());
  for (size_t i = 0; i < xs.size(); ++i)
    for (size_t j = 0; j < ts.size(); ++j)
      field[i * ts.size() + j] = std::abs(ts[j]) - std::abs(xs[i]);
  auto lines = marching_squares(xs, ts, field, 0.0);
  REQUIRE_FALSE(lines.empty());
  size_t points = 0;
  for (const auto& pl : lines) {
    REQUIRE(pl.xs.size() == pl.ys.size());
    for (size_t k = 0; k < pl.xs.size(); ++k) {
      CHECK(pl.ys[k] == doctest::Approx(pl.xs[k]).epsilon(1e-9));
      ++points;
    }
  }
  CHECK(points >= xs.size());
}

TEST_CASE("marching squares skips cells with non-finite corners") {
  std::vector<double> xs{0.0, 1.0, 2.0};
  std::vector<double> ys{0.0, 1.0};
  // Middle column is infinite: only the right cell can contribute.
  std::vector<double> field{-1.0, -1.0, std::numeric_limits<double>::infinity(),
                            std::numeric_limits<double>::infinity(), 1.0, 1.0};
  auto lines = marching_squares(xs, ys, field, 0.0);
  CHECK(lines.empty());
}

TEST_CASE("svg writer emits a self-contained chart") {
  const std::string path = temp_path("b.svg");
  SvgChart chart;
  chart.title = "test chart";
  chart.x_label = "k";
  chart.y_label = "x";
  SvgSeries s;
  s.line.xs = {0.0, 1.0, 2.0, 3.0};
  s.line.ys = {1.0, 0.5, 0.25, 0.125};
  s.label = "decay";
  chart.series.push_back(s);
  write_svg(path, chart);
  const std::string body = slurp(path);
  CHECK(body.find("<svg") != std::string::npos);
  CHECK(body.find("polyline") != std::string::npos);
  CHECK(body.find("test chart") != std::string::npos);
  CHECK(body.find("decay") != std::string::npos);
  const std::string again = slurp(path);
  write_svg(path, chart);
  CHECK(slurp(path) == again);
  std::remove(path.c_str());
}

TEST_CASE("svg writer splits series at non-finite points") {
  const std::string path = temp_path("c.svg");
  SvgChart chart;
  SvgSeries s;
  s.line.xs = {0.0, 1.0, 2.0, 3.0, 4.0};
  s.line.ys = {1.0, 2.0, std::numeric_limits<double>::quiet_NaN(), 3.0, 4.0};
  chart.series.push_back(s);
  write_svg(path, chart);
  const std::string body = slurp(path);
  size_t count = 0;
  for (size_t pos = body.find("<polyline"); pos != std::string::npos;
       pos = body.find("<polyline", pos + 1))
    ++count;
  CHECK(count == 2);
  std::remove(path.c_str());
}
