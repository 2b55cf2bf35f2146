#include <cmath>
#include <vector>

#include "blaq/curvature.hpp"
#include "support.hpp"

using namespace blaq;
using blaq::test::error_kind_of;

TEST_SUITE("curvature") {
  TEST_CASE("first adaptive step") {
    CurvatureState s(2, CurvatureConfig{0.999, 1e-8, MetricKind::Adaptive}, LrSchedule::constant(0.1));
    auto d = s.update(std::vector<double>{1.0, 0.0});
    CHECK(d[0] == doctest::Approx(10.00000010).epsilon(1e-12));
    CHECK(d[1] == doctest::Approx(1e-7).epsilon(1e-12));
    CHECK(s.step() == 1);
  }

  TEST_CASE("bias-corrected recurrence against a hand loop") {
    const double b2 = 0.9, eps = 1e-8, eta = 0.05;
    CurvatureState s(1, CurvatureConfig{b2, eps, MetricKind::Adaptive}, LrSchedule::constant(eta));
    double v = 0.0;
    const double gs[] = {0.3, -1.2, 0.0, 2.5, -0.1};
    for (int t = 1; t <= 5; ++t) {
      double g = gs[t - 1];
      v = b2 * v + (1 - b2) * g * g;
      double expect = (std::sqrt(v / (1 - std::pow(b2, t))) + eps) / eta;
      CHECK(s.update(std::vector<double>{g})[0] == doctest::Approx(expect).epsilon(1e-14));
    }
  }

  TEST_CASE("peek leaves the state alone") {
    CurvatureState s(2, CurvatureConfig{}, LrSchedule::constant(0.01));
    s.update(std::vector<double>{0.5, -0.5});
    auto v = s.v();
    auto peeked = s.peek(std::vector<double>{3.0, 1.0});
    CHECK(s.v() == v);
    CHECK(s.step() == 1);
    CHECK(s.update(std::vector<double>{3.0, 1.0}) == peeked);
  }

  TEST_CASE("identity metric is 1/eta under a schedule") {
    CurvatureState s(1, CurvatureConfig{0.999, 1e-8, MetricKind::Identity}, LrSchedule({{0, 0.1}, {2, 0.05}}));
    CHECK(s.update(std::vector<double>{4.0})[0] == doctest::Approx(10.0));
    CHECK(s.update(std::vector<double>{4.0})[0] == doctest::Approx(20.0));
  }

  TEST_CASE("schedule lookup and validation") {
    LrSchedule sch({{0, 0.1}, {10, 0.05}, {15, 0.025}});
    CHECK(sch.at(0) == 0.1);
    CHECK(sch.at(9) == 0.1);
    CHECK(sch.at(10) == 0.05);
    CHECK(sch.at(1000) == 0.025);
    CHECK(error_kind_of([] { LrSchedule({{1, 0.1}}); }) == ErrorKind::Config);
    CHECK(error_kind_of([] { LrSchedule({{0, 0.1}, {0, 0.2}}); }) == ErrorKind::Config);
    CHECK(error_kind_of([] { LrSchedule({{0, -0.1}}); }) == ErrorKind::Config);
  }

  TEST_CASE("bad gradients") {
    CurvatureState s(2, CurvatureConfig{}, LrSchedule::constant(0.1));
    CHECK(error_kind_of([&] { s.update(std::vector<double>{1.0}); }) == ErrorKind::Shape);
    CHECK(error_kind_of([&] { s.update(std::vector<double>{1.0, INFINITY}); }) == ErrorKind::Numeric);
    CHECK(s.step() == 0);
  }
}
