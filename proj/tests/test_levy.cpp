#include <catch2/catch_amalgamated.hpp>

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <complex>

#include "frlevy/harness.hpp"
#include "frlevy/levy.hpp"

using namespace frlevy;

namespace {

// Closed-form moments of the truncated tempered-stable measure through the
// upper incomplete gamma function; independent of the library's quadrature.
double tts_moment_gamma(double alpha, double lam, double scale, double eps, int p) {
  return scale * std::pow(lam, alpha - p) *
         boost::math::tgamma(static_cast<double>(p) - alpha, lam * eps);
}

}  // namespace

TEST_CASE("finite activity moments are exact sums", "[levy]") {
  const auto m = LevyModel::finite_activity(2.0, {{1.0, 1.0}});
  CHECK(m.second_moment() == 2.0);
  CHECK(m.first_moment() == 2.0);
  CHECK(m.mass() == 2.0);

  const auto zero = LevyModel::finite_activity(0.0, {{1.0, 1.0}});
  CHECK(zero.second_moment() == 0.0);

  const auto sym = LevyModel::finite_activity(3.0, {{1.0, 0.25}, {-1.0, 0.75}});
  CHECK(sym.second_moment() == Catch::Approx(3.0).margin(1e-14));
  CHECK(sym.first_moment() == Catch::Approx(3.0 * (0.25 - 0.75)).margin(1e-14));
}

TEST_CASE("finite activity validation", "[levy]") {
  CHECK_THROWS_AS(LevyModel::finite_activity(1.0, {{0.0, 1.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(LevyModel::finite_activity(1.0, {{1.0, 0.6}, {2.0, 0.6}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(LevyModel::finite_activity(-1.0, {{1.0, 1.0}}),
                  std::invalid_argument);
  // epsilon drops small atoms entirely
  const auto m = LevyModel::finite_activity(2.0, {{0.05, 0.5}, {1.0, 0.5}}, 0.1);
  CHECK(m.second_moment() == Catch::Approx(1.0).margin(1e-14));
  CHECK(m.mass() == Catch::Approx(1.0).margin(1e-14));
}

TEST_CASE("tempered stable second moment matches incomplete-gamma oracle",
          "[levy]") {
  const auto m = LevyModel::tempered_stable(0.5, 1.0, 1.0, 1.0, 0.1);
  // frozen from the oracle below
  CHECK(m.second_moment() == Catch::Approx(1.7327319154216547).margin(1e-8));
  const double oracle = tts_moment_gamma(0.5, 1.0, 1.0, 0.1, 2) +
                        tts_moment_gamma(0.5, 1.0, 1.0, 0.1, 2);
  CHECK(m.second_moment() == Catch::Approx(oracle).margin(1e-10));
  CHECK(m.first_moment() == Catch::Approx(0.0).margin(1e-10));

  const auto skew = LevyModel::tempered_stable(0.8, 2.0, 3.0, 0.7, 0.05);
  CHECK(skew.second_moment() ==
        Catch::Approx(tts_moment_gamma(0.8, 2.0, 0.7, 0.05, 2) +
                      tts_moment_gamma(0.8, 3.0, 0.7, 0.05, 2)).margin(1e-9));
  CHECK(skew.first_moment() ==
        Catch::Approx(tts_moment_gamma(0.8, 2.0, 0.7, 0.05, 1) -
                      tts_moment_gamma(0.8, 3.0, 0.7, 0.05, 1)).margin(1e-9));
}

TEST_CASE("steep tempered-stable parameters stay within quadrature reach",
          "[levy]") {
  // near-2 stability index with a tight truncation radius makes the density
  // scale enormous near epsilon; construction and moments must still work
  const auto m = LevyModel::tempered_stable(1.9, 0.3, 0.6, 1.0, 0.01);
  CHECK(std::isfinite(m.second_moment()));
  CHECK(m.second_moment() ==
        Catch::Approx(tts_moment_gamma(1.9, 0.3, 1.0, 0.01, 2) +
                      tts_moment_gamma(1.9, 0.6, 1.0, 0.01, 2))
            .epsilon(1e-9));
  const auto d = m.mark_discretization(16);
  double w = 0, wy2 = 0, wmin = 1e300;
  for (const auto& p : d.points) {
    w += p.weight;
    wy2 += p.weight * p.y * p.y;
    wmin = std::min(wmin, p.weight);
  }
  CHECK(wmin > 0.0);
  CHECK(w == Catch::Approx(m.mass()).epsilon(1e-9));
  CHECK(wy2 == Catch::Approx(m.second_moment()).epsilon(1e-9));
}

TEST_CASE("levy exponent closed forms", "[levy]") {
  const auto m = LevyModel::finite_activity(2.0, {{1.0, 1.0}});
  CHECK(m.levy_exponent(0.0) == std::complex<double>(0.0, 0.0));
  const auto psi = m.levy_exponent(M_PI);
  CHECK(psi.real() == Catch::Approx(-4.0).margin(1e-12));
  CHECK(psi.imag() == Catch::Approx(-2.0 * M_PI).margin(1e-12));

  const auto tts = LevyModel::tempered_stable(0.5, 1.0, 1.0, 1.0, 0.1);
  const auto p = tts.levy_exponent(1.7);
  CHECK(p.real() == Catch::Approx(-1.4958911892519084).margin(1e-8));
  CHECK(p.imag() == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("noise sampling determinism and degenerate cases", "[levy]") {
  GridSpec g({0.0, 0.0}, {1.0, 2.0}, {4, 8});
  const auto zero = LevyModel::finite_activity(0.0, {{1.0, 1.0}});
  const auto nz = sample_noise_grid(zero, g, 7);
  CHECK(nz.jump_count() == 0);
  for (double v : nz.increments) CHECK(v == 0.0);

  const auto m = LevyModel::finite_activity(2.0, {{1.0, 0.5}, {-0.5, 0.5}});
  const auto a = sample_noise_grid(m, g, 99);
  const auto b = sample_noise_grid(m, g, 99);
  CHECK(a.increments == b.increments);
  CHECK(a.jump_coords == b.jump_coords);
  CHECK(a.jump_marks == b.jump_marks);
  const auto c = sample_noise_grid(m, g, 100);
  CHECK(a.increments != c.increments);
}

TEST_CASE("intensity cap", "[levy]") {
  const auto m = LevyModel::finite_activity(1e9, {{1.0, 1.0}});
  GridSpec g({0.0}, {1.0}, {1});
  CHECK_THROWS_WITH(sample_noise_grid(m, g, 1),
                    Catch::Matchers::ContainsSubstring("intensity too large"));
}

TEST_CASE("compensation and cell isometry", "[levy]") {
  const auto m = LevyModel::finite_activity(2.0, {{1.0, 1.0}});
  GridSpec g({0.0}, {1.0}, {1});
  const int N = 10000;
  auto stat = [&](std::uint64_t s) {
    return sample_noise_grid(m, g, s).increments[0];
  };
  const auto samples = mc_samples(stat, N, 314159);
  const auto mean = mean_stderr(samples);
  CHECK(std::abs(mean.mean) <= 3.0 * std::sqrt(2.0 / N));
  const auto var = variance_stderr(samples);
  CHECK(std::abs(var.mean - 2.0) <= 3.0 * var.stderr_);
}

TEST_CASE("empirical characteristic function matches the exponent", "[levy]") {
  const auto m = LevyModel::finite_activity(2.0, {{1.0, 0.5}, {-1.0, 0.5}});
  GridSpec g({0.0}, {1.0}, {1});
  const int N = 8000;
  std::vector<double> charge(N);
  for (int i = 0; i < N; ++i)
    charge[static_cast<std::size_t>(i)] =
        sample_noise_grid(m, g, derive_seed(4242, static_cast<std::uint64_t>(i)))
            .increments[0];
  for (double theta : {0.7, 1.9, M_PI}) {
    const auto oracle = std::exp(m.levy_exponent(theta));  // Leb = 1
    std::vector<double> re(charge.size()), im(charge.size());
    for (std::size_t i = 0; i < charge.size(); ++i) {
      re[i] = std::cos(theta * charge[i]);
      im[i] = std::sin(theta * charge[i]);
    }
    const auto mre = mean_stderr(re), mim = mean_stderr(im);
    CHECK(std::abs(mre.mean - oracle.real()) <= 3.0 * mre.stderr_);
    CHECK(std::abs(mim.mean - oracle.imag()) <= 3.0 * mim.stderr_);
  }
}

TEST_CASE("tempered stable sampler reproduces its moments", "[levy]") {
  const auto m = LevyModel::tempered_stable(0.5, 1.0, 1.5, 1.0, 0.1);
  Rng rng(2024);
  const int N = 40000;
  double s1 = 0, s2 = 0;
  for (int i = 0; i < N; ++i) {
    const double y = m.sample_mark(rng);
    CHECK(std::abs(y) >= m.epsilon());
    s1 += y;
    s2 += y * y;
  }
  // law of the mark is nu/mass, so E y^p = moment_p / mass
  const double e1 = m.first_moment() / m.mass();
  const double e2 = m.second_moment() / m.mass();
  const double sd1 = std::sqrt((e2 - e1 * e1) / N);
  CHECK(std::abs(s1 / N - e1) <= 4.0 * sd1);
  CHECK(std::abs(s2 / N - e2) <= 0.05 * e2);
}

TEST_CASE("mark discretization matches moments and bins samples", "[levy]") {
  const auto fa = LevyModel::finite_activity(2.0, {{1.0, 0.25}, {-0.5, 0.75}});
  const auto dfa = fa.mark_discretization();
  REQUIRE(dfa.points.size() == 2);
  CHECK(dfa.points[0].y == -0.5);
  CHECK(dfa.points[1].y == 1.0);
  CHECK(dfa.locate(-0.5) == 0);
  CHECK(dfa.locate(1.0) == 1);

  const auto tts = LevyModel::tempered_stable(0.5, 1.0, 1.0, 1.0, 0.1);
  const auto d = tts.mark_discretization(16);
  REQUIRE(d.points.size() == 32);
  double w = 0, wy = 0, wy2 = 0;
  for (const auto& p : d.points) {
    CHECK(p.y != 0.0);
    w += p.weight;
    wy += p.weight * p.y;
    wy2 += p.weight * p.y * p.y;
  }
  CHECK(w == Catch::Approx(tts.mass()).margin(1e-9));
  CHECK(wy == Catch::Approx(tts.first_moment()).margin(1e-9));
  CHECK(wy2 == Catch::Approx(tts.second_moment()).margin(1e-10));
  // bins tile the sampled range
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const double y = tts.sample_mark(rng);
    const int b = d.locate(y);
    REQUIRE(b >= 0);
    REQUIRE(b < static_cast<int>(d.points.size()));
    CHECK(y >= d.bin_lo[static_cast<std::size_t>(b)]);
    CHECK(y < d.bin_hi[static_cast<std::size_t>(b)]);
  }
}
