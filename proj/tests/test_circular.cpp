#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "phasecorr/wrapped_gaussian.hpp"

using namespace phasecorr;

namespace {
double quad_integral_pdf(const WGParams& p, int nodes) {
  double s = 0.0;
  for (int i = 0; i < nodes; ++i)
    s += wg_pdf(Angle(-kPi + kTwoPi * (i + 0.5) / nodes), p);
  return s * kTwoPi / nodes;
}
}  // namespace

TEST_CASE("angle wrapping is canonical and exact under 2pi shifts") {
  CHECK(Angle(kPi).value() == kPi);
  CHECK(Angle(-kPi).value() == kPi);
  CHECK(Angle(3 * kPi).value() == kPi);
  CHECK(Angle(0.7 + kTwoPi).value() == Angle(0.7).value());
  CHECK(Angle(-15.3).value() > -kPi);
  CHECK(Angle(-15.3).value() <= kPi);
  CHECK_THROWS_AS(Angle(std::nan("")), std::invalid_argument);
  // arithmetic keeps the representative canonical
  const Angle a = Angle(3.0) + Angle(3.0);
  CHECK(a.value() <= kPi);
  CHECK(a.value() > -kPi);
}

TEST_CASE("wg_pdf matches the independent direct-series oracle") {
  // frozen from a |k| <= 50 summation at quadruple effort
  CHECK(std::abs(wg_pdf(Angle(0.0), {0.0, 1.0}) - 0.3989422825360037) < 1e-12);
  CHECK(std::abs(wg_pdf(Angle(1.0), {0.0, 1.0}) - 0.2419710711662560) < 1e-12);
  CHECK(std::abs(wg_pdf(Angle(kPi), {0.0, 1.0}) - 0.005738292692708957) < 1e-12);
  CHECK(std::abs(wg_pdf(Angle(0.3), {0.1, 0.7}) - 0.5471239427774460) < 1e-12);
  // and against the oracle evaluated here
  for (double x : {-2.5, -0.3, 0.9, 2.9}) {
    for (double sigma : {0.05, 0.4, 1.3, 2.0, 5.0}) {
      CHECK(std::abs(wg_pdf(Angle(x), {0.2, sigma}) -
                     oracles::wg_pdf_series(x, 0.2, sigma)) <
            1e-12 * std::max(1.0, oracles::wg_pdf_series(x, 0.2, sigma)));
    }
  }
}

TEST_CASE("wg_pdf approaches the uniform density for large sigma") {
  for (double x : {-3.0, -1.0, 0.0, 0.5, kPi})
    CHECK(std::abs(wg_pdf(Angle(x), {0.0, 50.0}) - 1.0 / kTwoPi) < 1e-12);
  // at sigma = 5 the residual ripple is the leading Fourier mode
  const double amp = 2.0 * std::exp(-12.5) / kTwoPi;
  double maxdev = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = -kPi + kTwoPi * i / 1000.0;
    maxdev = std::max(maxdev,
                      std::abs(wg_pdf(Angle(x), {0.0, 5.0}) - 1.0 / kTwoPi));
  }
  CHECK(maxdev < 1.01 * amp);
  CHECK(maxdev > 0.5 * amp);  // the ripple is real, not a truncation artifact
}

TEST_CASE("wg_pdf normalizes on (-pi, pi]") {
  for (double sigma : {0.01, 0.1, 1.0, 5.0})
    CHECK(std::abs(quad_integral_pdf({0.3, sigma}, 16384) - 1.0) < 1e-8);
}

TEST_CASE("wg_pdf periodicity and shift covariance") {
  for (double x : {-2.0, 0.4, 1.9}) {
    CHECK(wg_pdf(Angle(x + kTwoPi), {0.3, 0.8}) ==
          wg_pdf(Angle(x), {0.3, 0.8}));
    // shift covariance: f(x; mean + c) = f(x - c; mean)
    const double c = 1.234;
    CHECK(std::abs(wg_pdf(Angle(x), {0.3 + c, 0.8}) -
                   wg_pdf(Angle(x - c), {0.3, 0.8})) < 1e-12);
  }
}

TEST_CASE("wg_pdf rejects sigma = 0 and non-finite input") {
  CHECK_THROWS_AS(wg_pdf(Angle(0.0), {0.0, 0.0}), std::domain_error);
  CHECK_THROWS_AS(wg_pdf(Angle(0.0), {0.0, -1.0}), std::invalid_argument);
  WGParams bad{std::nan(""), 1.0};
  CHECK_THROWS_AS(wg_pdf(Angle(0.0), bad), std::invalid_argument);
}

TEST_CASE("wg_log_pdf agrees with the density everywhere") {
  for (double sigma : {0.05, 0.3, 1.0, 1.6, 3.0, 6.0})
    for (double x : {-3.1, -1.0, 0.0, 0.77, 3.1}) {
      const double f = wg_pdf(Angle(x), {0.0, sigma});
      CHECK(std::abs(std::exp(wg_log_pdf(Angle(x), {0.0, sigma})) - f) <
            1e-12 * std::max(1.0, f));
      WgLogEval T(sigma);
      CHECK(std::abs(T(wrap_angle(x)) - wg_log_pdf(Angle(x), {0.0, sigma})) <
            1e-12 * std::max(1.0, std::abs(std::log(f))));
    }
}

TEST_CASE("wg_sample: degenerate sigma, determinism, split streams") {
  RngState rng(7);
  CHECK(wg_sample({1.0 + kTwoPi, 0.0}, rng).value() == Angle(1.0).value());

  RngState a(42), b(42);
  for (int i = 0; i < 100; ++i)
    CHECK(wg_sample({0.0, 1.0}, a).value() == wg_sample({0.0, 1.0}, b).value());

  RngState base(42);
  RngState s1 = base.split(1), s2 = base.split(2);
  CHECK(s1.normal() != s2.normal());
}

TEST_CASE("sampler matches pdf by chi-square goodness of fit") {
  const WGParams p{0.3, 0.7};
  constexpr int kBins = 64;
  constexpr std::uint64_t kN = 1000000;
  std::vector<std::uint64_t> counts(kBins, 0);
  RngState rng(2024);
  for (std::uint64_t i = 0; i < kN; ++i) {
    const double x = wg_sample(p, rng).value();
    auto bin = static_cast<std::size_t>((x + kPi) / kTwoPi * kBins);
    if (bin >= kBins) bin = kBins - 1;
    ++counts[bin];
  }
  std::vector<double> expected(kBins, 0.0);
  for (int b = 0; b < kBins; ++b) {
    // bin mass by fine midpoint quadrature of the density
    double mass = 0.0;
    for (int j = 0; j < 64; ++j) {
      const double x = -kPi + kTwoPi * (b + (j + 0.5) / 64.0) / kBins;
      mass += wg_pdf(Angle(x), p);
    }
    expected[static_cast<std::size_t>(b)] = mass * kTwoPi / (kBins * 64);
  }
  const double stat = oracles::chi2_statistic(counts, expected, kN);
  CHECK(stat < oracles::kChi2_999_df63);
}

TEST_CASE("sampled mass concentrates within 5 sigma for small sigma") {
  const WGParams p{0.5, 0.01};
  RngState rng(11);
  std::uint64_t inside = 0;
  constexpr std::uint64_t kN = 1000000;
  for (std::uint64_t i = 0; i < kN; ++i)
    if (std::abs(wrap_angle(wg_sample(p, rng).value() - 0.5)) <= 5 * 0.01)
      ++inside;
  CHECK(static_cast<double>(inside) / kN >= 0.9999);
}

TEST_CASE("circular_moment basics and closed forms") {
  std::vector<Angle> same(10, Angle(0.5));
  const auto m0 = circular_moment(same);
  CHECK(m0.resultant_length == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m0.mean_angle.value() == doctest::Approx(0.5).epsilon(1e-12));

  std::vector<Angle> anti{Angle(kPi / 2), Angle(-kPi / 2)};
  CHECK(circular_moment(anti).resultant_length < 1e-12);

  CHECK_THROWS_AS(circular_moment(std::vector<Angle>{}), std::invalid_argument);

  // 1e6 draws at sigma = 1: resultant e^{-1/2}, mean angle preserved
  RngState rng(5);
  std::vector<Angle> draws;
  draws.reserve(1000000);
  for (int i = 0; i < 1000000; ++i) draws.push_back(wg_sample({1.0, 1.0}, rng));
  const auto m = circular_moment(draws);
  const double rho1 = std::exp(-0.5);
  const double var_cos = 0.5 * (1.0 + std::exp(-2.0)) - rho1 * rho1;
  const double se = std::sqrt(var_cos / 1e6);
  CHECK(std::abs(m.resultant_length - rho1) < 3 * se);

  RngState rng2(6);
  draws.clear();
  for (int i = 0; i < 1000000; ++i)
    draws.push_back(wg_sample({1.0, 0.3}, rng2));
  const auto m2 = circular_moment(draws);
  const double var_sin = 0.5 * (1.0 - std::exp(-2 * 0.09));
  const double se_angle =
      std::sqrt(var_sin / 1e6) / std::exp(-0.5 * 0.09);
  CHECK(std::abs(wrap_angle(m2.mean_angle.value() - 1.0)) < 3 * se_angle);
}
