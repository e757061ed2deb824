#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "phasecorr/phase_model.hpp"

using namespace phasecorr;

namespace {
CorrelationModel model2(double r2, double sigma, double dpb = 0.0) {
  CorrelationModel m;
  m.ell_c = 2;
  m.r = {1.0, r2};
  m.sigma = sigma;
  m.delta_phi_bar = Angle(dpb);
  return m;
}
}  // namespace

TEST_CASE("model validation enforces the weight normalization") {
  CorrelationModel m = model2(0.5, 0.3);
  CHECK_NOTHROW(m.validate());
  m.r = {0.9, 0.5};
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m.r = {1.0};
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m.r = {1.0, -0.1};
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m = model2(0.5, -1.0);
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}

TEST_CASE("combine_h reduces to the previous phase at first order") {
  const std::vector<Angle> prev{Angle(0.73)};
  const std::vector<double> r{1.0};
  CHECK(combine_h(prev, r).value() == doctest::Approx(0.73).epsilon(1e-15));
}

TEST_CASE("combine_h bisects equal-weight constructive inputs") {
  // oldest-first: phi_{i-2} = pi/2 carries r[1], phi_{i-1} = 0 carries r[0]
  const std::vector<Angle> prev{Angle(kPi / 2), Angle(0.0)};
  const std::vector<double> r{1.0, 1.0};
  CHECK(std::abs(combine_h(prev, r).value() - kPi / 4) < 1e-14);
}

TEST_CASE("combine_h stays within arcsin(r2) of the recent phase") {
  RngState rng(31);
  for (double r2 : {0.2, 0.5, 0.9}) {
    const std::vector<double> r{1.0, r2};
    const double bound = std::asin(r2) + 1e-12;
    for (int i = 0; i < 10000; ++i) {
      const std::vector<Angle> prev{Angle(rng.uniform(-kPi, kPi)),
                                    Angle(rng.uniform(-kPi, kPi))};
      const Angle h = combine_h(prev, r);
      CHECK(angular_distance(h, prev[1]) <= bound);
    }
  }
}

TEST_CASE("combine_h shift equivariance and weight-scale invariance") {
  RngState rng(32);
  for (int i = 0; i < 200; ++i) {
    const std::vector<Angle> prev{Angle(rng.uniform(-kPi, kPi)),
                                  Angle(rng.uniform(-kPi, kPi)),
                                  Angle(rng.uniform(-kPi, kPi))};
    const std::vector<double> r{1.0, 0.7, 0.2};
    const double c = rng.uniform(-kPi, kPi);
    std::vector<Angle> shifted;
    for (const Angle& a : prev) shifted.push_back(a + Angle(c));
    const Angle h0 = combine_h(prev, r);
    const Angle h1 = combine_h(shifted, r);
    CHECK(angular_distance(h1, h0 + Angle(c)) < 1e-12);

    const std::vector<double> r_scaled{3.7, 3.7 * 0.7, 3.7 * 0.2};
    CHECK(angular_distance(combine_h(prev, r_scaled), h0) < 1e-12);
  }
}

TEST_CASE("combine_h raises on exact cancellation") {
  const std::vector<Angle> prev{Angle(kPi), Angle(0.0)};
  const std::vector<double> r{1.0, 1.0};
  CHECK_THROWS_AS(combine_h(prev, r), degenerate_resultant_error);
}

TEST_CASE("conditional_pdf approaches the uniform density for large sigma") {
  const CorrelationModel m = model2(0.8, 50.0, 0.4);
  const std::vector<Angle> prev{Angle(1.1), Angle(-0.3)};
  for (double phi : {-2.0, 0.0, 1.5})
    CHECK(std::abs(conditional_pdf(Angle(phi), prev, m) - 1.0 / kTwoPi) <
          1e-12);
}

TEST_CASE("conditional_pdf peaks at the aligned phase") {
  const CorrelationModel m = model2(1.0, 0.5);
  const std::vector<Angle> prev{Angle(0.0), Angle(0.0)};
  const double at0 = conditional_pdf(Angle(0.0), prev, m);
  CHECK(at0 > conditional_pdf(Angle(0.5), prev, m));
  CHECK(at0 > conditional_pdf(Angle(-0.5), prev, m));
}

TEST_CASE("conditional_pdf matches the independent center oracle") {
  // frozen: center = atan2 oracle + 0.2, then the series density at 0.1
  const CorrelationModel m = model2(0.6, 0.4, 0.2);
  const std::vector<Angle> prev{Angle(1.1), Angle(-0.3)};
  const double v = conditional_pdf(Angle(0.1), prev, m);
  CHECK(std::abs(v - 0.7634269410703178) < 1e-12);
  CHECK_THROWS_AS(
      conditional_pdf(Angle(0.1), std::vector<Angle>{Angle(0.0)}, m),
      std::invalid_argument);
}

TEST_CASE("generate_sequence under dominant noise is nearly uniform") {
  RngState rng(77);
  const auto seq = generate_sequence(model2(1.0, 50.0), 100000, rng);
  double c = 0, s = 0;
  for (const Angle& a : seq.phases) {
    c += std::cos(a.value());
    s += std::sin(a.value());
  }
  CHECK(std::hypot(c, s) / static_cast<double>(seq.phases.size()) < 0.01);
}

TEST_CASE("noiseless first-order recursion is an arithmetic progression") {
  CorrelationModel m;
  m.ell_c = 1;
  m.r = {1.0};
  m.sigma = 0.0;
  m.delta_phi_bar = Angle(0.2);
  RngState rng(3);
  const auto seq = generate_sequence(m, 1000, rng);
  for (std::size_t i = 1; i < seq.phases.size(); ++i)
    CHECK(std::abs(wrap_angle(seq.phases[i].value() -
                              seq.phases[i - 1].value() - 0.2)) < 1e-12);
}

TEST_CASE("residuals pass a wrapped-Gaussian goodness-of-fit test") {
  const CorrelationModel m = model2(0.6, 0.4, 0.1);
  RngState rng(99);
  const auto seq = generate_sequence(m, 100000, rng);

  constexpr int kBins = 64;
  std::vector<std::uint64_t> counts(kBins, 0);
  std::uint64_t total = 0;
  std::vector<double> residuals, lag1, lag2;
  for (std::size_t i = 2; i < seq.phases.size(); ++i) {
    const std::vector<Angle> prev{seq.phases[i - 2], seq.phases[i - 1]};
    const double res =
        wrap_angle(seq.phases[i].value() - combine_h(prev, m.r).value());
    residuals.push_back(res);
    lag1.push_back(seq.phases[i - 1].value());
    lag2.push_back(seq.phases[i - 2].value());
    auto bin = static_cast<std::size_t>((res + kPi) / kTwoPi * kBins);
    if (bin >= kBins) bin = kBins - 1;
    ++counts[bin];
    ++total;
  }
  std::vector<double> expected(kBins, 0.0);
  const WGParams noise{m.delta_phi_bar.value(), m.sigma};
  for (int b = 0; b < kBins; ++b) {
    double mass = 0.0;
    for (int j = 0; j < 64; ++j)
      mass += wg_pdf(Angle(-kPi + kTwoPi * (b + (j + 0.5) / 64.0) / kBins),
                     noise);
    expected[static_cast<std::size_t>(b)] = mass * kTwoPi / (kBins * 64);
  }
  CHECK(oracles::chi2_statistic(counts, expected, total) <
        oracles::kChi2_999_df63);

  // residuals do not correlate with the conditioning phases
  const double n = static_cast<double>(residuals.size());
  CHECK(std::abs(oracles::circular_correlation(residuals, lag1)) <
        4.0 / std::sqrt(n));
  CHECK(std::abs(oracles::circular_correlation(residuals, lag2)) <
        4.0 / std::sqrt(n));
}

TEST_CASE("residual statistics do not depend on the round index") {
  const CorrelationModel m = model2(0.8, 0.7, -0.3);
  RngState rng(123);
  const auto seq = generate_sequence(m, 200000, rng);
  constexpr int kBins = 16;
  std::uint64_t h1[kBins] = {}, h2[kBins] = {};
  std::uint64_t n1 = 0, n2 = 0;
  for (std::size_t i = 2; i < seq.phases.size(); ++i) {
    const std::vector<Angle> prev{seq.phases[i - 2], seq.phases[i - 1]};
    const double res =
        wrap_angle(seq.phases[i].value() - combine_h(prev, m.r).value());
    auto bin = static_cast<std::size_t>((res + kPi) / kTwoPi * kBins);
    if (bin >= kBins) bin = kBins - 1;
    if (i < seq.phases.size() / 2) {
      ++h1[bin];
      ++n1;
    } else {
      ++h2[bin];
      ++n2;
    }
  }
  // two-sample chi-square with 15 degrees of freedom
  double stat = 0.0;
  const double k1 = std::sqrt(static_cast<double>(n2) / n1);
  const double k2 = std::sqrt(static_cast<double>(n1) / n2);
  for (int b = 0; b < kBins; ++b) {
    const double d = k1 * static_cast<double>(h1[b]) -
                     k2 * static_cast<double>(h2[b]);
    stat += d * d / static_cast<double>(h1[b] + h2[b]);
  }
  CHECK(stat < oracles::kChi2_999_df15);
}

TEST_CASE("generate_sequence is deterministic at fixed seed") {
  const CorrelationModel m = model2(0.5, 0.9, 0.2);
  RngState a(55), b(55);
  const auto s1 = generate_sequence(m, 500, a);
  const auto s2 = generate_sequence(m, 500, b);
  for (std::size_t i = 0; i < s1.phases.size(); ++i)
    CHECK(s1.phases[i].value() == s2.phases[i].value());
}
