#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "invertext/defense.hpp"

using namespace invertext;

namespace {
Embedding vec(std::initializer_list<float> v) {
  Embedding e(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (float x : v) e[i++] = x;
  return e;
}
}  // namespace

TEST_CASE("absmax worked example [0.5, -0.25, 1.0]") {
  auto q = absmax_quantize(vec({0.5f, -0.25f, 1.0f}));
  CHECK(q.scale == doctest::Approx(1.0));
  REQUIRE(q.q.size() == 3);
  CHECK(q.q[0] == 64);   // round(127 * 0.5) = round(63.5) = 64 (half away from zero)
  CHECK(q.q[1] == -32);  // round(-31.75) = -32
  CHECK(q.q[2] == 127);
}

TEST_CASE("zeropoint worked example [-1, 0, 0.5]") {
  auto q = zeropoint_quantize(vec({-1.0f, 0.0f, 0.5f}));
  CHECK(q.scale == doctest::Approx(170.0));  // 255 / 1.5
  CHECK(q.zero_point == 42);                 // -round(170 * -1) - 128
  REQUIRE(q.q.size() == 3);
  CHECK(q.q[0] == -128);
  CHECK(q.q[1] == 42);
  CHECK(q.q[2] == 127);
  // exact round trip for this instance
  Embedding back = zeropoint_dequantize(q);
  CHECK(back[0] == doctest::Approx(-1.0).epsilon(1e-7));
  CHECK(back[1] == doctest::Approx(0.0).epsilon(1e-7));
  CHECK(back[2] == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("round half away from zero") {
  CHECK(detail::round_haz(0.5) == 1.0);
  CHECK(detail::round_haz(-0.5) == -1.0);
  CHECK(detail::round_haz(2.5) == 3.0);
  CHECK(detail::round_haz(-2.5) == -3.0);
  CHECK(detail::round_haz(1.49) == 1.0);
}

TEST_CASE("quantization round-trip error bounds on 10000 random vectors") {
  Rng rng(20240817);
  int absmax_violations = 0, zeropoint_violations = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    Embedding e(16);
    for (Eigen::Index i = 0; i < e.size(); ++i)
      e[i] = static_cast<float>(rng.uniform(-2.0, 2.0));
    auto aq = absmax_quantize(e);
    Embedding ar = absmax_dequantize(aq);
    double abound = 0.5 * aq.scale / 127.0 + 1e-6;
    for (Eigen::Index i = 0; i < e.size(); ++i)
      if (std::abs(static_cast<double>(ar[i]) - e[i]) > abound) ++absmax_violations;
    auto zq = zeropoint_quantize(e);
    Embedding zr = zeropoint_dequantize(zq);
    double zbound = 0.5 / zq.scale + 1e-6;
    for (Eigen::Index i = 0; i < e.size(); ++i)
      if (std::abs(static_cast<double>(zr[i]) - e[i]) > zbound) ++zeropoint_violations;
  }
  CHECK(absmax_violations == 0);
  CHECK(zeropoint_violations == 0);
}

TEST_CASE("absmax re-quantization is idempotent") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    Embedding e(32);
    for (Eigen::Index i = 0; i < e.size(); ++i)
      e[i] = static_cast<float>(rng.normal());
    auto q1 = absmax_quantize(e);
    auto q2 = absmax_quantize(absmax_dequantize(q1));
    CHECK(q1.q == q2.q);
  }
}

TEST_CASE("gaussian noise has the configured scale (monte carlo oracle)") {
  Rng rng(99);
  const double lambda = 0.1;
  Embedding e = Embedding::Zero(50000);
  Embedding out = noise_embed(e, lambda, rng);
  double mean = 0.0, var = 0.0;
  for (Eigen::Index i = 0; i < out.size(); ++i) mean += out[i];
  mean /= static_cast<double>(out.size());
  for (Eigen::Index i = 0; i < out.size(); ++i)
    var += (out[i] - mean) * (out[i] - mean);
  var /= static_cast<double>(out.size() - 1);
  CHECK(std::abs(mean) < 3.0 * lambda / std::sqrt(50000.0));
  CHECK(std::sqrt(var) == doctest::Approx(lambda).epsilon(0.02));
}

TEST_CASE("noise with lambda 0 is the identity") {
  Rng rng(1);
  Embedding e = vec({0.3f, -0.7f});
  Embedding out = noise_embed(e, 0.0, rng);
  CHECK(out[0] == e[0]);
  CHECK(out[1] == e[1]);
}

TEST_CASE("apply_defense none returns input unchanged") {
  Rng rng(1);
  Embedding e = vec({0.1f, 0.9f});
  Embedding out = apply_defense(DefenseConfig::none(), e, rng);
  CHECK((out - e).norm() == 0.0f);
}

TEST_CASE("apply_defense quantizers are round trips") {
  Rng rng(1);
  Embedding e = vec({0.5f, -0.25f, 1.0f});
  Embedding am = apply_defense(DefenseConfig::absmax(), e, rng);
  Embedding expect = absmax_dequantize(absmax_quantize(e));
  CHECK((am - expect).norm() == 0.0f);
}

TEST_CASE("degenerate inputs are errors") {
  CHECK_THROWS_AS(absmax_quantize(vec({0.0f, 0.0f})), std::runtime_error);
  CHECK_THROWS_AS(zeropoint_quantize(vec({0.5f, 0.5f})), std::runtime_error);
}

TEST_CASE("quantized interchange records carry scheme-specific fields") {
  auto aj = quantized_record(absmax_quantize(vec({0.5f, -0.25f, 1.0f})));
  CHECK(aj.at("scheme") == "absmax");
  CHECK(aj.at("scale").get<double>() == doctest::Approx(1.0));
  CHECK(aj.at("S").is_null());
  CHECK(aj.at("Z").is_null());
  CHECK(aj.at("q").size() == 3);

  auto zj = quantized_record(zeropoint_quantize(vec({-1.0f, 0.0f, 0.5f})));
  CHECK(zj.at("scheme") == "zeropoint");
  CHECK(zj.at("scale").is_null());
  CHECK(zj.at("S").get<double>() == doctest::Approx(170.0));
  CHECK(zj.at("Z").get<int>() == 42);
}

TEST_CASE("defense descriptions are distinct") {
  CHECK(DefenseConfig::none().describe() == "none");
  CHECK(DefenseConfig::absmax().describe() == "absmax");
  CHECK(DefenseConfig::zeropoint().describe() == "zeropoint");
  CHECK(DefenseConfig::gaussian(0.01, 1).describe().find("0.01") != std::string::npos);
}
