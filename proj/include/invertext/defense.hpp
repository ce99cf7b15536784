#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "invertext/embedding.hpp"
#include "invertext/rng.hpp"
#include "json.hpp"

namespace invertext {

struct NoiseConfig {
  double lambda = 0.0;  // noise scale, >= 0
  std::uint64_t seed = 0;
};

struct AbsmaxQuantized {
  std::vector<int> q;  // entries in [-128, 127]
  double scale = 0.0;  // max |e_i|, recorded for dequantization
};

struct ZeropointQuantized {
  std::vector<int> q;  // entries in [-128, 127]
  double scale = 0.0;  // S = 255 / (max - min)
  int zero_point = 0;  // Z
};

enum class DefenseKind { None, Noise, Absmax, Zeropoint };

struct DefenseConfig {
  DefenseKind kind = DefenseKind::None;
  NoiseConfig noise;

  static DefenseConfig none() { return {}; }
  static DefenseConfig gaussian(double lambda, std::uint64_t seed) {
    DefenseConfig c;
    c.kind = DefenseKind::Noise;
    c.noise = {lambda, seed};
    return c;
  }
  static DefenseConfig absmax() { return {DefenseKind::Absmax, {}}; }
  static DefenseConfig zeropoint() { return {DefenseKind::Zeropoint, {}}; }

  std::string describe() const {
    switch (kind) {
      case DefenseKind::None: return "none";
      case DefenseKind::Noise: return "noise(lambda=" + std::to_string(noise.lambda) + ")";
      case DefenseKind::Absmax: return "absmax";
      case DefenseKind::Zeropoint: return "zeropoint";
    }
    return "?";
  }
};

namespace detail {
// round half away from zero
inline double round_haz(double x) {
  return x >= 0.0 ? std::floor(x + 0.5) : std::ceil(x - 0.5);
}
inline int clamp_i8(double x) {
  if (x < -128.0) return -128;
  if (x > 127.0) return 127;
  return static_cast<int>(x);
}
}  // namespace detail

inline Embedding noise_embed(const Embedding& e, double lambda, Rng& rng) {
  check_finite(e);
  Embedding out(e.size());
  for (Eigen::Index i = 0; i < e.size(); ++i)
    out[i] = e[i] + static_cast<float>(lambda * rng.normal());
  return out;
}

// q_i = clamp(round(127 / max|e| * e_i)); denominator is the max of absolute
// values, not the signed max, so the full int8 range is usable either sign.
inline AbsmaxQuantized absmax_quantize(const Embedding& e) {
  check_finite(e);
  double amax = 0.0;
  for (Eigen::Index i = 0; i < e.size(); ++i)
    amax = std::max(amax, std::abs(static_cast<double>(e[i])));
  if (amax == 0.0) throw std::runtime_error("degenerate embedding");
  AbsmaxQuantized out;
  out.scale = amax;
  out.q.resize(static_cast<std::size_t>(e.size()));
  for (Eigen::Index i = 0; i < e.size(); ++i)
    out.q[static_cast<std::size_t>(i)] =
        detail::clamp_i8(detail::round_haz(127.0 / amax * static_cast<double>(e[i])));
  return out;
}

inline Embedding absmax_dequantize(const AbsmaxQuantized& aq) {
  Embedding out(static_cast<Eigen::Index>(aq.q.size()));
  for (std::size_t i = 0; i < aq.q.size(); ++i)
    out[static_cast<Eigen::Index>(i)] =
        static_cast<float>(aq.scale / 127.0 * static_cast<double>(aq.q[i]));
  return out;
}

// S = 255/(max - min); Z = -round(S * min) - 128; q_i = clamp(round(S e_i + Z))
inline ZeropointQuantized zeropoint_quantize(const Embedding& e) {
  check_finite(e);
  double lo = static_cast<double>(e.minCoeff());
  double hi = static_cast<double>(e.maxCoeff());
  if (hi <= lo) throw std::runtime_error("zero dynamic range");
  ZeropointQuantized out;
  out.scale = 255.0 / (hi - lo);
  out.zero_point = static_cast<int>(detail::round_haz(-out.scale * lo)) - 128;
  out.q.resize(static_cast<std::size_t>(e.size()));
  for (Eigen::Index i = 0; i < e.size(); ++i)
    out.q[static_cast<std::size_t>(i)] = detail::clamp_i8(
        detail::round_haz(out.scale * static_cast<double>(e[i]) + out.zero_point));
  return out;
}

inline Embedding zeropoint_dequantize(const ZeropointQuantized& zq) {
  Embedding out(static_cast<Eigen::Index>(zq.q.size()));
  for (std::size_t i = 0; i < zq.q.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = static_cast<float>(
        (static_cast<double>(zq.q[i]) - zq.zero_point) / zq.scale);
  return out;
}

// Transmit-and-restore simulation: quantizers are applied as a round trip,
// noise is added directly. Defended embeddings are never re-normalized.
inline Embedding apply_defense(const DefenseConfig& cfg, const Embedding& e, Rng& rng) {
  switch (cfg.kind) {
    case DefenseKind::None:
      return e;
    case DefenseKind::Noise:
      return noise_embed(e, cfg.noise.lambda, rng);
    case DefenseKind::Absmax:
      return absmax_dequantize(absmax_quantize(e));
    case DefenseKind::Zeropoint:
      return zeropoint_dequantize(zeropoint_quantize(e));
  }
  throw std::logic_error("unreachable defense kind");
}

// JSONL interchange record for quantized embeddings.
inline nlohmann::json quantized_record(const AbsmaxQuantized& aq) {
  return {{"q", aq.q}, {"scheme", "absmax"}, {"scale", aq.scale},
          {"S", nullptr}, {"Z", nullptr}};
}

inline nlohmann::json quantized_record(const ZeropointQuantized& zq) {
  return {{"q", zq.q}, {"scheme", "zeropoint"}, {"scale", nullptr},
          {"S", zq.scale}, {"Z", zq.zero_point}};
}

}  // namespace invertext
