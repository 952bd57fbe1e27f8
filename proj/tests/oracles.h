// tests/oracles.h

// Copyright 2026 The fsbed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Independent reference implementations shared by the unit tests and the
// acceptance runner. None of them call into the code they check, except for
// the loss value used by the finite-difference gradient.

#ifndef FSBED_TESTS_ORACLES_H_
#define FSBED_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <vector>

#include "fsbed/corpus.h"
#include "fsbed/eval.h"
#include "fsbed/proto.h"

namespace fsbed::oracle {

inline double interval_iou(const corpus::Event &a, const corpus::Event &b) {
  const double inter = std::max(0.0, std::min(a.offset, b.offset) - std::max(a.onset, b.onset));
  const double uni = (a.offset - a.onset) + (b.offset - b.onset) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

struct BestMatching {
  std::size_t cardinality = 0;
  double total_iou = 0.0;  // best total among maximum-cardinality matchings
};

/// Exhaustive search over every injective partial assignment gt -> pred.
inline BestMatching brute_force_matching(const std::vector<corpus::Event> &gt,
                                         const std::vector<corpus::Event> &pred, double min_iou) {
  BestMatching best;
  std::vector<bool> used(pred.size(), false);
  std::function<void(std::size_t, std::size_t, double)> rec = [&](std::size_t g, std::size_t card,
                                                                   double total) {
    if (g == gt.size()) {
      if (card > best.cardinality || (card == best.cardinality && total > best.total_iou)) {
        best.cardinality = card;
        best.total_iou = total;
      }
      return;
    }
    rec(g + 1, card, total);  // leave gt[g] unmatched
    for (std::size_t p = 0; p < pred.size(); ++p) {
      if (used[p]) continue;
      const double v = interval_iou(gt[g], pred[p]);
      if (v < min_iou) continue;
      used[p] = true;
      rec(g + 1, card + 1, total + v);
      used[p] = false;
    }
  };
  rec(0, 0, 0.0);
  return best;
}

/// Random events in [0, horizon) with lengths in [0.5, 8] s.
inline std::vector<corpus::Event> random_events(std::mt19937_64 &rng, std::size_t max_count,
                                                double horizon) {
  std::uniform_int_distribution<std::size_t> count(0, max_count);
  std::uniform_real_distribution<double> start(0.0, horizon - 8.0), len(0.5, 8.0);
  std::vector<corpus::Event> out(count(rng));
  for (auto &e : out) {
    e.onset = start(rng);
    e.offset = e.onset + len(rng);
    e.label = "x";
  }
  return out;
}

/// Micro-averaged F, computed directly from counts.
inline double micro_f(std::size_t tp, std::size_t fp, std::size_t fn) {
  if (tp == 0) return 0.0;
  const double p = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double r = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 2.0 * p * r / (p + r);
}

/// Exact bootstrap distribution over all n^n equiprobable file resamples,
/// returned as the inverse CDF at the 2.5% and 97.5% levels.
inline std::pair<double, double> exact_bootstrap_percentiles(
    const std::vector<eval::ScoreCounts> &files) {
  const std::size_t n = files.size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= n;
  std::vector<double> values;
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code, tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i, c /= n) {
      tp += files[c % n].tp;
      fp += files[c % n].fp;
      fn += files[c % n].fn;
    }
    values.push_back(micro_f(tp, fp, fn));
  }
  std::sort(values.begin(), values.end());
  const auto quantile = [&](double q) {
    const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(total))) - 1;
    return values[std::min(k, total - 1)];
  };
  return {quantile(0.025), quantile(0.975)};
}

/// Random params with nonzero biases so no hidden unit sits on the ReLU kink.
inline proto::EmbeddingParams random_params(const proto::EmbeddingDims &dims, std::mt19937_64 &rng) {
  std::normal_distribution<double> g(0.0, 0.5);
  auto p = proto::EmbeddingParams::zeros(dims);
  for (auto *v : {&p.w1, &p.b1, &p.w2, &p.b2})
    for (double &x : *v) x = g(rng);
  return p;
}

inline proto::Episode random_episode(std::size_t input, std::size_t n_way, std::size_t k,
                                     std::size_t q, std::mt19937_64 &rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  proto::Episode ep;
  for (std::size_t c = 0; c < n_way; ++c) {
    ep.class_ids.push_back("c" + std::to_string(c));
    ep.support.emplace_back(k, proto::Vector(input));
    ep.query.emplace_back(q, proto::Vector(input));
    for (auto &v : ep.support.back())
      for (double &x : v) x = g(rng) + static_cast<double>(c);
    for (auto &v : ep.query.back())
      for (double &x : v) x = g(rng) + static_cast<double>(c);
  }
  return ep;
}

struct GradientCheck {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

/// Central differences of episode_loss_value against the analytic gradient.
/// Relative error is |a - n| / max(|a|, |n|, floor). Central differences at
/// step 1e-5 carry about 1e-10 of round-off, so entries below the floor
/// (b2 gradients are exactly zero) are judged against the floor instead.
inline GradientCheck check_gradient(const proto::EmbeddingParams &params, const proto::Episode &ep,
                                    double step = 1e-5, double floor = 1e-5) {
  const auto analytic = proto::episode_loss(params, ep).gradient.flat();
  auto flat = params.flat();
  GradientCheck out;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double keep = flat[i];
    flat[i] = keep + step;
    const double up = proto::episode_loss_value(proto::EmbeddingParams::from_flat(params.dims, flat), ep);
    flat[i] = keep - step;
    const double down = proto::episode_loss_value(proto::EmbeddingParams::from_flat(params.dims, flat), ep);
    flat[i] = keep;
    const double numeric = (up - down) / (2.0 * step);
    const double err = std::abs(analytic[i] - numeric);
    out.max_abs_error = std::max(out.max_abs_error, err);
    out.max_rel_error = std::max(out.max_rel_error,
                                 err / std::max({std::abs(analytic[i]), std::abs(numeric), floor}));
  }
  return out;
}

/// Direct loops for x -> W2 relu(W1 x + b1) + b2.
inline proto::Vector straight_line_embed(const proto::EmbeddingParams &p, const proto::Vector &x) {
  const auto &d = p.dims;
  proto::Vector h(d.hidden), y(d.embed);
  for (std::size_t j = 0; j < d.hidden; ++j) {
    double a = p.b1[j];
    for (std::size_t i = 0; i < d.input; ++i) a += p.w1[j * d.input + i] * x[i];
    h[j] = a > 0.0 ? a : 0.0;
  }
  for (std::size_t k = 0; k < d.embed; ++k) {
    double a = p.b2[k];
    for (std::size_t j = 0; j < d.hidden; ++j) a += p.w2[k * d.hidden + j] * h[j];
    y[k] = a;
  }
  return y;
}

}  // namespace fsbed::oracle

#endif  // FSBED_TESTS_ORACLES_H_
