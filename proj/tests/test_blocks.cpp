// Copyright (c) 2026 the svkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "svkit/blocks.hpp"
#include "svkit/error.hpp"
#include "svkit/network.hpp"
#include "test_support.hpp"

using namespace svkit;
using namespace svkit::testing;

namespace {

// Scalar reference for squeeze-excite-rescale over the leading axis.
std::vector<double> se_oracle(const std::vector<double>& x, int64_t c, int64_t inner,
                              const std::vector<double>& w1, const std::vector<double>& b1,
                              int64_t hidden, const std::vector<double>& w2,
                              const std::vector<double>& b2) {
  std::vector<double> z(static_cast<size_t>(c), 0.0);
  for (int64_t i = 0; i < c; ++i) {
    for (int64_t j = 0; j < inner; ++j) z[static_cast<size_t>(i)] += x[static_cast<size_t>(i * inner + j)];
    z[static_cast<size_t>(i)] /= static_cast<double>(inner);
  }
  std::vector<double> h(static_cast<size_t>(hidden));
  for (int64_t o = 0; o < hidden; ++o) {
    double acc = b1[static_cast<size_t>(o)];
    for (int64_t i = 0; i < c; ++i) acc += w1[static_cast<size_t>(o * c + i)] * z[static_cast<size_t>(i)];
    h[static_cast<size_t>(o)] = acc > 0.0 ? acc : 0.0;
  }
  std::vector<double> out(x.size());
  for (int64_t i = 0; i < c; ++i) {
    double acc = b2[static_cast<size_t>(i)];
    for (int64_t o = 0; o < hidden; ++o) acc += w2[static_cast<size_t>(i * hidden + o)] * h[static_cast<size_t>(o)];
    const double s = 1.0 / (1.0 + std::exp(-acc));
    for (int64_t j = 0; j < inner; ++j)
      out[static_cast<size_t>(i * inner + j)] = x[static_cast<size_t>(i * inner + j)] * s;
  }
  return out;
}

// Scalar reference of the frequency-wise squeeze (mean over channel and
// time per frequency) followed by the two-layer excitation and rescale.
std::vector<double> fwse_oracle(const std::vector<double>& x, int64_t c, int64_t f, int64_t t,
                                const std::vector<double>& w1, const std::vector<double>& b1,
                                int64_t hidden, const std::vector<double>& w2,
                                const std::vector<double>& b2) {
  std::vector<double> z(static_cast<size_t>(f), 0.0);
  for (int64_t fi = 0; fi < f; ++fi) {
    double acc = 0.0;
    for (int64_t ci = 0; ci < c; ++ci)
      for (int64_t ti = 0; ti < t; ++ti) acc += x[static_cast<size_t>((ci * f + fi) * t + ti)];
    z[static_cast<size_t>(fi)] = acc / static_cast<double>(c * t);
  }
  std::vector<double> h(static_cast<size_t>(hidden));
  for (int64_t o = 0; o < hidden; ++o) {
    double acc = b1[static_cast<size_t>(o)];
    for (int64_t fi = 0; fi < f; ++fi) acc += w1[static_cast<size_t>(o * f + fi)] * z[static_cast<size_t>(fi)];
    h[static_cast<size_t>(o)] = acc > 0.0 ? acc : 0.0;
  }
  std::vector<double> s(static_cast<size_t>(f));
  for (int64_t fi = 0; fi < f; ++fi) {
    double acc = b2[static_cast<size_t>(fi)];
    for (int64_t o = 0; o < hidden; ++o)
      acc += w2[static_cast<size_t>(fi * hidden + o)] * h[static_cast<size_t>(o)];
    s[static_cast<size_t>(fi)] = 1.0 / (1.0 + std::exp(-acc));
  }
  std::vector<double> out(x.size());
  for (int64_t ci = 0; ci < c; ++ci)
    for (int64_t fi = 0; fi < f; ++fi)
      for (int64_t ti = 0; ti < t; ++ti)
        out[static_cast<size_t>((ci * f + fi) * t + ti)] =
            x[static_cast<size_t>((ci * f + fi) * t + ti)] * s[static_cast<size_t>(fi)];
  return out;
}

void zero_params(NamedParams& params, const std::string& substr) {
  for (auto& [name, t] : params)
    if (name.find(substr) != std::string::npos)
      std::fill(t.mutable_values().begin(), t.mutable_values().end(), 0.0);
}

}  // namespace

TEST_CASE("se_block trivial and oracle") {
  Rng rng(3);
  SeBlock se(4, 2, rng);
  NamedParams params;
  se.collect("se", params);

  SUBCASE("zero excitation halves every channel") {
    for (auto& [name, t] : params)
      std::fill(t.mutable_values().begin(), t.mutable_values().end(), 0.0);
    Tensor x = random_tensor({4, 6}, rng);
    Tensor y = se.forward(x);
    for (size_t i = 0; i < x.values().size(); ++i)
      CHECK(y.values()[i] == doctest::Approx(0.5 * x.values()[i]).epsilon(1e-14));
  }

  SUBCASE("squeeze of a constant-per-channel map is those constants") {
    Tensor x = Tensor::zeros({4, 7});
    for (int64_t c = 0; c < 4; ++c)
      for (int64_t t = 0; t < 7; ++t)
        x.mutable_values()[static_cast<size_t>(c * 7 + t)] = 1.0 + c;
    const Tensor z = reduce(x, {1}, Reduce::kMean);
    for (int64_t c = 0; c < 4; ++c)
      CHECK(z.values()[static_cast<size_t>(c)] == doctest::Approx(1.0 + c).epsilon(1e-15));
  }

  SUBCASE("matches the scalar oracle, gates in (0,1)") {
    Tensor x = random_tensor({4, 5}, rng);
    Tensor y = se.forward(x);
    const auto expect =
        se_oracle(x.values(), 4, 5, params[0].second.values(), params[1].second.values(), 2,
                  params[2].second.values(), params[3].second.values());
    CHECK(max_abs_diff(y.values(), expect) < 1e-12);
    Tensor g = se.gates(x);
    for (double s : g.values()) {
      CHECK(s > 0.0);
      CHECK(s < 1.0);
    }
  }
}

TEST_CASE("fwse_block equations and oracle") {
  Rng rng(5);

  SUBCASE("constant input gives constant squeeze vector") {
    FwSeBlock fw(6, 3, rng);
    Tensor x = Tensor::full({4, 6, 10}, 2.5);
    const Tensor z = reduce(x, {0, 2}, Reduce::kMean);
    for (double v : z.values()) CHECK(v == doctest::Approx(2.5).epsilon(1e-15));
  }

  SUBCASE("zero weights give s=0.5 everywhere, output X/2") {
    FwSeBlock fw(6, 3, rng);
    NamedParams params;
    fw.collect("fw", params);
    for (auto& [name, t] : params) {
      if (name == "fw.fc1.bias") {
        for (auto& v : t.mutable_values()) v = 0.37;  // b1 arbitrary
      } else {
        std::fill(t.mutable_values().begin(), t.mutable_values().end(), 0.0);
      }
    }
    Tensor x = random_tensor({4, 6, 10}, rng);
    Tensor y = fw.forward(x);
    for (size_t i = 0; i < x.values().size(); ++i)
      CHECK(y.values()[i] == doctest::Approx(0.5 * x.values()[i]).epsilon(1e-14));
  }

  SUBCASE("C=1,T=1 squeeze is the identity map of the frequency column") {
    Tensor x = Tensor::from({1, 3, 1}, {1.0, 2.0, 3.0});
    const Tensor z = reduce(x, {0, 2}, Reduce::kMean);
    CHECK(z.values() == std::vector<double>{1.0, 2.0, 3.0});
  }

  SUBCASE("random case matches the independent scalar oracle") {
    FwSeBlock fw(6, 3, rng);
    NamedParams params;
    fw.collect("fw", params);
    Tensor x = random_tensor({4, 6, 10}, rng);
    Tensor y = fw.forward(x);
    const auto expect =
        fwse_oracle(x.values(), 4, 6, 10, params[0].second.values(), params[1].second.values(), 3,
                    params[2].second.values(), params[3].second.values());
    CHECK(max_abs_diff(y.values(), expect) < 1e-12);
  }

  SUBCASE("oracle equivalence across 100 random shapes") {
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const int64_t c = rng.uniform_int(1, 6);
      const int64_t f = rng.uniform_int(1, 8);
      const int64_t t = rng.uniform_int(1, 9);
      const int64_t hidden = rng.uniform_int(1, 5);
      FwSeBlock fw(f, hidden, rng);
      NamedParams params;
      fw.collect("fw", params);
      Tensor x = random_tensor({c, f, t}, rng, -2.0, 2.0);
      Tensor y = fw.forward(x);
      const auto expect = fwse_oracle(x.values(), c, f, t, params[0].second.values(),
                                      params[1].second.values(), hidden,
                                      params[2].second.values(), params[3].second.values());
      worst = std::max(worst, max_abs_diff(y.values(), expect));
      Tensor g = fw.gates(x);
      for (double s : g.values()) {
        CHECK(s > 0.0);
        CHECK(s < 1.0);
      }
    }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("positional encoding add and gradient") {
  SUBCASE("zero encoding is the identity") {
    FreqPositionalEncoding pe(5);
    Rng rng(7);
    Tensor x = random_tensor({3, 5, 4}, rng);
    CHECK(max_abs_diff(pe.apply(x).values(), x.values()) == 0.0);
  }

  SUBCASE("zero input exposes the encoding per frequency row") {
    Tensor x = Tensor::zeros({2, 2, 3});
    Tensor p = Tensor::from({2}, {1.0, -1.0});
    Tensor y = add_freq_bias(x, p);
    for (int64_t c = 0; c < 2; ++c)
      for (int64_t t = 0; t < 3; ++t) {
        CHECK(y.at({c, 0, t}) == 1.0);
        CHECK(y.at({c, 1, t}) == -1.0);
      }
  }

  SUBCASE("sum-loss gradient of p is C*T per entry") {
    Tensor x = Tensor::zeros({3, 4, 5});
    Tensor p = Tensor::param({4}, {0.1, 0.2, -0.1, 0.0});
    backward(reduce_all(add_freq_bias(x, p), Reduce::kSum));
    for (double g : p.grad()) CHECK(g == doctest::Approx(15.0).epsilon(1e-14));
  }

  SUBCASE("finite differences") {
    Rng rng(9);
    Tensor x = random_param({2, 4, 3}, rng);
    Tensor p = random_param({4}, rng);
    auto loss = [&] { return reduce_all(pointwise(add_freq_bias(x, p), Pointwise::kTanh), Reduce::kSum); };
    CHECK(gradient_check({x, p}, loss) < 1e-4);
  }

  CHECK_THROWS_AS(add_freq_bias(Tensor::zeros({2, 3, 4}), Tensor::zeros({5})),
                  std::invalid_argument);
}

TEST_CASE("conv stem shape contract") {
  Rng rng(11);
  StemConfig cfg;  // C=128, k=3
  ConvStem stem(cfg, rng);
  Tensor x = random_tensor({1, 80, 6}, rng);
  Tensor y = stem.forward(x, false);
  CHECK(y.shape() == Shape{2560, 6});  // 128 * 80/4, time preserved

  CHECK_THROWS_AS(stem.forward(random_tensor({1, 30, 6}, rng), false), ConfigError);
}

TEST_CASE("conv stem zero input zero biases gives zero output") {
  Rng rng(13);
  StemConfig cfg;
  cfg.channels = 4;
  ConvStem stem(cfg, rng);
  // biases live in the batch norms; beta starts at zero already
  Tensor x = Tensor::zeros({1, 8, 5});
  Tensor y = stem.forward(x, true);
  for (double v : y.values()) CHECK(v == 0.0);
  Tensor y2 = stem.forward(x, false);
  for (double v : y2.values()) CHECK(v == 0.0);
}

TEST_CASE("conv stem gradient check") {
  Rng rng(17);
  StemConfig cfg;
  cfg.channels = 4;
  ConvStem stem(cfg, rng);
  NamedParams params;
  NamedBuffers buffers;
  stem.collect("stem", params, buffers);
  Tensor x = random_param({1, 16, 8}, rng);
  std::vector<Tensor> tracked = {x};
  for (auto& [name, t] : params) tracked.push_back(t);
  auto loss = [&] { return reduce_all(pointwise(stem.forward(x, true), Pointwise::kTanh), Reduce::kSum); };
  CHECK(gradient_check(tracked, loss) < 1e-4);
}

TEST_CASE("res2 dilated block") {
  Rng rng(19);

  SUBCASE("identity 1x1 convs with zero inner convs pass the skip through") {
    Res2DilatedBlock block(8, 2, 2, false, 2, rng);
    NamedParams params;
    NamedBuffers buffers;
    block.collect("b", params, buffers);
    for (auto& [name, t] : params) {
      auto& v = t.mutable_values();
      if (name == "b.conv_in" || name == "b.conv_out") {
        std::fill(v.begin(), v.end(), 0.0);
        for (int64_t c = 0; c < 8; ++c) v[static_cast<size_t>(c * 8 + c)] = 1.0;  // k=1 identity
      } else if (name.find("group") != std::string::npos) {
        std::fill(v.begin(), v.end(), 0.0);
      }
    }
    Tensor x = random_tensor({8, 10}, rng, 0.1, 1.0);
    Tensor y = block.forward(x, true);
    CHECK(max_abs_diff(y.values(), x.values()) < 1e-14);
  }

  SUBCASE("scale=1 equals the direct conv composition") {
    Res2DilatedBlock block(6, 1, 3, false, 2, rng);
    NamedParams params;
    NamedBuffers buffers;
    block.collect("b", params, buffers);
    Tensor conv_in, conv_out, group0, bn_in_g, bn_in_b, bn_out_g, bn_out_b;
    for (auto& [name, t] : params) {
      if (name == "b.conv_in") conv_in = t;
      if (name == "b.conv_out") conv_out = t;
      if (name == "b.group0") group0 = t;
      if (name == "b.bn_in.gamma") bn_in_g = t;
      if (name == "b.bn_in.beta") bn_in_b = t;
      if (name == "b.bn_out.gamma") bn_out_g = t;
      if (name == "b.bn_out.beta") bn_out_b = t;
    }
    Tensor x = random_tensor({6, 12}, rng);
    Tensor y = block.forward(x, false);  // eval mode: running stats are fresh

    std::vector<double> rm(6, 0.0), rv(6, 1.0);
    Tensor u = batch_norm(pointwise(conv1d_dilated(x, conv_in, 1), Pointwise::kRelu), bn_in_g,
                          bn_in_b, &rm, &rv, 0.1, 1e-5, false);
    Tensor mid = conv1d_dilated(u, group0, 3);
    std::vector<double> rm2(6, 0.0), rv2(6, 1.0);
    Tensor v = batch_norm(pointwise(conv1d_dilated(mid, conv_out, 1), Pointwise::kRelu), bn_out_g,
                          bn_out_b, &rm2, &rv2, 0.1, 1e-5, false);
    Tensor expect = add(x, v);
    CHECK(max_abs_diff(y.values(), expect.values()) < 1e-12);
  }

  SUBCASE("gradient check at C=8 scale=2") {
    Res2DilatedBlock block(8, 2, 2, true, 2, rng);
    NamedParams params;
    NamedBuffers buffers;
    block.collect("b", params, buffers);
    Tensor x = random_param({8, 6}, rng);
    std::vector<Tensor> tracked = {x};
    for (auto& [name, t] : params) tracked.push_back(t);
    auto loss = [&] { return reduce_all(pointwise(block.forward(x, true), Pointwise::kTanh), Reduce::kSum); };
    CHECK(gradient_check(tracked, loss) < 1e-4);
  }

  CHECK_THROWS_AS(Res2DilatedBlock(7, 2, 2, false, 2, rng), ConfigError);
}

TEST_CASE("attentive stats pooling") {
  Rng rng(23);

  SUBCASE("constant attention logits reduce to plain mean/std") {
    AttentiveStatsPool pool(3, 4, rng);
    NamedParams params;
    pool.collect("p", params);
    // force w2/b2 to zero: logits constant, softmax uniform
    for (auto& [name, t] : params)
      if (name == "p.w2" || name == "p.b2")
        std::fill(t.mutable_values().begin(), t.mutable_values().end(), 0.0);
    Tensor h = random_tensor({3, 9}, rng);
    Tensor out = pool.forward(h);
    const Tensor mu = reduce(h, {1}, Reduce::kMean);
    const Tensor sd = reduce(h, {1}, Reduce::kStd);
    for (int64_t c = 0; c < 3; ++c) {
      CHECK(out.values()[static_cast<size_t>(c)] ==
            doctest::Approx(mu.values()[static_cast<size_t>(c)]).epsilon(1e-12));
      CHECK(out.values()[static_cast<size_t>(3 + c)] ==
            doctest::Approx(sd.values()[static_cast<size_t>(c)]).epsilon(1e-6));
    }
  }

  SUBCASE("constant input over time floors the std at sqrt(eps)") {
    AttentiveStatsPool pool(2, 3, rng);
    Tensor h = Tensor::zeros({2, 6});
    for (int64_t t = 0; t < 6; ++t) {
      h.mutable_values()[static_cast<size_t>(t)] = 1.5;
      h.mutable_values()[static_cast<size_t>(6 + t)] = -0.5;
    }
    Tensor out = pool.forward(h);
    CHECK(out.values()[2] == doctest::Approx(1e-4).epsilon(1e-6));
    CHECK(out.values()[3] == doctest::Approx(1e-4).epsilon(1e-6));
  }

  SUBCASE("random case matches the weighted-moments oracle") {
    AttentiveStatsPool pool(4, 5, rng);
    NamedParams params;
    pool.collect("p", params);
    Tensor h = random_tensor({4, 7}, rng);
    Tensor out = pool.forward(h);

    // scalar oracle of the attention weights and weighted moments
    const auto& w1 = params[0].second.values();
    const auto& b1 = params[1].second.values();
    const auto& w2 = params[2].second.values();
    const auto& b2 = params[3].second.values();
    const int64_t c_n = 4, t_n = 7, hid = 5;
    std::vector<double> mu(c_n, 0.0), sd(c_n, 0.0);
    for (int64_t c = 0; c < c_n; ++c) {
      for (int64_t t = 0; t < t_n; ++t) mu[static_cast<size_t>(c)] += h.at({c, t});
      mu[static_cast<size_t>(c)] /= t_n;
    }
    for (int64_t c = 0; c < c_n; ++c) {
      double acc = 0.0;
      for (int64_t t = 0; t < t_n; ++t) {
        const double d = h.at({c, t}) - mu[static_cast<size_t>(c)];
        acc += d * d;
      }
      sd[static_cast<size_t>(c)] = std::sqrt(acc / t_n + 1e-8);
    }
    std::vector<double> logits(static_cast<size_t>(c_n * t_n));
    for (int64_t t = 0; t < t_n; ++t) {
      std::vector<double> hidv(static_cast<size_t>(hid));
      for (int64_t o = 0; o < hid; ++o) {
        double acc = b1[static_cast<size_t>(o)];
        for (int64_t c = 0; c < c_n; ++c) {
          acc += w1[static_cast<size_t>((o * 3 * c_n + c))] * h.at({c, t});
          acc += w1[static_cast<size_t>((o * 3 * c_n + c_n + c))] * mu[static_cast<size_t>(c)];
          acc += w1[static_cast<size_t>((o * 3 * c_n + 2 * c_n + c))] * sd[static_cast<size_t>(c)];
        }
        hidv[static_cast<size_t>(o)] = std::tanh(acc);
      }
      for (int64_t c = 0; c < c_n; ++c) {
        double acc = b2[static_cast<size_t>(c)];
        for (int64_t o = 0; o < hid; ++o) acc += w2[static_cast<size_t>(c * hid + o)] * hidv[static_cast<size_t>(o)];
        logits[static_cast<size_t>(c * t_n + t)] = acc;
      }
    }
    for (int64_t c = 0; c < c_n; ++c) {
      double mx = -1e300, z = 0.0;
      for (int64_t t = 0; t < t_n; ++t) mx = std::max(mx, logits[static_cast<size_t>(c * t_n + t)]);
      std::vector<double> alpha(static_cast<size_t>(t_n));
      for (int64_t t = 0; t < t_n; ++t) {
        alpha[static_cast<size_t>(t)] = std::exp(logits[static_cast<size_t>(c * t_n + t)] - mx);
        z += alpha[static_cast<size_t>(t)];
      }
      double wm = 0.0, wsq = 0.0;
      for (int64_t t = 0; t < t_n; ++t) {
        const double a = alpha[static_cast<size_t>(t)] / z;
        wm += a * h.at({c, t});
        wsq += a * h.at({c, t}) * h.at({c, t});
      }
      double var = wsq - wm * wm;
      if (var < 0.0) var = 0.0;
      CHECK(out.values()[static_cast<size_t>(c)] == doctest::Approx(wm).epsilon(1e-12));
      CHECK(out.values()[static_cast<size_t>(c_n + c)] ==
            doctest::Approx(std::sqrt(var + 1e-8)).epsilon(1e-12));
    }
  }

  SUBCASE("T=1 is rejected") {
    AttentiveStatsPool pool(2, 3, rng);
    CHECK_THROWS_AS(pool.forward(Tensor::zeros({2, 1})), std::invalid_argument);
  }

  SUBCASE("gradient check") {
    AttentiveStatsPool pool(3, 4, rng);
    NamedParams params;
    pool.collect("p", params);
    Tensor h = random_param({3, 6}, rng);
    std::vector<Tensor> tracked = {h};
    for (auto& [name, t] : params) tracked.push_back(t);
    auto loss = [&] { return reduce_all(pointwise(pool.forward(h), Pointwise::kTanh), Reduce::kSum); };
    CHECK(gradient_check(tracked, loss) < 1e-4);
  }
}

TEST_CASE("network forward contracts") {
  Rng rng(31);
  const Variant variants[] = {Variant::kEcapaTdnn, Variant::kEcapaCnnTdnn, Variant::kSeResNet,
                              Variant::kFwseResNetPosenc};
  for (Variant v : variants) {
    CAPTURE(variant_name(v));
    NetworkConfig cfg = NetworkConfig::toy(v);
    auto net = build_network(cfg, 7);
    Tensor feats = random_tensor({cfg.n_mels, 24}, rng);
    Tensor e1 = net->embed(feats, false);
    Tensor e2 = net->embed(feats, false);
    CHECK(e1.shape() == Shape{cfg.emb_dim});
    CHECK(e1.values() == e2.values());  // determinism
    CHECK(net->param_count() < 5000000);
  }
}

TEST_CASE("zero positional encodings match the encoding-free network") {
  NetworkConfig with_pe = NetworkConfig::toy(Variant::kFwseResNetPosenc);
  NetworkConfig without_pe = with_pe;
  without_pe.use_posenc = false;

  auto a = build_network(with_pe, 99);
  auto b = build_network(without_pe, 1234);
  copy_matching_state(*b, *a);  // shared weights; b lacks only the encodings

  Rng rng(37);
  Tensor feats = random_tensor({with_pe.n_mels, 20}, rng);
  Tensor ea = a->embed(feats, false);
  Tensor eb = b->embed(feats, false);
  CHECK(ea.values() == eb.values());  // bit-identical with p = 0
}

TEST_CASE("frequency shift sensitivity") {
  // with nonzero p, a one-bin shift moves the posenc network's embedding
  // further than the conv-only stem does under global mean pooling: the
  // stem keeps local frequency translation roughly invisible, the encodings
  // make absolute position visible
  auto cos_dist = [](const Tensor& x, const Tensor& y) {
    double dot = 0.0, nx = 0.0, ny = 0.0;
    for (size_t i = 0; i < x.values().size(); ++i) {
      dot += x.values()[i] * y.values()[i];
      nx += x.values()[i] * x.values()[i];
      ny += y.values()[i] * y.values()[i];
    }
    return 1.0 - dot / std::sqrt(nx * ny);
  };

  for (uint64_t seed : {41u, 42u, 43u}) {
    CAPTURE(seed);
    NetworkConfig cfg = NetworkConfig::toy(Variant::kFwseResNetPosenc);
    Rng wrng(seed);
    ResNetNetwork posenc_net(cfg, wrng);
    for (auto& [name, t] : posenc_net.params())
      if (name.find("posenc") != std::string::npos)
        for (auto& v : t.mutable_values()) v = wrng.uniform(-0.5, 0.5);

    StemConfig scfg;
    scfg.channels = 16;
    Rng srng(seed + 100);
    ConvStem stem(scfg, srng);

    Rng rng(seed + 7);
    Tensor feats = random_tensor({cfg.n_mels, 24}, rng);
    std::vector<double> shifted(feats.values().size());
    const int64_t t_n = feats.dim(1);
    for (int64_t f = 0; f < cfg.n_mels; ++f)
      for (int64_t t = 0; t < t_n; ++t)
        shifted[static_cast<size_t>(f * t_n + t)] = feats.at({std::max<int64_t>(f - 1, 0), t});
    Tensor feats_up = Tensor::from(feats.shape(), shifted);

    const double d_posenc =
        cos_dist(posenc_net.embed(feats, false), posenc_net.embed(feats_up, false));
    // stem output reshaped back to (C, F/4, T), pooled over frequency and time
    auto stem_pool = [&](const Tensor& f2) {
      Tensor y = stem.forward(reshape(f2, {1, cfg.n_mels, t_n}), false);
      Tensor cube = reshape(y, {scfg.channels, cfg.n_mels / 4, t_n});
      return reduce(cube, {1, 2}, Reduce::kMean);
    };
    const double d_stem = cos_dist(stem_pool(feats), stem_pool(feats_up));
    CHECK(d_posenc > 0.0);
    CHECK(d_stem < d_posenc);
  }
}

TEST_CASE("network gradient flows through every parameter group") {
  // spot check on the smallest resnet: gradients reach posenc, fwse and stem
  NetworkConfig cfg = NetworkConfig::toy(Variant::kFwseResNetPosenc);
  cfg.n_mels = 8;
  cfg.resnet_widths = {4, 8};
  cfg.resnet_blocks = {1, 1};
  cfg.att_hidden = 4;
  cfg.emb_dim = 6;
  auto net = build_network(cfg, 5);
  Rng rng(47);
  Tensor feats = random_tensor({8, 6}, rng);
  Tensor loss = reduce_all(net->embed(feats, true), Reduce::kSum);
  backward(loss);
  int64_t nonzero_groups = 0;
  for (auto& [name, t] : net->params()) {
    double s = 0.0;
    for (double g : t.grad()) s += std::abs(g);
    nonzero_groups += s > 0.0;
  }
  CHECK(nonzero_groups > static_cast<int64_t>(net->params().size() / 2));
}
