#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "gdi/policy.hpp"
#include "gdi/rng.hpp"

using namespace gdi;

TEST_CASE("tempered softmax") {
  SUBCASE("symmetric logits give uniform") {
    auto p = tempered_softmax({0.0, 0.0, 0.0}, 1.0);
    for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("two-logit value") {
    auto p = tempered_softmax({1.0, 0.0}, 1.0);
    const double e = std::exp(1.0);
    CHECK(p[0] == doctest::Approx(e / (1.0 + e)).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(1.0 / (1.0 + e)).epsilon(1e-12));
    CHECK(p[0] == doctest::Approx(0.73106).epsilon(1e-4));
    CHECK(p[1] == doctest::Approx(0.26894).epsilon(1e-4));
  }
  SUBCASE("infinite temperature is exactly uniform") {
    auto p = tempered_softmax({5.0, 1.0}, kTauInf);
    CHECK(p[0] == 0.5);
    CHECK(p[1] == 0.5);
  }
  SUBCASE("bad temperature throws") {
    CHECK_THROWS_AS(tempered_softmax({1.0, 0.0}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(tempered_softmax({1.0, 0.0}, -2.0), std::invalid_argument);
  }
  SUBCASE("max-subtraction keeps huge logits finite") {
    auto p = tempered_softmax({1000.0, 999.0}, 1.0);
    CHECK(std::isfinite(p[0]));
    CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p[0] == doctest::Approx(std::exp(1.0) / (1.0 + std::exp(1.0))).epsilon(1e-12));
  }
  SUBCASE("inverse temperature clamps at 50") {
    auto sharp = tempered_softmax({1.0, 0.0}, 1e-6);
    auto capped = tempered_softmax({1.0, 0.0}, 1.0 / 50.0);
    CHECK(sharp[0] == doctest::Approx(capped[0]).epsilon(1e-15));
    CHECK(sharp[1] == doctest::Approx(capped[1]).epsilon(1e-15));
  }
  SUBCASE("clamped limit still ranks like the logits") {
    auto rng = make_stream(17, Role::harness);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<double> logits(4);
      for (double& v : logits) v = unit(rng);
      int best = 0;
      for (int i = 1; i < 4; ++i)
        if (logits[i] > logits[best]) best = i;
      double gap = 1e9;
      for (int i = 0; i < 4; ++i)
        if (i != best) gap = std::min(gap, logits[best] - logits[i]);
      if (gap <= 1e-9) continue;
      auto p = tempered_softmax(logits, 0.02);
      int pbest = 0;
      for (int i = 1; i < 4; ++i)
        if (p[i] > p[pbest]) pbest = i;
      CHECK(pbest == best);
    }
  }
}

TEST_CASE("dueling head decomposition") {
  PolicyParams params = make_params(3, 2, true);

  SUBCASE("constant advantages collapse to the value") {
    params.h1.A = {2.0, 2.0, 0.0, 0.0, -1.0, -1.0};
    params.h1.v = {0.5, 1.5, -4.0};
    for (int s = 0; s < 3; ++s) {
      DuelingOut out = dueling_q(params, 0, s);
      CHECK(out.Abar[0] == doctest::Approx(0.0));
      CHECK(out.Abar[1] == doctest::Approx(0.0));
      CHECK(out.Q[0] == doctest::Approx(params.h1.v[s]));
      CHECK(out.Q[1] == doctest::Approx(params.h1.v[s]));
    }
  }
  SUBCASE("centering subtracts the reference-policy mean") {
    params.h1.A = {1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    DuelingOut out = dueling_q(params, 0, 0);
    const double e = std::exp(1.0);
    double mean = e / (1.0 + e);  // softmax(A) at unit temperature weights A=[1,0]
    CHECK(out.Abar[0] == doctest::Approx(1.0 - mean).epsilon(1e-12));
    CHECK(out.Abar[1] == doctest::Approx(-mean).epsilon(1e-12));
    CHECK(out.Q[0] == doctest::Approx(out.Abar[0] + out.V));
  }
  SUBCASE("reference-policy expectation of the centered advantage is zero") {
    auto rng = make_stream(23, Role::harness);
    std::normal_distribution<double> gauss(0.0, 1.5);
    for (int trial = 0; trial < 200; ++trial) {
      PolicyParams p = make_params(1, 5, true);
      for (double& a : p.h1.A) a = gauss(rng);
      DuelingOut out = dueling_q(p, 0, 0);
      std::vector<double> ref = tempered_softmax(out.A, 1.0);
      double dot = 0.0;
      for (int a = 0; a < 5; ++a) dot += ref[a] * out.Abar[a];
      CHECK(std::abs(dot) < 1e-12);
    }
  }
}

TEST_CASE("mixture policy") {
  PolicyParams params = make_params(1, 2, true);
  params.h1.A = {1.0, 0.0};

  SUBCASE("degenerate mixtures reduce to one head") {
    IndexPoint lam{0.7, 2.0, 1.0};
    auto mix = mixture_policy(params, lam, 0);
    auto head = tempered_softmax({1.0, 0.0}, 0.7);
    CHECK(mix[0] == doctest::Approx(head[0]).epsilon(1e-15));

    IndexPoint lam0{0.7, 2.0, 0.0};
    auto mix0 = mixture_policy(params, lam0, 0);
    auto head2 = tempered_softmax({1.0, 0.0}, 2.0);
    CHECK(mix0[0] == doctest::Approx(head2[0]).epsilon(1e-15));
  }
  SUBCASE("half-half blend of two temperatures") {
    IndexPoint lam{1.0, 0.5, 0.5};
    auto mix = mixture_policy(params, lam, 0);
    double p1 = std::exp(1.0) / (1.0 + std::exp(1.0));
    double p2 = std::exp(2.0) / (1.0 + std::exp(2.0));
    CHECK(mix[0] == doctest::Approx(0.5 * p1 + 0.5 * p2).epsilon(1e-12));
    CHECK(mix[0] == doctest::Approx(0.80594).epsilon(1e-4));
    CHECK(mix[1] == doctest::Approx(0.19406).epsilon(1e-4));
  }
  SUBCASE("valid distribution across the whole search box") {
    auto rng = make_stream(31, Role::harness);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 2.0);
    for (int trial = 0; trial < 10000; ++trial) {
      PolicyParams p = make_params(2, 3, trial % 2 == 0);
      for (double& a : p.h1.A) a = gauss(rng);
      if (!p.isomorphic)
        for (double& a : p.h2.A) a = gauss(rng);
      SearchCoordinates x{unit(rng) * 50.0, unit(rng) * 50.0, unit(rng)};
      IndexPoint lam = search_to_index(x);
      int s = trial % 2;
      auto mix = mixture_policy(p, lam, s);
      double sum = 0.0;
      for (double v : mix) {
        CHECK(v >= 0.0);
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
  SUBCASE("isomorphic equal temperatures ignore the mixing weight") {
    IndexPoint a{0.8, 0.8, 0.1};
    IndexPoint b{0.8, 0.8, 0.9};
    auto pa = mixture_policy(params, a, 0);
    auto pb = mixture_policy(params, b, 0);
    CHECK(pa[0] == doctest::Approx(pb[0]).epsilon(1e-15));
  }
}

TEST_CASE("index and search coordinates are mutual inverses") {
  SUBCASE("pinned points") {
    SearchCoordinates x = index_to_search({1.0, kTauInf, 0.3});
    CHECK(x.x1 == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(x.x1 == doctest::Approx(0.693147).epsilon(1e-5));
    CHECK(x.x2 == 0.0);
    CHECK(x.x3 == doctest::Approx(0.3));

    IndexPoint lam = search_to_index({std::log(2.0), 0.0, 0.3});
    CHECK(lam.tau1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::isinf(lam.tau2));
    CHECK(lam.epsilon == doctest::Approx(0.3));
  }
  SUBCASE("round trip over the box interior") {
    auto rng = make_stream(37, Role::harness);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
      SearchCoordinates x{0.01 + unit(rng) * 3.9, 0.01 + unit(rng) * 3.9, unit(rng)};
      IndexPoint lam = search_to_index(x);
      SearchCoordinates y = index_to_search(lam);
      CHECK(std::abs(y.x1 - x.x1) < 1e-12);
      CHECK(std::abs(y.x2 - x.x2) < 1e-12);
      CHECK(std::abs(y.x3 - x.x3) < 1e-12);
    }
  }
  SUBCASE("out-of-box coordinates clamp instead of throwing") {
    IndexPoint lam = search_to_index({-3.0, 80.0, 1.7});
    CHECK(std::isinf(lam.tau1));
    CHECK(lam.epsilon == 1.0);
    CHECK(lam.tau2 > 0.0);
    IndexPoint lo = search_to_index({0.0, 0.0, -0.2});
    CHECK(lo.epsilon == 0.0);
  }
}

TEST_CASE("snapshot store") {
  SnapshotStore store;
  CHECK(store.empty());
  CHECK_THROWS(store.fetch());

  PolicyParams p = make_params(2, 2, true);
  p.h1.A[0] = 1.25;
  store.publish(p);
  auto snap = store.fetch();
  CHECK(snap->h1.A[0] == doctest::Approx(1.25));

  PolicyParams q = p;
  q.version = 1;
  q.h1.A[0] = -7.0;
  store.publish(q);
  CHECK(store.fetch()->h1.A[0] == doctest::Approx(-7.0));

  PolicyParams stale = p;  // version 0 again
  CHECK_THROWS_AS(store.publish(stale), std::logic_error);
}
