#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "batches.hpp"
#include "minedispatch/errors.hpp"
#include "minedispatch/policy_net.hpp"

using namespace minedispatch;

namespace {

PolicyNet small_net(std::uint64_t seed = 1) { return PolicyNet({7, 4, 3}, seed); }

void zero_policy_head(PolicyNet& net) {
  const auto& s = net.shape();
  const Eigen::Index start = Eigen::Index{s.hidden} * s.obs_dim + s.hidden +
                             Eigen::Index{s.hidden} * s.hidden + s.hidden;
  net.parameters().segment(start, Eigen::Index{s.actions} * s.hidden + s.actions).setZero();
}

}  // namespace

TEST_CASE("analytic gradients match finite differences per term") {
  std::mt19937_64 rng(99);
  for (auto term : {testkit::Term::kClip, testkit::Term::kValue, testkit::Term::kEntropy,
                    testkit::Term::kGuide}) {
    PolicyNet net = small_net();
    testkit::scramble(net, rng);
    const auto batch = testkit::random_batch(net, 3, rng);
    CHECK(testkit::gradient_check(net, batch, testkit::only(term)) <= 1.0);
  }
  PolicyNet net = small_net();
  testkit::scramble(net, rng);
  const auto batch = testkit::random_batch(net, 5, rng);
  LossSpec mixed;
  mixed.guide_coef = 0.3;
  CHECK(testkit::gradient_check(net, batch, mixed) <= 1.0);
}

TEST_CASE("forced and uniform distributions") {
  PolicyNet net = small_net();
  std::vector<double> obs(7, 0.3);
  const ActionMask one{0, 1, 0};
  const auto forced = net.forward(obs, one);
  CHECK(forced.probs[1] == 1.0);
  CHECK(forced.log_probs[1] == 0.0);
  CHECK(forced.entropy == 0.0);
  CHECK(forced.probs[0] == 0.0);
  CHECK(std::isinf(forced.log_probs[0]));

  zero_policy_head(net);
  const auto u = net.forward(obs, ActionMask{1, 1, 1});
  for (double p : u.probs) CHECK(p == doctest::Approx(1.0 / 3.0));
  CHECK(u.entropy == doctest::Approx(std::log(3.0)));
}

TEST_CASE("masked probabilities sum to one and respect entropy bounds") {
  std::mt19937_64 rng(5);
  PolicyNet net = small_net(3);
  testkit::scramble(net, rng, 1.0);
  const auto b = testkit::random_batch(net, 200, rng);
  for (std::size_t i = 0; i < b.obs.size(); ++i) {
    const auto out = net.forward(b.obs[i], b.masks[i]);
    double sum = 0.0;
    int legal = 0;
    for (std::size_t a = 0; a < out.probs.size(); ++a) {
      if (b.masks[i][a]) {
        sum += out.probs[a];
        ++legal;
      } else {
        CHECK(out.probs[a] == 0.0);
      }
    }
    CHECK(std::abs(sum - 1.0) < 1e-6);
    CHECK(out.entropy >= 0.0);
    CHECK(out.entropy <= std::log(double(legal)) + 1e-12);
  }
}

TEST_CASE("illegal actions get no policy gradient") {
  std::mt19937_64 rng(8);
  PolicyNet net = small_net();
  testkit::scramble(net, rng);
  auto b = testkit::random_batch(net, 4, rng);
  for (auto& m : b.masks) m = {1, 1, 0};
  for (auto& s : b.samples) {
    s.action = s.action % 2;
    s.teacher_action = s.teacher_action % 2;
  }
  Eigen::VectorXd grad;
  LossSpec spec;
  spec.guide_coef = 1.0;
  net.gradients(b.samples, spec, grad);
  const auto& s = net.shape();
  const Eigen::Index wp = Eigen::Index{s.hidden} * s.obs_dim + s.hidden +
                          Eigen::Index{s.hidden} * s.hidden + s.hidden;
  // Row 2 of the column-major policy weight matrix and its bias.
  for (int h = 0; h < s.hidden; ++h) CHECK(grad[wp + h * s.actions + 2] == 0.0);
  CHECK(grad[wp + Eigen::Index{s.actions} * s.hidden + 2] == 0.0);
}

TEST_CASE("shape errors") {
  PolicyNet net = small_net();
  std::vector<double> obs(6, 0.0);
  CHECK_THROWS_AS(net.forward(obs, ActionMask{1, 1, 1}), ShapeMismatch);
  obs.resize(7);
  CHECK_THROWS_AS(net.forward(obs, ActionMask{1, 1}), ShapeMismatch);
  CHECK_THROWS_AS(net.forward(obs, ActionMask{0, 0, 0}), ShapeMismatch);
}

TEST_CASE("sampling") {
  PolicyNet net = small_net();
  std::mt19937_64 prng(2);
  testkit::scramble(net, prng, 0.8);
  std::vector<double> obs(7);
  for (double& x : obs) x = std::normal_distribution<double>(0, 1)(prng);
  const ActionMask m{1, 0, 1};
  const auto out = net.forward(obs, m);

  std::mt19937_64 rng(123);
  int counts[3] = {0, 0, 0};
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto [a, lp] = net.sample(obs, m, rng);
    counts[a]++;
    if (i < 10) CHECK(lp == out.log_probs[a]);
  }
  CHECK(counts[1] == 0);
  CHECK(std::abs(counts[0] / double(n) - out.probs[0]) <= 0.01);
  CHECK(std::abs(counts[2] / double(n) - out.probs[2]) <= 0.01);

  std::mt19937_64 r1(7), r2(7);
  for (int i = 0; i < 50; ++i) CHECK(net.sample(obs, m, r1) == net.sample(obs, m, r2));
  for (int i = 0; i < 50; ++i) CHECK(net.sample(obs, ActionMask{0, 0, 1}, r1).first == 2);
}

TEST_CASE("greedy picks the most probable legal action") {
  PolicyNet net = small_net();
  std::mt19937_64 rng(4);
  testkit::scramble(net, rng, 1.0);
  std::vector<double> obs(7, 0.5);
  const ActionMask m{1, 1, 1};
  const auto out = net.forward(obs, m);
  const int best = static_cast<int>(std::max_element(out.probs.begin(), out.probs.end()) -
                                    out.probs.begin());
  CHECK(net.greedy(obs, m) == best);
  zero_policy_head(net);
  CHECK(net.greedy(obs, m) == 0);
}

TEST_CASE("zero loss weights give a zero gradient") {
  std::mt19937_64 rng(6);
  PolicyNet net = small_net();
  testkit::scramble(net, rng);
  auto b = testkit::random_batch(net, 4, rng);
  for (auto& s : b.samples) {
    s.advantage = 0.0;
    s.target_return = net.forward(*s.obs, *s.mask).value;
  }
  LossSpec spec;
  spec.entropy_coef = 0.0;
  spec.guide_coef = 0.0;
  Eigen::VectorXd grad;
  net.gradients(b.samples, spec, grad);
  CHECK(grad.norm() < 1e-12);
}

TEST_CASE("one guidance step raises the teacher likelihood") {
  std::mt19937_64 rng(10);
  PolicyParams p = make_policy({7, 4, 3}, 2);
  const auto b = testkit::random_batch(p.net, 6, rng);
  const auto spec = testkit::only(testkit::Term::kGuide);
  const double before = p.net.loss(b.samples, spec).total;
  Eigen::VectorXd grad;
  p.net.gradients(b.samples, spec, grad);
  p.adam.apply(p.net.parameters(), grad, 1e-2);
  CHECK(p.net.loss(b.samples, spec).total < before);
}

TEST_CASE("adam") {
  PolicyParams p = make_policy({7, 4, 3}, 2);
  const Eigen::VectorXd start = p.net.parameters();
  p.adam.apply(p.net.parameters(), Eigen::VectorXd::Zero(start.size()), 1e-3);
  CHECK(p.adam.step == 1);
  CHECK(p.net.parameters() == start);

  PolicyParams q = make_policy({7, 4, 3}, 2);
  PolicyParams r = make_policy({7, 4, 3}, 2);
  const Eigen::VectorXd g = Eigen::VectorXd::LinSpaced(start.size(), -1.0, 1.0);
  q.adam.apply(q.net.parameters(), g, 1e-3);
  r.adam.apply(r.net.parameters(), g, 1e-3);
  CHECK(q.net.parameters() == r.net.parameters());
  // First bias-corrected step moves each weight by lr against the gradient sign.
  CHECK(q.net.parameters()[0] - start[0] == doctest::Approx(1e-3).epsilon(1e-4));
}

TEST_CASE("gradient norm clipping") {
  Eigen::VectorXd g(2);
  g << 3.0, 4.0;
  CHECK(clip_grad_norm(g, 0.5) == doctest::Approx(5.0));
  CHECK(g.norm() == doctest::Approx(0.5));
  g << 0.1, 0.0;
  clip_grad_norm(g, 0.5);
  CHECK(g[0] == 0.1);
}

TEST_CASE("policy json round trip") {
  PolicyParams p = make_policy({7, 4, 3}, 9);
  Eigen::VectorXd g = Eigen::VectorXd::Constant(p.net.num_parameters(), 0.1);
  p.adam.apply(p.net.parameters(), g, 1e-3);
  const PolicyParams back = policy_from_json(nlohmann::json::parse(policy_to_json(p).dump()));
  CHECK(back.net.shape() == p.net.shape());
  CHECK(back.net.parameters() == p.net.parameters());
  CHECK(back.adam.m == p.adam.m);
  CHECK(back.adam.v == p.adam.v);
  CHECK(back.adam.step == 1);
}

TEST_CASE("initialisation is seeded") {
  CHECK(PolicyNet({7, 4, 3}, 1).parameters() == PolicyNet({7, 4, 3}, 1).parameters());
  CHECK(PolicyNet({7, 4, 3}, 1).parameters() != PolicyNet({7, 4, 3}, 2).parameters());
  CHECK(PolicyNet({7, 4, 3}, 1).parameters().allFinite());
}
