#include "minedispatch/policy_net.hpp"

#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "minedispatch/errors.hpp"
#include "minedispatch/losses.hpp"

namespace minedispatch {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Offsets {
  Index w1, b1, w2, b2, wp, bp, wv, bv, total;
};

Offsets offsets_for(const NetShape& s) {
  Offsets o{};
  Index at = 0;
  o.w1 = at; at += Index{s.hidden} * s.obs_dim;
  o.b1 = at; at += s.hidden;
  o.w2 = at; at += Index{s.hidden} * s.hidden;
  o.b2 = at; at += s.hidden;
  o.wp = at; at += Index{s.actions} * s.hidden;
  o.bp = at; at += s.actions;
  o.wv = at; at += s.hidden;
  o.bv = at; at += 1;
  o.total = at;
  return o;
}

// rows x cols matrix with orthonormal rows or columns (whichever is fewer),
// scaled by `gain`.
MatrixXd orthogonal(Index rows, Index cols, double gain, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const bool tall = rows >= cols;
  MatrixXd a(tall ? rows : cols, tall ? cols : rows);
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i) a(i, j) = normal(rng);
  Eigen::HouseholderQR<MatrixXd> qr(a);
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(a.rows(), a.cols());
  const MatrixXd r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
  for (Index j = 0; j < q.cols(); ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  if (!tall) q.transposeInPlace();
  return gain * q;
}

// Masked log-softmax of one logit column. Illegal entries get -inf.
void masked_log_softmax(const double* logits, const std::uint8_t* mask, Index n,
                        double* log_probs, double* probs, double& entropy) {
  double hi = kNegInf;
  for (Index k = 0; k < n; ++k)
    if (mask[k]) hi = std::max(hi, logits[k]);
  double sum = 0.0;
  for (Index k = 0; k < n; ++k)
    if (mask[k]) sum += std::exp(logits[k] - hi);
  const double lse = hi + std::log(sum);
  entropy = 0.0;
  for (Index k = 0; k < n; ++k) {
    if (mask[k]) {
      log_probs[k] = logits[k] - lse;
      probs[k] = std::exp(log_probs[k]);
      entropy -= probs[k] * log_probs[k];
    } else {
      log_probs[k] = kNegInf;
      probs[k] = 0.0;
    }
  }
}

void check_mask(std::span<const std::uint8_t> mask, int actions) {
  if (static_cast<int>(mask.size()) != actions)
    throw ShapeMismatch("mask has " + std::to_string(mask.size()) + " entries, network expects " +
                        std::to_string(actions));
  for (auto m : mask)
    if (m) return;
  throw ShapeMismatch("mask has no legal action");
}

}  // namespace

struct PolicyNet::Views {
  Eigen::Map<const MatrixXd> w1, w2, wp, wv;
  Eigen::Map<const VectorXd> b1, b2, bp;
  double bv;

  Views(const NetShape& s, const VectorXd& theta)
      : w1(theta.data() + offsets_for(s).w1, s.hidden, s.obs_dim),
        w2(theta.data() + offsets_for(s).w2, s.hidden, s.hidden),
        wp(theta.data() + offsets_for(s).wp, s.actions, s.hidden),
        wv(theta.data() + offsets_for(s).wv, 1, s.hidden),
        b1(theta.data() + offsets_for(s).b1, s.hidden),
        b2(theta.data() + offsets_for(s).b2, s.hidden),
        bp(theta.data() + offsets_for(s).bp, s.actions),
        bv(theta[offsets_for(s).bv]) {}
};

PolicyNet::PolicyNet(NetShape shape, std::uint64_t init_seed) : shape_(shape) {
  if (shape.obs_dim < 1 || shape.hidden < 1 || shape.actions < 1)
    throw ShapeMismatch("network dimensions must be positive");
  const Offsets o = offsets_for(shape);
  theta_ = VectorXd::Zero(o.total);
  std::mt19937_64 rng(init_seed);
  auto place = [&](Index at, const MatrixXd& m) {
    Eigen::Map<MatrixXd>(theta_.data() + at, m.rows(), m.cols()) = m;
  };
  place(o.w1, orthogonal(shape.hidden, shape.obs_dim, 1.0, rng));
  place(o.w2, orthogonal(shape.hidden, shape.hidden, 1.0, rng));
  place(o.wp, orthogonal(shape.actions, shape.hidden, 0.01, rng));
  place(o.wv, orthogonal(1, shape.hidden, 1.0, rng));
}

PolicyOutput PolicyNet::forward(std::span<const double> obs,
                                std::span<const std::uint8_t> mask) const {
  if (static_cast<int>(obs.size()) != shape_.obs_dim)
    throw ShapeMismatch("observation has " + std::to_string(obs.size()) +
                        " features, network expects " + std::to_string(shape_.obs_dim));
  check_mask(mask, shape_.actions);
  const Views v(shape_, theta_);
  const Eigen::Map<const VectorXd> x(obs.data(), shape_.obs_dim);
  const VectorXd h1 = (v.w1 * x + v.b1).array().tanh().matrix();
  const VectorXd h2 = (v.w2 * h1 + v.b2).array().tanh().matrix();
  const VectorXd logits = v.wp * h2 + v.bp;

  PolicyOutput out;
  out.log_probs.resize(static_cast<std::size_t>(shape_.actions));
  out.probs.resize(static_cast<std::size_t>(shape_.actions));
  masked_log_softmax(logits.data(), mask.data(), shape_.actions, out.log_probs.data(),
                     out.probs.data(), out.entropy);
  out.value = (v.wv * h2)(0) + v.bv;
  return out;
}

int sample_action(const PolicyOutput& out, std::span<const std::uint8_t> mask,
                  std::mt19937_64& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double cumulative = 0.0;
  int chosen = -1;
  for (std::size_t k = 0; k < mask.size(); ++k) {
    if (!mask[k]) continue;
    chosen = static_cast<int>(k);
    cumulative += out.probs[k];
    if (u < cumulative) break;
  }
  return chosen;
}

std::pair<int, double> PolicyNet::sample(std::span<const double> obs,
                                         std::span<const std::uint8_t> mask,
                                         std::mt19937_64& rng) const {
  const PolicyOutput out = forward(obs, mask);
  const int action = sample_action(out, mask, rng);
  return {action, out.log_probs[static_cast<std::size_t>(action)]};
}

int PolicyNet::greedy(std::span<const double> obs, std::span<const std::uint8_t> mask) const {
  const PolicyOutput out = forward(obs, mask);
  int best = -1;
  for (int k = 0; k < shape_.actions; ++k) {
    if (!mask[static_cast<std::size_t>(k)]) continue;
    if (best < 0 || out.probs[static_cast<std::size_t>(k)] > out.probs[static_cast<std::size_t>(best)]) best = k;
  }
  return best;
}

LossReport PolicyNet::loss(std::span<const LossSample> batch, const LossSpec& spec) const {
  return evaluate(batch, spec, nullptr);
}

LossReport PolicyNet::gradients(std::span<const LossSample> batch, const LossSpec& spec,
                                VectorXd& grad) const {
  return evaluate(batch, spec, &grad);
}

LossReport PolicyNet::evaluate(std::span<const LossSample> batch, const LossSpec& spec,
                               VectorXd* grad) const {
  const Index n = static_cast<Index>(batch.size());
  const Index a = shape_.actions;
  LossReport report;
  if (grad) *grad = VectorXd::Zero(theta_.size());
  if (n == 0) return report;

  MatrixXd x(shape_.obs_dim, n);
  for (Index i = 0; i < n; ++i) {
    const auto& s = batch[static_cast<std::size_t>(i)];
    if (s.obs == nullptr || s.mask == nullptr) throw ShapeMismatch("loss sample without data");
    if (static_cast<int>(s.obs->size()) != shape_.obs_dim)
      throw ShapeMismatch("observation length does not match the network input");
    check_mask(*s.mask, shape_.actions);
    x.col(i) = Eigen::Map<const VectorXd>(s.obs->data(), shape_.obs_dim);
  }

  const Views v(shape_, theta_);
  const MatrixXd h1 = ((v.w1 * x).colwise() + v.b1).array().tanh().matrix();
  const MatrixXd h2 = ((v.w2 * h1).colwise() + v.b2).array().tanh().matrix();
  const MatrixXd logits = (v.wp * h2).colwise() + v.bp;
  const Eigen::RowVectorXd values = (v.wv * h2).array() + v.bv;

  MatrixXd log_probs(a, n);
  MatrixXd probs(a, n);
  VectorXd entropy(n);
  std::vector<double> new_lp(static_cast<std::size_t>(n)), old_lp(static_cast<std::size_t>(n)),
      adv(static_cast<std::size_t>(n)), teacher_lp(static_cast<std::size_t>(n));
  double value_sq = 0.0;
  double kl = 0.0;
  for (Index i = 0; i < n; ++i) {
    const auto& s = batch[static_cast<std::size_t>(i)];
    masked_log_softmax(logits.col(i).data(), s.mask->data(), a, log_probs.col(i).data(),
                       probs.col(i).data(), entropy(i));
    new_lp[static_cast<std::size_t>(i)] = log_probs(s.action, i);
    old_lp[static_cast<std::size_t>(i)] = s.old_log_prob;
    adv[static_cast<std::size_t>(i)] = s.advantage;
    teacher_lp[static_cast<std::size_t>(i)] = log_probs(s.teacher_action, i);
    const double diff = values(i) - s.target_return;
    value_sq += diff * diff;
    const double log_ratio = new_lp[static_cast<std::size_t>(i)] - s.old_log_prob;
    kl += std::expm1(log_ratio) - log_ratio;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  report.policy_loss = clipped_surrogate_loss(new_lp, old_lp, adv, spec.clip_eps);
  report.value_loss = value_sq * inv_n;
  report.entropy = entropy.mean();
  report.guide_loss = guide_loss(teacher_lp);
  report.c_teacher = c_teacher(teacher_lp);
  report.approx_kl = kl * inv_n;
  report.guide_coef = spec.adaptive_guide ? spec.adaptive_guide(report.c_teacher) : spec.guide_coef;
  report.total = spec.clip_coef * report.policy_loss + spec.value_coef * report.value_loss -
                 spec.entropy_coef * report.entropy - report.guide_coef * report.guide_loss;
  if (!grad) return report;

  // d(total)/d(logits) and d(total)/d(value), one column per sample.
  MatrixXd d_logits = MatrixXd::Zero(a, n);
  Eigen::RowVectorXd d_values(n);
  for (Index i = 0; i < n; ++i) {
    const auto& s = batch[static_cast<std::size_t>(i)];
    const double ratio = std::exp(new_lp[static_cast<std::size_t>(i)] - s.old_log_prob);
    const double surr1 = ratio * s.advantage;
    const double surr2 = std::clamp(ratio, 1.0 - spec.clip_eps, 1.0 + spec.clip_eps) * s.advantage;
    const double d_action_lp = surr1 <= surr2 ? -spec.clip_coef * ratio * s.advantage * inv_n : 0.0;
    const double d_teacher_lp = -report.guide_coef * inv_n;
    for (Index k = 0; k < a; ++k) {
      if (!(*s.mask)[static_cast<std::size_t>(k)]) continue;
      const double p = probs(k, i);
      double d = d_action_lp * ((k == s.action ? 1.0 : 0.0) - p);
      d += d_teacher_lp * ((k == s.teacher_action ? 1.0 : 0.0) - p);
      d += spec.entropy_coef * inv_n * p * (log_probs(k, i) + entropy(i));
      d_logits(k, i) = d;
    }
    d_values(i) = spec.value_coef * 2.0 * (values(i) - s.target_return) * inv_n;
  }

  const Offsets o = offsets_for(shape_);
  auto block = [&](Index at, Index rows, Index cols) {
    return Eigen::Map<MatrixXd>(grad->data() + at, rows, cols);
  };
  block(o.wp, a, shape_.hidden) = d_logits * h2.transpose();
  block(o.bp, a, 1) = d_logits.rowwise().sum();
  block(o.wv, 1, shape_.hidden) = d_values * h2.transpose();
  (*grad)(o.bv) = d_values.sum();

  const MatrixXd d_z2 =
      ((v.wp.transpose() * d_logits + v.wv.transpose() * d_values).array() *
       (1.0 - h2.array().square()))
          .matrix();
  block(o.w2, shape_.hidden, shape_.hidden) = d_z2 * h1.transpose();
  block(o.b2, shape_.hidden, 1) = d_z2.rowwise().sum();
  const MatrixXd d_z1 =
      ((v.w2.transpose() * d_z2).array() * (1.0 - h1.array().square())).matrix();
  block(o.w1, shape_.hidden, shape_.obs_dim) = d_z1 * x.transpose();
  block(o.b1, shape_.hidden, 1) = d_z1.rowwise().sum();
  return report;
}

void AdamState::reset(Eigen::Index size) {
  m = VectorXd::Zero(size);
  v = VectorXd::Zero(size);
  step = 0;
}

void AdamState::apply(VectorXd& params, const VectorXd& grad, double lr) {
  if (m.size() != params.size()) reset(params.size());
  if (grad.size() != params.size()) throw ShapeMismatch("gradient size does not match parameters");
  ++step;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  params.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

PolicyParams make_policy(NetShape shape, std::uint64_t init_seed) {
  PolicyParams p{PolicyNet(shape, init_seed), AdamState{}};
  p.adam.reset(p.net.num_parameters());
  return p;
}

double clip_grad_norm(VectorXd& grad, double max_norm) {
  const double norm = grad.norm();
  if (norm > max_norm && norm > 0.0) grad *= max_norm / norm;
  return norm;
}

nlohmann::json policy_to_json(const PolicyParams& p) {
  auto to_list = [](const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json doc;
  doc["obs_dim"] = p.net.shape().obs_dim;
  doc["hidden"] = p.net.shape().hidden;
  doc["actions"] = p.net.shape().actions;
  doc["parameters"] = to_list(p.net.parameters());
  doc["adam"] = {{"m", to_list(p.adam.m)},
                 {"v", to_list(p.adam.v)},
                 {"step", p.adam.step},
                 {"beta1", p.adam.beta1},
                 {"beta2", p.adam.beta2},
                 {"eps", p.adam.eps}};
  return doc;
}

PolicyParams policy_from_json(const nlohmann::json& doc) {
  try {
    const NetShape shape{doc.at("obs_dim").get<int>(), doc.at("hidden").get<int>(),
                         doc.at("actions").get<int>()};
    PolicyParams p = make_policy(shape, 0);
    auto fill = [](VectorXd& dst, const nlohmann::json& src, const char* what) {
      const auto values = src.get<std::vector<double>>();
      if (static_cast<Index>(values.size()) != dst.size())
        throw ParseError(std::string("checkpoint '") + what + "' has the wrong length");
      dst = Eigen::Map<const VectorXd>(values.data(), dst.size());
    };
    fill(p.net.parameters(), doc.at("parameters"), "parameters");
    const auto& adam = doc.at("adam");
    fill(p.adam.m, adam.at("m"), "adam.m");
    fill(p.adam.v, adam.at("v"), "adam.v");
    p.adam.step = adam.at("step").get<std::int64_t>();
    p.adam.beta1 = adam.at("beta1").get<double>();
    p.adam.beta2 = adam.at("beta2").get<double>();
    p.adam.eps = adam.at("eps").get<double>();
    if (!p.net.parameters().allFinite()) throw ParseError("checkpoint parameters are not finite");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace minedispatch
