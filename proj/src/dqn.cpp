#include "wdose/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>

#include "wdose/errors.hpp"
#include "wdose/json_util.hpp"
#include "wdose/parallel.hpp"

namespace wdose {
namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Matrix relu(const Matrix& m) { return m.cwiseMax(0.0); }

Matrix relu_mask(const Matrix& m) {
  return (m.array() > 0.0).cast<double>().matrix();
}

Gradients zero_gradients(const std::vector<DenseLayer>& layers) {
  Gradients g;
  for (const auto& l : layers) {
    g.weights.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
    g.bias.push_back(Vector::Zero(l.bias.size()));
  }
  return g;
}

}  // namespace

Vector encode_state(const DosingState& s, bool genotype_blind) {
  const int h = static_cast<int>(s.history.size());
  Vector f = Vector::Zero(feature_length(h));
  f[0] = s.patient.age / 100.0;
  if (!genotype_blind) {
    f[1 + static_cast<Eigen::Index>(index_of(s.patient.cyp2c9))] = 1.0;
    f[7 + static_cast<Eigen::Index>(index_of(s.patient.vkorc1))] = 1.0;
  }
  f[10] = s.current_inr / 4.0;
  for (int i = 0; i < h; ++i) {
    const auto& r = s.history[static_cast<std::size_t>(i)];
    f[11 + 3 * i] = r.inr / 4.0;
    f[12 + 3 * i] = r.dose / 15.0;
    f[13 + 3 * i] = r.duration / 7.0;
  }
  return f;
}

// ---------------------------------------------------------------------------
// QNetwork

QNetwork::QNetwork(std::vector<int> widths, double q_min, Rng& rng)
    : QNetwork(zeros(std::move(widths), q_min)) {
  for (auto& l : layers_) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(l.weights.rows() + l.weights.cols()));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
        l.weights(r, c) = (2.0 * uniform01(rng) - 1.0) * limit;
      }
    }
  }
}

QNetwork QNetwork::zeros(std::vector<int> widths, double q_min) {
  if (widths.size() < 2) throw DomainError("a network needs at least 2 widths");
  for (int w : widths) {
    if (w < 1) throw DomainError("layer widths must be >= 1");
  }
  if (!(q_min < 0.0)) throw DomainError("q_min must be negative");
  QNetwork net;
  net.widths_ = std::move(widths);
  net.q_min_ = q_min;
  for (std::size_t i = 0; i + 1 < net.widths_.size(); ++i) {
    net.layers_.push_back({Matrix::Zero(net.widths_[i + 1], net.widths_[i]),
                           Vector::Zero(net.widths_[i + 1])});
  }
  return net;
}

Matrix QNetwork::forward_cached(const Matrix& x,
                                std::vector<Matrix>& activations,
                                std::vector<Matrix>& pre) const {
  if (x.rows() != input_size()) {
    throw DomainError("input has " + std::to_string(x.rows()) +
                      " features, the network expects " +
                      std::to_string(input_size()));
  }
  activations.clear();
  pre.clear();
  activations.push_back(x);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix z = layers_[l].weights * activations.back();
    z.colwise() += layers_[l].bias;
    pre.push_back(z);
    if (l + 1 < layers_.size()) activations.push_back(relu(z));
  }
  return pre.back().unaryExpr(
      [this](double z) { return q_min_ * (1.0 - logistic(z)); });
}

Matrix QNetwork::forward(const Matrix& x) const {
  std::vector<Matrix> a, p;
  return forward_cached(x, a, p);
}

Vector QNetwork::forward(const Vector& x) const {
  return forward(Matrix(x)).col(0);
}

double QNetwork::loss(const Matrix& x, const std::vector<int>& actions,
                      const Vector& targets) const {
  const Matrix q = forward(x);
  double sum = 0.0;
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    const double e = (q(actions[static_cast<std::size_t>(k)], k) - targets[k]) / q_min_;
    sum += e * e;
  }
  return sum / static_cast<double>(x.cols());
}

Gradients QNetwork::backprop(const std::vector<Matrix>& activations,
                             const std::vector<Matrix>& pre,
                             Matrix delta) const {
  Gradients g = zero_gradients(layers_);
  for (std::size_t l = layers_.size(); l-- > 0;) {
    g.weights[l] = delta * activations[l].transpose();
    g.bias[l] = delta.rowwise().sum();
    if (l > 0) {
      delta = (layers_[l].weights.transpose() * delta)
                  .cwiseProduct(relu_mask(pre[l - 1]));
    }
  }
  return g;
}

Gradients QNetwork::loss_gradient(const Matrix& x,
                                  const std::vector<int>& actions,
                                  const Vector& targets) const {
  if (static_cast<Eigen::Index>(actions.size()) != x.cols() ||
      targets.size() != x.cols()) {
    throw DomainError("batch, actions and targets differ in size");
  }
  std::vector<Matrix> a, p;
  const Matrix q = forward_cached(x, a, p);
  const Matrix& z = p.back();
  Matrix delta = Matrix::Zero(z.rows(), z.cols());
  const double scale = 2.0 / static_cast<double>(x.cols());
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    const int act = actions[static_cast<std::size_t>(k)];
    const double s = logistic(z(act, k));
    const double e = (q(act, k) - targets[k]) / q_min_;
    // d/dz of (1 - s) is -s (1 - s).
    delta(act, k) = scale * e * -(s * (1.0 - s));
  }
  return backprop(a, p, std::move(delta));
}

Gradients QNetwork::value_gradient(const Vector& x, int action) const {
  std::vector<Matrix> a, p;
  forward_cached(Matrix(x), a, p);
  const Matrix& z = p.back();
  Matrix delta = Matrix::Zero(z.rows(), 1);
  const double s = logistic(z(action, 0));
  delta(action, 0) = -q_min_ * s * (1.0 - s);
  return backprop(a, p, std::move(delta));
}

bool QNetwork::all_finite() const {
  for (const auto& l : layers_) {
    if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

bool QNetwork::operator==(const QNetwork& o) const {
  if (widths_ != o.widths_ || q_min_ != o.q_min_) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].weights != o.layers_[l].weights ||
        layers_[l].bias != o.layers_[l].bias) {
      return false;
    }
  }
  return true;
}

void to_json(nlohmann::json& j, const QNetwork& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers()) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(l.weights.cols()));
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
        row[static_cast<std::size_t>(c)] = l.weights(r, c);
      }
      rows.push_back(std::move(row));
    }
    std::vector<double> bias(l.bias.data(), l.bias.data() + l.bias.size());
    layers.push_back({{"weights", std::move(rows)}, {"bias", std::move(bias)}});
  }
  j = {{"widths", net.widths()}, {"q_min", net.q_min()}, {"layers", layers}};
}

void from_json(const nlohmann::json& j, QNetwork& net) {
  using json_util::read_required;
  net = QNetwork::zeros(read_required<std::vector<int>>(j, "widths"),
                        read_required<double>(j, "q_min"));
  const auto& layers = j.at("layers");
  if (layers.size() != net.layers().size()) {
    throw ConfigError("checkpoint layer count does not match its widths");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& dst = net.layers()[l];
    const auto rows = read_required<std::vector<std::vector<double>>>(layers[l], "weights");
    const auto bias = read_required<std::vector<double>>(layers[l], "bias");
    if (static_cast<Eigen::Index>(rows.size()) != dst.weights.rows() ||
        static_cast<Eigen::Index>(bias.size()) != dst.bias.size()) {
      throw ConfigError("checkpoint layer " + std::to_string(l) +
                        " has the wrong shape");
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (static_cast<Eigen::Index>(rows[r].size()) != dst.weights.cols()) {
        throw ConfigError("checkpoint layer " + std::to_string(l) +
                          " has a ragged row");
      }
      for (std::size_t c = 0; c < rows[r].size(); ++c) {
        dst.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            rows[r][c];
      }
    }
    for (std::size_t i = 0; i < bias.size(); ++i) {
      dst.bias[static_cast<Eigen::Index>(i)] = bias[i];
    }
  }
  if (!net.all_finite()) throw ConfigError("checkpoint has non-finite weights");
}

// ---------------------------------------------------------------------------
// Optimizer

Optimizer::Optimizer(Kind kind, double learning_rate)
    : kind_(kind), lr_(learning_rate) {}

void Optimizer::apply(QNetwork& net, const Gradients& g) {
  auto& layers = net.layers();
  if (kind_ == Kind::kSgd) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      layers[l].weights -= lr_ * g.weights[l];
      layers[l].bias -= lr_ * g.bias[l];
    }
    return;
  }
  if (m_w_.empty()) {
    for (const auto& l : layers) {
      m_w_.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
      v_w_.push_back(m_w_.back());
      m_b_.push_back(Vector::Zero(l.bias.size()));
      v_b_.push_back(m_b_.back());
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const double step = lr_ * std::sqrt(c2) / c1;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    m_w_[l] = beta1_ * m_w_[l] + (1.0 - beta1_) * g.weights[l];
    v_w_[l] = beta2_ * v_w_[l] + (1.0 - beta2_) * g.weights[l].cwiseAbs2();
    layers[l].weights.array() -=
        step * m_w_[l].array() / (v_w_[l].array().sqrt() + eps_);
    m_b_[l] = beta1_ * m_b_[l] + (1.0 - beta1_) * g.bias[l];
    v_b_[l] = beta2_ * v_b_[l] + (1.0 - beta2_) * g.bias[l].cwiseAbs2();
    layers[l].bias.array() -=
        step * m_b_[l].array() / (v_b_[l].array().sqrt() + eps_);
  }
}

std::string_view to_string(Optimizer::Kind k) {
  return k == Optimizer::Kind::kSgd ? "sgd" : "adam";
}

Optimizer::Kind parse_optimizer(std::string_view s) {
  if (s == "sgd") return Optimizer::Kind::kSgd;
  if (s == "adam") return Optimizer::Kind::kAdam;
  throw ConfigError("unknown optimizer '" + std::string(s) +
                    "' (expected sgd or adam)");
}

// ---------------------------------------------------------------------------
// Replay buffer

ReplayBuffer::ReplayBuffer(std::size_t capacity) : data_(capacity) {
  if (capacity == 0) throw ConfigError("replay capacity must be >= 1");
}

void ReplayBuffer::push(Experience e) {
  data_[head_] = std::move(e);
  head_ = (head_ + 1) % data_.size();
  size_ = std::min(size_ + 1, data_.size());
}

const Experience& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw DomainError("replay index out of range");
  const std::size_t cap = data_.size();
  return data_[(head_ + cap - size_ + i) % cap];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t k,
                                                      Rng& rng) const {
  if (k > size_) throw DomainError("sample larger than the buffer");
  std::vector<std::size_t> idx(size_);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + uniform_index(rng, size_ - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

// ---------------------------------------------------------------------------
// Acting and learning

int greedy_action(const Vector& q, int allowed) {
  int best = 0;
  for (int a = 1; a < allowed; ++a) {
    if (q[a] > q[best]) best = a;
  }
  return best;
}

int select_action(const QNetwork& net, const Vector& features, int allowed,
                  double epsilon, Rng& rng) {
  if (allowed < 1 || allowed > net.output_size()) {
    throw DomainError("allowed action count out of range");
  }
  if (uniform01(rng) < epsilon) {
    return static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(allowed)));
  }
  return greedy_action(net.forward(features), allowed);
}

void backward_episode_targets(
    std::vector<Experience>& episode, const QNetwork& net, double gamma,
    const std::function<void(const Experience&)>& on_target) {
  for (std::size_t i = episode.size(); i-- > 0;) {
    auto& e = episode[i];
    double y = e.reward;
    if (!e.terminal) y += gamma * net.forward(e.next_features).maxCoeff();
    e.target = std::clamp(y, net.q_min(), 0.0);
    if (on_target) on_target(e);
  }
}

TrainStepResult train_step(QNetwork& net, Optimizer& opt,
                           const ReplayBuffer& buffer, std::size_t batch,
                           double validation_split, Rng& rng) {
  TrainStepResult r;
  if (buffer.size() < batch || batch == 0) return r;
  const auto idx = buffer.sample_indices(batch, rng);
  const auto n_val = static_cast<std::size_t>(
      std::lround(validation_split * static_cast<double>(batch)));
  const std::size_t n_train = batch - n_val;
  if (n_train == 0) return r;

  const auto pack = [&](std::size_t from, std::size_t to, Matrix& x,
                        std::vector<int>& actions, Vector& y) {
    const auto n = static_cast<Eigen::Index>(to - from);
    x.resize(net.input_size(), n);
    y.resize(n);
    actions.resize(static_cast<std::size_t>(n));
    for (std::size_t k = from; k < to; ++k) {
      const auto& e = buffer.at(idx[k]);
      const auto col = static_cast<Eigen::Index>(k - from);
      x.col(col) = e.features;
      actions[k - from] = e.action;
      y[col] = std::clamp(e.target, net.q_min(), 0.0);
    }
  };

  Matrix x;
  std::vector<int> actions;
  Vector y;
  pack(0, n_train, x, actions, y);
  r.train_loss = net.loss(x, actions, y);
  opt.apply(net, net.loss_gradient(x, actions, y));
  if (n_val > 0) {
    Matrix xv;
    std::vector<int> av;
    Vector yv;
    pack(n_train, batch, xv, av, yv);
    r.validation_loss = net.loss(xv, av, yv);
  }
  r.performed = true;
  return r;
}

// ---------------------------------------------------------------------------
// Configuration and checkpoints

void TrainConfig::validate() const {
  env.validate();
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (cohort_per_epoch < 1) throw ConfigError("cohort_per_epoch must be >= 1");
  if (validation_size < 1) throw ConfigError("validation_size must be >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must be in (0, 1]");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  (void)parse_optimizer(optimizer);
  if (batch < 1 || batch > buffer_capacity) {
    throw ConfigError("batch must be in [1, buffer_capacity]");
  }
  if (!(validation_split >= 0.0 && validation_split < 1.0)) {
    throw ConfigError("validation_split must be in [0, 1)");
  }
  if (hidden.empty()) throw ConfigError("at least one hidden layer is required");
  for (int w : hidden) {
    if (w < 1) throw ConfigError("hidden widths must be >= 1");
  }
  if (!(q_min < 0.0)) throw ConfigError("q_min must be negative");
  if (action_space_size(env) < allowed_action_count(env, 1)) {
    throw ConfigError("first-decision cap exceeds the action space");
  }
}

std::vector<int> TrainConfig::widths() const {
  std::vector<int> w;
  w.push_back(feature_length(env.history_length));
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(action_space_size(env));
  return w;
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"epochs", c.epochs},
                     {"cohort_per_epoch", c.cohort_per_epoch},
                     {"validation_size", c.validation_size},
                     {"env", c.env},
                     {"gamma", c.gamma},
                     {"learning_rate", c.learning_rate},
                     {"optimizer", c.optimizer},
                     {"batch", c.batch},
                     {"validation_split", c.validation_split},
                     {"buffer_capacity", c.buffer_capacity},
                     {"hidden", c.hidden},
                     {"q_min", c.q_min},
                     {"genotype_blind", c.genotype_blind},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  using json_util::read_optional;
  json_util::check_keys(
      j, "training config",
      {"epochs", "cohort_per_epoch", "validation_size", "env", "gamma",
       "learning_rate", "optimizer", "batch", "validation_split",
       "buffer_capacity", "hidden", "q_min", "genotype_blind", "seed",
       "comment"});
  read_optional(j, "epochs", c.epochs);
  read_optional(j, "cohort_per_epoch", c.cohort_per_epoch);
  read_optional(j, "validation_size", c.validation_size);
  if (auto it = j.find("env"); it != j.end()) c.env = it->get<EnvConfig>();
  read_optional(j, "gamma", c.gamma);
  read_optional(j, "learning_rate", c.learning_rate);
  read_optional(j, "optimizer", c.optimizer);
  read_optional(j, "batch", c.batch);
  read_optional(j, "validation_split", c.validation_split);
  read_optional(j, "buffer_capacity", c.buffer_capacity);
  read_optional(j, "hidden", c.hidden);
  read_optional(j, "q_min", c.q_min);
  read_optional(j, "genotype_blind", c.genotype_blind);
  read_optional(j, "seed", c.seed);
  c.validate();
}

void to_json(nlohmann::json& j, const Checkpoint& c) {
  j = nlohmann::json{{"format", "wdose-checkpoint"},
                     {"version", 1},
                     {"epoch", c.epoch},
                     {"config_hash", c.config_hash},
                     {"seed", c.seed},
                     {"history_length", c.history_length},
                     {"genotype_blind", c.genotype_blind},
                     {"env", c.env},
                     {"class_scores", c.class_scores},
                     {"min_class_score", c.min_class_score},
                     {"class_mean", c.class_mean},
                     {"class_sd", c.class_sd},
                     {"train_loss", c.train_loss},
                     {"validation_loss", c.validation_loss},
                     {"network", c.net}};
}

void from_json(const nlohmann::json& j, Checkpoint& c) {
  using json_util::read_required;
  if (read_required<std::string>(j, "format") != "wdose-checkpoint") {
    throw ConfigError("not a checkpoint file");
  }
  if (read_required<int>(j, "version") != 1) {
    throw ConfigError("unsupported checkpoint version");
  }
  c.epoch = read_required<int>(j, "epoch");
  c.config_hash = read_required<std::string>(j, "config_hash");
  c.seed = read_required<std::uint64_t>(j, "seed");
  c.history_length = read_required<int>(j, "history_length");
  c.genotype_blind = read_required<bool>(j, "genotype_blind");
  c.env = read_required<EnvConfig>(j, "env");
  c.class_scores = read_required<std::array<double, 3>>(j, "class_scores");
  c.min_class_score = read_required<double>(j, "min_class_score");
  c.class_mean = read_required<std::array<double, 3>>(j, "class_mean");
  c.class_sd = read_required<std::array<double, 3>>(j, "class_sd");
  c.train_loss = read_required<double>(j, "train_loss");
  c.validation_loss = read_required<double>(j, "validation_loss");
  c.net = read_required<QNetwork>(j, "network");
  if (c.net.input_size() != feature_length(c.history_length) ||
      c.net.output_size() != action_space_size(c.env)) {
    throw ConfigError("checkpoint network does not match its environment");
  }
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << nlohmann::json(c).dump() << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
  return json_util::load_file(path).get<Checkpoint>();
}

// ---------------------------------------------------------------------------
// Policies

GreedyPolicy::GreedyPolicy(Checkpoint checkpoint) : ckpt_(std::move(checkpoint)) {}

int GreedyPolicy::action(const DosingState& state) const {
  const Vector q = ckpt_.net.forward(encode_state(state, ckpt_.genotype_blind));
  return greedy_action(q, allowed_action_count(ckpt_.env, state.decision_index));
}

double GreedyPolicy::dose(const DosingState& state) const {
  return dose_for_action(ckpt_.env, action(state));
}

GreedyPolicy greedy_policy(const Checkpoint& checkpoint) {
  return GreedyPolicy(checkpoint);
}

Trajectory run_greedy_episode(const GreedyPolicy& policy,
                              const PatientProfile& patient,
                              const DoseResponseModel& model,
                              const std::string& policy_name) {
  DosingEnvironment env(model, policy.checkpoint().env);
  DosingState s = env.reset(patient);
  while (!env.done()) s = env.step(policy.dose(s)).state;
  Trajectory t = env.trajectory();
  t.policy = policy_name;
  return t;
}

std::vector<Trajectory> run_greedy_cohort(
    const GreedyPolicy& policy, const std::vector<PatientProfile>& cohort,
    const DoseResponseModel& model, int workers,
    const std::string& policy_name) {
  std::vector<Trajectory> out(cohort.size());
  parallel_for(cohort.size(), workers, [&](std::size_t i) {
    out[i] = run_greedy_episode(policy, cohort[i], model, policy_name);
  });
  return out;
}

std::size_t argmax_of_min(const std::vector<std::array<double, 3>>& scores) {
  if (scores.empty()) throw DomainError("no checkpoints to select from");
  std::size_t best = 0;
  double best_min = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double m = *std::min_element(scores[i].begin(), scores[i].end());
    if (m > best_min) {
      best_min = m;
      best = i;
    }
  }
  return best;
}

std::size_t select_best(const std::vector<Checkpoint>& checkpoints) {
  std::vector<std::array<double, 3>> scores;
  for (const auto& c : checkpoints) scores.push_back(c.class_scores);
  return argmax_of_min(scores);
}

namespace {

struct Scored {
  std::array<double, 3> mean{};
  std::array<double, 3> sd{};
  std::array<double, 3> score{};
  double overall = 0.0;
};

Scored score_policy(const GreedyPolicy& policy,
                    const std::vector<PatientProfile>& cohort,
                    const DoseResponseModel& model, int workers) {
  const auto trajectories = run_greedy_cohort(policy, cohort, model, workers);
  std::vector<PatientReport> reports;
  reports.reserve(cohort.size());
  const int horizon = policy.checkpoint().env.horizon;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    reports.push_back(make_patient_report(
        trajectories[i], classify_sensitivity(cohort[i].covariates), horizon));
  }
  Scored s;
  s.score = class_scores(reports);
  const auto rows = cohort_summary(reports);
  for (std::size_t c = 0; c < 3; ++c) {
    s.mean[c] = rows[c].pttr_daily.mean;
    s.sd[c] = rows[c].pttr_daily.sd;
  }
  s.overall = rows[3].pttr_daily.mean;
  return s;
}

}  // namespace

std::size_t select_best(std::vector<Checkpoint>& checkpoints,
                        const std::vector<PatientProfile>& validation,
                        const DoseResponseModel& model, int workers) {
  for (auto& c : checkpoints) {
    const Scored s = score_policy(GreedyPolicy(c), validation, model, workers);
    c.class_scores = s.score;
    c.class_mean = s.mean;
    c.class_sd = s.sd;
    c.min_class_score = *std::min_element(s.score.begin(), s.score.end());
  }
  return select_best(checkpoints);
}

// ---------------------------------------------------------------------------
// Training

std::vector<PatientProfile> training_validation_cohort(
    const TrainConfig& config, const CohortSampler& sampler) {
  return sampler.generate_cohort(
      config.validation_size, derive_seed(config.seed, 0, StreamTag::kCohort));
}

TrainResult train(const TrainConfig& config, const DoseResponseModel& model,
                  const CohortSampler& sampler, int workers,
                  const TrainHooks& hooks) {
  config.validate();
  const std::string hash = json_util::hash_hex(nlohmann::json(config));

  Rng init_rng = make_stream(config.seed, 0, StreamTag::kWeightInit);
  QNetwork net(config.widths(), config.q_min, init_rng);
  Optimizer opt(parse_optimizer(config.optimizer), config.learning_rate);
  ReplayBuffer buffer(static_cast<std::size_t>(config.buffer_capacity));
  Rng replay_rng = make_stream(config.seed, 0, StreamTag::kReplay);
  const auto validation = training_validation_cohort(config, sampler);
  DosingEnvironment env(model, config.env);

  TrainResult result;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochLog log;
    log.epoch = epoch;
    log.epsilon = epsilon_for_epoch(epoch);
    Rng explore = make_stream(config.seed, static_cast<std::uint64_t>(epoch),
                              StreamTag::kExploration);
    const auto cohort = sampler.generate_cohort(
        config.cohort_per_epoch,
        derive_seed(config.seed, static_cast<std::uint64_t>(epoch),
                    StreamTag::kCohort));

    double train_loss = 0.0;
    double val_loss = 0.0;
    std::vector<Experience> episode;
    for (const auto& patient : cohort) {
      episode.clear();
      DosingState s = env.reset(patient);
      while (!env.done()) {
        Experience e;
        e.features = encode_state(s, config.genotype_blind);
        e.action = select_action(net, e.features,
                                 allowed_action_count(config.env, s.decision_index),
                                 log.epsilon, explore);
        if (s.decision_index == 1) {
          log.max_first_action = std::max(log.max_first_action, e.action);
        }
        const StepOutcome out = env.step(dose_for_action(config.env, e.action));
        e.reward = out.reward;
        e.terminal = out.done;
        e.next_features = encode_state(out.state, config.genotype_blind);
        episode.push_back(std::move(e));
        s = out.state;
      }
      backward_episode_targets(episode, net, config.gamma,
                               [&](const Experience& e) {
                                 buffer.push(e);
                                 const auto r = train_step(
                                     net, opt, buffer,
                                     static_cast<std::size_t>(config.batch),
                                     config.validation_split, replay_rng);
                                 if (r.performed) {
                                   ++log.updates;
                                   train_loss += r.train_loss;
                                   val_loss += r.validation_loss;
                                 }
                               });
      ++log.episodes;
    }
    if (!net.all_finite()) {
      throw DomainError("training diverged at epoch " + std::to_string(epoch));
    }
    if (log.updates > 0) {
      log.train_loss = train_loss / log.updates;
      log.validation_loss = val_loss / log.updates;
    }

    Checkpoint ckpt;
    ckpt.epoch = epoch;
    ckpt.config_hash = hash;
    ckpt.seed = config.seed;
    ckpt.history_length = config.env.history_length;
    ckpt.genotype_blind = config.genotype_blind;
    ckpt.env = config.env;
    ckpt.net = net;
    ckpt.train_loss = log.train_loss;
    ckpt.validation_loss = log.validation_loss;
    const Scored sc = score_policy(GreedyPolicy(ckpt), validation, model, workers);
    ckpt.class_scores = sc.score;
    ckpt.class_mean = sc.mean;
    ckpt.class_sd = sc.sd;
    ckpt.min_class_score = *std::min_element(sc.score.begin(), sc.score.end());
    log.class_mean = sc.mean;
    log.class_sd = sc.sd;
    log.min_class_score = ckpt.min_class_score;
    log.overall_pttr = sc.overall;

    if (hooks.on_epoch) hooks.on_epoch(ckpt, log);
    result.checkpoints.push_back(std::move(ckpt));
    result.log.push_back(log);
  }
  result.best = select_best(result.checkpoints);
  return result;
}

void write_training_log(std::ostream& out, const std::vector<EpochLog>& log) {
  out << "epoch,epsilon,episodes,updates,train_loss,validation_loss,"
         "normal_mean,normal_sd,sensitive_mean,sensitive_sd,"
         "highly_sensitive_mean,highly_sensitive_sd,min_class_score,"
         "overall_pttr\n";
  char buf[512];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof buf,
                  "%d,%.6f,%d,%d,%.9g,%.9g,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,"
                  "%.6f\n",
                  e.epoch, e.epsilon, e.episodes, e.updates, e.train_loss,
                  e.validation_loss, e.class_mean[0], e.class_sd[0],
                  e.class_mean[1], e.class_sd[1], e.class_mean[2],
                  e.class_sd[2], e.min_class_score, e.overall_pttr);
    out << buf;
  }
}

}  // namespace wdose
