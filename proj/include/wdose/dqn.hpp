#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "wdose/cohort.hpp"
#include "wdose/environment.hpp"
#include "wdose/metrics.hpp"
#include "wdose/pkpd.hpp"
#include "wdose/random.hpp"

namespace wdose {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Age, CYP2C9 one-hot (6), VKORC1 one-hot (3), current INR, then h triples.
inline int feature_length(int history_length) { return 11 + 3 * history_length; }

// Genotype slots stay in the vector but are zeroed when blind.
Vector encode_state(const DosingState& state, bool genotype_blind);

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;
};

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> bias;
};

// Feed-forward net: ReLU hidden layers, logistic output mapped to (q_min, 0).
class QNetwork {
 public:
  QNetwork() = default;
  // Glorot-uniform weights, zero biases.
  QNetwork(std::vector<int> widths, double q_min, Rng& rng);
  // All weights and biases zero.
  static QNetwork zeros(std::vector<int> widths, double q_min);

  const std::vector<int>& widths() const { return widths_; }
  double q_min() const { return q_min_; }
  int input_size() const { return widths_.front(); }
  int output_size() const { return widths_.back(); }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  Vector forward(const Vector& x) const;
  // Column-per-sample batch.
  Matrix forward(const Matrix& x) const;

  // Mean over the batch of ((Q(x_k, a_k) - y_k) / q_min)^2.
  double loss(const Matrix& x, const std::vector<int>& actions,
              const Vector& targets) const;
  Gradients loss_gradient(const Matrix& x, const std::vector<int>& actions,
                          const Vector& targets) const;
  // dQ(x, action) / d(parameters).
  Gradients value_gradient(const Vector& x, int action) const;

  bool all_finite() const;
  bool operator==(const QNetwork& o) const;

 private:
  // Backpropagates dL/dz of the output layer through the stored activations.
  Gradients backprop(const std::vector<Matrix>& activations,
                     const std::vector<Matrix>& pre, Matrix delta) const;
  Matrix forward_cached(const Matrix& x, std::vector<Matrix>& activations,
                        std::vector<Matrix>& pre) const;

  std::vector<int> widths_;
  double q_min_ = -250.0;
  std::vector<DenseLayer> layers_;
};

void to_json(nlohmann::json& j, const QNetwork& net);
void from_json(const nlohmann::json& j, QNetwork& net);

// Plain gradient descent, or Adam when configured.
class Optimizer {
 public:
  enum class Kind { kSgd, kAdam };
  Optimizer(Kind kind, double learning_rate);
  void apply(QNetwork& net, const Gradients& g);

 private:
  Kind kind_;
  double lr_;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
  std::vector<Matrix> m_w_, v_w_;
  std::vector<Vector> m_b_, v_b_;
};

std::string_view to_string(Optimizer::Kind k);
Optimizer::Kind parse_optimizer(std::string_view s);

struct Experience {
  Vector features;
  int action = 0;
  double reward = 0.0;
  Vector next_features;
  bool terminal = false;
  double target = 0.0;
};

// Fixed-capacity ring; once full, each push evicts the oldest entry.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Experience e);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return data_.size(); }
  // i = 0 is the oldest entry still held.
  const Experience& at(std::size_t i) const;
  // k distinct indices, uniformly without replacement.
  std::vector<std::size_t> sample_indices(std::size_t k, Rng& rng) const;

 private:
  std::vector<Experience> data_;
  std::size_t head_ = 0;  // next slot to write
  std::size_t size_ = 0;
};

// Epsilon-greedy over the first `allowed` actions; greedy ties go to the
// lowest dose. One uniform draw is always consumed, a second one only when
// exploring.
int select_action(const QNetwork& net, const Vector& features, int allowed,
                  double epsilon, Rng& rng);
int greedy_action(const Vector& q, int allowed);
inline double epsilon_for_epoch(int epoch) { return 1.0 / (1.0 + epoch); }

// Fills `target` from the last experience to the first. `on_target` runs
// right after each target is set, e.g. to push it and take a training step,
// so earlier targets see the network as updated by later ones.
void backward_episode_targets(
    std::vector<Experience>& episode, const QNetwork& net, double gamma,
    const std::function<void(const Experience&)>& on_target = {});

struct TrainStepResult {
  bool performed = false;  // false when the buffer holds fewer than `batch`
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

TrainStepResult train_step(QNetwork& net, Optimizer& opt,
                           const ReplayBuffer& buffer, std::size_t batch,
                           double validation_split, Rng& rng);

struct TrainConfig {
  int epochs = 100;
  int cohort_per_epoch = 10000;
  int validation_size = 10000;
  EnvConfig env;
  double gamma = 0.95;
  double learning_rate = 0.001;
  std::string optimizer = "sgd";
  int batch = 50;
  double validation_split = 0.3;
  int buffer_capacity = 450;
  std::vector<int> hidden = {256, 128, 64, 32};
  double q_min = -250.0;
  bool genotype_blind = false;
  std::uint64_t seed = 1;

  void validate() const;
  std::vector<int> widths() const;
  bool operator==(const TrainConfig&) const = default;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct Checkpoint {
  int epoch = 0;
  std::string config_hash;
  std::uint64_t seed = 0;
  int history_length = 1;
  bool genotype_blind = false;
  EnvConfig env;
  QNetwork net;
  // Mean - SD of validation PTTR per sensitivity class, and their minimum.
  std::array<double, 3> class_scores{};
  double min_class_score = 0.0;
  std::array<double, 3> class_mean{};
  std::array<double, 3> class_sd{};
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

void to_json(nlohmann::json& j, const Checkpoint& c);
void from_json(const nlohmann::json& j, Checkpoint& c);
void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

// The greedy policy of a checkpoint; sees only the observable state.
class GreedyPolicy {
 public:
  explicit GreedyPolicy(Checkpoint checkpoint);
  int action(const DosingState& state) const;
  double dose(const DosingState& state) const;
  const Checkpoint& checkpoint() const { return ckpt_; }

 private:
  Checkpoint ckpt_;
};

GreedyPolicy greedy_policy(const Checkpoint& checkpoint);

// One full episode under the greedy policy.
Trajectory run_greedy_episode(const GreedyPolicy& policy,
                              const PatientProfile& patient,
                              const DoseResponseModel& model,
                              const std::string& policy_name = "dqn");

// Greedy rollouts for a whole cohort, split over `workers` threads. Output
// order follows the cohort, whatever the worker count.
std::vector<Trajectory> run_greedy_cohort(
    const GreedyPolicy& policy, const std::vector<PatientProfile>& cohort,
    const DoseResponseModel& model, int workers,
    const std::string& policy_name = "dqn");

// Index of the checkpoint with the highest minimum class score; ties go to
// the earliest. Throws DomainError on an empty list.
std::size_t select_best(const std::vector<Checkpoint>& checkpoints);
// Scores each checkpoint on `validation` first.
std::size_t select_best(std::vector<Checkpoint>& checkpoints,
                        const std::vector<PatientProfile>& validation,
                        const DoseResponseModel& model, int workers);
// Argmax of per-row minima, earliest on ties.
std::size_t argmax_of_min(const std::vector<std::array<double, 3>>& scores);

struct EpochLog {
  int epoch = 0;
  double epsilon = 0.0;
  int episodes = 0;
  int updates = 0;
  int max_first_action = 0;  // largest action index taken at decision 1
  double train_loss = 0.0;
  double validation_loss = 0.0;
  std::array<double, 3> class_mean{};
  std::array<double, 3> class_sd{};
  double min_class_score = 0.0;
  double overall_pttr = 0.0;
};

struct TrainResult {
  std::vector<Checkpoint> checkpoints;
  std::vector<EpochLog> log;
  std::size_t best = 0;
};

struct TrainHooks {
  // Called after each epoch's checkpoint is scored.
  std::function<void(const Checkpoint&, const EpochLog&)> on_epoch;
};

// Validation cohort used by train(): drawn from its own stream of `seed`.
std::vector<PatientProfile> training_validation_cohort(
    const TrainConfig& config, const CohortSampler& sampler);

TrainResult train(const TrainConfig& config, const DoseResponseModel& model,
                  const CohortSampler& sampler, int workers = 1,
                  const TrainHooks& hooks = {});

void write_training_log(std::ostream& out, const std::vector<EpochLog>& log);

}  // namespace wdose
