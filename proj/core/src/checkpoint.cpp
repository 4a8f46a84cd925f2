// Agent checkpoint format ("sqt-agent v1"): a plain-text dump that
// round-trips parameters exactly.
//
//   sqt-agent v1
//   variant <ddpg|td3|sqt>
//   state_dim <int>
//   action_dim <int>
//   action_low <hexfloat per dim>
//   action_high <hexfloat per dim>
//   config <key> <value>            (one line per TrainingConfig field)
//   network <name>                  (actor, target_actor, critic_<i>,
//                                    target_critic_<i>)
//   layers <count> <size...>
//   hidden <relu|tanh>
//   W<k> <rows> <cols> <hexfloat row-major...>
//   b<k> <size> <hexfloat...>
//   end
//
// All floats are C99 hexfloats (%a), so the dump restores bit-identical
// values. The checkpoint captures architecture and parameters only;
// optimizer moments, replay contents, counters, and rng state are not
// part of the format.
#include <cinttypes>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "sqt/agent.hpp"
#include "sqt/error.hpp"

namespace sqt {

namespace {

std::string hex_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

void write_vector(std::ostringstream& os, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) os << ' ' << hex_double(v(i));
}

void write_network(std::ostringstream& os, const std::string& name,
                   const MlpParams& p) {
  os << "network " << name << '\n';
  os << "layers " << p.layer_sizes.size();
  for (int s : p.layer_sizes) os << ' ' << s;
  os << '\n';
  os << "hidden "
     << (p.hidden_activation == Activation::kRelu ? "relu" : "tanh") << '\n';
  for (int k = 0; k < p.num_layers(); ++k) {
    os << 'W' << k << ' ' << p.weights[k].rows() << ' ' << p.weights[k].cols();
    for (Eigen::Index r = 0; r < p.weights[k].rows(); ++r)
      for (Eigen::Index c = 0; c < p.weights[k].cols(); ++c)
        os << ' ' << hex_double(p.weights[k](r, c));
    os << '\n';
    os << 'b' << k << ' ' << p.biases[k].size();
    write_vector(os, p.biases[k]);
    os << '\n';
  }
}

class TokenReader {
 public:
  explicit TokenReader(const std::string& text) : in_(text) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) throw FormatError("checkpoint: unexpected end of input");
    return w;
  }

  void expect(const std::string& want) {
    const std::string got = word();
    if (got != want)
      throw FormatError("checkpoint: expected '" + want + "', got '" + got +
                        "'");
  }

  long integer() {
    const std::string w = word();
    try {
      return std::stol(w);
    } catch (...) {
      throw FormatError("checkpoint: expected integer, got '" + w + "'");
    }
  }

  double real() {
    const std::string w = word();
    char* end = nullptr;
    const double v = std::strtod(w.c_str(), &end);
    if (end == w.c_str() || *end != '\0')
      throw FormatError("checkpoint: bad float '" + w + "'");
    return v;
  }

 private:
  std::istringstream in_;
};

MlpParams read_network(TokenReader& r, const std::string& expected_name) {
  r.expect("network");
  r.expect(expected_name);
  r.expect("layers");
  const long count = r.integer();
  if (count < 2) throw FormatError("checkpoint: bad layer count");
  MlpParams p;
  for (long i = 0; i < count; ++i)
    p.layer_sizes.push_back(static_cast<int>(r.integer()));
  r.expect("hidden");
  const std::string act = r.word();
  if (act == "relu")
    p.hidden_activation = Activation::kRelu;
  else if (act == "tanh")
    p.hidden_activation = Activation::kTanh;
  else
    throw FormatError("checkpoint: bad activation '" + act + "'");
  for (long k = 0; k + 1 < count; ++k) {
    r.expect("W" + std::to_string(k));
    const long rows = r.integer(), cols = r.integer();
    if (rows != p.layer_sizes[k + 1] || cols != p.layer_sizes[k])
      throw FormatError("checkpoint: weight shape mismatch");
    Eigen::MatrixXd w(rows, cols);
    for (long rr = 0; rr < rows; ++rr)
      for (long cc = 0; cc < cols; ++cc) w(rr, cc) = r.real();
    p.weights.push_back(std::move(w));
    r.expect("b" + std::to_string(k));
    const long n = r.integer();
    if (n != rows) throw FormatError("checkpoint: bias size mismatch");
    Eigen::VectorXd b(n);
    for (long i = 0; i < n; ++i) b(i) = r.real();
    p.biases.push_back(std::move(b));
  }
  return p;
}

}  // namespace

std::string Agent::serialize() const {
  std::ostringstream os;
  os << "sqt-agent v1\n";
  os << "variant " << variant_name(variant_) << '\n';
  os << "state_dim " << state_dim_ << '\n';
  os << "action_dim " << action_dim_ << '\n';
  os << "action_low";
  write_vector(os, action_low_);
  os << "\naction_high";
  write_vector(os, action_high_);
  os << '\n';

  const TrainingConfig& c = config_;
  os << "config gamma " << hex_double(c.gamma) << '\n';
  os << "config alpha " << hex_double(c.alpha) << '\n';
  os << "config n_networks " << c.n_networks << '\n';
  os << "config q_operator " << q_operator_name(c.q_operator) << '\n';
  os << "config minmax_lambda " << hex_double(c.minmax_lambda) << '\n';
  os << "config noise_std " << hex_double(c.noise_std) << '\n';
  os << "config target_interval " << c.target_interval << '\n';
  os << "config batch_size " << c.batch_size << '\n';
  os << "config updates_per_step " << c.updates_per_step << '\n';
  os << "config actor_lr " << hex_double(c.actor_lr) << '\n';
  os << "config critic_lr " << hex_double(c.critic_lr) << '\n';
  os << "config warmup_steps " << c.warmup_steps << '\n';
  os << "config total_steps " << c.total_steps << '\n';
  os << "config hidden " << c.hidden.size();
  for (int h : c.hidden) os << ' ' << h;
  os << '\n';
  os << "config buffer_capacity " << c.buffer_capacity << '\n';
  os << "config target_smoothing " << (c.target_smoothing ? 1 : 0) << '\n';
  os << "config smoothing_std " << hex_double(c.smoothing_std) << '\n';
  os << "config smoothing_clip " << hex_double(c.smoothing_clip) << '\n';
  os << "config per_element_penalty " << (c.per_element_penalty ? 1 : 0)
     << '\n';
  os << "config masked_penalty " << (c.masked_penalty ? 1 : 0) << '\n';

  write_network(os, "actor", actor_.live);
  write_network(os, "target_actor", actor_.target);
  for (int i = 0; i < critic_.size(); ++i)
    write_network(os, "critic_" + std::to_string(i), critic_.live[i]);
  for (int i = 0; i < critic_.size(); ++i)
    write_network(os, "target_critic_" + std::to_string(i),
                  critic_.target[i]);
  os << "end\n";
  return os.str();
}

Agent Agent::deserialize(const std::string& text) {
  TokenReader r(text);
  r.expect("sqt-agent");
  r.expect("v1");
  r.expect("variant");
  const Variant variant = parse_variant(r.word());
  r.expect("state_dim");
  const int state_dim = static_cast<int>(r.integer());
  r.expect("action_dim");
  const int action_dim = static_cast<int>(r.integer());
  r.expect("action_low");
  Eigen::VectorXd low(action_dim);
  for (int d = 0; d < action_dim; ++d) low(d) = r.real();
  r.expect("action_high");
  Eigen::VectorXd high(action_dim);
  for (int d = 0; d < action_dim; ++d) high(d) = r.real();

  TrainingConfig c;
  auto read_config = [&](const std::string& key) {
    r.expect("config");
    r.expect(key);
  };
  read_config("gamma");
  c.gamma = r.real();
  read_config("alpha");
  c.alpha = r.real();
  read_config("n_networks");
  c.n_networks = static_cast<int>(r.integer());
  read_config("q_operator");
  c.q_operator = parse_q_operator(r.word());
  read_config("minmax_lambda");
  c.minmax_lambda = r.real();
  read_config("noise_std");
  c.noise_std = r.real();
  read_config("target_interval");
  c.target_interval = static_cast<int>(r.integer());
  read_config("batch_size");
  c.batch_size = static_cast<int>(r.integer());
  read_config("updates_per_step");
  c.updates_per_step = static_cast<int>(r.integer());
  read_config("actor_lr");
  c.actor_lr = r.real();
  read_config("critic_lr");
  c.critic_lr = r.real();
  read_config("warmup_steps");
  c.warmup_steps = static_cast<int>(r.integer());
  read_config("total_steps");
  c.total_steps = r.integer();
  read_config("hidden");
  const long hidden_count = r.integer();
  c.hidden.clear();
  for (long i = 0; i < hidden_count; ++i)
    c.hidden.push_back(static_cast<int>(r.integer()));
  read_config("buffer_capacity");
  c.buffer_capacity = static_cast<int>(r.integer());
  read_config("target_smoothing");
  c.target_smoothing = r.integer() != 0;
  read_config("smoothing_std");
  c.smoothing_std = r.real();
  read_config("smoothing_clip");
  c.smoothing_clip = r.real();
  read_config("per_element_penalty");
  c.per_element_penalty = r.integer() != 0;
  read_config("masked_penalty");
  c.masked_penalty = r.integer() != 0;

  Agent agent(variant, state_dim, action_dim, low, high, c, /*seed=*/0);
  agent.actor_.live = read_network(r, "actor");
  agent.actor_.target = read_network(r, "target_actor");
  for (int i = 0; i < c.n_networks; ++i)
    agent.critic_.live[i] = read_network(r, "critic_" + std::to_string(i));
  for (int i = 0; i < c.n_networks; ++i)
    agent.critic_.target[i] =
        read_network(r, "target_critic_" + std::to_string(i));
  r.expect("end");
  agent.actor_.opt = adam_init(agent.actor_.live);
  for (int i = 0; i < c.n_networks; ++i)
    agent.critic_.opt[i] = adam_init(agent.critic_.live[i]);
  return agent;
}

}  // namespace sqt
