#include "swarm/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace swarm {
namespace {

constexpr char kMagic[8] = {'S', 'W', 'R', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

Eigen::MatrixXd relu(const Eigen::MatrixXd& z) { return z.cwiseMax(0.0); }

// Orthogonal rows/columns from the QR of a Gaussian draw, signs fixed by the
// R diagonal so the result is a deterministic function of the seed.
Eigen::MatrixXd orthogonal_init(int rows, int cols, double gain, Rng& rng) {
  const bool tall = rows >= cols;
  const int r = tall ? rows : cols;
  const int c = tall ? cols : rows;
  Eigen::MatrixXd g(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) g(i, j) = rng.normal(0.0, 1.0);

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(r, c);
  const Eigen::MatrixXd rmat = qr.matrixQR().topRows(c).triangularView<Eigen::Upper>();
  for (int j = 0; j < c; ++j)
    if (rmat(j, j) < 0.0) q.col(j) *= -1.0;

  if (!tall) q.transposeInPlace();
  return gain * q;
}

struct FlatView {
  double* data;
  long size;
};

template <class P>
std::vector<FlatView> flat_views(P& p) {
  std::vector<FlatView> out;
  visit_params(p, [&](const char*, auto& t) {
    out.push_back(FlatView{const_cast<double*>(t.data()), static_cast<long>(t.size())});
  });
  return out;
}

void write_raw(std::ofstream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_raw(std::ifstream& is, void* p, std::size_t n) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
}

template <class T>
void write_pod(std::ofstream& os, const T& v) {
  write_raw(os, &v, sizeof(T));
}

template <class T>
T read_pod(std::ifstream& is) {
  T v;
  read_raw(is, &v, sizeof(T));
  return v;
}

void write_tensor(std::ofstream& os, const std::string& name, const double* data, long rows,
                  long cols) {
  const auto len = static_cast<std::uint32_t>(name.size());
  write_pod(os, len);
  write_raw(os, name.data(), name.size());
  write_pod(os, static_cast<std::int64_t>(rows));
  write_pod(os, static_cast<std::int64_t>(cols));
  write_raw(os, data, sizeof(double) * static_cast<std::size_t>(rows * cols));
}

void read_tensor_into(std::ifstream& is, const std::string& expect_name, double* data, long rows,
                      long cols) {
  const auto len = read_pod<std::uint32_t>(is);
  std::string name(len, '\0');
  read_raw(is, name.data(), len);
  if (name != expect_name)
    throw std::runtime_error("checkpoint: tensor order mismatch, saw '" + name + "' expected '" +
                             expect_name + "'");
  const auto r = read_pod<std::int64_t>(is);
  const auto c = read_pod<std::int64_t>(is);
  if (r != rows || c != cols)
    throw std::runtime_error("checkpoint: shape mismatch for tensor '" + name + "'");
  read_raw(is, data, sizeof(double) * static_cast<std::size_t>(rows * cols));
}

}  // namespace

void PolicyParameters::clamp_log_std() {
  log_std = log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
}

int parameter_count(const PolicyParameters& p) {
  int n = 0;
  visit_params(p, [&](const char*, const auto& t) { n += static_cast<int>(t.size()); });
  return n;
}

PolicyParameters init_policy(int obs_dim, int action_dim, const Eigen::VectorXd& obs_scale,
                             const Eigen::VectorXd& action_scale, double value_scale,
                             std::uint64_t seed) {
  if (obs_scale.size() != obs_dim || action_scale.size() != action_dim)
    throw std::invalid_argument("init_policy: scale sizes must match the declared dims");
  if ((obs_scale.array() <= 0.0).any() || (action_scale.array() <= 0.0).any() ||
      value_scale <= 0.0)
    throw std::invalid_argument("init_policy: conditioning scales must be positive");

  Rng rng(seed);
  const int h = PolicyParameters::kHidden;
  PolicyParameters p;
  p.pi.w[0] = orthogonal_init(h, obs_dim, std::sqrt(2.0), rng);
  p.pi.w[1] = orthogonal_init(h, h, std::sqrt(2.0), rng);
  p.pi.w[2] = orthogonal_init(action_dim, h, 0.01, rng);
  p.vf.w[0] = orthogonal_init(h, obs_dim, std::sqrt(2.0), rng);
  p.vf.w[1] = orthogonal_init(h, h, std::sqrt(2.0), rng);
  p.vf.w[2] = orthogonal_init(1, h, 1.0, rng);
  for (int i = 0; i < 3; ++i) {
    p.pi.b[i] = Eigen::VectorXd::Zero(p.pi.w[i].rows());
    p.vf.b[i] = Eigen::VectorXd::Zero(p.vf.w[i].rows());
  }
  p.log_std = Eigen::VectorXd::Constant(action_dim, -0.5);
  p.obs_scale = obs_scale;
  p.action_scale = action_scale;
  p.value_scale = value_scale;
  return p;
}

BatchEval forward_batch(const PolicyParameters& p, const Eigen::MatrixXd& obs) {
  if (obs.rows() != p.obs_dim())
    throw std::invalid_argument("forward_batch: observation dimension mismatch");
  BatchEval ev;
  ev.x = obs.array().colwise() / p.obs_scale.array();
  ev.h1 = relu((p.pi.w[0] * ev.x).colwise() + p.pi.b[0]);
  ev.h2 = relu((p.pi.w[1] * ev.h1).colwise() + p.pi.b[1]);
  ev.mean = (p.pi.w[2] * ev.h2).colwise() + p.pi.b[2];
  ev.g1 = relu((p.vf.w[0] * ev.x).colwise() + p.vf.b[0]);
  ev.g2 = relu((p.vf.w[1] * ev.g1).colwise() + p.vf.b[1]);
  ev.value_raw = (p.vf.w[2] * ev.g2).colwise() + p.vf.b[2];
  return ev;
}

PolicyEval forward(const PolicyParameters& p, const Eigen::VectorXd& obs) {
  const BatchEval ev = forward_batch(p, obs);
  PolicyEval out;
  out.mean = ev.mean.col(0);
  out.std = p.log_std.array().exp();
  out.value = ev.value_raw(0) * p.value_scale;
  return out;
}

ParamGrads ParamGrads::zeros_like(const PolicyParameters& p) {
  ParamGrads g;
  for (int i = 0; i < 3; ++i) {
    g.pi.w[i] = Eigen::MatrixXd::Zero(p.pi.w[i].rows(), p.pi.w[i].cols());
    g.pi.b[i] = Eigen::VectorXd::Zero(p.pi.b[i].size());
    g.vf.w[i] = Eigen::MatrixXd::Zero(p.vf.w[i].rows(), p.vf.w[i].cols());
    g.vf.b[i] = Eigen::VectorXd::Zero(p.vf.b[i].size());
  }
  g.log_std = Eigen::VectorXd::Zero(p.log_std.size());
  return g;
}

void backprop(const PolicyParameters& p, const BatchEval& cache, const Eigen::MatrixXd& dmean,
              const Eigen::RowVectorXd& dvalue_raw, ParamGrads& grads) {
  // Policy trunk. ReLU mask from the stored post-activation values.
  grads.pi.w[2] += dmean * cache.h2.transpose();
  grads.pi.b[2] += dmean.rowwise().sum();
  Eigen::MatrixXd dz = (p.pi.w[2].transpose() * dmean).array() *
                       (cache.h2.array() > 0.0).cast<double>();
  grads.pi.w[1] += dz * cache.h1.transpose();
  grads.pi.b[1] += dz.rowwise().sum();
  dz = (p.pi.w[1].transpose() * dz).array() * (cache.h1.array() > 0.0).cast<double>();
  grads.pi.w[0] += dz * cache.x.transpose();
  grads.pi.b[0] += dz.rowwise().sum();

  // Value trunk.
  grads.vf.w[2] += dvalue_raw * cache.g2.transpose();
  grads.vf.b[2](0) += dvalue_raw.sum();
  Eigen::MatrixXd dg = (p.vf.w[2].transpose() * dvalue_raw).array() *
                       (cache.g2.array() > 0.0).cast<double>();
  grads.vf.w[1] += dg * cache.g1.transpose();
  grads.vf.b[1] += dg.rowwise().sum();
  dg = (p.vf.w[1].transpose() * dg).array() * (cache.g1.array() > 0.0).cast<double>();
  grads.vf.w[0] += dg * cache.x.transpose();
  grads.vf.b[0] += dg.rowwise().sum();
}

double gaussian_log_prob(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                         const Eigen::VectorXd& std) {
  constexpr double half_log_2pi = 0.9189385332046727;
  double lp = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    const double z = (x(i) - mean(i)) / std(i);
    lp += -0.5 * z * z - std::log(std(i)) - half_log_2pi;
  }
  return lp;
}

Eigen::VectorXd clip_command(const Eigen::VectorXd& physical, const PolicyParameters& p) {
  const int n = static_cast<int>(physical.size());
  Eigen::VectorXd out = physical;
  const double v_max = p.action_scale(0);
  const double speed = out.head(n - 1).norm();
  if (speed > v_max) out.head(n - 1) *= v_max / speed;
  const double w_max = p.action_scale(n - 1);
  out(n - 1) = std::clamp(out(n - 1), -w_max, w_max);
  return out;
}

ActionSample sample_action(const PolicyParameters& p, const Eigen::VectorXd& obs, Rng& rng) {
  const PolicyEval ev = forward(p, obs);
  ActionSample s;
  s.raw.resize(ev.mean.size());
  for (int i = 0; i < ev.mean.size(); ++i) s.raw(i) = rng.normal(ev.mean(i), ev.std(i));
  s.log_prob = gaussian_log_prob(s.raw, ev.mean, ev.std);
  s.action = clip_command(s.raw.cwiseProduct(p.action_scale), p);
  s.value = ev.value;
  return s;
}

Eigen::VectorXd act_deterministic(const PolicyParameters& p, const Eigen::VectorXd& obs) {
  const PolicyEval ev = forward(p, obs);
  return clip_command(ev.mean.cwiseProduct(p.action_scale), p);
}

AdamState AdamState::zeros_like(const PolicyParameters& p) {
  AdamState st;
  visit_params(p, [&](const char*, const auto& t) {
    st.m.push_back(Eigen::ArrayXd::Zero(t.size()));
    st.v.push_back(Eigen::ArrayXd::Zero(t.size()));
  });
  st.t = 0;
  return st;
}

void adam_step(PolicyParameters& p, AdamState& state, const ParamGrads& grads, double lr,
               double beta1, double beta2, double eps) {
  const auto params = flat_views(p);
  const auto gview = flat_views(const_cast<ParamGrads&>(grads));
  if (params.size() != state.m.size())
    throw std::invalid_argument("adam_step: optimizer state does not match the parameter set");

  state.t += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));

  for (std::size_t k = 0; k < params.size(); ++k) {
    Eigen::Map<Eigen::ArrayXd> w(params[k].data, params[k].size);
    Eigen::Map<const Eigen::ArrayXd> g(gview[k].data, gview[k].size);
    state.m[k] = beta1 * state.m[k] + (1.0 - beta1) * g;
    state.v[k] = beta2 * state.v[k] + (1.0 - beta2) * g.square();
    w -= lr * (state.m[k] / bc1) / ((state.v[k] / bc2).sqrt() + eps);
  }
  p.clamp_log_std();
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");

  write_raw(os, kMagic, sizeof(kMagic));
  write_pod(os, kVersion);
  write_pod(os, ckpt.config_fingerprint);
  write_pod(os, ckpt.iteration);
  write_pod(os, ckpt.steps_done);
  write_pod(os, static_cast<std::int32_t>(ckpt.params.obs_dim()));
  write_pod(os, static_cast<std::int32_t>(ckpt.params.action_dim()));
  write_pod(os, ckpt.params.value_scale);

  visit_params(ckpt.params, [&](const char* name, const auto& t) {
    write_tensor(os, name, t.data(), t.rows(), t.cols());
  });
  write_tensor(os, "obs_scale", ckpt.params.obs_scale.data(), ckpt.params.obs_scale.size(), 1);
  write_tensor(os, "action_scale", ckpt.params.action_scale.data(),
               ckpt.params.action_scale.size(), 1);

  write_pod(os, static_cast<std::uint8_t>(ckpt.has_adam ? 1 : 0));
  if (ckpt.has_adam) {
    write_pod(os, static_cast<std::int64_t>(ckpt.adam.t));
    for (const auto& a : ckpt.adam.m)
      write_raw(os, a.data(), sizeof(double) * static_cast<std::size_t>(a.size()));
    for (const auto& a : ckpt.adam.v)
      write_raw(os, a.data(), sizeof(double) * static_cast<std::size_t>(a.size()));
  }

  write_pod(os, static_cast<std::uint64_t>(ckpt.trainer_state.size()));
  write_raw(os, ckpt.trainer_state.data(), ckpt.trainer_state.size());
  if (!os) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open '" + path + "'");

  char magic[8];
  read_raw(is, magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in '" + path + "'");
  if (read_pod<std::uint32_t>(is) != kVersion)
    throw std::runtime_error("checkpoint: unsupported version in '" + path + "'");

  Checkpoint ckpt;
  ckpt.config_fingerprint = read_pod<std::uint64_t>(is);
  ckpt.iteration = read_pod<std::int64_t>(is);
  ckpt.steps_done = read_pod<std::int64_t>(is);
  const auto obs_dim = read_pod<std::int32_t>(is);
  const auto action_dim = read_pod<std::int32_t>(is);
  const double value_scale = read_pod<double>(is);

  // Shapes are implied by the dims; allocate, then fill in visit order.
  PolicyParameters& p = ckpt.params;
  const int h = PolicyParameters::kHidden;
  p.pi.w[0].resize(h, obs_dim);
  p.pi.w[1].resize(h, h);
  p.pi.w[2].resize(action_dim, h);
  p.vf.w[0].resize(h, obs_dim);
  p.vf.w[1].resize(h, h);
  p.vf.w[2].resize(1, h);
  for (int i = 0; i < 3; ++i) {
    p.pi.b[i].resize(p.pi.w[i].rows());
    p.vf.b[i].resize(p.vf.w[i].rows());
  }
  p.log_std.resize(action_dim);
  p.value_scale = value_scale;

  visit_params(p, [&](const char* name, auto& t) {
    read_tensor_into(is, name, t.data(), t.rows(), t.cols());
  });
  p.obs_scale.resize(obs_dim);
  p.action_scale.resize(action_dim);
  read_tensor_into(is, "obs_scale", p.obs_scale.data(), obs_dim, 1);
  read_tensor_into(is, "action_scale", p.action_scale.data(), action_dim, 1);

  ckpt.has_adam = read_pod<std::uint8_t>(is) != 0;
  if (ckpt.has_adam) {
    ckpt.adam = AdamState::zeros_like(p);
    ckpt.adam.t = read_pod<std::int64_t>(is);
    for (auto& a : ckpt.adam.m)
      read_raw(is, a.data(), sizeof(double) * static_cast<std::size_t>(a.size()));
    for (auto& a : ckpt.adam.v)
      read_raw(is, a.data(), sizeof(double) * static_cast<std::size_t>(a.size()));
  }

  const auto blob = read_pod<std::uint64_t>(is);
  ckpt.trainer_state.resize(blob);
  if (blob > 0) read_raw(is, ckpt.trainer_state.data(), blob);
  return ckpt;
}

}  // namespace swarm
