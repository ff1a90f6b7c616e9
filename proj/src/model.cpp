#include "tae/model.hpp"

#include <sstream>
#include <thread>

#include "tae/rng.hpp"

namespace tae {

namespace {

// Parameter layout shared by both primitive nets.
struct LayerSpec {
  const char* name;
  int co, ci, k;  // k == 0 marks a bias vector of length co
};

std::vector<LayerSpec> layer_specs(const ArchDesc& d) {
  const int c = d.channels;
  return {
      {"psi.0.w", c, 4, 3},  {"psi.0.b", c, 0, 0}, {"psi.1.w", c, c, 3},
      {"psi.1.b", c, 0, 0},  {"psi.2.w", c, c, 3}, {"psi.2.b", c, 0, 0},
      {"psi.3.w", c, c, 3},  {"psi.3.b", c, 0, 0}, {"phi.0.w", c, 1, 3},
      {"phi.0.b", c, 0, 0},  {"phi.1.w", c, c, 3}, {"phi.1.b", c, 0, 0},
      {"phi.2.w", c, c, 3},  {"phi.2.b", c, 0, 0}, {"dec.0.w", c, c + 1, 3},
      {"dec.0.b", c, 0, 0},  {"dec.1.w", 1, c, 3}, {"dec.1.b", 1, 0, 0},
  };
}

enum ParamIndex {
  kPsi0W, kPsi0B, kPsi1W, kPsi1B, kPsi2W, kPsi2B, kPsi3W, kPsi3B,
  kPhi0W, kPhi0B, kPhi1W, kPhi1B, kPhi2W, kPhi2B, kDec0W, kDec0B, kDec1W, kDec1B,
  kParamCount
};

}  // namespace

const NdArray<float>& Net::tensor(const std::string& name) const {
  for (const auto& [n, t] : params)
    if (n == name) return t;
  throw DataError("missing tensor " + name);
}

Net make_net(const ArchDesc& desc, uint64_t seed) {
  Net net;
  Rng rng(seed);
  for (const LayerSpec& s : layer_specs(desc)) {
    if (s.k == 0) {
      net.params.emplace_back(s.name, NdArray<float>({s.co}));
      continue;
    }
    NdArray<float> w({s.co, s.ci, s.k, s.k});
    const double bound = 1.0 / std::sqrt(double(s.ci) * s.k * s.k);
    for (size_t i = 0; i < w.size(); ++i) w[i] = float(rng.uniform(-bound, bound));
    net.params.emplace_back(s.name, std::move(w));
  }
  return net;
}

int64_t net_param_count(const Net& net) {
  int64_t n = 0;
  for (const auto& [name, t] : net.params) n += int64_t(t.size());
  return n;
}

std::string ArchDesc::to_text() const {
  std::ostringstream os;
  os << "format=tae-ckpt-1\n";
  os << "k_rotations=" << k_rotations << "\n";
  os << "channels=" << channels << "\n";
  os << "ee_kernel=" << ee_kernel << "\n";
  os << "scene_res=" << scene_res << "\n";
  os << "ee_res=" << ee_res << "\n";
  os << "depth_scale=" << depth_scale << "\n";
  os << "cross_scale=" << cross_scale << "\n";
  os << "init_seed=" << init_seed << "\n";
  os << "trained=" << trained << "\n";
  os << "param_count=" << param_count << "\n";
  os << "arch=psi:conv3x3s2x4;phi:conv3x3s1x3;dec:cat(cross,phi)+conv3x3x2\n";
  return os.str();
}

ArchDesc ArchDesc::from_text(const std::string& text) {
  ArchDesc d;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    if (key == "k_rotations") d.k_rotations = std::stoi(val);
    else if (key == "channels") d.channels = std::stoi(val);
    else if (key == "ee_kernel") d.ee_kernel = std::stoi(val);
    else if (key == "scene_res") d.scene_res = std::stoi(val);
    else if (key == "ee_res") d.ee_res = std::stoi(val);
    else if (key == "depth_scale") d.depth_scale = std::stof(val);
    else if (key == "cross_scale") d.cross_scale = std::stof(val);
    else if (key == "init_seed") d.init_seed = std::stoull(val);
    else if (key == "trained") d.trained = val;
    else if (key == "param_count") d.param_count = std::stoll(val);
  }
  return d;
}

NdArray<float> ee_to_tensor(const EndEffectorRepr& e, const ArchDesc& desc) {
  const int n = e.depth_open.width;
  if (n != desc.ee_res || e.depth_open.height != n)
    throw std::invalid_argument("ee_to_tensor: wrong resolution");
  NdArray<float> t({4, n, n});
  for (int k = 0; k < 4; ++k) {
    const GridMap& m = e.channel(k);
    const bool is_depth = (k % 2 == 0);
    float* dst = t.data() + size_t(k) * n * n;
    for (size_t i = 0; i < m.values.size(); ++i)
      dst[i] = is_depth ? m.values[i] * desc.depth_scale : m.values[i];
  }
  return t;
}

NdArray<float> scene_to_tensor(const SceneObs& s, const ArchDesc& desc) {
  const int n = s.height.width;
  if (n != desc.scene_res || s.height.height != n)
    throw std::invalid_argument("scene_to_tensor: wrong resolution");
  NdArray<float> t({1, n, n});
  for (size_t i = 0; i < s.height.values.size(); ++i)
    t[i] = s.height.values[i] * desc.depth_scale;
  return t;
}

EndEffectorRepr rotate_ee(const EndEffectorRepr& e, double angle) {
  EndEffectorRepr out;
  out.depth_open = rotate_map(e.depth_open, angle, Resample::bilinear);
  out.mask_open = rotate_map(e.mask_open, angle, Resample::nearest);
  out.depth_closed = rotate_map(e.depth_closed, angle, Resample::bilinear);
  out.mask_closed = rotate_map(e.mask_closed, angle, Resample::nearest);
  return out;
}

namespace {

std::vector<NodePtr<float>> make_leaves(const Net& net, bool requires_grad) {
  std::vector<NodePtr<float>> leaves;
  leaves.reserve(net.params.size());
  for (const auto& [name, t] : net.params) leaves.push_back(make_leaf(t, requires_grad));
  return leaves;
}

NodePtr<float> psi_forward(const std::vector<NodePtr<float>>& p, const NodePtr<float>& x) {
  auto h = relu(conv2d(x, p[kPsi0W], p[kPsi0B], 2, Padding::same));
  h = relu(conv2d(h, p[kPsi1W], p[kPsi1B], 2, Padding::same));
  h = relu(conv2d(h, p[kPsi2W], p[kPsi2B], 2, Padding::same));
  return conv2d(h, p[kPsi3W], p[kPsi3B], 2, Padding::same);
}

NodePtr<float> phi_forward(const std::vector<NodePtr<float>>& p, const NodePtr<float>& s) {
  auto h = relu(conv2d(s, p[kPhi0W], p[kPhi0B], 1, Padding::same));
  h = relu(conv2d(h, p[kPhi1W], p[kPhi1B], 1, Padding::same));
  return relu(conv2d(h, p[kPhi2W], p[kPhi2B], 1, Padding::same));
}

NodePtr<float> decode(const std::vector<NodePtr<float>>& p, const NodePtr<float>& cross_map,
                      const NodePtr<float>& phi_feat, const ArchDesc& desc) {
  auto d = concat_channels(scale(cross_map, desc.cross_scale), phi_feat);
  d = relu(conv2d(d, p[kDec0W], p[kDec0B], 1, Padding::same));
  return conv2d(d, p[kDec1W], p[kDec1B], 1, Padding::same);
}

}  // namespace

ForwardHandles begin_forward(const Net& net, const SceneObs& s, const ArchDesc& desc) {
  ForwardHandles fh;
  fh.leaves = make_leaves(net, false);
  fh.phi_feat = phi_forward(fh.leaves, make_leaf(scene_to_tensor(s, desc), false));
  return fh;
}

NodePtr<float> slice_logits(const ForwardHandles& fh, const NdArray<float>& ee_rotated,
                            const ArchDesc& desc) {
  auto psi = psi_forward(fh.leaves, make_leaf(ee_rotated, false));
  auto cross = cross_convolve(fh.phi_feat, psi);
  return decode(fh.leaves, cross, fh.phi_feat, desc);
}

QMap forward_q(const Net& net, const EndEffectorRepr& e, const SceneObs& s,
               AngleCoding coding, const ArchDesc& desc, int threads) {
  const int K = desc.k_rotations, H = desc.scene_res, W = desc.scene_res;
  QMap q;
  q.h = H;
  q.w = W;
  q.k = K;
  q.probs = NdArray<float>({H, W, K});
  q.logits = NdArray<float>({H, W, K});

  const ForwardHandles fh = begin_forward(net, s, desc);
  const double step = angle_step(coding, K);

  auto run_slice = [&](int k) {
    const EndEffectorRepr ek = rotate_ee(e, k * step);
    const NodePtr<float> logits = slice_logits(fh, ee_to_tensor(ek, desc), desc);
    const float* src = logits->value.data();  // [1,H,W]
    for (int i = 0; i < H; ++i)
      for (int j = 0; j < W; ++j) {
        const float z = src[size_t(i) * W + j];
        const size_t at = (size_t(i) * W + j) * K + k;
        q.logits[at] = z;
        q.probs[at] = float(sigmoid(z));
      }
  };

  if (threads <= 1) {
    for (int k = 0; k < K; ++k) run_slice(k);
  } else {
    std::vector<std::thread> pool;
    const int nt = std::min(threads, K);
    for (int t = 0; t < nt; ++t)
      pool.emplace_back([&, t] {
        for (int k = t; k < K; k += nt) run_slice(k);
      });
    for (auto& th : pool) th.join();
  }
  return q;
}

namespace {

struct ItemResult {
  std::vector<NdArray<float>> grads;
  float loss = 0.0f;
};

ItemResult run_item(const Net& net, const TrainItem& item, const ArchDesc& desc,
                    bool want_grads) {
  ItemResult r;
  auto leaves = make_leaves(net, want_grads);
  auto scene = make_leaf(item.scene, false);
  auto ee = make_leaf(item.ee, false);
  auto phi = phi_forward(leaves, scene);
  auto psi = psi_forward(leaves, ee);
  auto logits = decode(leaves, cross_convolve(phi, psi), phi, desc);
  const size_t flat = size_t(item.i) * desc.scene_res + item.j;
  auto loss = bce_at_index(logits, flat, item.label);
  r.loss = loss->value[0];
  if (want_grads) {
    backward(loss);
    r.grads.reserve(leaves.size());
    for (auto& leaf : leaves) {
      if (leaf->grad.v.empty()) leaf->grad = NdArray<float>(leaf->value.shape);
      r.grads.push_back(std::move(leaf->grad));
    }
  }
  return r;
}

std::vector<ItemResult> run_batch(const Net& net, const std::vector<TrainItem>& batch,
                                  const ArchDesc& desc, bool want_grads, int threads) {
  std::vector<ItemResult> results(batch.size());
  if (threads <= 1 || batch.size() <= 1) {
    for (size_t i = 0; i < batch.size(); ++i)
      results[i] = run_item(net, batch[i], desc, want_grads);
  } else {
    const int nt = int(std::min<size_t>(threads, batch.size()));
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t)
      pool.emplace_back([&, t] {
        for (size_t i = t; i < batch.size(); i += size_t(nt))
          results[i] = run_item(net, batch[i], desc, want_grads);
      });
    for (auto& th : pool) th.join();
  }
  return results;
}

}  // namespace

float train_step(Net& net, AdamState<float>& adam, const std::vector<TrainItem>& batch,
                 const ArchDesc& desc, int threads) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  auto results = run_batch(net, batch, desc, true, threads);

  // Mean gradient accumulated in a fixed order for bit determinism.
  std::vector<NdArray<float>> grad_sum;
  grad_sum.reserve(net.params.size());
  for (const auto& [name, t] : net.params) grad_sum.emplace_back(t.shape);
  const float inv = 1.0f / float(batch.size());
  float loss_sum = 0.0f;
  for (const ItemResult& r : results) loss_sum += r.loss;
  for (size_t p = 0; p < grad_sum.size(); ++p)
    for (const ItemResult& r : results)
      for (size_t i = 0; i < grad_sum[p].size(); ++i) grad_sum[p][i] += r.grads[p][i] * inv;

  std::vector<NdArray<float>*> params;
  std::vector<const NdArray<float>*> grads;
  for (size_t p = 0; p < net.params.size(); ++p) {
    params.push_back(&net.params[p].second);
    grads.push_back(&grad_sum[p]);
  }
  adam.step(params, grads);
  return loss_sum * inv;
}

float eval_loss(const Net& net, const std::vector<TrainItem>& batch, const ArchDesc& desc,
                int threads) {
  if (batch.empty()) return 0.0f;
  auto results = run_batch(net, batch, desc, false, threads);
  float s = 0.0f;
  for (const ItemResult& r : results) s += r.loss;
  return s / float(batch.size());
}

TaeModel TaeModel::init(uint64_t seed) {
  TaeModel m;
  m.desc.init_seed = seed;
  m.grasp_net = make_net(m.desc, mix_seed(seed, 0));
  m.push_net = make_net(m.desc, mix_seed(seed, 1));
  m.desc.param_count = net_param_count(m.grasp_net) + net_param_count(m.push_net);
  return m;
}

void TaeModel::save(const std::filesystem::path& path) const {
  NamedTensors all;
  for (const auto& [name, t] : grasp_net.params) all.emplace_back("grasp/" + name, t);
  for (const auto& [name, t] : push_net.params) all.emplace_back("push/" + name, t);
  write_tensor_file(path, all);
  std::ofstream f(path.string() + ".desc", std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string() + ".desc");
  f << desc.to_text();
}

TaeModel TaeModel::load(const std::filesystem::path& path) {
  TaeModel m;
  std::ifstream f(path.string() + ".desc");
  if (!f) throw DataError("missing descriptor " + path.string() + ".desc");
  std::stringstream ss;
  ss << f.rdbuf();
  m.desc = ArchDesc::from_text(ss.str());

  int64_t count = 0;
  for (auto& [name, t] : read_tensor_file(path)) {
    count += int64_t(t.size());
    if (name.rfind("grasp/", 0) == 0)
      m.grasp_net.params.emplace_back(name.substr(6), std::move(t));
    else if (name.rfind("push/", 0) == 0)
      m.push_net.params.emplace_back(name.substr(5), std::move(t));
    else
      throw DataError("unexpected tensor " + name + " in " + path.string());
  }
  if (count != m.desc.param_count)
    throw DataError("checkpoint parameter count mismatch in " + path.string());
  return m;
}

}  // namespace tae
