#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tae/repr.hpp"
#include "tae/tensor.hpp"

namespace tae {

// How the K rotation slots map onto angles. Bi-manual grasps span half a
// turn so the arms cannot cross; everything else spans the full turn.
enum class AngleCoding { full_turn, half_turn };

inline double angle_step(AngleCoding coding, int k_rotations) {
  return (coding == AngleCoding::full_turn ? 2.0 * M_PI : M_PI) / k_rotations;
}

struct ArchDesc {
  int k_rotations = 16;
  int channels = 16;
  int ee_kernel = 7;
  int scene_res = 64;
  int ee_res = 112;
  float depth_scale = 20.0f;  // input normalization for depth channels
  float cross_scale = 1.0f / 28.0f;
  uint64_t init_seed = 0;
  std::string trained;  // comma list of trained nets, e.g. "grasp,push"
  int64_t param_count = 0;

  std::string to_text() const;
  static ArchDesc from_text(const std::string& text);
};

// Parameters of one action-primitive network.
struct Net {
  NamedTensors params;  // fixed order; names like "psi.0.w"
  const NdArray<float>& tensor(const std::string& name) const;
};

Net make_net(const ArchDesc& desc, uint64_t seed);
int64_t net_param_count(const Net& net);

// Dense action-value volume; probs/logits stored channel-last [H][W][K].
struct QMap {
  int h = 0, w = 0, k = 0;
  NdArray<float> probs;
  NdArray<float> logits;
  float prob_at(int i, int j, int kk) const { return probs[(size_t(i) * w + j) * k + kk]; }
  float logit_at(int i, int j, int kk) const { return logits[(size_t(i) * w + j) * k + kk]; }
};

NdArray<float> ee_to_tensor(const EndEffectorRepr& e, const ArchDesc& desc);
NdArray<float> scene_to_tensor(const SceneObs& s, const ArchDesc& desc);

// Rotates the four end-effector channels about the map center: bilinear for
// depth, nearest for masks.
EndEffectorRepr rotate_ee(const EndEffectorRepr& e, double angle);

// Scene features phi(s): [C,64,64], resolution-preserving.
// End-effector features psi(e): [C,7,7].
// Kept separate so the scene pass can be shared across the K rotations.
struct ForwardHandles {
  std::vector<NodePtr<float>> leaves;  // parameter leaves, same order as Net
  NodePtr<float> phi_feat;
};

ForwardHandles begin_forward(const Net& net, const SceneObs& s, const ArchDesc& desc);
NodePtr<float> slice_logits(const ForwardHandles& fh, const NdArray<float>& ee_rotated,
                            const ArchDesc& desc);

// Full K-slice action-value map (sigmoid probabilities plus raw logits).
QMap forward_q(const Net& net, const EndEffectorRepr& e, const SceneObs& s,
               AngleCoding coding, const ArchDesc& desc, int threads = 1);

// One supervised example, already rotated to its action orientation.
struct TrainItem {
  NdArray<float> ee;     // [4,112,112]
  NdArray<float> scene;  // [1,64,64]
  int i = 0, j = 0;
  int label = 0;
};

// One Adam update on the mean BCE over the batch. Returns the mean loss.
float train_step(Net& net, AdamState<float>& adam, const std::vector<TrainItem>& batch,
                 const ArchDesc& desc, int threads = 1);

// Mean BCE without updating parameters.
float eval_loss(const Net& net, const std::vector<TrainItem>& batch, const ArchDesc& desc,
                int threads = 1);

// Checkpoint = RTW1 tensor file (nets under "grasp/" and "push/" prefixes)
// plus a plain-text descriptor at path + ".desc".
struct TaeModel {
  ArchDesc desc;
  Net grasp_net;
  Net push_net;

  static TaeModel init(uint64_t seed);
  void save(const std::filesystem::path& path) const;
  static TaeModel load(const std::filesystem::path& path);
  Net& net_for_grasp() { return grasp_net; }
  Net& net_for_push() { return push_net; }
};

}  // namespace tae
