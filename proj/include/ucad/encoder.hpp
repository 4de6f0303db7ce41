#pragma once

#include <cstdint>
#include <vector>

#include "ucad/autodiff.hpp"
#include "ucad/image.hpp"
#include "ucad/tensor.hpp"

namespace ucad {

enum class PromptMode {
  kAdditiveBroadcast,  // one C-dim vector per layer, added to every token
  kPrependTokens,      // per-layer token rows prepended to the sequence
};

struct EncoderConfig {
  int64_t patch_size = 8;
  int64_t embed_dim = 64;
  int64_t num_layers = 6;
  int64_t num_heads = 4;
  int64_t tap_layer = 3;  // 1-based; features are read after this block
  PromptMode prompt_mode = PromptMode::kAdditiveBroadcast;
  int64_t input_channels = 1;
  uint64_t seed = 1;

  void validate() const;
  int64_t head_dim() const { return embed_dim / num_heads; }
  int64_t token_width() const { return patch_size * patch_size * input_channels; }
};

/// Patch-grid features from the tap layer: one row per patch, C columns.
struct PatchFeatureMap {
  int64_t grid_h = 0;
  int64_t grid_w = 0;
  Tensor features;  // [grid_h*grid_w, C]

  int64_t num_patches() const { return grid_h * grid_w; }
};

/// Learnable per-layer prompts, one entry per layer 1..tap_layer. Additive
/// mode stores shape [C]; prepend mode stores [tokens, C]. Layers loaded from
/// a memory file come back flattened 1-D and are reshaped at use.
struct PromptSet {
  std::vector<Tensor> layers;
  bool trainable = true;

  bool empty() const { return layers.empty(); }
};

/// Zero-initialized prompts matching the config (additive mode: one [C]
/// vector per layer up to tap_layer; prepend mode: [tokens, C] per layer).
PromptSet zero_prompts(const EncoderConfig& cfg, int64_t prepend_tokens = 2);

/// Splits the image into non-overlapping patches. Row r*grid_w + c holds the
/// flattened (row-major, channel-last) pixels of patch (r, c).
Tensor patchify(const Image& image, const EncoderConfig& cfg);

/// Deterministic frozen transformer. Weights are fixed by (config, seed) at
/// construction and never change; encode is safe to call concurrently.
class Encoder {
 public:
  explicit Encoder(EncoderConfig cfg);

  const EncoderConfig& config() const { return cfg_; }
  /// Hash of config + all weights; memory files record it so a bank is never
  /// paired with a different backbone.
  uint64_t fingerprint() const { return fingerprint_; }

  /// Tap-layer features from the pure frozen pass (no prompts).
  PatchFeatureMap encode(const Image& image) const;
  /// Tap-layer features with per-layer prompts injected at layers 1..tap.
  PatchFeatureMap encode(const Image& image, const PromptSet& prompts) const;

  /// Differentiable forward pass; `prompts` must hold tap_layer vars (or be
  /// empty for the frozen pass). Returns the [N_p, C] feature node.
  Var forward(Tape& tape, const Image& image, const std::vector<Var>& prompts) const;

  int64_t grid_h(const Image& image) const { return image.height / cfg_.patch_size; }
  int64_t grid_w(const Image& image) const { return image.width / cfg_.patch_size; }

 private:
  struct Block {
    Tensor ln1_gain, ln1_bias;
    std::vector<Tensor> wq, wk, wv;  // per head, [C, head_dim]
    Tensor wo, bo;                   // [C, C], [C]
    Tensor ln2_gain, ln2_bias;
    Tensor w1, b1;                   // [C, 4C], [4C]
    Tensor w2, b2;                   // [4C, C], [C]
  };

  Tensor positional_encoding(int64_t num_patches) const;
  Var run_block(Tape& tape, const Block& blk, Var x) const;

  EncoderConfig cfg_;
  Tensor w_embed_, b_embed_;
  std::vector<Block> blocks_;
  uint64_t fingerprint_ = 0;
};

}  // namespace ucad
