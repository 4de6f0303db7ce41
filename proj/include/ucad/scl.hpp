#pragma once

#include <string>
#include <vector>

#include "ucad/encoder.hpp"
#include "ucad/segmenter.hpp"

namespace ucad {

struct SclConfig {
  double lambda_alpha = 1.0;  // weight on different-region pair similarity
  double lambda_beta = 1.0;   // weight on same-region pair similarity
  double learning_rate = 0.0005;
  double momentum = 0.9;  // Adam beta1
  int64_t epochs = 25;
  int64_t batch_size = 8;

  void validate() const;
};

/// One training item: an image plus its structure labels at pixel resolution.
struct SclSample {
  Image image;
  LabelMap structure;
};

/// Contrastive structure loss over unordered distinct patch-position pairs:
/// lambda_alpha * sum(cos over different-label pairs)
///   - lambda_beta * sum(cos over same-label pairs).
/// Cosines carry the eps = 1e-8 norm guard, so a pair of identical unit
/// vectors contributes 1 - O(1e-8) rather than exactly 1.
double scl_loss(const PatchFeatureMap& features, const LabelGrid& labels,
                const SclConfig& cfg);

/// Differentiable form of the same loss; `features` is an [N_p, C] node.
Var scl_loss_node(Tape& tape, Var features, const LabelGrid& labels,
                  const SclConfig& cfg);

struct TrainResult {
  PromptSet prompts;
  std::vector<double> epoch_losses;  // mean per-image normalized loss
};

/// Mini-batch Adam on the prompt set only; the encoder stays frozen. The
/// per-image loss is divided by the pair count so the step size does not
/// scale with the patch grid. Deterministic: fixed visit order, no shuffling.
TrainResult train_prompts(const Encoder& encoder, const std::vector<SclSample>& data,
                          const PromptSet& init, const SclConfig& cfg);

/// Loss trace as a JSON array of per-epoch means.
std::string loss_trace_json(const std::vector<double>& epoch_losses);

/// Mean pairwise cosine of tap-layer features, split by label agreement and
/// pooled over all images. Used to measure what prompt training did.
struct RegionCosineStats {
  double intra = 0.0;
  double inter = 0.0;
};
RegionCosineStats region_cosine_stats(const Encoder& encoder, const PromptSet& prompts,
                                      const std::vector<SclSample>& data);

}  // namespace ucad
