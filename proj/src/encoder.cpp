#include "ucad/encoder.hpp"

#include <cmath>
#include <stdexcept>

#include "ucad/rng.hpp"

namespace ucad {
namespace {

constexpr uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr uint64_t kFnvPrime = 1099511628211ULL;

void fnv_bytes(uint64_t& h, const void* data, size_t len) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

void fnv_u64(uint64_t& h, uint64_t v) { fnv_bytes(&h, &v, sizeof(v)); }

void fnv_tensor(uint64_t& h, const Tensor& t) {
  fnv_bytes(&h, t.ptr(), static_cast<size_t>(t.size()) * sizeof(double));
}

Tensor random_matrix(Rng& rng, int64_t rows, int64_t cols, double scale) {
  std::vector<double> data(static_cast<size_t>(rows * cols));
  for (double& v : data) v = rng.uniform(-scale, scale);
  return Tensor::from_data_unchecked({rows, cols}, std::move(data));
}

Tensor random_vector(Rng& rng, int64_t n, double scale) {
  std::vector<double> data(static_cast<size_t>(n));
  for (double& v : data) v = rng.uniform(-scale, scale);
  return Tensor::from_data_unchecked({n}, std::move(data));
}

}  // namespace

void EncoderConfig::validate() const {
  if (patch_size < 1) throw std::invalid_argument("encoder config: patch_size must be >= 1");
  if (embed_dim < 1 || num_layers < 1 || num_heads < 1 || input_channels < 1) {
    throw std::invalid_argument("encoder config: extents must be positive");
  }
  if (embed_dim % num_heads != 0) {
    throw std::invalid_argument("encoder config: embed_dim must be divisible by num_heads");
  }
  if (tap_layer < 1 || tap_layer > num_layers) {
    throw std::invalid_argument("encoder config: tap_layer out of [1, num_layers]");
  }
}

PromptSet zero_prompts(const EncoderConfig& cfg, int64_t prepend_tokens) {
  cfg.validate();
  PromptSet ps;
  for (int64_t l = 0; l < cfg.tap_layer; ++l) {
    if (cfg.prompt_mode == PromptMode::kAdditiveBroadcast) {
      ps.layers.push_back(Tensor::zeros({cfg.embed_dim}));
    } else {
      ps.layers.push_back(Tensor::zeros({prepend_tokens, cfg.embed_dim}));
    }
  }
  return ps;
}

Tensor patchify(const Image& image, const EncoderConfig& cfg) {
  const int64_t p = cfg.patch_size;
  if (image.height % p != 0 || image.width % p != 0) {
    throw std::invalid_argument("patchify: image extents not divisible by patch size");
  }
  if (image.channels != cfg.input_channels) {
    throw std::invalid_argument("patchify: channel count does not match config");
  }
  if (static_cast<int64_t>(image.pixels.size()) !=
      image.height * image.width * image.channels) {
    throw std::invalid_argument("patchify: pixel buffer size mismatch");
  }
  const int64_t gh = image.height / p, gw = image.width / p;
  const int64_t tw = cfg.token_width();
  std::vector<double> tokens(static_cast<size_t>(gh * gw * tw));
  for (int64_t r = 0; r < gh; ++r) {
    for (int64_t c = 0; c < gw; ++c) {
      double* row = tokens.data() + (r * gw + c) * tw;
      int64_t k = 0;
      for (int64_t py = 0; py < p; ++py) {
        for (int64_t px = 0; px < p; ++px) {
          for (int64_t ch = 0; ch < image.channels; ++ch) {
            row[k++] = image.at(r * p + py, c * p + px, ch);
          }
        }
      }
    }
  }
  return Tensor::from_data({gh * gw, tw}, std::move(tokens));
}

Encoder::Encoder(EncoderConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(cfg_.seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg_.embed_dim));
  const int64_t c = cfg_.embed_dim, dh = cfg_.head_dim(), hidden = 4 * c;

  w_embed_ = random_matrix(rng, cfg_.token_width(), c, scale);
  b_embed_ = Tensor::zeros({c});

  blocks_.resize(static_cast<size_t>(cfg_.num_layers));
  for (auto& blk : blocks_) {
    blk.ln1_gain = Tensor::full({c}, 1.0);
    blk.ln1_bias = Tensor::zeros({c});
    for (int64_t h = 0; h < cfg_.num_heads; ++h) {
      blk.wq.push_back(random_matrix(rng, c, dh, scale));
      blk.wk.push_back(random_matrix(rng, c, dh, scale));
      blk.wv.push_back(random_matrix(rng, c, dh, scale));
    }
    blk.wo = random_matrix(rng, c, c, scale);
    blk.bo = Tensor::zeros({c});
    blk.ln2_gain = Tensor::full({c}, 1.0);
    blk.ln2_bias = Tensor::zeros({c});
    blk.w1 = random_matrix(rng, c, hidden, scale);
    blk.b1 = Tensor::zeros({hidden});
    blk.w2 = random_matrix(rng, hidden, c, scale);
    blk.b2 = Tensor::zeros({c});
  }

  uint64_t h = kFnvOffset;
  fnv_u64(h, static_cast<uint64_t>(cfg_.patch_size));
  fnv_u64(h, static_cast<uint64_t>(cfg_.embed_dim));
  fnv_u64(h, static_cast<uint64_t>(cfg_.num_layers));
  fnv_u64(h, static_cast<uint64_t>(cfg_.num_heads));
  fnv_u64(h, static_cast<uint64_t>(cfg_.tap_layer));
  fnv_u64(h, static_cast<uint64_t>(cfg_.prompt_mode));
  fnv_u64(h, static_cast<uint64_t>(cfg_.input_channels));
  fnv_u64(h, cfg_.seed);
  fnv_tensor(h, w_embed_);
  fnv_tensor(h, b_embed_);
  for (const auto& blk : blocks_) {
    fnv_tensor(h, blk.ln1_gain);
    fnv_tensor(h, blk.ln1_bias);
    for (int64_t hd = 0; hd < cfg_.num_heads; ++hd) {
      fnv_tensor(h, blk.wq[hd]);
      fnv_tensor(h, blk.wk[hd]);
      fnv_tensor(h, blk.wv[hd]);
    }
    fnv_tensor(h, blk.wo);
    fnv_tensor(h, blk.bo);
    fnv_tensor(h, blk.ln2_gain);
    fnv_tensor(h, blk.ln2_bias);
    fnv_tensor(h, blk.w1);
    fnv_tensor(h, blk.b1);
    fnv_tensor(h, blk.w2);
    fnv_tensor(h, blk.b2);
  }
  fingerprint_ = h;
}

Tensor Encoder::positional_encoding(int64_t num_patches) const {
  const int64_t c = cfg_.embed_dim;
  std::vector<double> pe(static_cast<size_t>(num_patches * c));
  for (int64_t p = 0; p < num_patches; ++p) {
    for (int64_t j = 0; j < c; j += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(j) / static_cast<double>(c));
      pe[p * c + j] = std::sin(static_cast<double>(p) * freq);
      if (j + 1 < c) pe[p * c + j + 1] = std::cos(static_cast<double>(p) * freq);
    }
  }
  return Tensor::from_data_unchecked({num_patches, c}, std::move(pe));
}

Var Encoder::run_block(Tape& tape, const Block& blk, Var x) const {
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(cfg_.head_dim()));
  Var normed = layer_norm_rows(x, tape.constant(blk.ln1_gain), tape.constant(blk.ln1_bias));
  std::vector<Var> heads;
  heads.reserve(static_cast<size_t>(cfg_.num_heads));
  for (int64_t h = 0; h < cfg_.num_heads; ++h) {
    Var q = matmul(normed, tape.constant(blk.wq[h]));
    Var k = matmul(normed, tape.constant(blk.wk[h]));
    Var v = matmul(normed, tape.constant(blk.wv[h]));
    Var attn = softmax_rows(scale(matmul_nt(q, k), inv_sqrt_dh));
    heads.push_back(matmul(attn, v));
  }
  Var merged = cfg_.num_heads == 1 ? heads[0] : concat_cols(heads);
  Var proj = broadcast_add_row(matmul(merged, tape.constant(blk.wo)), tape.constant(blk.bo));
  x = add(x, proj);

  Var normed2 = layer_norm_rows(x, tape.constant(blk.ln2_gain), tape.constant(blk.ln2_bias));
  Var hid = gelu(broadcast_add_row(matmul(normed2, tape.constant(blk.w1)), tape.constant(blk.b1)));
  Var out = broadcast_add_row(matmul(hid, tape.constant(blk.w2)), tape.constant(blk.b2));
  return add(x, out);
}

Var Encoder::forward(Tape& tape, const Image& image, const std::vector<Var>& prompts) const {
  if (!prompts.empty() && static_cast<int64_t>(prompts.size()) != cfg_.tap_layer) {
    throw std::invalid_argument("encode: prompt layer count does not match tap layer");
  }
  const Tensor tokens = patchify(image, cfg_);
  const int64_t num_patches = tokens.rows();

  Var x = broadcast_add_row(matmul(tape.constant(tokens), tape.constant(w_embed_)),
                            tape.constant(b_embed_));
  x = add(x, tape.constant(positional_encoding(num_patches)));

  for (int64_t l = 0; l < cfg_.tap_layer; ++l) {
    if (!prompts.empty()) {
      const Tensor pv = prompts[l].value();
      if (cfg_.prompt_mode == PromptMode::kAdditiveBroadcast) {
        if (pv.ndim() != 1 || pv.shape()[0] != cfg_.embed_dim) {
          throw std::invalid_argument("encode: additive prompt must be a [C] vector");
        }
        x = broadcast_add_row(x, prompts[l]);
      } else {
        // Deep prompting: the previous layer's prompt rows are replaced by
        // this layer's tokens, patch rows carry through.
        if (pv.ndim() != 2 || pv.cols() != cfg_.embed_dim) {
          throw std::invalid_argument("encode: prepend prompt must be [tokens, C]");
        }
        if (x.value().rows() > num_patches) {
          x = slice_rows(x, x.value().rows() - num_patches, num_patches);
        }
        x = concat_rows({prompts[l], x});
      }
    }
    x = run_block(tape, blocks_[static_cast<size_t>(l)], x);
  }
  if (x.value().rows() > num_patches) {
    x = slice_rows(x, x.value().rows() - num_patches, num_patches);
  }
  return x;
}

PatchFeatureMap Encoder::encode(const Image& image) const {
  Tape tape;
  Var out = forward(tape, image, {});
  PatchFeatureMap map;
  map.grid_h = grid_h(image);
  map.grid_w = grid_w(image);
  map.features = out.value();
  return map;
}

PatchFeatureMap Encoder::encode(const Image& image, const PromptSet& prompts) const {
  if (prompts.empty()) return encode(image);
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(prompts.layers.size());
  for (const Tensor& layer : prompts.layers) {
    Tensor shaped = layer;
    if (cfg_.prompt_mode == PromptMode::kPrependTokens && layer.ndim() == 1) {
      if (layer.shape()[0] % cfg_.embed_dim != 0) {
        throw std::invalid_argument("encode: flat prompt width not a multiple of C");
      }
      shaped = Tensor::from_data_unchecked(
          {layer.shape()[0] / cfg_.embed_dim, cfg_.embed_dim}, layer.data());
    }
    vars.push_back(tape.constant(shaped));
  }
  Var out = forward(tape, image, vars);
  PatchFeatureMap map;
  map.grid_h = grid_h(image);
  map.grid_w = grid_w(image);
  map.features = out.value();
  return map;
}

}  // namespace ucad
