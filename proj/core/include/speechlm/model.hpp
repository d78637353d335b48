// Copyright 2026 The speechlm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// The three architectures: baseline attention encoder-decoder, speech
// encoder composed with an encoder-decoder text LM, and speech encoder
// composed with a decoder-only LM through CTC blank down-sampling, an
// embedding bridge, and LoRA adapters.

#ifndef SPEECHLM_MODEL_HPP_
#define SPEECHLM_MODEL_HPP_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "speechlm/autodiff.hpp"
#include "speechlm/checkpoint.hpp"
#include "speechlm/ctc.hpp"
#include "speechlm/tokenizer.hpp"

namespace speechlm {

struct NamedParam {
  std::string name;
  Var var;
};
using ParamList = std::vector<NamedParam>;

// ---- configs ---------------------------------------------------------------

struct EncoderConfig {
  int input_dim = 16;
  int layers = 4;
  int embed_dim = 128;
  int heads = 4;
  int ffn_dim = 256;
  int conv_kernel = 3;  // two stride-2 convolutions, x4 time reduction
};

struct LmConfig {
  int vocab_size = 0;
  int layers = 4;
  int embed_dim = 128;
  int heads = 4;
  int ffn_dim = 256;
  int encoder_layers = 0;  // text-encoder depth; 0 for baseline/decoder-only
};

struct LoRAConfig {
  int rank = 8;
  double alpha = 32.0;
  std::vector<std::string> targets = {"query", "value"};

  double scaling() const { return alpha / static_cast<double>(rank); }
};

Tensor sinusoid_positions(int64_t len, int64_t dim, int64_t offset = 0);

// ---- parameter blocks -------------------------------------------------------

struct LoRAAdapter {
  Var a;  // [d_in, rank]
  Var b;  // [rank, d_out], zero init so attaching is the identity
  double scaling = 1.0;
};

struct LinearParams {
  Var w;  // [in, out]
  Var b;  // [out]
  std::optional<LoRAAdapter> lora;

  static LinearParams init(int in, int out, Rng& rng, double stddev = 0.02);
  Var apply(const Var& x) const;
  void collect(ParamList* out, const std::string& prefix) const;
};

struct LayerNormParams {
  Var g, b;
  static LayerNormParams init(int dim);
  Var apply(const Var& x) const { return layer_norm(x, g, b); }
  void collect(ParamList* out, const std::string& prefix) const;
};

struct AttentionParams {
  LinearParams q, k, v, o;
  int heads = 1;
  static AttentionParams init(int dim, int heads, Rng& rng);
  void collect(ParamList* out, const std::string& prefix) const;
};

struct FfnParams {
  LinearParams fc1, fc2;
  static FfnParams init(int dim, int ffn_dim, Rng& rng);
  Var apply(const Var& x) const { return fc2.apply(gelu(fc1.apply(x))); }
  void collect(ParamList* out, const std::string& prefix) const;
};

// Pre-norm transformer layer, optionally with a cross-attention block.
struct TransformerLayer {
  LayerNormParams ln1;
  AttentionParams self_attn;
  bool has_cross = false;
  LayerNormParams ln_cross;
  AttentionParams cross_attn;
  LayerNormParams ln2;
  FfnParams ffn;

  static TransformerLayer init(int dim, int heads, int ffn_dim, bool cross, Rng& rng);
  Var forward(Var x, bool causal, const Var* memory) const;
  void collect(ParamList* out, const std::string& prefix) const;
};

// ---- speech encoder ---------------------------------------------------------

struct SpeechEncoder {
  EncoderConfig cfg;
  Var conv1_w, conv1_b;  // input_dim -> embed_dim, stride 2
  Var conv2_w, conv2_b;  // embed_dim -> embed_dim, stride 2
  std::vector<TransformerLayer> layers;
  LayerNormParams ln_f;

  static SpeechEncoder init(const EncoderConfig& cfg, Rng& rng);
  // T frames -> ceil(T/4) hidden states; errors when T < 4.
  Var forward(const Tensor& frames) const;
  void collect(ParamList* out, const std::string& prefix) const;

  static int64_t output_length(int64_t t) { return (t + 3) / 4; }
};

// ---- text models ------------------------------------------------------------

// Encoder-decoder text model.  Serves as the baseline AED decoder (no text
// encoder, random init) and as the pretrained LM for the encdec composition.
struct EncDecLm {
  LmConfig cfg;
  Var embed_in;   // [V, D]
  Var embed_out;  // [V, D]; logits = h * embed_out^T
  std::vector<TransformerLayer> encoder_layers;
  LayerNormParams enc_ln_f;
  std::vector<TransformerLayer> decoder_layers;
  LayerNormParams dec_ln_f;

  static EncDecLm init(const LmConfig& cfg, Rng& rng);
  Var encode_text(const TokenSequence& ids) const;
  // Causal decoder over input ids, cross-attending to memory when given.
  Var decode_hidden(const TokenSequence& ids, const Var* memory) const;
  Var logits(const Var& hidden) const { return matmul_nt(hidden, embed_out); }
  void collect(ParamList* out, const std::string& prefix) const;
};

// Decoder-only causal LM with the input embedding tied to the output head.
struct DecoderOnlyLm {
  LmConfig cfg;
  Var embed;  // [V, D]
  std::vector<TransformerLayer> layers;
  LayerNormParams ln_f;

  static DecoderOnlyLm init(const LmConfig& cfg, Rng& rng);
  // Input rows already embedded and position-encoded.
  Var forward_embedded(const Var& x) const;
  Var logits(const Var& hidden) const { return matmul_nt(hidden, embed); }
  void collect(ParamList* out, const std::string& prefix) const;
};

// Freezes every base LM weight, then adds dW = (alpha/r) * B * A adapters to
// the targeted projections ({query,key,value,output}) of every layer.
// Errors when the rank is not strictly low.
void attach_lora(DecoderOnlyLm* lm, const LoRAConfig& cfg, Rng& rng);

// ---- composed models ----------------------------------------------------------

struct ForwardResult {
  Var lattice;  // [Te, V] log-probabilities (blank at column 0)
  Var ctc;      // utterance negative log-likelihood
  Var ce;       // mean next-token cross-entropy over scored positions
  int64_t prompt_len = -1;  // decoder-only only
};

// Baseline AED and the encoder-decoder LM composition (identical wiring;
// the latter is initialized from a pretrained text LM with frozen
// embedding tables and keeps the text encoder for MLM batches).
class Seq2SeqModel {
 public:
  static Seq2SeqModel init_baseline(const EncoderConfig& enc_cfg, const LmConfig& lm_cfg,
                                    const Vocabulary& vocab, uint64_t seed);
  // Text encoder/decoder/embeddings from a pretrained LM checkpoint
  // (kind "lm-encdec"); embedding tables frozen.
  static Seq2SeqModel init_from_lm(const EncoderConfig& enc_cfg,
                                   const Checkpoint& lm_ckpt, uint64_t seed);

  ForwardResult forward(const Tensor& frames, const TokenSequence& target) const;
  // Masked tokens through text encoder -> decoder; CE at labeled positions
  // (-1 = ignore).  Errors when no position is labeled.
  Var mlm_forward(const TokenSequence& masked_tokens, const std::vector<int>& labels) const;
  TokenSequence greedy_transcribe(const Tensor& frames, int64_t max_extra = 64) const;

  ParamList named_params() const;
  std::vector<Var> trainable_params() const;
  ParamList encoder_ctc_params() const;

  Checkpoint to_checkpoint(const std::string& kind, uint64_t step) const;
  static Seq2SeqModel from_checkpoint(const Checkpoint& ckpt);

  // Copies encoder + CTC projection tensors from another model's checkpoint.
  void load_encoder_from(const Checkpoint& ckpt);

  const Vocabulary& vocab() const { return vocab_; }
  bool has_text_encoder() const { return !lm.encoder_layers.empty(); }

  SpeechEncoder encoder;
  LinearParams ctc_proj;  // embed_dim -> V
  EncDecLm lm;

 private:
  Seq2SeqModel() = default;
  void check_target(const TokenSequence& target) const;
  Vocabulary vocab_;
  std::vector<std::string> frozen_groups_;
};

// Decoder-only composition: encode, CTC-project, drop blank-dominated
// frames, bridge the survivors into the LM embedding space, and let the
// causal LM transcribe with the bridged states as its prompt.
class DecOnlyModel {
 public:
  static DecOnlyModel init(const EncoderConfig& enc_cfg, const Checkpoint& lm_ckpt,
                           const LoRAConfig& lora_cfg, double blank_threshold,
                           uint64_t seed);

  ForwardResult forward(const Tensor& frames, const TokenSequence& target) const;
  TokenSequence greedy_transcribe(const Tensor& frames, int64_t max_extra = 64) const;

  // Posterior-weighted mixture of LM token embeddings (convex combination);
  // switchable to hard argmax lookup for ablations.
  Var embedding_bridge(const Var& kept_hidden) const;

  // Down-sampling diagnostics for one utterance.
  struct DownsampleInfo {
    std::vector<double> blank_probs;
    std::vector<int64_t> kept_indices;
  };
  DownsampleInfo inspect_downsample(const Tensor& frames) const;

  ParamList named_params() const;
  std::vector<Var> trainable_params() const;
  ParamList encoder_ctc_params() const;

  Checkpoint to_checkpoint(uint64_t step) const;
  static DecOnlyModel from_checkpoint(const Checkpoint& ckpt);

  const Vocabulary& vocab() const { return vocab_; }

  SpeechEncoder encoder;
  LinearParams ctc_proj;  // embed_dim -> V
  DecoderOnlyLm lm;
  LoRAConfig lora_cfg;
  double blank_threshold = 0.95;
  bool argmax_bridge = false;

 private:
  DecOnlyModel() = default;
  struct PromptResult {
    Var prompt;  // [K, D_lm]
    Var lattice;
    Var enc;
    std::vector<int64_t> kept_indices;
  };
  PromptResult build_prompt(const Tensor& frames) const;
  Vocabulary vocab_;
  std::vector<std::string> frozen_groups_;
};

// ---- config (de)serialization and loading helpers ----------------------------

nlohmann::json encoder_config_json(const EncoderConfig& cfg);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);
nlohmann::json lm_config_json(const LmConfig& cfg);
LmConfig lm_config_from_json(const nlohmann::json& j);
nlohmann::json lora_config_json(const LoRAConfig& cfg);
LoRAConfig lora_config_from_json(const nlohmann::json& j);

// Copies checkpoint tensors into same-named parameters; every parameter must
// be covered unless `allow_missing`.
void load_params(const ParamList& params, const Checkpoint& ckpt, bool allow_missing = false);
void apply_frozen_groups(const ParamList& params, const std::vector<std::string>& groups);
int64_t count_values(const std::vector<Var>& params);

// ---- standalone text LMs (pretraining targets) -------------------------------

struct TextLmModel {
  std::string arch;  // "encdec" or "deconly"
  Vocabulary vocab;
  std::optional<EncDecLm> encdec;
  std::optional<DecoderOnlyLm> deconly;

  static TextLmModel init(const std::string& arch, const LmConfig& cfg,
                          const Vocabulary& vocab, uint64_t seed);
  ParamList named_params() const;
  std::vector<Var> trainable_params() const;
  Checkpoint to_checkpoint(uint64_t step) const;
  static TextLmModel from_checkpoint(const Checkpoint& ckpt);
};

}  // namespace speechlm

#endif  // SPEECHLM_MODEL_HPP_
