#ifndef DSDST_ENCODER_H_
#define DSDST_ENCODER_H_

#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsdst/tensor.h"
#include "dsdst/textenc.h"

namespace dsdst::model {

struct EncoderConfig {
  int layers = 2;
  int hidden = 64;
  int heads = 4;
  int feedforward = 128;
  int max_len = 512;
  int vocab_size = 0;
  double dropout = 0.1;
  double init_std = 0.02;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static EncoderConfig from_json(const nlohmann::json& j, EncoderConfig defaults);
  static EncoderConfig from_json(const nlohmann::json& j);
};

// BERT-style post-norm transformer encoder: token + position + segment
// embeddings, embedding LayerNorm, then `layers` blocks of multi-head
// self-attention and a GELU feed-forward, each followed by residual +
// LayerNorm. Parameters live in an external ParameterSet under `prefix`.
class Encoder {
 public:
  // Intermediate values recorded by forward() for backward().
  struct LayerTape {
    Matrix input, q, k, v, concat, attn_mask, y1, ff_pre, ff_act, ff_mask, y2;
    std::vector<Matrix> probs;  // per head, K x K
    Matrix ln1_xhat, ln2_xhat;
    Vector ln1_inv_std, ln2_inv_std;
  };
  struct Tape {
    std::vector<int> ids;
    std::vector<int> segments;
    Matrix emb_xhat, emb_mask;
    Vector emb_inv_std;
    std::vector<LayerTape> layers;
  };

  // Registers freshly initialized parameters in `params`.
  static Encoder create(const EncoderConfig& config, ParameterSet& params, const std::string& prefix,
                        std::mt19937_64& rng);
  // Binds to parameters already present in `params`.
  static Encoder attach(const EncoderConfig& config, const ParameterSet& params,
                        const std::string& prefix);

  const EncoderConfig& config() const { return config_; }
  const std::string& prefix() const { return prefix_; }

  // Hidden states, one row per input position. Dropout is applied only when
  // `dropout_rng` is non-null; `tape` may be null when no backward is needed.
  Matrix forward(const std::vector<int>& ids, const std::vector<int>& segments,
                 const ParameterSet& params, Tape* tape, std::mt19937_64* dropout_rng) const;

  // Accumulates parameter gradients of a scalar loss given d loss / d hidden.
  void backward(const Tape& tape, const Matrix& d_hidden, const ParameterSet& params,
                ParameterSet& grads) const;

 private:
  struct LayerIndex {
    std::size_t wq, bq, wk, bk, wv, bv, wo, bo, ln1_g, ln1_b, w1, b1, w2, b2, ln2_g, ln2_b;
  };

  static Encoder layout(const EncoderConfig& config, const ParameterSet& params,
                        const std::string& prefix);

  EncoderConfig config_;
  std::string prefix_;
  std::size_t word_ = 0, position_ = 0, segment_ = 0, emb_ln_g_ = 0, emb_ln_b_ = 0;
  std::vector<LayerIndex> layers_;
};

// Names of the parameters an encoder registers, in registration order.
std::vector<std::string> encoder_parameter_names(const EncoderConfig& config,
                                                 const std::string& prefix);

}  // namespace dsdst::model

#endif  // DSDST_ENCODER_H_
