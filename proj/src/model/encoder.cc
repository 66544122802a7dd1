#include <cmath>

#include "dsdst/encoder.h"
#include "dsdst/error.h"

namespace dsdst::model {
namespace {

constexpr double kLayerNormEps = 1e-12;

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

// Truncated at two standard deviations.
double truncated_normal(std::mt19937_64& rng, double stddev) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    double z = normal(rng);
    if (std::abs(z) <= 2.0) return z * stddev;
  }
}

void layer_norm(const Matrix& x, const Matrix& gamma, const Matrix& beta, Matrix& y, Matrix& xhat,
                Vector& inv_std) {
  const auto d = static_cast<double>(x.cols());
  xhat.resize(x.rows(), x.cols());
  inv_std.resize(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double mean = x.row(i).sum() / d;
    auto centered = x.row(i).array() - mean;
    double var = centered.square().sum() / d;
    inv_std(i) = 1.0 / std::sqrt(var + kLayerNormEps);
    xhat.row(i) = centered * inv_std(i);
  }
  y = (xhat.array().rowwise() * gamma.row(0).array()).rowwise() + beta.row(0).array();
}

Matrix layer_norm_backward(const Matrix& dy, const Matrix& xhat, const Vector& inv_std,
                           const Matrix& gamma, Matrix& d_gamma, Matrix& d_beta) {
  d_gamma.row(0) += (dy.array() * xhat.array()).colwise().sum().matrix();
  d_beta.row(0) += dy.colwise().sum();
  Matrix dxhat = dy.array().rowwise() * gamma.row(0).array();
  Matrix dx(dy.rows(), dy.cols());
  const auto d = static_cast<double>(dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    double mean_dxhat = dxhat.row(i).sum() / d;
    double mean_dxhat_xhat = dxhat.row(i).dot(xhat.row(i)) / d;
    dx.row(i) = inv_std(i) *
                (dxhat.row(i).array() - mean_dxhat - xhat.row(i).array() * mean_dxhat_xhat);
  }
  return dx;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad(double x) {
  double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
  double pdf = std::exp(-0.5 * x * x) * 0.3989422804014327;
  return cdf + x * pdf;
}

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, std::mt19937_64& rng) {
  Matrix mask(rows, cols);
  const double keep_scale = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = uniform01(rng) < p ? 0.0 : keep_scale;
  }
  return mask;
}

void softmax_rows(Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double mx = m.row(i).maxCoeff();
    m.row(i) = (m.row(i).array() - mx).exp();
    m.row(i) /= m.row(i).sum();
  }
}

}  // namespace

void EncoderConfig::validate() const {
  if (layers < 1 || hidden < 1 || heads < 1 || feedforward < 1 || max_len < 4 || vocab_size < 4) {
    fail(ErrorKind::kConfig, "encoder dimensions must be positive (vocab_size >= 4, max_len >= 4)");
  }
  if (hidden % heads != 0) {
    fail(ErrorKind::kConfig, "hidden size " + std::to_string(hidden) +
                                 " not divisible by heads " + std::to_string(heads));
  }
  if (dropout < 0.0 || dropout >= 1.0) fail(ErrorKind::kConfig, "dropout must lie in [0, 1)");
  if (init_std <= 0.0) fail(ErrorKind::kConfig, "init_std must be positive");
}

nlohmann::ordered_json EncoderConfig::to_json() const {
  return {{"layers", layers},           {"hidden", hidden},   {"heads", heads},
          {"feedforward", feedforward}, {"max_len", max_len}, {"vocab_size", vocab_size},
          {"dropout", dropout},         {"init_std", init_std}};
}

EncoderConfig EncoderConfig::from_json(const nlohmann::json& j) { return from_json(j, EncoderConfig{}); }

EncoderConfig EncoderConfig::from_json(const nlohmann::json& j, EncoderConfig c) {
  c.layers = j.value("layers", c.layers);
  c.hidden = j.value("hidden", c.hidden);
  c.heads = j.value("heads", c.heads);
  c.feedforward = j.value("feedforward", c.feedforward);
  c.max_len = j.value("max_len", c.max_len);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.dropout = j.value("dropout", c.dropout);
  c.init_std = j.value("init_std", c.init_std);
  return c;
}

std::vector<std::string> encoder_parameter_names(const EncoderConfig& config,
                                                 const std::string& prefix) {
  std::vector<std::string> names = {prefix + "embeddings.word", prefix + "embeddings.position",
                                    prefix + "embeddings.segment", prefix + "embeddings.ln.gamma",
                                    prefix + "embeddings.ln.beta"};
  for (int l = 0; l < config.layers; ++l) {
    std::string p = prefix + "layer" + std::to_string(l) + ".";
    for (const char* proj : {"query", "key", "value", "output"}) {
      names.push_back(p + "attention." + proj + ".weight");
      names.push_back(p + "attention." + proj + ".bias");
    }
    names.push_back(p + "attention.ln.gamma");
    names.push_back(p + "attention.ln.beta");
    names.push_back(p + "ffn.in.weight");
    names.push_back(p + "ffn.in.bias");
    names.push_back(p + "ffn.out.weight");
    names.push_back(p + "ffn.out.bias");
    names.push_back(p + "ffn.ln.gamma");
    names.push_back(p + "ffn.ln.beta");
  }
  return names;
}

Encoder Encoder::create(const EncoderConfig& config, ParameterSet& params,
                        const std::string& prefix, std::mt19937_64& rng) {
  config.validate();
  const int d = config.hidden;
  for (const auto& name : encoder_parameter_names(config, prefix)) {
    auto ends_with = [&](std::string_view s) { return name.ends_with(s); };
    Eigen::Index rows = 1, cols = d;
    if (ends_with("embeddings.word")) rows = config.vocab_size;
    else if (ends_with("embeddings.position")) rows = config.max_len;
    else if (ends_with("embeddings.segment")) rows = 2;
    else if (ends_with("ffn.in.weight")) { rows = d; cols = config.feedforward; }
    else if (ends_with("ffn.in.bias")) cols = config.feedforward;
    else if (ends_with("ffn.out.weight")) { rows = config.feedforward; cols = d; }
    else if (ends_with(".weight")) rows = d;
    bool is_matrix = rows > 1;
    std::size_t i = params.add(name, rows, cols, /*decay=*/is_matrix);
    if (is_matrix) {
      for (Eigen::Index k = 0; k < params[i].size(); ++k) {
        params[i].data()[k] = truncated_normal(rng, config.init_std);
      }
    } else if (ends_with("gamma")) {
      params[i].setOnes();
    }
  }
  params.round_to_float();
  return layout(config, params, prefix);
}

Encoder Encoder::attach(const EncoderConfig& config, const ParameterSet& params,
                        const std::string& prefix) {
  config.validate();
  return layout(config, params, prefix);
}

Encoder Encoder::layout(const EncoderConfig& config, const ParameterSet& params,
                        const std::string& prefix) {
  Encoder enc;
  enc.config_ = config;
  enc.prefix_ = prefix;
  auto at = [&](const std::string& name) { return params.index(prefix + name); };
  enc.word_ = at("embeddings.word");
  enc.position_ = at("embeddings.position");
  enc.segment_ = at("embeddings.segment");
  enc.emb_ln_g_ = at("embeddings.ln.gamma");
  enc.emb_ln_b_ = at("embeddings.ln.beta");
  if (params[enc.word_].rows() != config.vocab_size || params[enc.word_].cols() != config.hidden ||
      params[enc.position_].rows() != config.max_len) {
    fail(ErrorKind::kShape, "encoder parameters do not match the configuration");
  }
  for (int l = 0; l < config.layers; ++l) {
    std::string p = "layer" + std::to_string(l) + ".";
    LayerIndex li{};
    li.wq = at(p + "attention.query.weight");
    li.bq = at(p + "attention.query.bias");
    li.wk = at(p + "attention.key.weight");
    li.bk = at(p + "attention.key.bias");
    li.wv = at(p + "attention.value.weight");
    li.bv = at(p + "attention.value.bias");
    li.wo = at(p + "attention.output.weight");
    li.bo = at(p + "attention.output.bias");
    li.ln1_g = at(p + "attention.ln.gamma");
    li.ln1_b = at(p + "attention.ln.beta");
    li.w1 = at(p + "ffn.in.weight");
    li.b1 = at(p + "ffn.in.bias");
    li.w2 = at(p + "ffn.out.weight");
    li.b2 = at(p + "ffn.out.bias");
    li.ln2_g = at(p + "ffn.ln.gamma");
    li.ln2_b = at(p + "ffn.ln.beta");
    enc.layers_.push_back(li);
  }
  return enc;
}

Matrix Encoder::forward(const std::vector<int>& ids, const std::vector<int>& segments,
                        const ParameterSet& params, Tape* tape,
                        std::mt19937_64* dropout_rng) const {
  const auto len = static_cast<Eigen::Index>(ids.size());
  if (len == 0) fail(ErrorKind::kShape, "empty input sequence");
  if (len > config_.max_len) {
    fail(ErrorKind::kShape, "sequence length " + std::to_string(len) + " exceeds max_len " +
                                std::to_string(config_.max_len));
  }
  if (segments.size() != ids.size()) fail(ErrorKind::kShape, "segment/id length mismatch");
  const bool drop = dropout_rng != nullptr && config_.dropout > 0.0;
  const int d = config_.hidden;
  const int dh = d / config_.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Tape local;
  Tape& t = tape != nullptr ? *tape : local;
  t.ids = ids;
  t.segments = segments;
  t.layers.assign(static_cast<std::size_t>(config_.layers), LayerTape{});

  Matrix emb(len, d);
  for (Eigen::Index i = 0; i < len; ++i) {
    int id = ids[static_cast<std::size_t>(i)];
    int seg = segments[static_cast<std::size_t>(i)];
    if (id < 0 || id >= config_.vocab_size) fail(ErrorKind::kShape, "token id out of range");
    if (seg < 0 || seg > 1) fail(ErrorKind::kShape, "segment id out of range");
    emb.row(i) = params[word_].row(id) + params[position_].row(i) + params[segment_].row(seg);
  }
  Matrix x;
  layer_norm(emb, params[emb_ln_g_], params[emb_ln_b_], x, t.emb_xhat, t.emb_inv_std);
  if (drop) {
    t.emb_mask = dropout_mask(len, d, config_.dropout, *dropout_rng);
    x.array() *= t.emb_mask.array();
  }

  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerIndex& w = layers_[l];
    LayerTape& lt = t.layers[l];
    lt.input = x;
    lt.q = (x * params[w.wq]).rowwise() + params[w.bq].row(0);
    lt.k = (x * params[w.wk]).rowwise() + params[w.bk].row(0);
    lt.v = (x * params[w.wv]).rowwise() + params[w.bv].row(0);
    lt.concat.resize(len, d);
    lt.probs.resize(static_cast<std::size_t>(config_.heads));
    for (int h = 0; h < config_.heads; ++h) {
      Matrix scores = lt.q.middleCols(h * dh, dh) * lt.k.middleCols(h * dh, dh).transpose() * scale;
      softmax_rows(scores);
      lt.concat.middleCols(h * dh, dh) = scores * lt.v.middleCols(h * dh, dh);
      lt.probs[static_cast<std::size_t>(h)] = std::move(scores);
    }
    Matrix attn = (lt.concat * params[w.wo]).rowwise() + params[w.bo].row(0);
    if (drop) {
      lt.attn_mask = dropout_mask(len, d, config_.dropout, *dropout_rng);
      attn.array() *= lt.attn_mask.array();
    }
    layer_norm(x + attn, params[w.ln1_g], params[w.ln1_b], lt.y1, lt.ln1_xhat, lt.ln1_inv_std);

    lt.ff_pre = (lt.y1 * params[w.w1]).rowwise() + params[w.b1].row(0);
    lt.ff_act = lt.ff_pre.unaryExpr([](double v) { return gelu(v); });
    Matrix ff = (lt.ff_act * params[w.w2]).rowwise() + params[w.b2].row(0);
    if (drop) {
      lt.ff_mask = dropout_mask(len, d, config_.dropout, *dropout_rng);
      ff.array() *= lt.ff_mask.array();
    }
    layer_norm(lt.y1 + ff, params[w.ln2_g], params[w.ln2_b], lt.y2, lt.ln2_xhat, lt.ln2_inv_std);
    x = lt.y2;
  }
  return x;
}

void Encoder::backward(const Tape& t, const Matrix& d_hidden, const ParameterSet& params,
                       ParameterSet& grads) const {
  const int d = config_.hidden;
  const int dh = d / config_.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix dx = d_hidden;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const LayerIndex& w = layers_[l];
    const LayerTape& lt = t.layers[l];

    // y2 = LN(y1 + dropout(ffn(y1)))
    Matrix dz2 = layer_norm_backward(dx, lt.ln2_xhat, lt.ln2_inv_std, params[w.ln2_g],
                                     grads[w.ln2_g], grads[w.ln2_b]);
    Matrix dff = dz2;
    if (lt.ff_mask.size() > 0) dff.array() *= lt.ff_mask.array();
    grads[w.w2].noalias() += lt.ff_act.transpose() * dff;
    grads[w.b2].row(0) += dff.colwise().sum();
    Matrix dact = dff * params[w.w2].transpose();
    Matrix dpre = dact.array() * lt.ff_pre.unaryExpr([](double v) { return gelu_grad(v); }).array();
    grads[w.w1].noalias() += lt.y1.transpose() * dpre;
    grads[w.b1].row(0) += dpre.colwise().sum();
    Matrix dy1 = dz2 + dpre * params[w.w1].transpose();

    // y1 = LN(x + dropout(attention(x)))
    Matrix dz1 = layer_norm_backward(dy1, lt.ln1_xhat, lt.ln1_inv_std, params[w.ln1_g],
                                     grads[w.ln1_g], grads[w.ln1_b]);
    Matrix dattn = dz1;
    if (lt.attn_mask.size() > 0) dattn.array() *= lt.attn_mask.array();
    grads[w.wo].noalias() += lt.concat.transpose() * dattn;
    grads[w.bo].row(0) += dattn.colwise().sum();
    Matrix dconcat = dattn * params[w.wo].transpose();

    Matrix dq(lt.q.rows(), d), dk(lt.k.rows(), d), dv(lt.v.rows(), d);
    for (int h = 0; h < config_.heads; ++h) {
      const Matrix& p = lt.probs[static_cast<std::size_t>(h)];
      Matrix dout = dconcat.middleCols(h * dh, dh);
      Matrix dp = dout * lt.v.middleCols(h * dh, dh).transpose();
      dv.middleCols(h * dh, dh) = p.transpose() * dout;
      Vector row_dot = (dp.array() * p.array()).rowwise().sum();
      Matrix ds = (p.array() * (dp.colwise() - row_dot).array()) * scale;
      dq.middleCols(h * dh, dh) = ds * lt.k.middleCols(h * dh, dh);
      dk.middleCols(h * dh, dh) = ds.transpose() * lt.q.middleCols(h * dh, dh);
    }
    grads[w.wq].noalias() += lt.input.transpose() * dq;
    grads[w.wk].noalias() += lt.input.transpose() * dk;
    grads[w.wv].noalias() += lt.input.transpose() * dv;
    grads[w.bq].row(0) += dq.colwise().sum();
    grads[w.bk].row(0) += dk.colwise().sum();
    grads[w.bv].row(0) += dv.colwise().sum();
    dx = dz1;
    dx.noalias() += dq * params[w.wq].transpose();
    dx.noalias() += dk * params[w.wk].transpose();
    dx.noalias() += dv * params[w.wv].transpose();
  }

  if (t.emb_mask.size() > 0) dx.array() *= t.emb_mask.array();
  Matrix demb = layer_norm_backward(dx, t.emb_xhat, t.emb_inv_std, params[emb_ln_g_],
                                    grads[emb_ln_g_], grads[emb_ln_b_]);
  for (Eigen::Index i = 0; i < demb.rows(); ++i) {
    grads[word_].row(t.ids[static_cast<std::size_t>(i)]) += demb.row(i);
    grads[position_].row(i) += demb.row(i);
    grads[segment_].row(t.segments[static_cast<std::size_t>(i)]) += demb.row(i);
  }
}

}  // namespace dsdst::model
