#include "rcdst/encoder.hpp"

#include <set>
#include <stdexcept>

#include "rcdst/errors.hpp"

namespace rcdst {

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) {
  tokens_ = {"<unk>", std::string(kUserMarker), std::string(kAgentMarker)};
  for (const auto& t : tokens) {
    if (t == tokens_[0] || t == tokens_[1] || t == tokens_[2]) continue;
    tokens_.push_back(t);
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw DataError("duplicate vocabulary token " + tokens_[i]);
    }
  }
}

Vocabulary Vocabulary::build(const std::vector<Dialog>& corpus) {
  std::set<std::string> seen;
  for (const auto& dialog : corpus) {
    const auto flat = flatten(dialog, dialog.turns.size());
    for (std::size_t i = 0; i < flat.size(); ++i) {
      if (!flat.is_marker(i)) seen.insert(flat.tokens[i]);
    }
  }
  return Vocabulary(std::vector<std::string>(seen.begin(), seen.end()));
}

int Vocabulary::id(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::string_view to_string(EmbeddingMode mode) {
  return mode == EmbeddingMode::trainable ? "trainable" : "pretrained";
}

EmbeddingMode parse_embedding_mode(std::string_view s) {
  if (s == "trainable") return EmbeddingMode::trainable;
  if (s == "pretrained") return EmbeddingMode::pretrained;
  throw std::invalid_argument("unknown embedding mode: " + std::string(s));
}

Encoder::Encoder(EncoderDims dims, EmbeddingMode mode, std::size_t input_size, std::size_t slots)
    : dims_(dims), mode_(mode), input_size_(input_size) {
  if (input_size == 0 || slots == 0 || dims.project == 0 || dims.hidden == 0 ||
      (mode == EmbeddingMode::trainable && dims.embed == 0)) {
    throw std::invalid_argument("encoder: dimensions must be positive");
  }
  const auto p = static_cast<Eigen::Index>(dims.project);
  const auto h = static_cast<Eigen::Index>(dims.hidden);
  const auto in = static_cast<Eigen::Index>(mode == EmbeddingMode::trainable ? dims.embed
                                                                             : input_size);
  if (mode == EmbeddingMode::trainable) {
    embedding_ = Parameter("encoder.embedding", static_cast<Eigen::Index>(input_size), in);
  } else {
    embedding_ = Parameter("encoder.markers", 2, in);
  }
  proj_w_ = Parameter("encoder.proj.w", in, p);
  proj_b_ = Parameter("encoder.proj.b", 1, p, 1);
  fwd_wx_ = Parameter("encoder.lstm_fwd.wx", p, 4 * h);
  fwd_wh_ = Parameter("encoder.lstm_fwd.wh", h, 4 * h);
  fwd_b_ = Parameter("encoder.lstm_fwd.b", 1, 4 * h, 1);
  bwd_wx_ = Parameter("encoder.lstm_bwd.wx", p, 4 * h);
  bwd_wh_ = Parameter("encoder.lstm_bwd.wh", h, 4 * h);
  bwd_b_ = Parameter("encoder.lstm_bwd.b", 1, 4 * h, 1);
  questions_ = Parameter("encoder.questions", static_cast<Eigen::Index>(slots), 2 * h);
}

ParameterRefs Encoder::parameters() {
  return {&embedding_, &proj_w_, &proj_b_, &fwd_wx_, &fwd_wh_, &fwd_b_,
          &bwd_wx_,    &bwd_wh_, &bwd_b_,  &questions_};
}

EncoderInput Encoder::prepare(const FlattenedDialog& flat, const Vocabulary* vocab,
                              const EmbeddingStore* store) const {
  EncoderInput input;
  input.markers.reserve(flat.size());
  for (std::size_t i = 0; i < flat.size(); ++i) {
    int m = -1;
    if (flat.is_marker(i)) m = flat.tokens[i] == kUserMarker ? 0 : 1;
    input.markers.push_back(m);
  }
  if (mode_ == EmbeddingMode::trainable) {
    if (!vocab) throw std::invalid_argument("trainable embeddings need a vocabulary");
    for (const auto& tok : flat.tokens) input.ids.push_back(vocab->id(tok));
  } else {
    if (!store) throw DataError("pretrained embeddings need an embedding file");
    if (store->dim() != input_size_) {
      throw DataError("embedding file dimension " + std::to_string(store->dim()) +
                      " does not match model input dimension " + std::to_string(input_size_));
    }
    input.pretrained = &store->get(flat.key(), flat.size());
  }
  return input;
}

Matrix Encoder::embed(const EncoderInput& input) const {
  const auto len = static_cast<Eigen::Index>(input.size());
  Matrix x(len, embedding_.value.cols());
  for (Eigen::Index i = 0; i < len; ++i) {
    const int m = input.markers[static_cast<std::size_t>(i)];
    if (mode_ == EmbeddingMode::trainable) {
      const int id = input.ids.at(static_cast<std::size_t>(i));
      if (id < 0 || id >= embedding_.value.rows()) throw ShapeError("token id out of range");
      x.row(i) = embedding_.value.row(id);
    } else if (m >= 0) {
      x.row(i) = embedding_.value.row(m);
    } else {
      x.row(i) = input.pretrained->row(i);
    }
  }
  return x;
}

DialogEncoding Encoder::encode(const EncoderInput& input, EncoderCache* cache) const {
  if (input.size() == 0) throw ShapeError("encode: empty token sequence");
  if (mode_ == EmbeddingMode::pretrained &&
      (!input.pretrained || static_cast<std::size_t>(input.pretrained->rows()) != input.size())) {
    throw ShapeError("encode: pretrained rows do not match token count");
  }
  const auto h = static_cast<Eigen::Index>(dims_.hidden);
  const auto len = static_cast<Eigen::Index>(input.size());
  Matrix x = embed(input);
  Matrix z = affine_forward(x, proj_w_.value, proj_b_.value);
  const LstmWeights fw{fwd_wx_.value, fwd_wh_.value, fwd_b_.value};
  const LstmWeights bw{bwd_wx_.value, bwd_wh_.value, bwd_b_.value};
  DialogEncoding out;
  out.tokens.resize(len, 2 * h);
  out.tokens.rightCols(h) = lstm_sequence_forward(z, fw, false, cache ? &cache->forward : nullptr);
  out.tokens.leftCols(h) = lstm_sequence_forward(z, bw, true, cache ? &cache->backward : nullptr);
  out.embedding.resize(2 * h);
  out.embedding.head(h) = out.tokens.row(0).head(h);
  out.embedding.tail(h) = out.tokens.row(len - 1).tail(h);
  if (cache) {
    cache->x = std::move(x);
    cache->z = std::move(z);
    cache->ids = input.ids;
    cache->markers = input.markers;
  }
  return out;
}

void Encoder::backward(const EncoderCache& cache, const Matrix& d_tokens,
                       const RowVector& d_embedding) {
  const auto h = static_cast<Eigen::Index>(dims_.hidden);
  const auto len = cache.x.rows();
  if (d_tokens.rows() != len || d_tokens.cols() != 2 * h || d_embedding.size() != 2 * h) {
    throw ShapeError("encoder backward: gradient shape mismatch");
  }
  Matrix dd = d_tokens;
  dd.row(0).head(h) += d_embedding.head(h);
  dd.row(len - 1).tail(h) += d_embedding.tail(h);

  const LstmWeights fw{fwd_wx_.value, fwd_wh_.value, fwd_b_.value};
  const LstmWeights bw{bwd_wx_.value, bwd_wh_.value, bwd_b_.value};
  const auto gf = lstm_sequence_backward(cache.forward, fw, dd.rightCols(h));
  const auto gb = lstm_sequence_backward(cache.backward, bw, dd.leftCols(h));
  fwd_wx_.grad += gf.dwx;
  fwd_wh_.grad += gf.dwh;
  fwd_b_.grad.row(0) += gf.db;
  bwd_wx_.grad += gb.dwx;
  bwd_wh_.grad += gb.dwh;
  bwd_b_.grad.row(0) += gb.db;

  const Matrix dz = gf.dx + gb.dx;
  const auto ga = affine_backward(cache.x, proj_w_.value, dz);
  proj_w_.grad += ga.dw;
  proj_b_.grad.row(0) += ga.db;

  for (Eigen::Index i = 0; i < len; ++i) {
    const int m = cache.markers[static_cast<std::size_t>(i)];
    if (mode_ == EmbeddingMode::trainable) {
      embedding_.grad.row(cache.ids[static_cast<std::size_t>(i)]) += ga.dx.row(i);
    } else if (m >= 0) {
      embedding_.grad.row(m) += ga.dx.row(i);
    }
    // Pretrained rows are frozen input data.
  }
}

RowVector Encoder::question_vector(std::size_t slot) const {
  if (slot >= slots()) throw std::out_of_range("question vector: unknown slot " + std::to_string(slot));
  return questions_.value.row(static_cast<Eigen::Index>(slot));
}

void Encoder::accumulate_question_grad(std::size_t slot, const RowVector& grad) {
  if (slot >= slots()) throw std::out_of_range("question grad: unknown slot");
  questions_.grad.row(static_cast<Eigen::Index>(slot)) += grad;
}

}  // namespace rcdst
