#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "rcdst/corpus.hpp"
#include "rcdst/embeddings.hpp"
#include "rcdst/nn.hpp"
#include "rcdst/tensor.hpp"

namespace rcdst {

/// Token inventory for trainable embeddings. Ids 0, 1, 2 are <unk>, [U], [A];
/// the rest are the training tokens in sorted order.
class Vocabulary {
 public:
  static constexpr int kUnk = 0;

  Vocabulary();
  explicit Vocabulary(const std::vector<std::string>& tokens);
  static Vocabulary build(const std::vector<Dialog>& corpus);

  int id(const std::string& token) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

enum class EmbeddingMode { trainable, pretrained };

std::string_view to_string(EmbeddingMode mode);
EmbeddingMode parse_embedding_mode(std::string_view s);

struct EncoderDims {
  std::size_t embed = 100;   // trainable embedding width
  std::size_t project = 200; // affine layer after the embeddings
  std::size_t hidden = 50;   // per LSTM direction

  std::size_t output() const { return 2 * hidden; }
  friend bool operator==(const EncoderDims&, const EncoderDims&) = default;
};

/// Per-token inputs for one flattened dialog.
struct EncoderInput {
  std::vector<int> ids;              // trainable mode
  const Matrix* pretrained = nullptr; // pretrained mode, L x dim, not owned
  std::vector<int> markers;          // -1, or 0 for [U], 1 for [A]

  std::size_t size() const { return markers.size(); }
};

/// d_i = (backward_i ; forward_i) for every token, and the dialog embedding
/// e = (backward_1 ; forward_L).
struct DialogEncoding {
  Matrix tokens;       // L x 2H
  RowVector embedding; // 2H
};

struct EncoderCache {
  Matrix x;  // L x input
  Matrix z;  // L x project
  LstmSequenceCache forward;
  LstmSequenceCache backward;
  std::vector<int> ids;
  std::vector<int> markers;
};

/// Embeddings -> affine -> bidirectional LSTM, plus one learned question
/// vector per slot.
class Encoder {
 public:
  Encoder() = default;
  /// `input_size` is the vocabulary size in trainable mode and the embedding
  /// file dimension in pretrained mode.
  Encoder(EncoderDims dims, EmbeddingMode mode, std::size_t input_size, std::size_t slots);

  const EncoderDims& dims() const { return dims_; }
  EmbeddingMode mode() const { return mode_; }
  std::size_t input_size() const { return input_size_; }
  std::size_t slots() const { return static_cast<std::size_t>(questions_.value.rows()); }

  ParameterRefs parameters();

  EncoderInput prepare(const FlattenedDialog& flat, const Vocabulary* vocab,
                       const EmbeddingStore* store) const;

  /// Input rows p_1..p_L.
  Matrix embed(const EncoderInput& input) const;
  DialogEncoding encode(const EncoderInput& input, EncoderCache* cache = nullptr) const;

  /// Accumulates parameter gradients given dL/dd (L x 2H) and dL/de.
  void backward(const EncoderCache& cache, const Matrix& d_tokens, const RowVector& d_embedding);

  RowVector question_vector(std::size_t slot) const;
  void accumulate_question_grad(std::size_t slot, const RowVector& grad);

 private:
  EncoderDims dims_;
  EmbeddingMode mode_ = EmbeddingMode::trainable;
  std::size_t input_size_ = 0;
  Parameter embedding_;  // vocab x embed, or 2 x dim marker rows in pretrained mode
  Parameter proj_w_, proj_b_;
  Parameter fwd_wx_, fwd_wh_, fwd_b_;
  Parameter bwd_wx_, bwd_wh_, bwd_b_;
  Parameter questions_;
};

}  // namespace rcdst
