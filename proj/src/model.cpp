#include "rcdst/model.hpp"

#include <stdexcept>

#include "json.hpp"
#include "rcdst/checkpoint.hpp"
#include "rcdst/errors.hpp"
#include "rcdst/nn.hpp"

namespace rcdst {

using nlohmann::json;

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::carryover: return "carryover";
    case ModelKind::type: return "type";
    case ModelKind::span: return "span";
    case ModelKind::jst: return "jst";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view s) {
  if (s == "carryover") return ModelKind::carryover;
  if (s == "type") return ModelKind::type;
  if (s == "span") return ModelKind::span;
  if (s == "jst") return ModelKind::jst;
  throw std::invalid_argument("unknown model kind: " + std::string(s));
}

Model Model::create(ModelKind kind, const EncoderDims& dims, EmbeddingMode mode,
                    const Schema& schema, const Vocabulary& vocab, std::size_t embedding_dim,
                    const Ontology* ontology, std::uint64_t seed) {
  Model m;
  m.kind_ = kind;
  m.schema_ = schema;
  m.vocab_ = vocab;
  const auto input = mode == EmbeddingMode::trainable ? vocab.size() : embedding_dim;
  m.encoder_ = Encoder(dims, mode, input, schema.size());
  const auto out = dims.output();
  switch (kind) {
    case ModelKind::carryover: m.carryover_ = CarryoverHead(out, schema.size()); break;
    case ModelKind::type: m.type_ = TypeHead(out); break;
    case ModelKind::span: m.span_ = SpanHead(out); break;
    case ModelKind::jst:
      if (!ontology) throw DataError("the jst model needs an ontology");
      m.jst_ = JstHead(out, schema, *ontology);
      break;
  }
  Rng rng(seed);
  init_uniform(m.parameters(), rng);
  return m;
}

ParameterRefs Model::parameters() {
  auto out = encoder_.parameters();
  ParameterRefs head;
  if (carryover_) head = carryover_->parameters();
  if (type_) head = type_->parameters();
  if (span_) head = span_->parameters();
  if (jst_) head = jst_->parameters();
  out.insert(out.end(), head.begin(), head.end());
  return out;
}

std::string Model::metadata() const {
  json doc;
  doc["kind"] = to_string(kind_);
  const auto& d = encoder_.dims();
  doc["dims"] = {{"embed", d.embed}, {"project", d.project}, {"hidden", d.hidden}};
  doc["embedding_mode"] = to_string(encoder_.mode());
  doc["input_size"] = encoder_.input_size();
  doc["slots"] = json::array();
  for (const auto& s : schema_.slots()) doc["slots"].push_back(s.str());
  if (encoder_.mode() == EmbeddingMode::trainable) doc["vocab"] = vocab_.tokens();
  if (jst_) {
    doc["jst_classes"] = json::array();
    for (const auto& c : jst_->all_classes()) {
      json list = json::array();
      for (const auto& v : c.classes) list.push_back(v ? json(*v) : json(nullptr));
      doc["jst_classes"].push_back(std::move(list));
    }
  }
  return doc.dump();
}

void Model::save(const std::filesystem::path& path) { save_checkpoint(path, metadata(), parameters()); }

Model Model::load(const std::filesystem::path& path) {
  const auto ck = load_checkpoint(path);
  json doc;
  try {
    doc = json::parse(ck.metadata);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": bad checkpoint metadata: " + e.what());
  }
  try {
    Model m;
    m.kind_ = parse_model_kind(doc.at("kind").get<std::string>());
    std::vector<SlotId> slots;
    for (const auto& s : doc.at("slots")) slots.push_back(SlotId::parse(s.get<std::string>()));
    m.schema_ = Schema(std::move(slots));
    EncoderDims dims{doc["dims"].at("embed").get<std::size_t>(),
                     doc["dims"].at("project").get<std::size_t>(),
                     doc["dims"].at("hidden").get<std::size_t>()};
    const auto mode = parse_embedding_mode(doc.at("embedding_mode").get<std::string>());
    if (mode == EmbeddingMode::trainable) {
      auto tokens = doc.at("vocab").get<std::vector<std::string>>();
      m.vocab_ = Vocabulary(std::vector<std::string>(tokens.begin() + 3, tokens.end()));
    }
    m.encoder_ = Encoder(dims, mode, doc.at("input_size").get<std::size_t>(), m.schema_.size());
    const auto out = dims.output();
    switch (m.kind_) {
      case ModelKind::carryover: m.carryover_ = CarryoverHead(out, m.schema_.size()); break;
      case ModelKind::type: m.type_ = TypeHead(out); break;
      case ModelKind::span: m.span_ = SpanHead(out); break;
      case ModelKind::jst: {
        std::vector<JstClasses> classes;
        for (const auto& list : doc.at("jst_classes")) {
          JstClasses c;
          for (const auto& v : list) {
            c.classes.push_back(v.is_null() ? Value{} : Value{v.get<std::string>()});
          }
          classes.push_back(std::move(c));
        }
        m.jst_ = JstHead(out, std::move(classes));
        break;
      }
    }
    restore_parameters(ck, m.parameters());
    return m;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": bad checkpoint metadata: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

bool Model::same_architecture(const Model& other) const {
  return kind_ == other.kind_ && encoder_.dims() == other.encoder_.dims() &&
         encoder_.mode() == other.encoder_.mode() &&
         encoder_.input_size() == other.encoder_.input_size() &&
         schema_.slots() == other.schema_.slots() &&
         vocab_.tokens() == other.vocab_.tokens() &&
         (!jst_ || jst_->all_classes().size() == other.jst_->all_classes().size());
}

EncoderInput Model::prepare(const FlattenedDialog& flat, const EmbeddingStore* store) const {
  return encoder_.prepare(flat, &vocab_, store);
}

RowVector Model::change_probs(const DialogEncoding& enc) const {
  if (!carryover_) throw std::logic_error("not a carryover model");
  return carryover_->probs(enc.embedding);
}

RowVector Model::type_probs(const DialogEncoding& enc, std::size_t slot) const {
  if (!type_) throw std::logic_error("not a type model");
  return type_->probs(enc.embedding, encoder_.question_vector(slot));
}

std::pair<RowVector, RowVector> Model::span_probs(const DialogEncoding& enc,
                                                  std::size_t slot) const {
  if (!span_) throw std::logic_error("not a span model");
  return span_->distributions(enc.tokens, encoder_.question_vector(slot));
}

RowVector Model::jst_probs(const DialogEncoding& enc, std::size_t slot) const {
  if (!jst_) throw std::logic_error("not a jst model");
  return jst_->probs(enc.embedding, slot);
}

double Model::accumulate(const EncoderInput& input, const SubDialogTargets& targets,
                         double grad_scale) {
  const bool grad = grad_scale != 0.0;
  EncoderCache cache;
  const auto enc = encoder_.encode(input, grad ? &cache : nullptr);
  const auto& e = enc.embedding;
  Matrix d_tokens = Matrix::Zero(enc.tokens.rows(), enc.tokens.cols());
  RowVector d_e = RowVector::Zero(e.size());
  double loss = 0.0;

  if (targets.change) {
    if (!carryover_) throw std::logic_error("carryover targets on a " + std::string(to_string(kind_)) + " model");
    const auto r = sigmoid_bce_loss(carryover_->logits(e), *targets.change);
    loss += r.loss;
    if (grad) d_e += carryover_->backward(e, grad_scale * r.grad);
  }
  for (const auto& [slot, type] : targets.types) {
    if (!type_) throw std::logic_error("type targets on a non-type model");
    const RowVector q = encoder_.question_vector(slot);
    const auto r = softmax_ce_loss(type_->logits(e, q), static_cast<std::size_t>(type));
    loss += r.loss;
    if (grad) {
      auto [de, dq] = type_->backward(e, q, grad_scale * r.grad);
      d_e += de;
      encoder_.accumulate_question_grad(slot, dq);
    }
  }
  for (const auto& t : targets.spans) {
    if (!span_) throw std::logic_error("span targets on a non-span model");
    const RowVector q = encoder_.question_vector(t.slot);
    const auto sc = span_->scores(enc.tokens, q);
    const auto rs = softmax_ce_loss(sc.start, t.start);
    const auto re = softmax_ce_loss(sc.end, t.end);
    loss += rs.loss + re.loss;
    if (grad) {
      auto [dd, dq] = span_->backward(enc.tokens, q, grad_scale * rs.grad, grad_scale * re.grad);
      d_tokens += dd;
      encoder_.accumulate_question_grad(t.slot, dq);
    }
  }
  for (const auto& [slot, cls] : targets.jst) {
    if (!jst_) throw std::logic_error("jst targets on a non-jst model");
    const auto r = softmax_ce_loss(jst_->logits(e, slot), cls);
    loss += r.loss;
    if (grad) d_e += jst_->backward(e, slot, grad_scale * r.grad);
  }
  if (grad) encoder_.backward(cache, d_tokens, d_e);
  return loss;
}

std::vector<TargetedSubDialog> build_targets(ModelKind kind, const std::vector<Dialog>& corpus,
                                             const Schema& schema, const JstHead* jst) {
  if (kind == ModelKind::jst && !jst) throw std::invalid_argument("jst targets need the class lists");
  const auto examples = build_examples(corpus, schema);
  std::vector<TargetedSubDialog> out;
  std::size_t k = 0;
  const auto& ex = examples.examples;
  while (k < ex.size()) {
    const auto di = ex[k].dialog_index;
    const auto t = ex[k].t;
    TargetedSubDialog sub;
    sub.dialog_index = di;
    if (kind == ModelKind::carryover) sub.targets.change = RowVector::Zero(static_cast<Eigen::Index>(schema.size()));
    for (; k < ex.size() && ex[k].dialog_index == di && ex[k].t == t; ++k) {
      const auto& e = ex[k];
      switch (kind) {
        case ModelKind::carryover:
          (*sub.targets.change)(static_cast<Eigen::Index>(e.slot)) =
              e.carryover == CarryoverLabel::change ? 1.0 : 0.0;
          break;
        case ModelKind::type:
          if (e.type) sub.targets.types.emplace_back(e.slot, *e.type);
          break;
        case ModelKind::span:
          if (e.span) sub.targets.spans.push_back({e.slot, e.span->first, e.span->second});
          break;
        case ModelKind::jst: {
          const auto& gold = corpus[di].turns[t - 1].state[e.slot];
          if (auto cls = jst->classes(e.slot).index_of(gold)) {
            sub.targets.jst.emplace_back(e.slot, *cls);
          }
          break;
        }
      }
    }
    if (sub.targets.units() > 0) {
      sub.flat = flatten(corpus[di], t);
      out.push_back(std::move(sub));
    }
  }
  return out;
}

}  // namespace rcdst
