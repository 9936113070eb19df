// Command-line entry point: training, prediction, evaluation, ablations and
// system combination over corpus files.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rcdst/corpus.hpp"
#include "rcdst/embeddings.hpp"
#include "rcdst/errors.hpp"
#include "rcdst/eval.hpp"
#include "rcdst/model.hpp"
#include "rcdst/pipeline.hpp"
#include "rcdst/predictions.hpp"
#include "rcdst/trainer.hpp"

namespace fs = std::filesystem;
using namespace rcdst;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CorpusArgs {
  fs::path schema;
  fs::path ontology;
};

struct ModelArgs {
  double lr = 0.001;
  std::size_t batch = 32;
  std::size_t patience = 10;
  std::size_t max_epochs = 200;
  std::size_t embed = 100;
  std::size_t project = 200;
  std::size_t hidden = 50;
  std::uint64_t seed = 0;

  TrainConfig config(ModelKind kind, EmbeddingMode mode) const {
    TrainConfig c;
    c.kind = kind;
    c.learning_rate = lr;
    c.batch_size = batch;
    c.patience = patience;
    c.max_epochs = max_epochs;
    c.seed = seed;
    c.embedding_mode = mode;
    c.dims = {embed, project, hidden};
    return c;
  }
};

void add_training_flags(CLI::App* cmd, ModelArgs& m) {
  cmd->add_option("--lr", m.lr, "Adam learning rate")->capture_default_str();
  cmd->add_option("--batch-size", m.batch, "training units per batch")->capture_default_str();
  cmd->add_option("--patience", m.patience, "early-stopping patience in epochs")->capture_default_str();
  cmd->add_option("--max-epochs", m.max_epochs)->capture_default_str();
  cmd->add_option("--embed-dim", m.embed, "trainable embedding width")->capture_default_str();
  cmd->add_option("--project-dim", m.project, "projection width")->capture_default_str();
  cmd->add_option("--hidden", m.hidden, "LSTM units per direction")->capture_default_str();
}

std::optional<Ontology> maybe_ontology(const fs::path& path, const Schema& schema) {
  if (path.empty()) return std::nullopt;
  return load_ontology(path, schema);
}

std::unique_ptr<EmbeddingStore> maybe_embeddings(const fs::path& path) {
  if (path.empty()) return nullptr;
  return std::make_unique<EmbeddingStore>(load_embeddings(path));
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

OracleMask parse_oracle(const std::vector<std::string>& names) {
  OracleMask m;
  for (const auto& n : names) {
    if (n == "carryover") m.carryover = true;
    else if (n == "type") m.type = true;
    else if (n == "span") m.span = true;
    else if (n == "all") m = OracleMask::all();
    else throw UsageError("unknown oracle stage '" + n + "' (expected carryover, type, span or all)");
  }
  return m;
}

std::vector<Model> load_models(const std::vector<std::string>& paths) {
  std::vector<Model> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(Model::load(p));
  return out;
}

std::vector<const Model*> pointers(const std::vector<Model>& models) {
  std::vector<const Model*> out;
  for (const auto& m : models) out.push_back(&m);
  return out;
}

// Trains one model, streaming the epoch log to `log` when given.
Model train_model(const ModelArgs& args, ModelKind kind, EmbeddingMode mode,
                  const std::vector<Dialog>& train, const std::vector<Dialog>& dev,
                  const EmbeddingStore* train_emb, const EmbeddingStore* dev_emb,
                  const Schema& schema, const Ontology* ontology, std::ostream* log) {
  const auto result =
      rcdst::train(args.config(kind, mode), {&train, train_emb}, {&dev, dev_emb}, schema, ontology,
                   [&](const EpochLog& e) {
                     if (log) write_log_line(*log, e);
                   });
  std::cerr << to_string(kind) << ": " << result.log.size() << " epochs, best epoch "
            << result.best_epoch << ", " << result.train_units << " training units\n";
  return result.model;
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  CorpusArgs corpus;
  ModelArgs model;
  std::string kind;
  fs::path train, dev, train_emb, dev_emb, out, log;
};

int run_train(const TrainArgs& a) {
  const auto kind = parse_model_kind(a.kind);
  const auto schema = load_schema(a.corpus.schema);
  const auto ontology = maybe_ontology(a.corpus.ontology, schema);
  const auto train = load_corpus(a.train, schema);
  const auto dev = load_corpus(a.dev, schema);
  const auto train_emb = maybe_embeddings(a.train_emb);
  const auto dev_emb = maybe_embeddings(a.dev_emb);
  if (static_cast<bool>(train_emb) != static_cast<bool>(dev_emb)) {
    throw UsageError("--train-emb and --dev-emb must be given together");
  }
  const auto mode = train_emb ? EmbeddingMode::pretrained : EmbeddingMode::trainable;
  std::unique_ptr<std::ofstream> log;
  if (!a.log.empty()) log = std::make_unique<std::ofstream>(open_out(a.log));
  auto model = train_model(a.model, kind, mode, train, dev, train_emb.get(), dev_emb.get(), schema,
                           ontology ? &*ontology : nullptr, log.get());
  if (a.out.has_parent_path()) fs::create_directories(a.out.parent_path());
  model.save(a.out);
  return 0;
}

// ---- predict / ensemble -----------------------------------------------------

struct PredictArgs {
  CorpusArgs corpus;
  fs::path input, embeddings, out;
  std::vector<std::string> carryover, type, span, jst, oracle;
  double threshold = 0.5;
  std::size_t max_span_len = 0;
};

int run_predict(const PredictArgs& a, bool ensemble) {
  const auto schema = load_schema(a.corpus.schema);
  const auto corpus = load_corpus(a.input, schema);
  const auto store = maybe_embeddings(a.embeddings);
  if (!ensemble) {
    for (const auto* list : {&a.carryover, &a.type, &a.span, &a.jst}) {
      if (list->size() > 1) throw UsageError("predict takes one checkpoint per stage; use ensemble");
    }
  }
  std::vector<PredictionRecord> records;
  if (!a.jst.empty()) {
    if (!a.carryover.empty() || !a.type.empty() || !a.span.empty() || !a.oracle.empty()) {
      throw UsageError("--jst cannot be combined with pipeline checkpoints or oracles");
    }
    const auto models = load_models(a.jst);
    records = jst_track_corpus(corpus, schema, pointers(models), store.get());
  } else {
    const auto carry = load_models(a.carryover);
    const auto type = load_models(a.type);
    const auto span = load_models(a.span);
    PipelineOptions opts;
    opts.oracle = parse_oracle(a.oracle);
    opts.change_threshold = a.threshold;
    if (a.max_span_len > 0) opts.max_span_len = a.max_span_len;
    Tracker tracker{pointers(carry), pointers(type), pointers(span), store.get()};
    records = track_corpus(corpus, schema, tracker, opts);
  }
  auto out = open_out(a.out);
  write_predictions(out, records, schema);
  return 0;
}

// ---- eval / analyze -----------------------------------------------------------

struct EvalArgs {
  CorpusArgs corpus;
  fs::path pred, gold, report;
};

int run_eval(const EvalArgs& a, bool analysis_only) {
  const auto schema = load_schema(a.corpus.schema);
  const auto gold = load_corpus(a.gold, schema);
  const auto preds = load_predictions(a.pred, schema);
  const auto report = evaluate(preds, gold, schema);
  if (analysis_only) {
    const auto flags = std::cout.flags();
    std::cout << std::fixed << std::setprecision(2) << "depth  turns  % incorrect\n";
    for (const auto& row : report.depth) {
      std::cout << std::setw(5) << row.depth << std::setw(7) << row.total << std::setw(13)
                << row.percent_incorrect << "\n";
    }
    std::cout << "\n" << std::left << std::setw(50) << "error category" << "count      %\n";
    for (std::size_t c = 0; c < kErrorCategoryCount; ++c) {
      const auto cat = static_cast<ErrorCategory>(c);
      std::cout << std::left << std::setw(50) << to_string(cat) << std::right << std::setw(5)
                << report.errors.counts[c] << std::setw(7) << std::setprecision(1)
                << report.errors.percent(cat) << "\n";
    }
    std::cout.flags(flags);
  } else {
    report.print(std::cout);
  }
  if (!a.report.empty()) write_text(a.report, report.to_json());
  return 0;
}

// ---- combine -----------------------------------------------------------------

struct CombineArgs {
  CorpusArgs corpus;
  fs::path rc, jst, rc_dev, jst_dev, dev_gold, out;
};

int run_combine(const CombineArgs& a) {
  const auto schema = load_schema(a.corpus.schema);
  const auto dev = load_corpus(a.dev_gold, schema);
  const auto rc_dev = evaluate(load_predictions(a.rc_dev, schema), dev, schema);
  const auto jst_dev = evaluate(load_predictions(a.jst_dev, schema), dev, schema);
  std::vector<double> rc_acc, jst_acc;
  for (std::size_t s = 0; s < schema.size(); ++s) {
    rc_acc.push_back(rc_dev.per_slot[s].second);
    jst_acc.push_back(jst_dev.per_slot[s].second);
  }
  const auto use_jst = hybrid_selection(rc_acc, jst_acc);
  const auto combined =
      hybrid_combine(load_predictions(a.rc, schema), load_predictions(a.jst, schema), rc_acc, jst_acc);
  auto out = open_out(a.out);
  write_predictions(out, combined, schema);
  std::size_t n_jst = 0;
  for (std::size_t s = 0; s < schema.size(); ++s) {
    if (use_jst[s]) {
      ++n_jst;
      std::cerr << "jst  " << schema.slot(s).str() << "\n";
    }
  }
  std::cerr << n_jst << " of " << schema.size() << " slots taken from the jst system\n";
  return 0;
}

// ---- ablate ------------------------------------------------------------------

struct AblateArgs {
  CorpusArgs corpus;
  ModelArgs model;
  fs::path train, dev, eval, train_emb, dev_emb, eval_emb, out;
  std::vector<std::string> oracle;
};

struct AblationRow {
  std::string name;
  std::optional<double> jga;
  std::string note;
};

int run_ablate(const AblateArgs& a) {
  const auto schema = load_schema(a.corpus.schema);
  const auto train = load_corpus(a.train, schema);
  const auto dev = load_corpus(a.dev, schema);
  const auto eval_set = a.eval.empty() ? dev : load_corpus(a.eval, schema);
  const auto train_emb = maybe_embeddings(a.train_emb);
  const auto dev_emb = maybe_embeddings(a.dev_emb);
  std::unique_ptr<EmbeddingStore> eval_emb_owned = maybe_embeddings(a.eval_emb);
  const EmbeddingStore* eval_emb = a.eval.empty() ? dev_emb.get() : eval_emb_owned.get();
  const bool pretrained = static_cast<bool>(train_emb);
  if (pretrained != static_cast<bool>(dev_emb)) {
    throw UsageError("--train-emb and --dev-emb must be given together");
  }
  if (pretrained && !a.eval.empty() && !eval_emb) {
    throw UsageError("--eval-emb is required with --eval in pretrained mode");
  }

  // Rows: base first, then the requested oracle variants.
  std::vector<std::pair<std::string, OracleMask>> oracle_rows;
  bool with_no_pretrained = a.oracle.empty();
  if (a.oracle.empty()) {
    oracle_rows = {{"+ oracle type", {false, true, false}},
                   {"+ oracle span", {false, false, true}},
                   {"+ oracle carryover", {true, false, false}},
                   {"oracle all", OracleMask::all()}};
  } else {
    for (const auto& name : a.oracle) {
      if (name == "pretrained") {
        with_no_pretrained = true;
        continue;
      }
      const auto mask = parse_oracle({name});
      oracle_rows.emplace_back(name == "all" ? "oracle all" : "+ oracle " + name, mask);
    }
  }

  const auto mode = pretrained ? EmbeddingMode::pretrained : EmbeddingMode::trainable;
  auto train_three = [&](EmbeddingMode m, const EmbeddingStore* tr, const EmbeddingStore* dv) {
    std::vector<Model> models;
    for (auto kind : {ModelKind::carryover, ModelKind::type, ModelKind::span}) {
      models.push_back(train_model(a.model, kind, m, train, dev, tr, dv, schema, nullptr, nullptr));
    }
    return models;
  };
  auto score = [&](const std::vector<Model>& models, const EmbeddingStore* store, OracleMask mask) {
    Tracker tracker{{&models[0]}, {&models[1]}, {&models[2]}, store};
    PipelineOptions opts;
    opts.oracle = mask;
    return evaluate(track_corpus(eval_set, schema, tracker, opts), eval_set, schema).joint_goal_accuracy;
  };

  std::vector<AblationRow> rows;
  const auto base = train_three(mode, train_emb.get(), dev_emb.get());
  rows.push_back({"base", score(base, eval_emb, {}), std::string(to_string(mode)) + " embeddings"});
  if (with_no_pretrained) {
    if (pretrained) {
      const auto plain = train_three(EmbeddingMode::trainable, nullptr, nullptr);
      rows.push_back({"- pretrained", score(plain, nullptr, {}), "trainable embeddings"});
    } else {
      rows.push_back({"- pretrained", std::nullopt, "skipped: base already uses trainable embeddings"});
    }
  }
  for (const auto& [name, mask] : oracle_rows) rows.push_back({name, score(base, eval_emb, mask), ""});

  const auto flags = std::cout.flags();
  std::cout << std::left << std::setw(22) << "system" << std::right << std::setw(10) << "joint %"
            << "\n";
  nlohmann::ordered_json table = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    std::cout << std::left << std::setw(22) << r.name << std::right << std::setw(10);
    if (r.jga) {
      std::cout << std::fixed << std::setprecision(2) << 100.0 * *r.jga;
    } else {
      std::cout << "-";
    }
    if (!r.note.empty()) std::cout << "  " << r.note;
    std::cout << "\n";
    table.push_back({{"system", r.name},
                     {"joint_goal_accuracy", r.jga ? nlohmann::ordered_json(*r.jga) : nullptr},
                     {"note", r.note}});
  }
  std::cout.flags(flags);
  if (!a.out.empty()) write_text(a.out, table.dump(2) + "\n");
  return 0;
}

// ---- validate-corpus ---------------------------------------------------------

struct ValidateArgs {
  CorpusArgs corpus;
  fs::path input;
};

int run_validate(const ValidateArgs& a) {
  const auto schema = load_schema(a.corpus.schema);
  const auto ontology = maybe_ontology(a.corpus.ontology, schema);
  const auto corpus = load_corpus(a.input, schema);
  const auto examples = build_examples(corpus, schema);
  std::size_t turns = 0;
  for (const auto& d : corpus) turns += d.turns.size();
  std::cout << "dialogs                " << corpus.size() << "\n"
            << "turns                  " << turns << "\n"
            << "slots                  " << schema.size() << "\n"
            << "examples               " << examples.examples.size() << "\n"
            << "answerable spans       " << examples.answerable << "\n"
            << "unanswerable spans     " << examples.unanswerable << "\n"
            << "derivability coverage  " << std::fixed << std::setprecision(4)
            << derivability_coverage(corpus, schema) << "\n";
  if (ontology) {
    std::size_t outside = 0;
    for (const auto& d : corpus) {
      for (const auto& t : d.turns) {
        for (std::size_t s = 0; s < schema.size(); ++s) {
          if (!t.state[s] || *t.state[s] == "dontcare") continue;
          const auto* values = ontology->values(schema.slot(s).str());
          if (!values || std::find(values->begin(), values->end(), *t.state[s]) == values->end()) ++outside;
        }
      }
    }
    std::cout << "values outside ontology " << outside << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reading-comprehension dialog state tracker"};
  app.require_subcommand(1);

  auto corpus_flags = [](CLI::App* cmd, CorpusArgs& c, bool need_ontology) {
    cmd->add_option("--schema", c.schema, "slot schema JSON")->required();
    auto* o = cmd->add_option("--ontology", c.ontology, "ontology JSON");
    if (need_ontology) o->required();
  };

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train one model with early stopping");
  corpus_flags(train, train_args.corpus, false);
  train->add_option("--model", train_args.kind, "carryover, type, span or jst")
      ->required()
      ->check(CLI::IsMember({"carryover", "type", "span", "jst"}));
  train->add_option("--train", train_args.train, "training corpus")->required();
  train->add_option("--dev", train_args.dev, "development corpus")->required();
  train->add_option("--train-emb", train_args.train_emb, "pretrained embeddings for --train");
  train->add_option("--dev-emb", train_args.dev_emb, "pretrained embeddings for --dev");
  train->add_option("--out", train_args.out, "checkpoint path")->required();
  train->add_option("--log", train_args.log, "JSON-lines training log");
  train->add_option("--seed", train_args.model.seed)->required();
  add_training_flags(train, train_args.model);

  PredictArgs predict_args;
  auto* predict = app.add_subcommand("predict", "track dialog states with trained models");
  auto* ensemble = app.add_subcommand("ensemble", "predict with several checkpoints per stage");
  for (auto* cmd : {predict, ensemble}) {
    corpus_flags(cmd, predict_args.corpus, false);
    cmd->add_option("--corpus", predict_args.input, "dialogs to track")->required();
    cmd->add_option("--emb", predict_args.embeddings, "pretrained embeddings for --corpus");
    cmd->add_option("--carryover", predict_args.carryover, "carryover checkpoint(s)");
    cmd->add_option("--type", predict_args.type, "type checkpoint(s)");
    cmd->add_option("--span", predict_args.span, "span checkpoint(s)");
    cmd->add_option("--jst", predict_args.jst, "closed-vocabulary checkpoint(s)");
    cmd->add_option("--oracle", predict_args.oracle, "stages replaced by gold: carryover, type, span, all")
        ->delimiter(',');
    cmd->add_option("--threshold", predict_args.threshold, "change probability threshold")
        ->capture_default_str();
    cmd->add_option("--max-span-len", predict_args.max_span_len, "0 = unlimited");
    cmd->add_option("--out", predict_args.out, "prediction JSON-lines file")->required();
  }

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "score predictions against gold states");
  auto* analyze = app.add_subcommand("analyze", "depth breakdown and error categories");
  for (auto* cmd : {eval, analyze}) {
    corpus_flags(cmd, eval_args.corpus, false);
    cmd->add_option("--pred", eval_args.pred, "prediction file")->required();
    cmd->add_option("--gold", eval_args.gold, "gold corpus")->required();
    cmd->add_option("--report", eval_args.report, "write the JSON report here");
  }

  CombineArgs combine_args;
  auto* combine = app.add_subcommand("combine", "per-slot hybrid of RC and JST predictions");
  corpus_flags(combine, combine_args.corpus, false);
  combine->add_option("--rc", combine_args.rc, "RC predictions to combine")->required();
  combine->add_option("--jst", combine_args.jst, "JST predictions to combine")->required();
  combine->add_option("--rc-dev", combine_args.rc_dev, "RC predictions on the dev set")->required();
  combine->add_option("--jst-dev", combine_args.jst_dev, "JST predictions on the dev set")->required();
  combine->add_option("--dev-gold", combine_args.dev_gold, "dev corpus")->required();
  combine->add_option("--out", combine_args.out, "combined prediction file")->required();

  AblateArgs ablate_args;
  auto* ablate = app.add_subcommand("ablate", "train once and score the oracle grid");
  corpus_flags(ablate, ablate_args.corpus, false);
  ablate->add_option("--train", ablate_args.train)->required();
  ablate->add_option("--dev", ablate_args.dev)->required();
  ablate->add_option("--eval", ablate_args.eval, "evaluation corpus (default: --dev)");
  ablate->add_option("--train-emb", ablate_args.train_emb);
  ablate->add_option("--dev-emb", ablate_args.dev_emb);
  ablate->add_option("--eval-emb", ablate_args.eval_emb);
  ablate->add_option("--oracle", ablate_args.oracle,
                     "rows to run besides base: carryover, type, span, all, pretrained")
      ->delimiter(',');
  ablate->add_option("--out", ablate_args.out, "JSON table");
  ablate->add_option("--seed", ablate_args.model.seed)->required();
  add_training_flags(ablate, ablate_args.model);

  ValidateArgs validate_args;
  auto* validate = app.add_subcommand("validate-corpus", "check a corpus against its schema");
  corpus_flags(validate, validate_args.corpus, false);
  validate->add_option("--corpus", validate_args.input)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train) return run_train(train_args);
    if (*predict) return run_predict(predict_args, false);
    if (*ensemble) return run_predict(predict_args, true);
    if (*eval) return run_eval(eval_args, false);
    if (*analyze) return run_eval(eval_args, true);
    if (*combine) return run_combine(combine_args);
    if (*ablate) return run_ablate(ablate_args);
    if (*validate) return run_validate(validate_args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
