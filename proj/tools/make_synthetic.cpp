// Writes the bundled synthetic corpus: schema, ontology, train/dev dialogs
// and the matching contextual embedding files.

#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "rcdst/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic dialog corpus"};
  std::filesystem::path out = "data/synthetic";
  std::uint64_t seed = 2019;
  std::size_t train = 50, dev = 20;
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "generator seed");
  app.add_option("--train-dialogs", train);
  app.add_option("--dev-dialogs", dev);
  CLI11_PARSE(app, argc, argv);

  try {
    std::filesystem::create_directories(out);
    const auto b = rcdst::synthetic::generate(seed, train, dev);
    rcdst::save_schema(b.schema, out / "schema.json");
    rcdst::save_ontology(b.ontology, out / "ontology.json");
    rcdst::save_corpus(b.train, b.schema, out / "train.json");
    rcdst::save_corpus(b.dev, b.schema, out / "dev.json");
    rcdst::save_embeddings(rcdst::synthetic::contextual_embeddings(b.train, b.schema, b.ontology, seed),
                           out / "train.emb");
    rcdst::save_embeddings(rcdst::synthetic::contextual_embeddings(b.dev, b.schema, b.ontology, seed),
                           out / "dev.emb");
    std::cout << "wrote " << b.train.size() << " train and " << b.dev.size() << " dev dialogs to "
              << out.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
