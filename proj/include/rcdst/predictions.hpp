#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "rcdst/corpus.hpp"

namespace rcdst {

/// Which stage produced a slot's final value.
enum class Provenance { carried, yes, no, dontcare, span, jst, oracle };

std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view s);

/// One line of a prediction file.
struct PredictionRecord {
  std::string dialog_id;
  std::size_t turn = 0;  // 1-based
  DialogState state;
  std::vector<Provenance> provenance;
};

/// JSON lines: {"dialog_id", "turn", "state": {slot: value|null}, "provenance": {slot: tag}}.
void write_predictions(std::ostream& out, const std::vector<PredictionRecord>& records,
                       const Schema& schema);
void save_predictions(const std::filesystem::path& path,
                      const std::vector<PredictionRecord>& records, const Schema& schema);
std::vector<PredictionRecord> read_predictions(std::istream& in, const Schema& schema);
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path,
                                               const Schema& schema);

}  // namespace rcdst
