#include "rcdst/predictions.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "rcdst/errors.hpp"
#include "rcdst/text.hpp"

namespace rcdst {

using nlohmann::json;

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::carried: return "carried";
    case Provenance::yes: return "yes";
    case Provenance::no: return "no";
    case Provenance::dontcare: return "dontcare";
    case Provenance::span: return "span";
    case Provenance::jst: return "jst";
    case Provenance::oracle: return "oracle";
  }
  return "?";
}

Provenance parse_provenance(std::string_view s) {
  for (auto p : {Provenance::carried, Provenance::yes, Provenance::no, Provenance::dontcare,
                 Provenance::span, Provenance::jst, Provenance::oracle}) {
    if (to_string(p) == s) return p;
  }
  throw DataError("unknown provenance tag: " + std::string(s));
}

void write_predictions(std::ostream& out, const std::vector<PredictionRecord>& records,
                       const Schema& schema) {
  for (const auto& r : records) {
    if (r.state.size() != schema.size() || r.provenance.size() != schema.size()) {
      throw std::invalid_argument("prediction record is not total over the schema");
    }
    json state = json::object();
    json prov = json::object();
    for (std::size_t s = 0; s < schema.size(); ++s) {
      const auto name = schema.slot(s).str();
      state[name] = r.state[s] ? json(*r.state[s]) : json(nullptr);
      prov[name] = to_string(r.provenance[s]);
    }
    nlohmann::ordered_json line;
    line["dialog_id"] = r.dialog_id;
    line["turn"] = r.turn;
    line["state"] = std::move(state);
    line["provenance"] = std::move(prov);
    out << line.dump() << "\n";
  }
}

void save_predictions(const std::filesystem::path& path,
                      const std::vector<PredictionRecord>& records, const Schema& schema) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write predictions " + path.string());
  write_predictions(out, records, schema);
}

std::vector<PredictionRecord> read_predictions(std::istream& in, const Schema& schema) {
  std::vector<PredictionRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      PredictionRecord r;
      r.dialog_id = j.at("dialog_id").get<std::string>();
      r.turn = j.at("turn").get<std::size_t>();
      r.state = empty_state(schema);
      r.provenance.assign(schema.size(), Provenance::carried);
      for (const auto& [slot, v] : j.at("state").items()) {
        const auto idx = schema.require(slot);
        if (!v.is_null()) {
          auto n = normalize_value(v.get<std::string>());
          if (!n.empty()) r.state[idx] = std::move(n);
        }
      }
      if (j.contains("provenance")) {
        for (const auto& [slot, v] : j["provenance"].items()) {
          r.provenance[schema.require(slot)] = parse_provenance(v.get<std::string>());
        }
      }
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw DataError("predictions line " + std::to_string(lineno) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("predictions line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path,
                                               const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open predictions " + path.string());
  return read_predictions(in, schema);
}

}  // namespace rcdst
