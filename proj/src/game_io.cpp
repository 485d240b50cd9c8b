#include "mrbear/game_io.hpp"

#include <fstream>

#include "mrbear/errors.hpp"

namespace mrbear::game {

nlohmann::json to_json(const StageGame& stage) {
  nlohmann::json u = nlohmann::json::array();
  for (std::size_t a = 0; a < stage.num_learner_actions(); ++a) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t b = 0; b < stage.num_opponent_actions(); ++b) row.push_back(stage.utility(a, b));
    u.push_back(std::move(row));
  }
  return {{"A", stage.num_learner_actions()}, {"B", stage.num_opponent_actions()}, {"U", std::move(u)}};
}

StageGame stage_from_json(const nlohmann::json& doc) {
  try {
    const auto na = doc.at("A").get<std::size_t>();
    const auto nb = doc.at("B").get<std::size_t>();
    const auto& u = doc.at("U");
    if (u.size() != na) throw ParseError("stage game: U must have A rows");
    std::vector<double> flat;
    for (const auto& row : u) {
      const auto values = row.get<std::vector<double>>();
      if (values.size() != nb) throw ParseError("stage game: U rows must have B entries");
      flat.insert(flat.end(), values.begin(), values.end());
    }
    return StageGame(na, nb, std::move(flat));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("stage game: ") + e.what());
  }
}

const char* kind_name(OpponentKind kind) noexcept {
  return kind == OpponentKind::General ? "general" : "self_oblivious";
}

OpponentKind parse_kind(const std::string& name) {
  if (name == "general") return OpponentKind::General;
  if (name == "self_oblivious") return OpponentKind::SelfOblivious;
  throw ParseError("unknown opponent kind '" + name + "'");
}

nlohmann::json to_json(const OpponentPolicy& opponent) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t c = 0; c < opponent.domain_size(); ++c) {
    const auto row = opponent.row(c);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return {{"order", opponent.order()},
          {"kind", kind_name(opponent.kind())},
          {"A", opponent.num_learner_actions()},
          {"B", opponent.num_opponent_actions()},
          {"rows", std::move(rows)}};
}

OpponentPolicy opponent_from_json(const nlohmann::json& doc) {
  try {
    const auto order = doc.at("order").get<std::size_t>();
    const OpponentKind kind = parse_kind(doc.at("kind").get<std::string>());
    const auto na = doc.at("A").get<std::size_t>();
    const auto nb = doc.at("B").get<std::size_t>();
    std::vector<double> flat;
    for (const auto& row : doc.at("rows")) {
      const auto values = row.get<std::vector<double>>();
      if (values.size() != nb) throw ParseError("opponent: rows must have B entries");
      flat.insert(flat.end(), values.begin(), values.end());
    }
    return OpponentPolicy(order, kind, na, nb, std::move(flat));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("opponent: ") + e.what());
  }
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json_file(const nlohmann::json& doc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace mrbear::game
