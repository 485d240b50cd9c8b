#pragma once

#include <filesystem>
#include <json.hpp>

#include "mrbear/game.hpp"

namespace mrbear::game {

// {A, B, U: [A][B]}
nlohmann::json to_json(const StageGame& stage);
StageGame stage_from_json(const nlohmann::json& doc);

// {order, kind: "general" | "self_oblivious", A, B, rows: [[p...]...]}
nlohmann::json to_json(const OpponentPolicy& opponent);
OpponentPolicy opponent_from_json(const nlohmann::json& doc);

const char* kind_name(OpponentKind kind) noexcept;
OpponentKind parse_kind(const std::string& name);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const nlohmann::json& doc, const std::filesystem::path& path);

}  // namespace mrbear::game
