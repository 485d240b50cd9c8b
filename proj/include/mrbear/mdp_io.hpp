#pragma once

#include <filesystem>
#include <json.hpp>

#include "mrbear/mdp.hpp"

namespace mrbear::mdp {

inline constexpr int kMdpFormatVersion = 1;

// {version, S, A, P: [S][A][S], r: [S][A], mu: [S]}
nlohmann::json to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const nlohmann::json& doc);

void save_mdp(const TabularMdp& mdp, const std::filesystem::path& path);
TabularMdp load_mdp(const std::filesystem::path& path);

}  // namespace mrbear::mdp
