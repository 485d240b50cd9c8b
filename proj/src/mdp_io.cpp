#include "mrbear/mdp_io.hpp"

#include <fstream>

#include "mrbear/errors.hpp"

namespace mrbear::mdp {

nlohmann::json to_json(const TabularMdp& mdp) {
  const std::size_t n = mdp.num_states();
  const std::size_t na = mdp.num_actions();
  nlohmann::json p = nlohmann::json::array();
  nlohmann::json r = nlohmann::json::array();
  for (std::size_t s = 0; s < n; ++s) {
    nlohmann::json ps = nlohmann::json::array();
    nlohmann::json rs = nlohmann::json::array();
    for (std::size_t a = 0; a < na; ++a) {
      const auto row = mdp.row(s, a);
      ps.push_back(std::vector<double>(row.begin(), row.end()));
      rs.push_back(mdp.r(s, a));
    }
    p.push_back(std::move(ps));
    r.push_back(std::move(rs));
  }
  return {{"version", kMdpFormatVersion}, {"S", n},       {"A", na},
          {"P", std::move(p)},            {"r", std::move(r)}, {"mu", mdp.initial_dist()}};
}

TabularMdp mdp_from_json(const nlohmann::json& doc) {
  try {
    const int version = doc.at("version").get<int>();
    if (version != kMdpFormatVersion) {
      throw ParseError("unsupported MDP format version " + std::to_string(version));
    }
    const auto n = doc.at("S").get<std::size_t>();
    const auto na = doc.at("A").get<std::size_t>();
    const auto& p = doc.at("P");
    const auto& r = doc.at("r");
    if (p.size() != n || r.size() != n) throw ParseError("MDP document: P or r has wrong length");
    std::vector<double> transitions;
    std::vector<double> rewards;
    transitions.reserve(n * na * n);
    rewards.reserve(n * na);
    for (std::size_t s = 0; s < n; ++s) {
      if (p[s].size() != na || r[s].size() != na) {
        throw ParseError("MDP document: wrong number of actions at state " + std::to_string(s));
      }
      for (std::size_t a = 0; a < na; ++a) {
        const auto row = p[s][a].get<std::vector<double>>();
        if (row.size() != n) throw ParseError("MDP document: transition row has wrong length");
        transitions.insert(transitions.end(), row.begin(), row.end());
        rewards.push_back(r[s][a].get<double>());
      }
    }
    return TabularMdp(n, na, std::move(transitions), std::move(rewards),
                      doc.at("mu").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("MDP document: ") + e.what());
  }
}

void save_mdp(const TabularMdp& mdp, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json(mdp).dump(1) << '\n';
}

TabularMdp load_mdp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return mdp_from_json(doc);
}

}  // namespace mrbear::mdp
