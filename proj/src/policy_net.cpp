#include "fogsched/policy_net.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fogsched {

namespace {

constexpr const char* kFormat = "fogsched-policy";
constexpr int kFormatVersion = 1;

}  // namespace

std::string checkpoint_to_string(const PolicyParameters<double>& p) {
  nlohmann::json j;
  j["format"] = kFormat;
  j["format_version"] = kFormatVersion;
  j["version"] = p.version;
  j["config"] = {{"input_dim", p.config.input_dim},
                 {"dense_sizes", p.config.dense_sizes},
                 {"recurrent_sizes", p.config.recurrent_sizes},
                 {"action_count", p.config.action_count},
                 {"init_seed", p.config.init_seed}};
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : p.layout) blocks.push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}});
  j["blocks"] = blocks;
  j["weights"] = std::vector<double>(p.values.data(), p.values.data() + p.values.size());
  return j.dump();
}

PolicyParameters<double> checkpoint_from_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat) throw ParseError("checkpoint: not a policy checkpoint");
    if (j.at("format_version").get<int>() != kFormatVersion)
      throw ParseError("checkpoint: unsupported format_version " + j.at("format_version").dump());
    const auto& c = j.at("config");
    NetConfig cfg;
    cfg.input_dim = c.at("input_dim").get<std::size_t>();
    cfg.dense_sizes = c.at("dense_sizes").get<std::array<std::size_t, 2>>();
    cfg.recurrent_sizes = c.at("recurrent_sizes").get<std::array<std::size_t, 2>>();
    cfg.action_count = c.at("action_count").get<std::size_t>();
    cfg.init_seed = c.at("init_seed").get<std::uint64_t>();
    check_config(cfg);

    PolicyParameters<double> p;
    p.config = cfg;
    p.layout = make_layout(cfg);
    p.version = j.at("version").get<std::uint64_t>();
    const auto& blocks = j.at("blocks");
    if (blocks.size() != p.layout.size()) throw ParseError("checkpoint: block count does not match the config");
    for (std::size_t i = 0; i < p.layout.size(); ++i) {
      const auto& b = blocks[i];
      if (b.at("name").get<std::string>() != p.layout[i].name || b.at("rows").get<Eigen::Index>() != p.layout[i].rows ||
          b.at("cols").get<Eigen::Index>() != p.layout[i].cols)
        throw ParseError(std::string("checkpoint: block ") + p.layout[i].name + " has an unexpected shape");
    }
    const auto w = j.at("weights").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != parameter_count(p.layout))
      throw ParseError("checkpoint: " + std::to_string(w.size()) + " weights, expected " +
                       std::to_string(parameter_count(p.layout)));
    p.values = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    if (!p.values.allFinite()) throw ParseError("checkpoint: non-finite weight");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const PolicyParameters<double>& params, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open " + path + " for writing");
  f << checkpoint_to_string(params) << '\n';
  if (!f) throw Error("failed writing " + path);
}

PolicyParameters<double> load_checkpoint(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open checkpoint " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return checkpoint_from_string(ss.str());
}

void check_compatible(const PolicyParameters<double>& params, std::size_t input_dim, std::size_t action_count) {
  if (params.config.input_dim != input_dim || params.config.action_count != action_count)
    throw ConfigError("checkpoint expects " + std::to_string(params.config.input_dim) + " features and " +
                      std::to_string(params.config.action_count) + " servers; the environment has " +
                      std::to_string(input_dim) + " and " + std::to_string(action_count));
}

}  // namespace fogsched
