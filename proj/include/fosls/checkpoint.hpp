#pragma once

// Self-describing JSON checkpoints for networks. Parameters are written as
// decimals with 17 significant digits so that load(save(net)) is bitwise
// identical.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "fosls/netcore.hpp"

namespace fosls {

nlohmann::json activation_to_json(const Activation& act);
Activation activation_from_json(const nlohmann::json& j);

nlohmann::json spec_to_json(const NetworkSpec& spec);
NetworkSpec spec_from_json(const nlohmann::json& j);

std::string checkpoint_to_string(const Network& net);
Network checkpoint_from_string(const std::string& text);

void save_checkpoint(const Network& net, const std::filesystem::path& path);
Network load_checkpoint(const std::filesystem::path& path);

/// printf("%.17g") formatting shared by checkpoints and CSV output.
std::string format_g17(double x);

}  // namespace fosls
