#include "fosls/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fosls {

using nlohmann::json;

std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

json activation_to_json(const Activation& act) {
  json j = {{"kind", act.name()}};
  if (act.kind == Activation::Kind::SoftPlus) j["beta"] = act.beta;
  if (act.kind == Activation::Kind::Heaviside) j["ste_c"] = act.ste_c;
  return j;
}

Activation activation_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "softplus") return Activation::softplus(j.at("beta").get<double>());
  if (kind == "relu") return Activation::relu();
  if (kind == "heaviside") return Activation::heaviside(j.value("ste_c", 0.5));
  if (kind == "identity") return Activation::identity();
  throw std::invalid_argument("unknown activation kind '" + kind + "'");
}

json spec_to_json(const NetworkSpec& spec) {
  json layers = json::array();
  for (const auto& layer : spec.hidden)
    layers.push_back({{"width", layer.width}, {"activation", activation_to_json(layer.act)}});
  return {{"input_dim", spec.input_dim}, {"hidden", layers}, {"output_dim", spec.output_dim}};
}

NetworkSpec spec_from_json(const json& j) {
  NetworkSpec spec;
  spec.input_dim = j.at("input_dim").get<int>();
  spec.output_dim = j.at("output_dim").get<int>();
  for (const auto& layer : j.at("hidden"))
    spec.hidden.push_back({layer.at("width").get<int>(), activation_from_json(layer.at("activation"))});
  spec.validate();
  return spec;
}

std::string checkpoint_to_string(const Network& net) {
  json header = {{"format", "fosls-network"}, {"version", 1}, {"spec", spec_to_json(net.spec)},
                 {"param_count", net.theta.size()}};
  // nlohmann would print shortest round-trip decimals; the params array is
  // emitted by hand to keep a fixed 17-digit format.
  std::string text = header.dump(2);
  text.pop_back();  // closing brace
  while (!text.empty() && (text.back() == '\n' || text.back() == ' ')) text.pop_back();
  text += ",\n  \"params\": [";
  for (Eigen::Index i = 0; i < net.theta.size(); ++i) {
    text += (i % 4 == 0) ? "\n    " : " ";
    text += format_g17(net.theta[i]);
    if (i + 1 < net.theta.size()) text += ",";
  }
  text += "\n  ]\n}\n";
  return text;
}

Network checkpoint_from_string(const std::string& text) {
  const json j = json::parse(text);
  if (j.value("format", "") != "fosls-network")
    throw std::invalid_argument("not a fosls network checkpoint");
  Network net;
  net.spec = spec_from_json(j.at("spec"));
  const auto& params = j.at("params");
  if (params.size() != net.spec.param_count() || j.at("param_count").get<std::size_t>() != params.size())
    throw std::invalid_argument("checkpoint parameter count does not match its spec");
  net.theta.resize(static_cast<Eigen::Index>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) net.theta[static_cast<Eigen::Index>(i)] = params[i].get<double>();
  return net;
}

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << checkpoint_to_string(net);
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str());
}

}  // namespace fosls
