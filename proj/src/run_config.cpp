#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "spread/error.hpp"
#include "spread/io.hpp"

namespace spread::io {
namespace {

using nlohmann::json;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "radius_scale", "iters", "seed", "init_noise_sigma",
      "step_policy",  "early_stop_grad_tol", "explicit_alphas",
  };
  return keys;
}

double number(const json& value, const std::string& key) {
  if (!value.is_number()) {
    throw Error(ErrorCode::Parse, "config key '" + key + "' must be a number");
  }
  return value.get<double>();
}

}  // namespace

SolverConfig parse_run_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) {
    throw Error(ErrorCode::Parse, "config must be a JSON object");
  }
  for (const auto& [key, _] : doc.items()) {
    if (!known_keys().count(key)) {
      throw Error(ErrorCode::Parse, "unknown config key '" + key + "'");
    }
  }

  SolverConfig config;
  if (doc.contains("radius_scale")) config.radius_scale = number(doc["radius_scale"], "radius_scale");
  if (doc.contains("iters")) {
    const auto& it = doc["iters"];
    if (!it.is_number_integer()) throw Error(ErrorCode::Parse, "config key 'iters' must be an integer");
    config.iters = it.get<int>();
  }
  if (doc.contains("seed")) {
    const auto& s = doc["seed"];
    if (!s.is_number_unsigned()) {
      throw Error(ErrorCode::Parse, "config key 'seed' must be a non-negative integer");
    }
    config.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("init_noise_sigma")) {
    const auto& s = doc["init_noise_sigma"];
    if (s.is_string() && s.get<std::string>() == "auto") {
      config.init_noise_sigma.reset();
    } else {
      config.init_noise_sigma = number(s, "init_noise_sigma");
    }
  }
  if (doc.contains("step_policy")) {
    const auto& s = doc["step_policy"];
    if (s.is_string() && s.get<std::string>() == "theorem_rate") {
      config.step_policy = StepPolicy::theorem_rate();
    } else if (s.is_object() && s.size() == 1 && s.contains("fixed")) {
      config.step_policy = StepPolicy::fixed(number(s["fixed"], "step_policy.fixed"));
    } else {
      throw Error(ErrorCode::Parse,
                  "config key 'step_policy' must be \"theorem_rate\" or {\"fixed\": <step>}");
    }
  }
  if (doc.contains("early_stop_grad_tol")) {
    config.early_stop_grad_tol = number(doc["early_stop_grad_tol"], "early_stop_grad_tol");
  }
  if (doc.contains("explicit_alphas")) {
    const auto& a = doc["explicit_alphas"];
    if (!a.is_array()) throw Error(ErrorCode::Parse, "config key 'explicit_alphas' must be an array");
    VectorXd alphas(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
      alphas(static_cast<Eigen::Index>(i)) = number(a[i], "explicit_alphas");
    }
    config.explicit_alphas = std::move(alphas);
  }
  try {
    config.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::Parse, e.what());
  }
  return config;
}

SolverConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Parse, "cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str());
}

}  // namespace spread::io
