#include "attnad/synth/recipe.hpp"

#include "attnad/common/errors.hpp"

namespace attnad::synth {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

std::string step_name(const RecipeStep& step) {
  return std::visit(overloaded{[](const RotateStep&) { return std::string("rotate"); },
                               [](const PermStep&) { return std::string("perm"); },
                               [](const JitterStep&) { return std::string("jitter"); },
                               [](const CutStep&) { return std::string("cut"); }},
                    step);
}

void to_json(nlohmann::json& j, const Recipe& r) {
  j = nlohmann::json::object();
  j["seed"] = r.seed;
  j["kind"] = r.kind == AnomalyKind::prime ? "prime" : "cut";
  auto steps = nlohmann::json::array();
  for (const auto& s : r.steps) {
    nlohmann::json e;
    e["op"] = step_name(s);
    std::visit(overloaded{[&](const RotateStep& x) { e["angle"] = x.angle; },
                          [&](const PermStep& x) {
                            e["grid"] = x.grid;
                            e["order"] = x.order;
                          },
                          [&](const JitterStep& x) {
                            e["brightness"] = x.brightness;
                            e["contrast"] = x.contrast;
                            e["saturation"] = x.saturation;
                          },
                          [&](const CutStep& x) {
                            e["top"] = x.top;
                            e["left"] = x.left;
                            e["height"] = x.height;
                            e["width"] = x.width;
                            e["fill"] = x.fill_zero ? "zero" : "prime";
                          }},
               s);
    steps.push_back(std::move(e));
  }
  j["steps"] = std::move(steps);
}

void from_json(const nlohmann::json& j, Recipe& r) {
  r.seed = j.at("seed").get<std::uint64_t>();
  const auto kind = j.at("kind").get<std::string>();
  if (kind != "prime" && kind != "cut") throw ConfigError("recipe: unknown kind '" + kind + "'");
  r.kind = kind == "prime" ? AnomalyKind::prime : AnomalyKind::cut;
  r.steps.clear();
  for (const auto& e : j.at("steps")) {
    const auto op = e.at("op").get<std::string>();
    if (op == "rotate") {
      r.steps.emplace_back(RotateStep{e.at("angle").get<int>()});
    } else if (op == "perm") {
      r.steps.emplace_back(PermStep{e.at("grid").get<int>(), e.at("order").get<std::vector<int>>()});
    } else if (op == "jitter") {
      r.steps.emplace_back(JitterStep{e.at("brightness").get<double>(), e.at("contrast").get<double>(),
                                      e.at("saturation").get<double>()});
    } else if (op == "cut") {
      r.steps.emplace_back(CutStep{e.at("top").get<int>(), e.at("left").get<int>(), e.at("height").get<int>(),
                                   e.at("width").get<int>(), e.at("fill").get<std::string>() == "zero"});
    } else {
      throw ConfigError("recipe: unknown step '" + op + "'");
    }
  }
}

}  // namespace attnad::synth
