#include "json.hpp"
#include "mupre/scaling.hpp"

namespace mupre {

using ojson = nlohmann::ordered_json;

namespace {
constexpr const char* kFields[] = {"eta", "eps", "sigma_init", "residual_mult", "lambda_wd"};
}

std::string plan_to_json(const PlanTable& table, int indent) {
  ojson doc = ojson::object();
  for (const NamedHyper& n : table) {
    ojson h;
    h["eta"] = n.hyper.eta;
    h["eps"] = n.hyper.eps;
    h["sigma_init"] = n.hyper.sigma_init;
    h["residual_mult"] = n.hyper.residual_mult;
    h["lambda_wd"] = n.hyper.lambda_wd;
    doc[n.name] = std::move(h);
  }
  return doc.dump(indent) + "\n";
}

PlanTable plan_from_json(const std::string& text) {
  ojson doc;
  try {
    doc = ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("plan: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("plan: top level must be an object");
  PlanTable out;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const ojson& h = it.value();
    if (!h.is_object()) throw ConfigError("plan: layer '" + it.key() + "' must be an object");
    for (auto f = h.begin(); f != h.end(); ++f) {
      bool known = false;
      for (const char* k : kFields) known = known || f.key() == k;
      if (!known) throw ConfigError("plan: layer '" + it.key() + "' has unknown field '" + f.key() + "'");
    }
    auto get = [&](const char* k) {
      if (!h.contains(k) || !h[k].is_number())
        throw ConfigError("plan: layer '" + it.key() + "' needs numeric '" + k + "'");
      return h[k].get<double>();
    };
    out.push_back({it.key(), LayerHyper{get("eta"), get("eps"), get("sigma_init"), get("residual_mult"),
                                        get("lambda_wd")}});
  }
  return out;
}

}  // namespace mupre
