#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ogrit/dtree.hpp"

namespace ogrit {

namespace {

using nlohmann::json;

constexpr int kModelVersion = 1;

std::string_view kind_name(FeatureKind k) {
  switch (k) {
    case FeatureKind::binary: return "binary";
    case FeatureKind::integer: return "integer";
    case FeatureKind::scalar: break;
  }
  return "scalar";
}

FeatureKind kind_from(const std::string& s) {
  if (s == "scalar") return FeatureKind::scalar;
  if (s == "binary") return FeatureKind::binary;
  if (s == "integer") return FeatureKind::integer;
  throw ValidationError("unknown feature kind '" + s + "'");
}

json infos_json(const FeatureCatalog& cat, std::size_t from, std::size_t to) {
  json arr = json::array();
  for (std::size_t f = from; f < to; ++f) {
    const auto& i = cat.info(f);
    arr.push_back({{"name", i.name}, {"kind", kind_name(i.kind)}, {"lower", i.lower}, {"upper", i.upper}});
  }
  return arr;
}

std::vector<FeatureInfo> infos_from(const json& arr) {
  std::vector<FeatureInfo> out;
  for (const auto& e : arr) {
    out.push_back({e.at("name").get<std::string>(), kind_from(e.at("kind").get<std::string>()),
                   e.at("lower").get<double>(), e.at("upper").get<double>()});
  }
  return out;
}

json tree_json(const GoalTree& tree) {
  json nodes = json::array();
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    json j;
    j["id"] = i;
    j["kind"] = n.leaf ? "leaf" : "internal";
    j["feature"] = n.leaf ? json(nullptr) : json(tree.catalog.name(static_cast<std::size_t>(n.feature)));
    j["threshold"] = n.threshold;
    j["true_child"] = n.true_child;
    j["false_child"] = n.false_child;
    j["likelihood"] = n.likelihood;
    j["weight_true"] = n.weight_true;
    j["weight_false"] = n.weight_false;
    j["n_g"] = n.n_g;
    j["n_ng"] = n.n_ng;
    j["impurity"] = n.impurity;
    nodes.push_back(std::move(j));
  }
  return {{"goal_type", to_string(tree.goal_type)},
          {"config",
           {{"lambda", tree.config.lambda},
            {"max_depth", tree.config.max_depth},
            {"min_samples_leaf", tree.config.min_samples_leaf},
            {"alpha", tree.config.alpha},
            {"oracle", tree.config.oracle}}},
          {"class_weights", {tree.w_g, tree.w_ng}},
          {"nodes", std::move(nodes)}};
}

GoalTree tree_from(const json& j, const FeatureCatalog& catalog) {
  GoalTree tree;
  tree.catalog = catalog;
  tree.goal_type = goal_type_from_string(j.at("goal_type").get<std::string>());
  const auto& c = j.at("config");
  tree.config.lambda = c.at("lambda").get<double>();
  tree.config.max_depth = c.at("max_depth").get<int>();
  tree.config.min_samples_leaf = c.at("min_samples_leaf").get<int>();
  tree.config.alpha = c.at("alpha").get<double>();
  tree.config.oracle = c.value("oracle", false);
  tree.config.validate();
  const auto& w = j.at("class_weights");
  tree.w_g = w.at(0).get<double>();
  tree.w_ng = w.at(1).get<double>();
  tree.nodes.clear();
  for (const auto& e : j.at("nodes")) {
    if (e.at("id").get<std::size_t>() != tree.nodes.size()) throw ValidationError("model node ids not sequential");
    DecisionNode n;
    const auto kind = e.at("kind").get<std::string>();
    if (kind != "leaf" && kind != "internal") throw ValidationError("unknown node kind '" + kind + "'");
    n.leaf = kind == "leaf";
    if (!n.leaf) n.feature = static_cast<int>(catalog.index(e.at("feature").get<std::string>()));
    n.threshold = e.at("threshold").get<double>();
    n.true_child = e.at("true_child").get<int>();
    n.false_child = e.at("false_child").get<int>();
    n.likelihood = e.at("likelihood").get<double>();
    n.weight_true = e.at("weight_true").get<double>();
    n.weight_false = e.at("weight_false").get<double>();
    n.n_g = e.at("n_g").get<double>();
    n.n_ng = e.at("n_ng").get<double>();
    n.impurity = e.at("impurity").get<double>();
    tree.nodes.push_back(n);
  }
  tree.validate();
  return tree;
}

}  // namespace

std::string model_to_json_text(const ModelSet& models) {
  json doc;
  doc["format"] = "ogrit-model";
  doc["version"] = kModelVersion;
  doc["oracle"] = models.oracle;
  doc["training_episodes"] = models.training_episodes;
  if (!(models.catalog == FeatureCatalog::standard())) {
    const auto& cat = models.catalog;
    doc["catalog"] = {{"always", infos_json(cat, 0, cat.always_count())},
                      {"possibly_missing", infos_json(cat, cat.always_count(), cat.base_count())}};
  }
  json trees = json::array();
  for (const auto& [type, tree] : models.trees) trees.push_back(tree_json(tree));
  doc["trees"] = std::move(trees);
  return doc.dump(1);
}

ModelSet model_from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model JSON: ") + e.what());
  }
  try {
    if (doc.value("format", "") != "ogrit-model") throw ParseError("not an ogrit model file");
    const int version = doc.at("version").get<int>();
    if (version != kModelVersion) {
      throw ParseError("model version " + std::to_string(version) + " not supported (expected " +
                       std::to_string(kModelVersion) + ")");
    }
    ModelSet out;
    if (doc.contains("catalog")) {
      out.catalog = FeatureCatalog(infos_from(doc["catalog"].at("always")),
                                   infos_from(doc["catalog"].at("possibly_missing")));
    }
    out.oracle = doc.value("oracle", false);
    out.training_episodes = doc.value("training_episodes", std::vector<std::string>{});
    for (const auto& t : doc.at("trees")) {
      GoalTree tree = tree_from(t, out.catalog);
      const GoalType type = tree.goal_type;
      if (!out.trees.emplace(type, std::move(tree)).second) {
        throw ValidationError("model has two trees for goal type " + std::string(to_string(type)));
      }
    }
    return out;
  } catch (const json::exception& e) {
    throw ParseError(std::string("model JSON: ") + e.what());
  }
}

void save_model(const ModelSet& models, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw OgritError("cannot write " + path.string());
  out << model_to_json_text(models) << '\n';
}

ModelSet load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return model_from_json_text(buf.str());
}

}  // namespace ogrit
