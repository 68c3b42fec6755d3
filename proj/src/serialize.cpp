#include "hcqrf/serialize.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "hcqrf/errors.hpp"

namespace hcqrf {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr int kFormatVersion = 1;

ordered_json vector_to_json(const Eigen::VectorXd& v) {
  ordered_json arr = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

ordered_json vector_to_json(const Eigen::VectorXi& v) {
  ordered_json arr = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::VectorXd vector_from_json(const ordered_json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  Eigen::Index i = 0;
  for (const auto& item : arr) v(i++) = item.get<double>();
  return v;
}

Eigen::VectorXi int_vector_from_json(const ordered_json& arr) {
  Eigen::VectorXi v(static_cast<Eigen::Index>(arr.size()));
  Eigen::Index i = 0;
  for (const auto& item : arr) v(i++) = item.get<int>();
  return v;
}

Eigen::MatrixXd matrix_from_json(const ordered_json& rows, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw DataError("model file corrupt: ragged matrix");
    }
    Eigen::Index j = 0;
    for (const auto& item : row) m(i, j++) = item.get<double>();
    ++i;
  }
  return m;
}

template <class T>
ordered_json ids_to_json(const std::vector<T>& ids) {
  ordered_json arr = ordered_json::array();
  for (const auto id : ids) arr.push_back(id);
  return arr;
}

std::vector<std::uint32_t> ids_from_json(const ordered_json& arr) {
  std::vector<std::uint32_t> out;
  out.reserve(arr.size());
  for (const auto& item : arr) out.push_back(item.get<std::uint32_t>());
  return out;
}

}  // namespace

std::string model_to_json(const Forest& forest, const CdfModel& cdf) {
  ordered_json doc;
  doc["format_version"] = kFormatVersion;
  doc["kind"] = "hcqrf-model";
  doc["tau"] = forest.tau;
  doc["seed"] = forest.seed;
  doc["y_inf"] = forest.y_inf;

  const ForestConfig& fc = forest.config;
  doc["forest_config"] = {
      {"n_trees", fc.n_trees},
      {"min_split", fc.min_split},
      {"subsample_rate", fc.subsample_rate},
      {"mtry", fc.mtry},
      {"min_leaf", fc.min_leaf},
      {"max_candidate_cuts", fc.max_candidate_cuts},
      {"split_rule", fc.split_rule == SplitRule::kHybrid ? "hybrid" : "marginal"},
  };

  const SurvivalDataset& data = forest.data;
  ordered_json data_json;
  data_json["y"] = vector_to_json(data.y);
  data_json["delta"] = vector_to_json(data.delta);
  data_json["x"] = matrix_to_json(data.x);
  data_json["z"] = matrix_to_json(data.z);
  data_json["modifier_names"] = data.modifier_names;
  data_json["predictor_names"] = data.predictor_names;
  doc["data"] = std::move(data_json);

  doc["weights"] = {{"tau", forest.weights.tau},
                    {"u", vector_to_json(forest.weights.u)},
                    {"f_at_y", vector_to_json(forest.weights.f_at_y)}};

  ordered_json trees = ordered_json::array();
  for (const Tree& tree : forest.trees) {
    ordered_json tj;
    tj["inbag"] = ids_to_json(tree.inbag);
    ordered_json audits = ordered_json::array();
    for (const SplitAudit& audit : tree.split_audits) {
      audits.push_back(
          ordered_json::array({audit.node_id, audit.parent_loss, audit.child_loss_sum}));
    }
    tj["audits"] = std::move(audits);
    ordered_json nodes = ordered_json::array();
    for (const SplitNode& node : tree.nodes) {
      nodes.push_back(ordered_json::array({node.split_var, node.split_value, node.left,
                                           node.right, ids_to_json(node.rows)}));
    }
    tj["nodes"] = std::move(nodes);
    trees.push_back(std::move(tj));
  }
  doc["trees"] = std::move(trees);

  const bool has_cdf = !cdf.trees.empty();
  doc["has_cdf"] = has_cdf;
  if (has_cdf) {
    ordered_json cj;
    cj["seed"] = cdf.seed;
    cj["p"] = cdf.p;
    cj["q"] = cdf.q;
    cj["config"] = {{"n_trees", cdf.config.n_trees},
                    {"node_size", cdf.config.node_size},
                    {"mtry", cdf.config.mtry},
                    {"subsample_rate", cdf.config.subsample_rate},
                    {"max_candidate_cuts", cdf.config.max_candidate_cuts}};
    ordered_json ctrees = ordered_json::array();
    for (const SurvivalTree& tree : cdf.trees) {
      ordered_json tj;
      tj["inbag"] = ids_to_json(tree.inbag);
      ordered_json nodes = ordered_json::array();
      for (const SurvivalTreeNode& node : tree.nodes) {
        ordered_json times = ordered_json::array();
        for (const auto t : node.times) times.push_back(t);
        ordered_json chf = ordered_json::array();
        for (const auto h : node.chf) chf.push_back(h);
        nodes.push_back(ordered_json::array({node.feature, node.threshold, node.left,
                                             node.right, std::move(times),
                                             std::move(chf)}));
      }
      tj["nodes"] = std::move(nodes);
      ctrees.push_back(std::move(tj));
    }
    cj["trees"] = std::move(ctrees);
    doc["cdf"] = std::move(cj);
  }
  return doc.dump();
}

void save_model(const Forest& forest, const CdfModel& cdf, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open output file: " + path);
  out << model_to_json(forest, cdf) << '\n';
  if (!out.good()) throw DataError("failed writing output file: " + path);
}

LoadedModel model_from_json(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const std::exception& err) {
    throw DataError(std::string("model file corrupt: not valid JSON: ") + err.what());
  }
  try {
    if (doc.value("kind", std::string()) != "hcqrf-model") {
      throw DataError("model file corrupt: not a model file");
    }
    if (doc.at("format_version").get<int>() != kFormatVersion) {
      throw DataError("model file corrupt: unsupported format version");
    }
    LoadedModel model;
    Forest& forest = model.forest;
    forest.tau = doc.at("tau").get<double>();
    forest.seed = doc.at("seed").get<std::uint64_t>();
    forest.y_inf = doc.at("y_inf").get<double>();

    const auto& fc = doc.at("forest_config");
    forest.config.n_trees = fc.at("n_trees").get<int>();
    forest.config.min_split = fc.at("min_split").get<int>();
    forest.config.subsample_rate = fc.at("subsample_rate").get<double>();
    forest.config.mtry = fc.at("mtry").get<int>();
    forest.config.min_leaf = fc.at("min_leaf").get<int>();
    forest.config.max_candidate_cuts = fc.at("max_candidate_cuts").get<int>();
    const std::string rule = fc.at("split_rule").get<std::string>();
    if (rule != "hybrid" && rule != "marginal") {
      throw DataError("model file corrupt: unknown split rule");
    }
    forest.config.split_rule =
        rule == "hybrid" ? SplitRule::kHybrid : SplitRule::kMarginal;

    const auto& dj = doc.at("data");
    SurvivalDataset& data = forest.data;
    data.y = vector_from_json(dj.at("y"));
    data.delta = int_vector_from_json(dj.at("delta"));
    data.modifier_names = dj.at("modifier_names").get<std::vector<std::string>>();
    data.predictor_names = dj.at("predictor_names").get<std::vector<std::string>>();
    data.x = matrix_from_json(dj.at("x"),
                              static_cast<Eigen::Index>(data.modifier_names.size()));
    data.z = matrix_from_json(dj.at("z"),
                              static_cast<Eigen::Index>(data.predictor_names.size()));
    data.validate();

    const auto& wj = doc.at("weights");
    forest.weights.tau = wj.at("tau").get<double>();
    forest.weights.u = vector_from_json(wj.at("u"));
    forest.weights.f_at_y = vector_from_json(wj.at("f_at_y"));
    if (forest.weights.u.size() != data.n() || forest.weights.f_at_y.size() != data.n()) {
      throw DataError("model file corrupt: weight lengths");
    }

    for (const auto& tj : doc.at("trees")) {
      Tree tree;
      tree.inbag = ids_from_json(tj.at("inbag"));
      for (const auto& aj : tj.at("audits")) {
        if (aj.size() != 3) throw DataError("model file corrupt: audit record");
        tree.split_audits.push_back(
            {aj[0].get<int>(), aj[1].get<double>(), aj[2].get<double>()});
      }
      for (const auto& nj : tj.at("nodes")) {
        if (nj.size() != 5) throw DataError("model file corrupt: node record");
        SplitNode node;
        node.split_var = nj[0].get<int>();
        node.split_value = nj[1].get<double>();
        node.left = nj[2].get<int>();
        node.right = nj[3].get<int>();
        node.rows = ids_from_json(nj[4]);
        tree.nodes.push_back(std::move(node));
      }
      if (tree.nodes.empty()) throw DataError("model file corrupt: empty tree");
      forest.trees.push_back(std::move(tree));
    }
    if (forest.trees.empty()) throw DataError("model file corrupt: no trees");

    if (doc.at("has_cdf").get<bool>()) {
      const auto& cj = doc.at("cdf");
      CdfModel& cdf = model.cdf;
      cdf.seed = cj.at("seed").get<std::uint64_t>();
      cdf.p = cj.at("p").get<int>();
      cdf.q = cj.at("q").get<int>();
      const auto& cc = cj.at("config");
      cdf.config.n_trees = cc.at("n_trees").get<int>();
      cdf.config.node_size = cc.at("node_size").get<int>();
      cdf.config.mtry = cc.at("mtry").get<int>();
      cdf.config.subsample_rate = cc.at("subsample_rate").get<double>();
      cdf.config.max_candidate_cuts = cc.at("max_candidate_cuts").get<int>();
      for (const auto& tj : cj.at("trees")) {
        SurvivalTree tree;
        tree.inbag = ids_from_json(tj.at("inbag"));
        for (const auto& nj : tj.at("nodes")) {
          if (nj.size() != 6) throw DataError("model file corrupt: node record");
          SurvivalTreeNode node;
          node.feature = nj[0].get<int>();
          node.threshold = nj[1].get<double>();
          node.left = nj[2].get<int>();
          node.right = nj[3].get<int>();
          node.times = nj[4].get<std::vector<double>>();
          node.chf = nj[5].get<std::vector<double>>();
          tree.nodes.push_back(std::move(node));
        }
        if (tree.nodes.empty()) throw DataError("model file corrupt: empty tree");
        cdf.trees.push_back(std::move(tree));
      }
    }
    return model;
  } catch (const DataError&) {
    throw;
  } catch (const std::exception& err) {
    throw DataError(std::string("model file corrupt: ") + err.what());
  }
}

LoadedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str());
}

}  // namespace hcqrf
