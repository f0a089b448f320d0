#include "fmtl/graph/graph_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "fmtl/core/errors.hpp"
#include "fmtl/core/rng.hpp"

namespace fmtl {

using nlohmann::json;

std::string to_string(TaskType t) { return t == TaskType::classification ? "classification" : "regression"; }
std::string to_string(Metric m) { return m == Metric::roc_auc ? "roc_auc" : "mae"; }

bool GraphSample::has_any_label() const {
  return std::any_of(label_mask.begin(), label_mask.end(), [](bool b) { return b; });
}

void validate_manifest(const DatasetManifest& m) {
  const bool consistent = (m.task_type == TaskType::classification && m.metric == Metric::roc_auc) ||
                          (m.task_type == TaskType::regression && m.metric == Metric::mae);
  if (!consistent) {
    throw ValidationError("manifest: task_type " + to_string(m.task_type) + " inconsistent with metric " +
                          to_string(m.metric));
  }
  if (m.num_tasks == 0) throw ValidationError("manifest: num_tasks must be positive");
  if (m.d_input == 0) throw ValidationError("manifest: d_input must be positive");
}

void validate_sample(const GraphSample& s, const DatasetManifest& m, std::size_t index) {
  auto fail = [index](const std::string& what) {
    throw ValidationError("sample " + std::to_string(index) + ": " + what);
  };
  if (s.num_nodes() == 0) fail("graph has no nodes");
  if (s.node_features.cols() != m.d_input) {
    fail("node feature width " + std::to_string(s.node_features.cols()) + " != d_input " +
         std::to_string(m.d_input));
  }
  if (!all_finite(s.node_features)) fail("non-finite node feature");
  if (s.label.size() != m.num_tasks) {
    fail("label length " + std::to_string(s.label.size()) + " != num_tasks " + std::to_string(m.num_tasks));
  }
  if (s.label_mask.size() != s.label.size()) fail("label and mask lengths differ");
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& [a, b] : s.edges) {
    if (a >= s.num_nodes() || b >= s.num_nodes()) fail("edge endpoint out of range");
    if (a == b) fail("self-loop edge");
    const auto key = std::minmax(a, b);
    if (!seen.insert(key).second) fail("duplicate undirected edge");
  }
  if (s.edge_features.rows() != s.edges.size() || s.edge_features.cols() != m.d_edge) {
    fail("edge feature matrix " + s.edge_features.shape_string() + " does not match " +
         std::to_string(s.edges.size()) + "x" + std::to_string(m.d_edge));
  }
  for (std::size_t t = 0; t < s.label.size(); ++t) {
    if (!s.label_mask[t]) continue;
    if (!std::isfinite(s.label[t])) fail("non-finite label");
    if (m.task_type == TaskType::classification && s.label[t] != 0.0 && s.label[t] != 1.0) {
      fail("classification label must be 0 or 1");
    }
  }
}

namespace {

std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

Matrix rows_to_matrix(const json& rows, std::size_t width, const std::string& what, std::size_t index) {
  if (!rows.is_array()) throw ValidationError("sample " + std::to_string(index) + ": " + what + " must be an array");
  Matrix m(rows.size(), width);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (!row.is_array() || row.size() != width) {
      throw ValidationError("sample " + std::to_string(index) + ": " + what + " row " + std::to_string(r) +
                            " must have " + std::to_string(width) + " entries");
    }
    for (std::size_t c = 0; c < width; ++c) m(r, c) = row[c].get<double>();
  }
  return m;
}

TaskType parse_task_type(const std::string& s) {
  if (s == "classification") return TaskType::classification;
  if (s == "regression") return TaskType::regression;
  throw ValidationError("manifest: unknown task_type '" + s + "'");
}

Metric parse_metric(const std::string& s) {
  if (s == "roc_auc") return Metric::roc_auc;
  if (s == "mae") return Metric::mae;
  throw ValidationError("manifest: unknown metric '" + s + "'");
}

}  // namespace

Dataset parse_dataset(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError("graph JSON parse error at line " + std::to_string(line) + ", column " +
                     std::to_string(col) + ": " + e.what());
  }

  Dataset ds;
  try {
    const json& man = doc.at("manifest");
    ds.manifest.name = man.at("name").get<std::string>();
    ds.manifest.task_type = parse_task_type(man.at("task_type").get<std::string>());
    ds.manifest.num_tasks = man.at("num_tasks").get<std::size_t>();
    ds.manifest.d_input = man.at("d_input").get<std::size_t>();
    ds.manifest.d_edge = man.value("d_edge", std::size_t{0});
    ds.manifest.metric = parse_metric(man.at("metric").get<std::string>());
    validate_manifest(ds.manifest);

    const json& samples = doc.at("samples");
    ds.samples.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const json& js = samples[i];
      GraphSample s;
      s.node_features = rows_to_matrix(js.at("nodes"), ds.manifest.d_input, "nodes", i);
      for (const auto& e : js.at("edges")) {
        if (!e.is_array() || e.size() != 2) throw ValidationError("sample " + std::to_string(i) + ": edge must be [src, dst]");
        s.edges.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
      }
      if (js.contains("edge_feats") && !(ds.manifest.d_edge == 0 && js["edge_feats"].empty())) {
        s.edge_features = rows_to_matrix(js["edge_feats"], ds.manifest.d_edge, "edge_feats", i);
      } else {
        s.edge_features = Matrix(s.edges.size(), ds.manifest.d_edge);
        if (ds.manifest.d_edge != 0 && !s.edges.empty()) {
          throw ValidationError("sample " + std::to_string(i) + ": missing edge_feats");
        }
      }
      s.label = js.at("label").get<std::vector<double>>();
      if (js.contains("mask")) {
        s.label_mask = js["mask"].get<std::vector<bool>>();
      } else {
        s.label_mask.assign(s.label.size(), true);
      }
      validate_sample(s, ds.manifest, i);
      ds.samples.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("graph JSON schema error: ") + e.what());
  }
  ds.manifest.sample_count = ds.samples.size();
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open dataset '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str());
}

std::string serialize_dataset(const Dataset& ds, int indent) {
  json doc;
  doc["manifest"] = {
      {"name", ds.manifest.name},
      {"task_type", to_string(ds.manifest.task_type)},
      {"num_tasks", ds.manifest.num_tasks},
      {"d_input", ds.manifest.d_input},
      {"d_edge", ds.manifest.d_edge},
      {"metric", to_string(ds.manifest.metric)},
  };
  json samples = json::array();
  for (const auto& s : ds.samples) {
    json nodes = json::array();
    for (std::size_t r = 0; r < s.node_features.rows(); ++r) {
      auto row = s.node_features.row_span(r);
      nodes.push_back(std::vector<double>(row.begin(), row.end()));
    }
    json edges = json::array();
    for (const auto& [a, b] : s.edges) edges.push_back({a, b});
    json feats = json::array();
    for (std::size_t r = 0; r < s.edge_features.rows(); ++r) {
      auto row = s.edge_features.row_span(r);
      feats.push_back(std::vector<double>(row.begin(), row.end()));
    }
    samples.push_back({{"nodes", nodes}, {"edges", edges}, {"edge_feats", feats}, {"label", s.label},
                       {"mask", s.label_mask}});
  }
  doc["samples"] = std::move(samples);
  return doc.dump(indent);
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write dataset '" + path.string() + "'");
  out << serialize_dataset(ds) << '\n';
}

Split train_test_split(const std::vector<GraphSample>& samples, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("train_test_split: test_fraction must be in (0, 1), got " + std::to_string(test_fraction));
  }
  const std::size_t n = samples.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed, 0, 0, Purpose::split);
  rng.shuffle(perm);

  auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  if (n >= 2) n_test = std::clamp<std::size_t>(n_test, 1, n - 1);

  Split out;
  // Keep file order within each side so the split is a pure index selection.
  std::vector<bool> is_test(n, false);
  for (std::size_t i = 0; i < n_test; ++i) is_test[perm[i]] = true;
  for (std::size_t i = 0; i < n; ++i) (is_test[i] ? out.test : out.train).push_back(samples[i]);
  return out;
}

LabelStandardizer LabelStandardizer::fit(const std::vector<GraphSample>& train, std::size_t num_tasks) {
  LabelStandardizer st;
  st.mean.assign(num_tasks, 0.0);
  st.stddev.assign(num_tasks, 1.0);
  for (std::size_t t = 0; t < num_tasks; ++t) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& g : train)
      if (g.label_mask[t]) {
        s += g.label[t];
        ++n;
      }
    if (n == 0) continue;
    const double mu = s / static_cast<double>(n);
    double v = 0.0;
    for (const auto& g : train)
      if (g.label_mask[t]) v += (g.label[t] - mu) * (g.label[t] - mu);
    const double sd = std::sqrt(v / static_cast<double>(n));
    st.mean[t] = mu;
    st.stddev[t] = sd > 1e-12 ? sd : 1.0;
  }
  return st;
}

void LabelStandardizer::apply(std::vector<GraphSample>& samples) const {
  for (auto& g : samples)
    for (std::size_t t = 0; t < g.label.size(); ++t)
      if (g.label_mask[t]) g.label[t] = (g.label[t] - mean[t]) / stddev[t];
}

}  // namespace fmtl
