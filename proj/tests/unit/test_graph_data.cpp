#include <algorithm>
#include <filesystem>

#include "doctest.h"

#include "fmtl/core/errors.hpp"
#include "fmtl/graph/graph_data.hpp"
#include "fmtl/graph/synthetic.hpp"

using namespace fmtl;

namespace {

const char* kToy = R"({
  "manifest": {"name": "toy", "task_type": "classification", "num_tasks": 2, "d_input": 3, "metric": "roc_auc"},
  "samples": [
    {"nodes": [[1, 0, 0], [0, 1, 0]], "edges": [[0, 1]], "label": [1, 0], "mask": [true, false]}
  ]
})";

std::string with_label(const std::string& label) {
  return std::string(R"({"manifest": {"name": "t", "task_type": "classification", "num_tasks": 12, "d_input": 1,
    "metric": "roc_auc"}, "samples": [{"nodes": [[0]], "edges": [], "label": )") +
         label + "}]}";
}

}  // namespace

TEST_CASE("toy file parses") {
  const Dataset ds = parse_dataset(kToy);
  REQUIRE(ds.samples.size() == 1);
  CHECK(ds.samples[0].num_nodes() == 2);
  CHECK(ds.samples[0].num_edges() == 1);
  CHECK(ds.samples[0].label_mask == std::vector<bool>{true, false});
  CHECK(ds.manifest.sample_count == 1);
}

TEST_CASE("label length mismatch is a validation error") {
  CHECK_THROWS_AS(parse_dataset(with_label("[0,0,0,0,0,0,0,0,0,0]")), ValidationError);
  CHECK_NOTHROW(parse_dataset(with_label("[0,0,0,0,0,0,0,0,0,0,0,1]")));
}

TEST_CASE("malformed JSON reports line and column") {
  try {
    parse_dataset("{\n  \"manifest\": ,\n}");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("invalid edges are rejected") {
  Dataset ds = parse_dataset(kToy);
  GraphSample s = ds.samples[0];
  s.edges = {{0, 0}};
  CHECK_THROWS_AS(validate_sample(s, ds.manifest, 0), ValidationError);
  s.edges = {{0, 1}, {1, 0}};
  CHECK_THROWS_AS(validate_sample(s, ds.manifest, 0), ValidationError);
  s.edges = {{0, 5}};
  CHECK_THROWS_AS(validate_sample(s, ds.manifest, 0), ValidationError);
}

TEST_CASE("serialize round trip") {
  SyntheticSpec spec;
  spec.num_graphs = 12;
  spec.missing_rate = 0.2;
  spec.seed = 4;
  const Dataset ds = generate_synthetic(spec);
  const Dataset back = parse_dataset(serialize_dataset(ds));
  REQUIRE(back.samples.size() == ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    CHECK(back.samples[i].node_features == ds.samples[i].node_features);
    CHECK(back.samples[i].edges == ds.samples[i].edges);
    CHECK(back.samples[i].label == ds.samples[i].label);
    CHECK(back.samples[i].label_mask == ds.samples[i].label_mask);
  }
  const auto path = std::filesystem::temp_directory_path() / "fmtl_graph_roundtrip.json";
  save_dataset(ds, path);
  CHECK(load_dataset(path).samples.size() == 12);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_dataset(path), InputError);
}

TEST_CASE("train/test split is deterministic and a partition") {
  SyntheticSpec spec;
  spec.num_graphs = 10;
  const Dataset ds = generate_synthetic(spec);
  const Split a = train_test_split(ds.samples, 0.2, 7);
  const Split b = train_test_split(ds.samples, 0.2, 7);
  CHECK(a.train.size() == 8);
  CHECK(a.test.size() == 2);
  for (std::size_t i = 0; i < a.test.size(); ++i) CHECK(a.test[i].label == b.test[i].label);
  CHECK_THROWS_AS(train_test_split(ds.samples, 0.0, 7), ConfigError);
  CHECK_THROWS_AS(train_test_split(ds.samples, 1.0, 7), ConfigError);

  // Multiset equality on a fingerprint of each sample.
  auto key = [](const GraphSample& s) { return std::make_pair(s.node_features.data()[0], s.num_nodes()); };
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Split s = train_test_split(ds.samples, 0.35, seed);
    std::vector<std::pair<double, std::size_t>> got, want;
    for (const auto& g : s.train) got.push_back(key(g));
    for (const auto& g : s.test) got.push_back(key(g));
    for (const auto& g : ds.samples) want.push_back(key(g));
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    CHECK(got == want);
  }
}

TEST_CASE("synthetic generator is deterministic and valid") {
  SyntheticSpec spec;
  spec.num_graphs = 40;
  spec.seed = 9;
  const Dataset a = generate_synthetic(spec);
  const Dataset b = generate_synthetic(spec);
  CHECK(serialize_dataset(a) == serialize_dataset(b));
  for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK_NOTHROW(validate_sample(a.samples[i], a.manifest, i));
  spec.task_type = TaskType::regression;
  const Dataset r = generate_synthetic(spec);
  CHECK(r.manifest.metric == Metric::mae);
}

TEST_CASE("label standardizer fits on train and inverts") {
  SyntheticSpec spec;
  spec.task_type = TaskType::regression;
  spec.num_graphs = 30;
  Dataset ds = generate_synthetic(spec);
  const auto original = ds.samples[3].label;
  const LabelStandardizer st = LabelStandardizer::fit(ds.samples, spec.num_tasks);
  st.apply(ds.samples);
  for (std::size_t t = 0; t < spec.num_tasks; ++t) {
    CHECK(st.invert(t, ds.samples[3].label[t]) == doctest::Approx(original[t]).epsilon(1e-12));
  }
}
