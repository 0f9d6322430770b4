#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "preimage/errors.hpp"
#include "preimage/model.hpp"

using namespace preimage;

namespace {

bool same_weights(const Network& a, const Network& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    const Layer &la = a.layers[i], &lb = b.layers[i];
    if (la.relu != lb.relu || la.W.rows != lb.W.rows || la.W.cols != lb.W.cols) return false;
    if (std::memcmp(la.W.a.data(), lb.W.a.data(), la.W.a.size() * sizeof(double)) != 0)
      return false;
    if (la.bias != lb.bias) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("hand-computed forwards on the 2-2-1 net") {
  Network net = fixtures::tiny_2_2_1();
  CHECK(net.input_dim() == 2);
  CHECK(net.output_dim() == 1);
  CHECK(net.relu_neuron_count() == 2);

  // f(x) = relu(x1 + x2 - 0.5) - relu(x1 - x2) - 0.1
  CHECK(net.forward({0.25, 0.5})[0] == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(net.forward({0.0, 0.0})[0] == doctest::Approx(-0.1).epsilon(1e-12));
  CHECK(net.forward({1.0, 0.0})[0] == doctest::Approx(-0.6).epsilon(1e-12));
  CHECK(net.forward({1.0, 1.0})[0] == doctest::Approx(1.4).epsilon(1e-12));

  CHECK_THROWS_AS(net.forward({1.0}), ValidationError);
}

TEST_CASE("seeded classifier has the advertised shape") {
  Network net = fixtures::seeded_2_10_10_4();
  CHECK(net.input_dim() == 2);
  CHECK(net.output_dim() == 4);
  CHECK(net.relu_neuron_count() == 20);
  // same seed, same weights
  CHECK(same_weights(net, fixtures::seeded_2_10_10_4()));
  CHECK_FALSE(same_weights(net, fixtures::seeded_2_10_10_4(fixtures::kF2Seed + 1)));
}

TEST_CASE("forward_batch matches forward point by point") {
  for (const Network& net : {fixtures::tiny_2_2_1(), fixtures::seeded_2_10_10_4()}) {
    SeededSampler rng(55);
    Hyperrectangle box{{-1.0, -1.0}, {2.0, 2.0}};
    PointBatch pts = sample_uniform(box, 257, rng);
    PointBatch out = net.forward_batch(pts);
    REQUIRE(out.n == pts.n);
    REQUIRE(out.d == net.output_dim());
    for (std::size_t i = 0; i < pts.n; ++i) {
      auto y = net.forward(pts.point(i));
      for (std::size_t k = 0; k < y.size(); ++k) {
        CHECK(out.coords[k * out.n + i] == doctest::Approx(y[k]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("network validation rejects malformed structures") {
  Network net = fixtures::tiny_2_2_1();
  net.layers[0].bias.pop_back();
  CHECK_THROWS_AS(net.validate(), ValidationError);

  net = fixtures::tiny_2_2_1();
  net.layers[1].W = Mat(1, 3);  // width chain broken
  CHECK_THROWS_AS(net.validate(), ValidationError);

  net = fixtures::tiny_2_2_1();
  net.layers[1].relu = true;  // final layer must stay affine
  CHECK_THROWS_AS(net.validate(), ValidationError);

  net = fixtures::tiny_2_2_1();
  net.layers[0].relu = false;  // hidden layer must be relu
  CHECK_THROWS_AS(net.validate(), ValidationError);

  net = fixtures::tiny_2_2_1();
  net.layers[0].W.at(0, 0) = std::nan("");
  CHECK_THROWS_AS(net.validate(), ValidationError);

  Network empty;
  CHECK_THROWS_AS(empty.validate(), ValidationError);
}

TEST_CASE("json round trip is bit exact and a fixed point") {
  for (const Network& net : {fixtures::tiny_2_2_1(), fixtures::seeded_2_10_10_4()}) {
    std::string text = network_to_json(net);
    Network back = network_from_json(text);
    CHECK(same_weights(net, back));
    CHECK(network_to_json(back) == text);  // serialize(parse(s)) == s
  }
}

TEST_CASE("json parsing errors are reported as validation failures") {
  CHECK_THROWS_AS(network_from_json("not json"), ValidationError);
  CHECK_THROWS_AS(network_from_json("[]"), ValidationError);
  CHECK_THROWS_AS(network_from_json(R"({"input_dim": 2})"), ValidationError);
  // ragged weight rows
  CHECK_THROWS_AS(network_from_json(R"({"input_dim": 2, "layers": [
    {"weights": [[1, 2], [1]], "bias": [0, 0], "relu": false}]})"),
                  ValidationError);
  // declared input_dim disagrees with the first layer
  CHECK_THROWS_AS(network_from_json(R"({"input_dim": 3, "layers": [
    {"weights": [[1, 2]], "bias": [0], "relu": false}]})"),
                  ValidationError);
}

TEST_CASE("nnet round trip preserves weights and normalization lines") {
  Network net = fixtures::seeded_2_10_10_4();
  std::string text = network_to_nnet(net);
  Network back = network_from_nnet(text);
  CHECK(same_weights(net, back));
  REQUIRE(back.nnet_meta.has_value());
  // defaults were synthesized on write; the second write must reproduce them
  CHECK(network_to_nnet(back) == text);

  // a file with real normalization data survives a load/save cycle
  std::string custom =
      "// comment line\n"
      "2,2,1,2,\n"
      "2,2,1,\n"
      "0,\n"
      "-1.5,0.25,\n"
      "3.5,4.25,\n"
      "0.1,0.2,0.3,\n"
      "1.1,1.2,1.3,\n"
      "1,1,\n"
      "1,-1,\n"
      "-0.5,\n"
      "0,\n"
      "1,-1,\n"
      "-0.1,\n";
  Network parsed = network_from_nnet(custom);
  REQUIRE(parsed.nnet_meta.has_value());
  CHECK(parsed.nnet_meta->input_min == std::vector<double>{-1.5, 0.25});
  CHECK(parsed.nnet_meta->range == std::vector<double>{1.1, 1.2, 1.3});
  CHECK(parsed.layers[0].relu);
  CHECK_FALSE(parsed.layers[1].relu);
  CHECK(parsed.forward({0.25, 0.5})[0] == doctest::Approx(0.15).epsilon(1e-12));
  // canonical form is a fixed point
  std::string canon = network_to_nnet(parsed);
  CHECK(network_to_nnet(network_from_nnet(canon)) == canon);
}

TEST_CASE("nnet parsing errors") {
  CHECK_THROWS_AS(network_from_nnet(""), ValidationError);
  CHECK_THROWS_AS(network_from_nnet("1,2,\n"), ValidationError);
  // header promises more layers than provided
  std::string short_file =
      "3,2,1,2,\n"
      "2,2,2,1,\n"
      "0,\n"
      "0,0,\n"
      "1,1,\n"
      "0,0,0,\n"
      "1,1,1,\n"
      "1,1,\n";
  CHECK_THROWS_AS(network_from_nnet(short_file), ValidationError);
  // weight row with the wrong arity
  std::string bad_row =
      "1,2,1,2,\n"
      "2,1,\n"
      "0,\n"
      "0,0,\n"
      "1,1,\n"
      "0,0,0,\n"
      "1,1,1,\n"
      "1,\n"
      "0,\n";
  CHECK_THROWS_AS(network_from_nnet(bad_row), ValidationError);
  std::string bad_number =
      "1,2,1,2,\n"
      "2,1,\n"
      "0,\n"
      "0,0,\n"
      "1,1,\n"
      "0,0,0,\n"
      "1,1,1,\n"
      "1,zebra,\n"
      "0,\n";
  CHECK_THROWS_AS(network_from_nnet(bad_number), ValidationError);
}

TEST_CASE("load/save resolve the format from the extension") {
  std::string dir = fixtures::fresh_tmp_dir("model_io");
  Network net = fixtures::tiny_2_2_1();

  save_network(net, dir + "/net.json");
  Network j = load_network(dir + "/net.json");
  CHECK(same_weights(net, j));

  save_network(net, dir + "/net.nnet");
  Network n = load_network(dir + "/net.nnet");
  CHECK(same_weights(net, n));

  // explicit format wins over a meaningless extension
  save_network(net, dir + "/net.dat", "json");
  CHECK(same_weights(net, load_network(dir + "/net.dat", "json")));

  CHECK_THROWS_AS(load_network(dir + "/net.dat"), ValidationError);
  CHECK_THROWS_AS(load_network(dir + "/missing.json"), ValidationError);
  CHECK_THROWS_AS(load_network(dir + "/net.json", "hdf5"), ValidationError);
}

TEST_CASE("output specs evaluate closed inequalities") {
  OutputSpec spec = fixtures::spec_one_vs_rest(4, 1);
  REQUIRE(spec.size() == 3);
  spec.validate(4);
  CHECK(spec.satisfied({0.0, 5.0, 1.0, -2.0}));
  CHECK(spec.satisfied({1.0, 1.0, 1.0, 1.0}));  // ties count as satisfied
  CHECK_FALSE(spec.satisfied({2.0, 1.0, 0.0, 0.0}));

  OutputSpec bad_len = spec;
  bad_len.rows[0].c.pop_back();
  CHECK_THROWS_AS(bad_len.validate(4), ValidationError);

  OutputSpec zero_row = spec;
  zero_row.rows[0].c.assign(4, 0.0);
  CHECK_THROWS_AS(zero_row.validate(4), ValidationError);

  OutputSpec none;
  CHECK_THROWS_AS(none.validate(4), ValidationError);
}

TEST_CASE("append_spec_rows computes c . f(x) + d") {
  Network net = fixtures::seeded_2_10_10_4();
  OutputSpec spec = fixtures::spec_one_vs_rest(4, 2);
  Network g = append_spec_rows(net, spec);
  CHECK(g.output_dim() == 3);
  CHECK(g.layers.size() == net.layers.size() + 1);

  SeededSampler rng(8);
  PointBatch pts = sample_uniform(fixtures::f2_box(), 50, rng);
  for (std::size_t i = 0; i < pts.n; ++i) {
    auto x = pts.point(i);
    auto y = net.forward(x);
    auto gv = g.forward(x);
    for (std::size_t k = 0; k < spec.size(); ++k) {
      double expect = spec.rows[k].d;
      for (std::size_t c = 0; c < y.size(); ++c) expect += spec.rows[k].c[c] * y[c];
      CHECK(gv[k] == doctest::Approx(expect).epsilon(1e-12));
    }
  }

  OutputSpec wrong_dim = fixtures::spec_one_vs_rest(5, 0);
  CHECK_THROWS_AS(append_spec_rows(net, wrong_dim), ValidationError);
}
