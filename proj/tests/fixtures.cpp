#include "fixtures.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <stdexcept>

namespace fixtures {

using namespace preimage;

Network tiny_2_2_1() {
  Network net;
  net.layers.resize(2);

  Layer& h = net.layers[0];
  h.W = Mat(2, 2);
  h.W.at(0, 0) = 1.0;
  h.W.at(0, 1) = 1.0;
  h.W.at(1, 0) = 1.0;
  h.W.at(1, 1) = -1.0;
  h.bias = {-0.5, 0.0};
  h.relu = true;

  Layer& out = net.layers[1];
  out.W = Mat(1, 2);
  out.W.at(0, 0) = 1.0;
  out.W.at(0, 1) = -1.0;
  out.bias = {-0.1};
  out.relu = false;

  net.validate();
  return net;
}

Hyperrectangle unit_box2() { return Hyperrectangle{{0.0, 0.0}, {1.0, 1.0}}; }

Hyperrectangle f2_box() { return Hyperrectangle{{0.0, 0.0}, {2.0, 2.0}}; }

namespace {

// Deterministic standard normals: splitmix64 stream through Box-Muller.
class NormalGen {
 public:
  explicit NormalGen(std::uint64_t seed) : rng_(seed) {}

  double next(double stddev) {
    if (have_spare_) {
      have_spare_ = false;
      return spare_ * stddev;
    }
    double u1 = 1.0 - rng_.next_unit();  // (0, 1], keeps log() finite
    double u2 = rng_.next_unit();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta) * stddev;
  }

 private:
  SeededSampler rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

Layer random_layer(NormalGen& gen, std::size_t out_dim, std::size_t in_dim,
                   double weight_std, double bias_std, bool relu) {
  Layer layer;
  layer.W = Mat(out_dim, in_dim);
  for (std::size_t q = 0; q < out_dim; ++q) {
    for (std::size_t i = 0; i < in_dim; ++i) {
      layer.W.at(q, i) = gen.next(weight_std);
    }
  }
  layer.bias.resize(out_dim);
  for (std::size_t q = 0; q < out_dim; ++q) layer.bias[q] = gen.next(bias_std);
  layer.relu = relu;
  return layer;
}

}  // namespace

Network seeded_2_10_10_4(std::uint64_t seed) {
  NormalGen gen(seed);
  Network net;
  // He-style scaling keeps activations alive through both hidden layers.
  net.layers.push_back(random_layer(gen, 10, 2, 1.0, 0.5, true));
  net.layers.push_back(random_layer(gen, 10, 10, std::sqrt(2.0 / 10.0), 0.3, true));
  net.layers.push_back(random_layer(gen, 4, 10, std::sqrt(2.0 / 10.0), 0.3, false));

  // Balance the classes: subtract each output's mean over a fixed lattice on
  // the working box, so no class argmax-dominates the whole region.
  Hyperrectangle box = f2_box();
  const std::size_t grid = 17;
  std::vector<double> mean(net.output_dim(), 0.0);
  for (std::size_t gi = 0; gi < grid; ++gi) {
    for (std::size_t gj = 0; gj < grid; ++gj) {
      std::vector<double> x = {
          box.lower[0] + box.width(0) * gi / (grid - 1.0),
          box.lower[1] + box.width(1) * gj / (grid - 1.0),
      };
      std::vector<double> y = net.forward(x);
      for (std::size_t k = 0; k < y.size(); ++k) mean[k] += y[k];
    }
  }
  for (std::size_t k = 0; k < net.output_dim(); ++k) {
    net.layers.back().bias[k] -= mean[k] / (grid * grid);
  }

  net.validate();
  return net;
}

Network linear_identity(std::size_t d) {
  Network net;
  Layer layer;
  layer.W = Mat(d, d);
  for (std::size_t i = 0; i < d; ++i) layer.W.at(i, i) = 1.0;
  layer.bias.assign(d, 0.0);
  layer.relu = false;
  net.layers.push_back(std::move(layer));
  net.validate();
  return net;
}

OutputSpec spec_output_ge(std::size_t out_dim, std::size_t idx, double thresh) {
  OutputSpecRow row;
  row.c.assign(out_dim, 0.0);
  row.c.at(idx) = 1.0;
  row.d = -thresh;
  return OutputSpec{{row}};
}

OutputSpec spec_one_vs_rest(std::size_t classes, std::size_t k) {
  OutputSpec spec;
  for (std::size_t j = 0; j < classes; ++j) {
    if (j == k) continue;
    OutputSpecRow row;
    row.c.assign(classes, 0.0);
    row.c[k] = 1.0;
    row.c[j] = -1.0;
    row.d = 0.0;
    spec.rows.push_back(std::move(row));
  }
  return spec;
}

std::string fresh_tmp_dir(const std::string& tag) {
  namespace fs = std::filesystem;
  fs::path base = PREIMAGE_TEST_TMP;
  static int counter = 0;
  fs::path dir = base / (tag + "_" + std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

}  // namespace fixtures
