#pragma once

// Feedforward ReLU networks and linear output specifications.

#include <optional>
#include <string>
#include <vector>

#include "preimage/geometry.hpp"
#include "preimage/mat.hpp"

namespace preimage {

struct Layer {
    Mat W;                     // out_dim x in_dim
    std::vector<double> bias;  // out_dim
    bool relu = false;

    std::size_t in_dim() const { return W.cols; }
    std::size_t out_dim() const { return W.rows; }
};

// NNet files carry input min/max/mean/range lines. They play no role in the
// computations here, but they are kept so that load -> save round-trips a
// file without losing information.
struct NnetNormalization {
    std::vector<double> input_min;
    std::vector<double> input_max;
    std::vector<double> mean;   // input_dim + 1 entries (last is the output)
    std::vector<double> range;  // same shape as mean
};

struct Network {
    std::vector<Layer> layers;
    std::optional<NnetNormalization> nnet_meta;

    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
    std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }
    std::size_t relu_neuron_count() const;

    // Strict file-level contract: shapes chain, every hidden layer is ReLU,
    // the final layer is not. Networks produced by append_spec_rows are
    // looser (an internal non-ReLU layer) and are not re-validated.
    void validate() const;

    std::vector<double> forward(const std::vector<double>& x) const;
    // Batched forward over an SoA batch; result is output-major (out_dim x n).
    PointBatch forward_batch(const PointBatch& x) const;
};

// One linear constraint c . f(x) + d >= 0 on the network output.
struct OutputSpecRow {
    std::vector<double> c;
    double d = 0.0;
};

struct OutputSpec {
    std::vector<OutputSpecRow> rows;

    std::size_t size() const { return rows.size(); }
    void validate(std::size_t out_dim) const;
    // all rows satisfied (closed) at output y
    bool satisfied(const std::vector<double>& y) const;
};

// Network computing g_k(x) = c_k . f(x) + d_k, one output per spec row,
// realized by appending the spec as a final affine layer.
Network append_spec_rows(const Network& net, const OutputSpec& spec);

// format: "json", "nnet", or "" to infer from the file extension.
Network load_network(const std::string& path, const std::string& format = "");
void save_network(const Network& net, const std::string& path, const std::string& format = "");

Network network_from_json(const std::string& text);
std::string network_to_json(const Network& net);
Network network_from_nnet(const std::string& text);
std::string network_to_nnet(const Network& net);

}  // namespace preimage
