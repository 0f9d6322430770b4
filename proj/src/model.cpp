#include "preimage/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "preimage/errors.hpp"
#include "preimage/kernels.hpp"

namespace preimage {

using nlohmann::json;

std::size_t Network::relu_neuron_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers)
        if (l.relu) n += l.out_dim();
    return n;
}

void Network::validate() const {
    if (layers.empty()) throw ValidationError("network: no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& l = layers[i];
        if (l.W.rows == 0 || l.W.cols == 0)
            throw ValidationError("network: layer " + std::to_string(i) + " has empty weights");
        if (l.bias.size() != l.out_dim())
            throw ValidationError("network: layer " + std::to_string(i) +
                                  " bias length != output width");
        if (i > 0 && l.in_dim() != layers[i - 1].out_dim())
            throw ValidationError("network: layer " + std::to_string(i) +
                                  " input width != previous output width");
        for (double w : l.W.a)
            if (!std::isfinite(w))
                throw ValidationError("network: non-finite weight in layer " + std::to_string(i));
        for (double b : l.bias)
            if (!std::isfinite(b))
                throw ValidationError("network: non-finite bias in layer " + std::to_string(i));
        bool is_last = i + 1 == layers.size();
        if (is_last && l.relu) throw ValidationError("network: final layer must not have relu");
        if (!is_last && !l.relu)
            throw ValidationError("network: hidden layer " + std::to_string(i) + " must have relu");
    }
}

std::vector<double> Network::forward(const std::vector<double>& x) const {
    if (x.size() != input_dim()) throw ValidationError("forward: input dimension mismatch");
    std::vector<double> cur = x, next;
    for (const Layer& l : layers) {
        next.resize(l.out_dim());
        kern::matvec_bias(l.W.a.data(), cur.data(), l.bias.data(), next.data(), l.out_dim(),
                          l.in_dim());
        if (l.relu) kern::relu(next.data(), next.size());
        cur.swap(next);
    }
    return cur;
}

PointBatch Network::forward_batch(const PointBatch& x) const {
    if (x.d != input_dim()) throw ValidationError("forward_batch: input dimension mismatch");
    PointBatch cur = x, next;
    for (const Layer& l : layers) {
        next.resize(x.n, l.out_dim());
        for (std::size_t r = 0; r < l.out_dim(); ++r) {
            double* acc = next.dim_ptr(r);
            std::fill(acc, acc + x.n, l.bias[r]);
            for (std::size_t k = 0; k < l.in_dim(); ++k)
                kern::axpy(l.W.at(r, k), cur.dim_ptr(k), acc, x.n);
            if (l.relu) kern::relu(acc, x.n);
        }
        cur = std::move(next);
        next = PointBatch{};
    }
    return cur;
}

void OutputSpec::validate(std::size_t out_dim) const {
    if (rows.empty()) throw ValidationError("output spec: no rows");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const OutputSpecRow& r = rows[i];
        if (r.c.size() != out_dim)
            throw ValidationError("output spec: row " + std::to_string(i) +
                                  " length != network output dimension");
        double amax = 0.0;
        for (double v : r.c) {
            if (!std::isfinite(v) || !std::isfinite(r.d))
                throw ValidationError("output spec: non-finite coefficient");
            amax = std::max(amax, std::fabs(v));
        }
        if (amax == 0.0)
            throw ValidationError("output spec: row " + std::to_string(i) + " has all-zero c");
    }
}

bool OutputSpec::satisfied(const std::vector<double>& y) const {
    for (const OutputSpecRow& r : rows) {
        if (r.c.size() != y.size()) throw ValidationError("output spec/output size mismatch");
        if (kern::dot(r.c.data(), y.data(), y.size()) + r.d < 0.0) return false;
    }
    return true;
}

Network append_spec_rows(const Network& net, const OutputSpec& spec) {
    spec.validate(net.output_dim());
    Network out = net;
    Layer tail;
    tail.W = Mat(spec.size(), net.output_dim());
    tail.bias.resize(spec.size());
    for (std::size_t k = 0; k < spec.size(); ++k) {
        for (std::size_t c = 0; c < net.output_dim(); ++c) tail.W.at(k, c) = spec.rows[k].c[c];
        tail.bias[k] = spec.rows[k].d;
    }
    tail.relu = false;
    out.layers.push_back(std::move(tail));
    out.nnet_meta.reset();
    return out;
}

// ------------------------------------------------------------------- json ---

Network network_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("network json: ") + e.what());
    }
    if (!j.is_object() || !j.contains("input_dim") || !j.contains("layers"))
        throw ValidationError("network json: expected object with input_dim and layers");
    Network net;
    std::size_t prev = j.at("input_dim").get<std::size_t>();
    if (prev == 0) throw ValidationError("network json: input_dim must be positive");
    for (const json& jl : j.at("layers")) {
        const json& w = jl.at("weights");
        if (!w.is_array() || w.empty()) throw ValidationError("network json: empty weights");
        Layer l;
        l.W = Mat(w.size(), w[0].size());
        for (std::size_t r = 0; r < l.W.rows; ++r) {
            if (w[r].size() != l.W.cols)
                throw ValidationError("network json: ragged weight rows");
            for (std::size_t c = 0; c < l.W.cols; ++c) l.W.at(r, c) = w[r][c].get<double>();
        }
        l.bias = jl.at("bias").get<std::vector<double>>();
        l.relu = jl.at("relu").get<bool>();
        if (l.W.cols != prev)
            throw ValidationError("network json: layer input width " + std::to_string(l.W.cols) +
                                  " does not match expected " + std::to_string(prev));
        prev = l.W.rows;
        net.layers.push_back(std::move(l));
    }
    net.validate();
    return net;
}

std::string network_to_json(const Network& net) {
    json j;
    j["input_dim"] = net.input_dim();
    j["layers"] = json::array();
    for (const Layer& l : net.layers) {
        json jl;
        jl["relu"] = l.relu;
        jl["bias"] = l.bias;
        json rows = json::array();
        for (std::size_t r = 0; r < l.W.rows; ++r)
            rows.push_back(std::vector<double>(l.W.row(r), l.W.row(r) + l.W.cols));
        jl["weights"] = std::move(rows);
        j["layers"].push_back(std::move(jl));
    }
    return j.dump(2) + "\n";
}

// ------------------------------------------------------------------- nnet ---
//
// De-facto NNet text layout (comma separated, "//" comment lines ignored):
//   line 1: numLayers, inputSize, outputSize, maxLayerSize
//   line 2: layer sizes, numLayers+1 values
//   line 3: legacy flag (ignored)
//   lines 4-5: input minimums / maximums (inputSize values each)
//   lines 6-7: means / ranges (inputSize+1 values each)
//   then per layer: one line per output neuron with its weight row,
//   followed by one line per output neuron with its bias.

namespace {

std::vector<std::string> nnet_data_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        if (line.compare(first, 2, "//") == 0) continue;
        lines.push_back(line);
    }
    return lines;
}

std::vector<double> parse_csv_doubles(const std::string& line, const char* what) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < line.size()) {
        std::size_t comma = line.find(',', pos);
        std::string tok = line.substr(pos, comma == std::string::npos ? comma : comma - pos);
        std::size_t a = tok.find_first_not_of(" \t");
        if (a != std::string::npos) {
            std::size_t b = tok.find_last_not_of(" \t");
            tok = tok.substr(a, b - a + 1);
            try {
                std::size_t used = 0;
                out.push_back(std::stod(tok, &used));
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw ValidationError(std::string("nnet: bad number in ") + what + ": '" + tok +
                                      "'");
            }
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

}  // namespace

Network network_from_nnet(const std::string& text) {
    std::vector<std::string> lines = nnet_data_lines(text);
    if (lines.size() < 7) throw ValidationError("nnet: truncated header");
    std::vector<double> hdr = parse_csv_doubles(lines[0], "header");
    if (hdr.size() < 4) throw ValidationError("nnet: header needs 4 values");
    const std::size_t num_layers = static_cast<std::size_t>(hdr[0]);
    const std::size_t input_size = static_cast<std::size_t>(hdr[1]);
    const std::size_t output_size = static_cast<std::size_t>(hdr[2]);
    if (num_layers == 0 || input_size == 0 || output_size == 0)
        throw ValidationError("nnet: zero layer/input/output count");

    std::vector<double> sizes_d = parse_csv_doubles(lines[1], "layer sizes");
    if (sizes_d.size() != num_layers + 1)
        throw ValidationError("nnet: expected " + std::to_string(num_layers + 1) +
                              " layer sizes, got " + std::to_string(sizes_d.size()));
    std::vector<std::size_t> sizes(sizes_d.begin(), sizes_d.end());
    if (sizes.front() != input_size || sizes.back() != output_size)
        throw ValidationError("nnet: layer sizes disagree with header input/output sizes");

    NnetNormalization meta;
    meta.input_min = parse_csv_doubles(lines[3], "input minimums");
    meta.input_max = parse_csv_doubles(lines[4], "input maximums");
    meta.mean = parse_csv_doubles(lines[5], "means");
    meta.range = parse_csv_doubles(lines[6], "ranges");
    if (meta.input_min.size() != input_size || meta.input_max.size() != input_size)
        throw ValidationError("nnet: input min/max length != input size");
    if (meta.mean.size() != input_size + 1 || meta.range.size() != input_size + 1)
        throw ValidationError("nnet: mean/range length != input size + 1");

    std::size_t ln = 7;
    Network net;
    for (std::size_t li = 0; li < num_layers; ++li) {
        const std::size_t in_w = sizes[li], out_w = sizes[li + 1];
        Layer l;
        l.W = Mat(out_w, in_w);
        for (std::size_t r = 0; r < out_w; ++r, ++ln) {
            if (ln >= lines.size()) throw ValidationError("nnet: missing weight rows");
            std::vector<double> row = parse_csv_doubles(lines[ln], "weights");
            if (row.size() != in_w)
                throw ValidationError("nnet: layer " + std::to_string(li) + " weight row " +
                                      std::to_string(r) + " has " + std::to_string(row.size()) +
                                      " values, expected " + std::to_string(in_w));
            for (std::size_t c = 0; c < in_w; ++c) l.W.at(r, c) = row[c];
        }
        l.bias.resize(out_w);
        for (std::size_t r = 0; r < out_w; ++r, ++ln) {
            if (ln >= lines.size()) throw ValidationError("nnet: missing bias rows");
            std::vector<double> v = parse_csv_doubles(lines[ln], "bias");
            if (v.size() != 1)
                throw ValidationError("nnet: expected one bias value per line");
            l.bias[r] = v[0];
        }
        l.relu = li + 1 < num_layers;
        net.layers.push_back(std::move(l));
    }
    if (ln != lines.size()) throw ValidationError("nnet: trailing data after last layer");
    net.nnet_meta = std::move(meta);
    net.validate();
    return net;
}

namespace {
std::string fmt_doubles(const std::vector<double>& v) {
    std::string s;
    char buf[64];
    for (double x : v) {
        std::snprintf(buf, sizeof buf, "%.17g,", x);
        s += buf;
    }
    return s;
}
}  // namespace

std::string network_to_nnet(const Network& net) {
    net.validate();
    std::size_t max_width = net.input_dim();
    for (const Layer& l : net.layers) max_width = std::max(max_width, l.out_dim());

    NnetNormalization meta;
    if (net.nnet_meta) {
        meta = *net.nnet_meta;
    } else {
        meta.input_min.assign(net.input_dim(), -1e30);
        meta.input_max.assign(net.input_dim(), 1e30);
        meta.mean.assign(net.input_dim() + 1, 0.0);
        meta.range.assign(net.input_dim() + 1, 1.0);
    }

    std::string s;
    s += std::to_string(net.layers.size()) + "," + std::to_string(net.input_dim()) + "," +
         std::to_string(net.output_dim()) + "," + std::to_string(max_width) + ",\n";
    s += std::to_string(net.input_dim()) + ",";
    for (const Layer& l : net.layers) s += std::to_string(l.out_dim()) + ",";
    s += "\n0,\n";
    s += fmt_doubles(meta.input_min) + "\n";
    s += fmt_doubles(meta.input_max) + "\n";
    s += fmt_doubles(meta.mean) + "\n";
    s += fmt_doubles(meta.range) + "\n";
    for (const Layer& l : net.layers) {
        for (std::size_t r = 0; r < l.out_dim(); ++r)
            s += fmt_doubles({l.W.row(r), l.W.row(r) + l.W.cols}) + "\n";
        for (std::size_t r = 0; r < l.out_dim(); ++r) s += fmt_doubles({l.bias[r]}) + "\n";
    }
    return s;
}

// --------------------------------------------------------------- file i/o ---

namespace {
std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string resolve_format(const std::string& path, const std::string& format) {
    if (!format.empty()) {
        if (format != "json" && format != "nnet")
            throw ValidationError("unknown network format: " + format);
        return format;
    }
    std::size_t dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    if (ext == "json") return "json";
    if (ext == "nnet") return "nnet";
    throw ValidationError("cannot infer network format from path: " + path);
}
}  // namespace

Network load_network(const std::string& path, const std::string& format) {
    std::string fmt = resolve_format(path, format);
    std::string text = read_file(path);
    return fmt == "json" ? network_from_json(text) : network_from_nnet(text);
}

void save_network(const Network& net, const std::string& path, const std::string& format) {
    std::string fmt = resolve_format(path, format);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path);
    out << (fmt == "json" ? network_to_json(net) : network_to_nnet(net));
}

}  // namespace preimage
