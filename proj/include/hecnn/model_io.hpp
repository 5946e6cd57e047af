#pragma once

// Model persistence: a human-readable JSON manifest next to a raw
// little-endian f64 weight blob with an offset index. Loads are strict:
// unknown layer kinds, version drift, truncated blobs and index/shape
// disagreements are all hard errors.

#include <filesystem>

#include "hecnn/layers.hpp"

namespace hecnn {

inline constexpr int kModelFormatVersion = 1;

namespace model_io_detail {

inline nlohmann::json layer_to_json(const LayerSpec& l) {
    using K = LayerSpec::Kind;
    nlohmann::json j;
    j["kind"] = l.kind_name();
    switch (l.kind) {
        case K::Conv2d:
            j["filters"] = l.filters;
            j["kernel"] = {l.kernel_h, l.kernel_w};
            j["stride"] = l.stride;
            j["padding"] = l.padding == LayerSpec::Padding::Same ? "same" : "valid";
            break;
        case K::AvgPool2d: j["pool"] = l.pool; break;
        case K::ZeroPad2d: j["pad"] = l.pad; break;
        case K::Dense: j["units"] = l.units; break;
        case K::Activation: j["surrogate"] = l.surrogate; break;
        case K::Sigmoid: break;
    }
    return j;
}

inline LayerSpec layer_from_json(const nlohmann::json& j) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "conv2d") {
        auto k = j.at("kernel").get<std::vector<std::size_t>>();
        std::string pad = j.value("padding", "same");
        if (pad != "same" && pad != "valid") throw std::invalid_argument("model manifest: bad padding mode");
        return LayerSpec::conv2d(j.at("filters").get<std::size_t>(), k.at(0), k.at(1),
                                 j.value("stride", std::size_t{1}),
                                 pad == "same" ? LayerSpec::Padding::Same : LayerSpec::Padding::Valid);
    }
    if (kind == "avg_pool2d") return LayerSpec::avg_pool2d(j.at("pool").get<std::size_t>());
    if (kind == "zero_pad2d") return LayerSpec::zero_pad2d(j.at("pad").get<std::size_t>());
    if (kind == "dense") return LayerSpec::dense(j.at("units").get<std::size_t>());
    if (kind == "activation") return LayerSpec::activation(j.at("surrogate").get<std::string>());
    if (kind == "sigmoid") return LayerSpec::sigmoid();
    throw std::invalid_argument("model manifest: unknown layer kind '" + kind + "'");
}

}  // namespace model_io_detail

inline std::string manifest_path(const std::string& base) { return base + ".json"; }
inline std::string blob_path(const std::string& base) { return base + ".weights.bin"; }

inline void save_model(const std::string& base, const ModelSpec& model) {
    std::vector<Shape> shapes = shape_infer(model);
    nlohmann::json j;
    j["format_version"] = kModelFormatVersion;
    j["input"] = {{"h", model.input.h}, {"w", model.input.w}, {"c", model.input.c}};
    j["preprocessing"] = {{"channel_scale", model.channel_scale.empty()
                                                ? std::vector<double>(model.input.c, 1.0)
                                                : model.channel_scale}};
    for (const auto& l : model.layers) j["layers"].push_back(model_io_detail::layer_to_json(l));
    for (const auto& [name, act] : model.activations) {
        j["activations"][name] = {{"name", act.source},
                                  {"interval", act.interval_bound},
                                  {"coefficients", act.coefficients}};
    }

    std::vector<double> blob;
    nlohmann::json index = nlohmann::json::array();
    Shape in = model.input;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const LayerSpec& l = model.layers[i];
        Shape layer_in = (l.kind == LayerSpec::Kind::Dense && !in.flat) ? in.as_flat() : in;
        auto [wc, bc] = param_counts(l, layer_in);
        if (wc) {
            if (i >= model.weights.size() || model.weights[i].size() != wc ||
                model.biases[i].size() != bc)
                throw std::invalid_argument("save_model: layer " + std::to_string(i) +
                                            " weights missing or mis-sized");
            index.push_back({{"layer", i}, {"param", "weights"}, {"offset", blob.size()}, {"count", wc}});
            blob.insert(blob.end(), model.weights[i].begin(), model.weights[i].end());
            index.push_back({{"layer", i}, {"param", "bias"}, {"offset", blob.size()}, {"count", bc}});
            blob.insert(blob.end(), model.biases[i].begin(), model.biases[i].end());
        }
        in = infer_layer_shape(model, l, layer_in);
    }
    j["weights_index"] = index;

    auto jf = io::open_out(manifest_path(base));
    jf << j.dump(2) << "\n";
    jf.close();

    auto bf = io::open_out(blob_path(base));
    for (double v : blob) io::write_le<double>(bf, v);
}

inline ModelSpec load_model(const std::string& base) {
    auto jf = io::open_in(manifest_path(base));
    nlohmann::json j = nlohmann::json::parse(jf);
    if (j.at("format_version").get<int>() != kModelFormatVersion)
        throw std::runtime_error("load_model: unsupported model format version");

    ModelSpec m;
    m.input = Shape::spatial(j.at("input").at("h").get<std::size_t>(), j.at("input").at("w").get<std::size_t>(),
                             j.at("input").at("c").get<std::size_t>());
    if (j.contains("preprocessing"))
        m.channel_scale = j["preprocessing"].value("channel_scale", std::vector<double>{});
    for (const auto& lj : j.at("layers")) m.layers.push_back(model_io_detail::layer_from_json(lj));
    if (j.contains("activations")) {
        for (const auto& [name, aj] : j["activations"].items()) {
            PolyActivation act;
            act.source = aj.at("name").get<std::string>();
            act.interval_bound = aj.at("interval").get<double>();
            act.coefficients = aj.at("coefficients").get<std::vector<double>>();
            act.validate();
            m.activations[name] = std::move(act);
        }
    }
    m.ensure_param_slots();
    std::vector<Shape> shapes = shape_infer(m);  // validates consistency

    // read the blob
    auto bf = io::open_in(blob_path(base));
    bf.seekg(0, std::ios::end);
    std::streamoff bytes = bf.tellg();
    bf.seekg(0);
    if (bytes % 8 != 0) throw std::runtime_error("load_model: weight blob length not a multiple of 8");
    std::vector<double> blob(static_cast<std::size_t>(bytes / 8));
    for (auto& v : blob) v = io::read_le<double>(bf);

    // expected parameter layout from shape inference
    std::size_t expect_off = 0;
    Shape in = m.input;
    std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> expected;  // layer, wc, bc
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        const LayerSpec& l = m.layers[i];
        Shape layer_in = (l.kind == LayerSpec::Kind::Dense && !in.flat) ? in.as_flat() : in;
        auto [wc, bc] = param_counts(l, layer_in);
        if (wc) expected.emplace_back(i, wc, bc);
        in = infer_layer_shape(m, l, layer_in);
    }

    const auto& index = j.at("weights_index");
    if (index.size() != expected.size() * 2)
        throw std::runtime_error("load_model: weight index entry count disagrees with architecture");
    std::size_t last_off = 0;
    bool first = true;
    for (std::size_t e = 0; e < expected.size(); ++e) {
        auto [layer, wc, bc] = expected[e];
        for (int part = 0; part < 2; ++part) {
            const auto& entry = index.at(2 * e + part);
            std::size_t off = entry.at("offset").get<std::size_t>();
            std::size_t cnt = entry.at("count").get<std::size_t>();
            std::size_t want = part == 0 ? wc : bc;
            if (entry.at("layer").get<std::size_t>() != layer || cnt != want)
                throw std::runtime_error("load_model: weight index disagrees with layer shapes");
            if (!first && off <= last_off) throw std::runtime_error("load_model: weight offsets not increasing");
            if (off != expect_off) throw std::runtime_error("load_model: weight offsets not contiguous");
            if (off + cnt > blob.size())
                throw std::runtime_error("load_model: weight blob truncated (shape disagreement)");
            auto& dst = part == 0 ? m.weights[layer] : m.biases[layer];
            dst.assign(blob.begin() + static_cast<std::ptrdiff_t>(off),
                       blob.begin() + static_cast<std::ptrdiff_t>(off + cnt));
            last_off = off;
            first = false;
            expect_off = off + cnt;
        }
    }
    if (expect_off != blob.size())
        throw std::runtime_error("load_model: weight blob length disagrees with architecture");
    return m;
}

// Deterministic Glorot-uniform initialization for every parameter layer.
inline void init_random_weights(ModelSpec& model, u64 seed) {
    model.ensure_param_slots();
    Rng rng(seed);
    Shape in = model.input;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const LayerSpec& l = model.layers[i];
        Shape layer_in = (l.kind == LayerSpec::Kind::Dense && !in.flat) ? in.as_flat() : in;
        auto [wc, bc] = param_counts(l, layer_in);
        if (wc) {
            std::size_t fan_in =
                l.kind == LayerSpec::Kind::Conv2d ? l.kernel_h * l.kernel_w * layer_in.c : layer_in.positions();
            std::size_t fan_out = l.kind == LayerSpec::Kind::Conv2d ? l.filters : l.units;
            double lim = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
            model.weights[i].resize(wc);
            model.biases[i].resize(bc);
            for (auto& w : model.weights[i]) w = (rng.uniform01() * 2 - 1) * lim;
            for (auto& b : model.biases[i]) b = (rng.uniform01() * 2 - 1) * 0.05;
        }
        in = infer_layer_shape(model, l, layer_in);
    }
}

}  // namespace hecnn
