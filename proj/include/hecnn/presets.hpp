#pragma once

// Named parameter presets, resolvable either from the built-in table or
// from a JSON config file of the same shape:
//
//   { "presets": [ { "name": "...", "n": 4096, "prime_bits": [60,40,...],
//                    "log2_scale": 40, "sigma": 3.2 } ] }

#include <map>
#include <nlohmann/json.hpp>

#include "hecnn/ckks.hpp"
#include "hecnn/io_util.hpp"

namespace hecnn {

struct PresetDef {
    std::string name;
    std::size_t n = 0;
    std::vector<int> prime_bits;
    int log2_scale = 0;
    double sigma = 3.2;

    CkksParams build() const {
        CkksParams p;
        p.ring = RingParams::create(n, prime_bits);
        p.scale = std::ldexp(1.0, log2_scale);
        p.sigma = sigma;
        return p;
    }
};

inline const std::vector<PresetDef>& builtin_presets() {
    static const std::vector<PresetDef> presets = [] {
        std::vector<PresetDef> v = {
            {"toy-n16", 16, {40, 21, 21, 21}, 20, 3.2},
            {"test-n4096-d4", 4096, {60, 40, 40, 40, 40}, 40, 3.2},
            {"nn-n4096-d8", 4096, {60, 40, 40, 40, 40, 40, 40, 40, 40}, 40, 3.2},
            {"net-n8192-d8", 8192, {60, 40, 40, 40, 40, 40, 40, 40, 40}, 40, 3.2},
        };
        // opt-in depth-24 chain sized for the full built-in network; expect
        // hours of CPU and hundreds of MB of keys
        PresetDef large{"large-n16384-d24", 16384, {60}, 40, 3.2};
        large.prime_bits.insert(large.prime_bits.end(), 24, 40);
        v.push_back(std::move(large));
        return v;
    }();
    return presets;
}

inline std::vector<PresetDef> parse_presets_json(std::istream& is) {
    nlohmann::json j = nlohmann::json::parse(is);
    std::vector<PresetDef> out;
    for (const auto& e : j.at("presets")) {
        PresetDef d;
        d.name = e.at("name").get<std::string>();
        d.n = e.at("n").get<std::size_t>();
        d.prime_bits = e.at("prime_bits").get<std::vector<int>>();
        d.log2_scale = e.at("log2_scale").get<int>();
        d.sigma = e.value("sigma", 3.2);
        out.push_back(std::move(d));
    }
    return out;
}

// Config-file entries shadow built-ins of the same name.
inline PresetDef find_preset(const std::string& name, const std::string& config_path = "") {
    if (!config_path.empty()) {
        auto f = io::open_in(config_path);
        for (const auto& d : parse_presets_json(f))
            if (d.name == name) return d;
    }
    for (const auto& d : builtin_presets())
        if (d.name == name) return d;
    throw std::invalid_argument("unknown parameter preset: " + name);
}

inline CkksParams preset_params(const std::string& name, const std::string& config_path = "",
                                bool degenerate_noise = false) {
    CkksParams p = find_preset(name, config_path).build();
    p.degenerate_noise = degenerate_noise;
    return p;
}

}  // namespace hecnn
