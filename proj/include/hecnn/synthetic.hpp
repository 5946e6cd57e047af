#pragma once

// Desk-scale synthetic image data: two balanced classes of small color
// images, positives containing a bright vehicle-like blob over a textured
// background, negatives background only. Deterministic under the seed.

#include "hecnn/io_util.hpp"
#include "hecnn/tensor.hpp"

namespace hecnn {

struct SyntheticSpec {
    std::size_t count = 2000;
    std::size_t image = 32;     // square
    std::size_t channels = 3;
    u64 seed = 1;
};

struct Dataset {
    TensorPlain images;  // batch = sample count, values in [0, 1]
    std::vector<u8> labels;
};

inline Dataset gen_synthetic(const SyntheticSpec& spec) {
    std::size_t s = spec.image;
    Shape shape = Shape::spatial(s, s, spec.channels);
    Dataset ds{TensorPlain::zeros(shape, spec.count), std::vector<u8>(spec.count)};
    Rng rng(spec.seed);
    constexpr double pi2 = 6.283185307179586;
    for (std::size_t idx = 0; idx < spec.count; ++idx) {
        u8 label = static_cast<u8>(idx % 2);  // exactly balanced
        ds.labels[idx] = label;

        // textured background
        std::vector<double> tone(spec.channels);
        for (auto& t : tone) t = 0.32 + 0.08 * rng.uniform01();
        double fx = 1.0 + rng.below(3), fy = 1.0 + rng.below(3);
        double phase = pi2 * rng.uniform01();
        double amp = 0.03 + 0.03 * rng.uniform01();
        for (std::size_t y = 0; y < s; ++y)
            for (std::size_t x = 0; x < s; ++x) {
                double tex = amp * std::sin(pi2 * (fx * x + fy * y) / static_cast<double>(s) + phase);
                for (std::size_t c = 0; c < spec.channels; ++c)
                    ds.images.at(idx, pos_index(shape, y, x, c)) =
                        tone[c] + tex + (rng.uniform01() - 0.5) * 0.08;
            }

        if (label == 1) {
            // vehicle-like blob: bright rounded rectangle with a darker cabin
            // strip; proportions scale with the image side
            std::size_t lo_l = std::max<std::size_t>(2, s * 5 / 32);
            std::size_t hi_l = std::max<std::size_t>(lo_l, s * 7 / 32);
            std::size_t lo_s = std::max<std::size_t>(1, s * 3 / 32);
            std::size_t hi_s = std::max<std::size_t>(lo_s, s * 4 / 32);
            std::size_t half_l = lo_l + rng.below(hi_l - lo_l + 1);
            std::size_t half_s = lo_s + rng.below(hi_s - lo_s + 1);
            half_l = std::min(half_l, (s - 3) / 2);
            half_s = std::min(half_s, (s - 3) / 2);
            bool horizontal = rng.below(2) == 0;
            std::size_t hw = horizontal ? half_l : half_s;
            std::size_t hh = horizontal ? half_s : half_l;
            std::size_t cx = hw + 1 + rng.below(s - 2 * hw - 2);
            std::size_t cy = hh + 1 + rng.below(s - 2 * hh - 2);
            double boost = 0.40 + 0.12 * rng.uniform01();
            std::vector<double> tint(spec.channels);
            for (auto& t : tint) t = 0.06 * rng.uniform01();
            for (std::size_t y = cy - hh; y <= cy + hh; ++y)
                for (std::size_t x = cx - hw; x <= cx + hw; ++x) {
                    double dy = (static_cast<double>(y) - cy) / (hh + 0.5);
                    double dx = (static_cast<double>(x) - cx) / (hw + 0.5);
                    if (dx * dx * dx * dx + dy * dy * dy * dy > 1.0) continue;  // rounded corners
                    bool cabin = std::abs(horizontal ? dx : dy) < 0.3;
                    for (std::size_t c = 0; c < spec.channels; ++c) {
                        double v = tone[c] + boost + tint[c] - (cabin ? 0.22 : 0.0);
                        ds.images.at(idx, pos_index(shape, y, x, c)) = v;
                    }
                }
        }

        for (std::size_t p = 0; p < shape.positions(); ++p) {
            double& v = ds.images.at(idx, p);
            v = std::clamp(v, 0.0, 1.0);
        }
    }
    return ds;
}

// Raw on-disk format: "HDTS" | version u16 | count u32 | h,w,c u16 |
// labels u8[count] | samples f64 (batch-major, little-endian).
inline void save_dataset(const std::string& path, const Dataset& ds) {
    auto f = io::open_out(path);
    io::write_bytes(f, "HDTS", 4);
    io::write_le<u16>(f, 1);
    io::write_le<u32>(f, static_cast<u32>(ds.images.batch));
    io::write_le<u16>(f, static_cast<u16>(ds.images.shape.h));
    io::write_le<u16>(f, static_cast<u16>(ds.images.shape.w));
    io::write_le<u16>(f, static_cast<u16>(ds.images.shape.c));
    for (u8 l : ds.labels) io::write_le<u8>(f, l);
    for (double v : ds.images.data) io::write_le<double>(f, v);
}

inline Dataset load_dataset(const std::string& path) {
    auto f = io::open_in(path);
    char magic[4];
    io::read_bytes(f, magic, 4);
    if (std::memcmp(magic, "HDTS", 4) != 0) throw std::runtime_error("dataset: bad magic");
    if (io::read_le<u16>(f) != 1) throw std::runtime_error("dataset: unsupported version");
    u32 count = io::read_le<u32>(f);
    std::size_t h = io::read_le<u16>(f), w = io::read_le<u16>(f), c = io::read_le<u16>(f);
    Dataset ds{TensorPlain::zeros(Shape::spatial(h, w, c), count), std::vector<u8>(count)};
    for (auto& l : ds.labels) l = io::read_le<u8>(f);
    for (auto& v : ds.images.data) v = io::read_le<double>(f);
    return ds;
}

// Best threshold-on-mean-intensity classifier accuracy (the learnability
// oracle for the generator).
inline double mean_intensity_accuracy(const Dataset& ds) {
    std::size_t n = ds.images.batch;
    std::vector<std::pair<double, u8>> m(n);
    std::size_t pos = ds.images.shape.positions();
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0;
        for (std::size_t p = 0; p < pos; ++p) s += ds.images.at(i, p);
        m[i] = {s / static_cast<double>(pos), ds.labels[i]};
    }
    std::sort(m.begin(), m.end());
    std::size_t total_pos = 0;
    for (auto& [v, l] : m) total_pos += l;
    // sweep thresholds between consecutive values
    std::size_t pos_below = 0, best = 0;
    for (std::size_t i = 0; i <= n; ++i) {
        // classify >= threshold as positive; i items below
        std::size_t correct = (i - pos_below) + (total_pos - pos_below);
        best = std::max(best, correct);
        if (i < n && m[i].second) ++pos_below;
    }
    return static_cast<double>(best) / static_cast<double>(n);
}

}  // namespace hecnn
