// hecnn command-line tool: key management, model handling, synthetic data,
// activation fitting, plain/encrypted inference, circuit cost reports and
// benchmarks. Exit codes: 0 success, 2 validation error, 3 runtime failure.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "hecnn/ckks_serialize.hpp"
#include "hecnn/model_io.hpp"
#include "hecnn/presets.hpp"
#include "hecnn/schedule.hpp"
#include "hecnn/synthetic.hpp"

namespace fs = std::filesystem;
using namespace hecnn;

namespace {

std::string resolve_data_path(const std::string& p) {
    const char* dir = std::getenv("HECNN_DATA_DIR");
    if (dir && !p.empty() && p.find('/') == std::string::npos) return std::string(dir) + "/" + p;
    return p;
}

struct KeyPaths {
    std::string sk, pk, evk;
    explicit KeyPaths(const std::string& dir)
        : sk(dir + "/sk.bin"), pk(dir + "/pk.bin"), evk(dir + "/evk.bin") {}
};

struct LoadedKeys {
    CkksParams params;
    SecretKey sk;
    EvalKeys eval_keys;
};

LoadedKeys load_keys(const std::string& dir) {
    KeyPaths kp(dir);
    auto fsk = io::open_in(kp.sk);
    auto [p1, sk] = load_secret_key(fsk);
    auto fpk = io::open_in(kp.pk);
    auto [p2, pk] = load_public_key(fpk);
    auto fevk = io::open_in(kp.evk);
    auto [p3, evk] = load_evaluation_key(fevk);
    if (!same_params(p1, p2) || !same_params(p1, p3))
        throw std::runtime_error("key files disagree on parameters");
    return {p1, std::move(sk), {std::move(pk), std::move(evk)}};
}

ModelSpec model_without_trailing_sigmoid(ModelSpec m) {
    if (!m.layers.empty() && m.layers.back().kind == LayerSpec::Kind::Sigmoid) m.layers.pop_back();
    return m;
}

TensorPlain slice_batch(const TensorPlain& all, std::size_t begin, std::size_t count) {
    TensorPlain out = TensorPlain::zeros(all.shape, count);
    std::copy(all.data.begin() + static_cast<std::ptrdiff_t>(begin * all.shape.positions()),
              all.data.begin() + static_cast<std::ptrdiff_t>((begin + count) * all.shape.positions()),
              out.data.begin());
    return out;
}

void apply_channel_scale(TensorPlain& t, const std::vector<double>& scale) {
    if (scale.empty() || t.shape.flat) return;
    for (std::size_t b = 0; b < t.batch; ++b)
        for (std::size_t y = 0; y < t.shape.h; ++y)
            for (std::size_t x = 0; x < t.shape.w; ++x)
                for (std::size_t c = 0; c < t.shape.c; ++c)
                    t.at(b, pos_index(t.shape, y, x, c)) *= scale[c % scale.size()];
}

void print_layer_timings(std::ostream& os, const ModelSpec& m, const std::vector<double>& secs,
                         const char* label) {
    os << "# per-layer timings (" << label << ")\n";
    double total = 0;
    for (std::size_t i = 0; i < secs.size(); ++i) {
        os << "  layer " << std::setw(2) << i << "  " << std::setw(12) << std::left
           << m.layers[i].kind_name() << std::right << std::fixed << std::setprecision(3)
           << secs[i] * 1000 << " ms\n";
        os.unsetf(std::ios::fixed);
        total += secs[i];
    }
    os << "  total " << std::fixed << std::setprecision(3) << total * 1000 << " ms\n";
    os.unsetf(std::ios::fixed);
    os << std::setprecision(6);
}

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

// ---- subcommand implementations ----

int cmd_keygen(const std::string& preset, const std::string& presets_file, const std::string& out_dir,
               u64 seed, bool degenerate, bool force) {
    CkksParams params = preset_params(preset, presets_file, degenerate);
    fs::create_directories(out_dir);
    KeyPaths kp(out_dir);
    for (const std::string& p : {kp.sk, kp.pk, kp.evk}) {
        if (fs::exists(p) && !force)
            throw std::invalid_argument("refusing to overwrite existing key file " + p + " (use --force)");
    }
    CkksEngine eng(params);
    KeySet ks = eng.keygen(seed);
    {
        auto f = io::open_out(kp.sk);
        save_secret_key(f, params, ks.secret);
    }
    {
        auto f = io::open_out(kp.pk);
        save_public_key(f, params, ks.public_key);
    }
    {
        auto f = io::open_out(kp.evk);
        save_evaluation_key(f, params, ks.eval);
    }
    std::cout << "wrote " << kp.sk << ", " << kp.pk << ", " << kp.evk << " (preset " << preset
              << ", seed " << seed << ")\n";
    return 0;
}

int cmd_gen_data(std::size_t count, std::size_t image, u64 seed, const std::string& out) {
    Dataset ds = gen_synthetic({.count = count, .image = image, .seed = seed});
    save_dataset(resolve_data_path(out), ds);
    std::cout << "wrote " << count << " samples to " << resolve_data_path(out)
              << " (mean-intensity oracle accuracy " << std::setprecision(3)
              << mean_intensity_accuracy(ds) << ")\n";
    return 0;
}

int cmd_make_model(const std::string& arch, u64 seed, const std::string& out) {
    ModelSpec m;
    if (arch == "alexnet32")
        m = alexnet32_preset();
    else if (arch == "tiny")
        m = tiny_preset();
    else
        throw std::invalid_argument("unknown architecture '" + arch + "' (alexnet32|tiny)");
    init_random_weights(m, seed);
    save_model(out, m);
    std::cout << "wrote " << manifest_path(out) << " and " << blob_path(out) << " (" << arch
              << ", depth cost " << depth_cost(m) << ")\n";
    return 0;
}

int cmd_approx(const std::string& activation, std::size_t degree, double interval, std::size_t grid,
               const std::string& out) {
    if (degree < 1) throw std::invalid_argument("approx: degree must be >= 1");
    if (interval == 0.0) {
        if (activation == "relu")
            interval = default_relu_interval();
        else
            throw std::invalid_argument("approx: --interval required for " + activation);
    }
    PolyActivation act = make_surrogate(activation, degree, interval, grid);
    save_surrogate(std::cout, act);
    if (!out.empty()) {
        auto f = io::open_out(out);
        save_surrogate(f, act);
    }
    return 0;
}

struct InferArgs {
    std::string preset, presets_file, keys, model, data, out, mode = "plain";
    std::size_t batch = 8, limit = SIZE_MAX;
    unsigned threads = 1;
    u64 seed = 1;
};

int cmd_infer(const InferArgs& a) {
    ModelSpec model = load_model(a.model);
    ModelSpec logits_model = model_without_trailing_sigmoid(model);
    Dataset ds = load_dataset(resolve_data_path(a.data));
    std::size_t count = std::min(a.limit, ds.images.batch);
    if (a.batch == 0) throw std::invalid_argument("infer: batch must be >= 1");

    auto out = io::open_out(a.out);
    out << "id,logit,label,ms\n";

    std::optional<CkksEngine> eng;
    std::optional<LoadedKeys> keys;
    bool encrypted = a.mode == "encrypted" || a.mode == "degenerate";
    if (encrypted) {
        keys.emplace(load_keys(a.keys));
        if (!a.preset.empty()) {
            CkksParams want = preset_params(a.preset, a.presets_file, a.mode == "degenerate");
            if (!same_params(want, keys->params))
                throw std::invalid_argument("infer: key files do not match preset " + a.preset);
        }
        if ((a.mode == "degenerate") != keys->params.degenerate_noise)
            throw std::invalid_argument("infer: mode '" + a.mode + "' needs keys generated " +
                                        (a.mode == "degenerate" ? "with --degenerate" : "without --degenerate"));
        eng.emplace(keys->params);
        if (a.batch > eng->slot_count()) throw std::invalid_argument("infer: batch exceeds slot count");
        if (depth_cost(logits_model) > eng->depth_budget())
            throw std::invalid_argument("infer: model depth cost " + std::to_string(depth_cost(logits_model)) +
                                        " exceeds preset depth budget " + std::to_string(eng->depth_budget()));
    } else if (a.mode != "plain") {
        throw std::invalid_argument("infer: unknown mode '" + a.mode + "'");
    }

    std::vector<double> layer_secs;
    for (std::size_t begin = 0; begin < count; begin += a.batch) {
        std::size_t bsz = std::min(a.batch, count - begin);
        TensorPlain x = slice_batch(ds.images, begin, bsz);
        apply_channel_scale(x, model.channel_scale);
        double t0 = now_seconds();
        TensorPlain logits;
        if (encrypted) {
            TensorEncrypted xe = encrypt_tensor(*eng, keys->eval_keys.pk, x,
                                                CkksEngine::derive_seed(a.seed, begin), a.threads);
            TensorEncrypted ye =
                forward_encrypted(logits_model, xe, *eng, keys->eval_keys,
                                  CkksEngine::derive_seed(a.seed, 0xf000 + begin), a.threads, &layer_secs);
            logits = decrypt_tensor(*eng, keys->sk, ye, a.threads);
        } else {
            logits = forward_plain(logits_model, x, &layer_secs);
        }
        double ms_per_image = (now_seconds() - t0) * 1000.0 / static_cast<double>(bsz);
        for (std::size_t i = 0; i < bsz; ++i) {
            double logit = logits.at(i, 0);
            out << (begin + i) << "," << std::setprecision(17) << logit << "," << (logit > 0 ? 1 : 0) << ","
                << std::fixed << std::setprecision(3) << ms_per_image << "\n";
            out.unsetf(std::ios::fixed);
            out << std::setprecision(6);
        }
    }
    if (count > 0) print_layer_timings(std::cout, logits_model, layer_secs, a.mode.c_str());
    std::cout << "wrote predictions for " << count << " images to " << a.out << "\n";
    return 0;
}

int cmd_bench(const InferArgs& a) {
    ModelSpec model = load_model(a.model);
    ModelSpec logits_model = model_without_trailing_sigmoid(model);
    Dataset ds = load_dataset(resolve_data_path(a.data));
    std::size_t count = std::min({a.limit, ds.images.batch, a.batch});
    if (count == 0) throw std::invalid_argument("bench: no images");
    LoadedKeys keys = load_keys(a.keys);
    CkksEngine eng(keys.params);
    if (depth_cost(logits_model) > eng.depth_budget())
        throw std::invalid_argument("bench: model depth cost exceeds preset depth budget");

    TensorPlain x = slice_batch(ds.images, 0, count);
    apply_channel_scale(x, model.channel_scale);

    std::vector<double> plain_secs, enc_secs;
    double t0 = now_seconds();
    TensorPlain ref = forward_plain(logits_model, x, &plain_secs);
    double plain_total = now_seconds() - t0;

    t0 = now_seconds();
    TensorEncrypted xe = encrypt_tensor(eng, keys.eval_keys.pk, x, a.seed, a.threads);
    TensorEncrypted ye = forward_encrypted(logits_model, xe, eng, keys.eval_keys,
                                           CkksEngine::derive_seed(a.seed, 0xbe), a.threads, &enc_secs);
    TensorPlain dec = decrypt_tensor(eng, keys.sk, ye, a.threads);
    double enc_total = now_seconds() - t0;

    double max_delta = 0;
    for (std::size_t i = 0; i < count; ++i) max_delta = std::max(max_delta, std::abs(dec.at(i, 0) - ref.at(i, 0)));

    std::ostringstream table;
    table << "# bench: batch " << count << ", model " << a.model << "\n";
    table << std::left << std::setw(6) << "layer" << std::setw(13) << "kind" << std::right << std::setw(12)
          << "plain_ms" << std::setw(14) << "encrypted_ms" << std::setw(10) << "ratio" << "\n";
    for (std::size_t i = 0; i < logits_model.layers.size(); ++i) {
        double pm = plain_secs[i] * 1000, em = enc_secs[i] * 1000;
        table << std::left << std::setw(6) << i << std::setw(13) << logits_model.layers[i].kind_name()
              << std::right << std::fixed << std::setprecision(3) << std::setw(12) << pm << std::setw(14)
              << em << std::setw(10) << std::setprecision(1) << (pm > 0 ? em / pm : 0.0) << "\n";
        table.unsetf(std::ios::fixed);
        table << std::setprecision(6);
    }
    table << std::left << std::setw(19) << "total" << std::right << std::fixed << std::setprecision(3)
          << std::setw(12) << plain_total * 1000 << std::setw(14) << enc_total * 1000 << std::setw(10)
          << std::setprecision(1) << enc_total / plain_total << "\n";
    table.unsetf(std::ios::fixed);
    table << std::setprecision(6);
    table << "# max |encrypted - plain| logit delta: " << max_delta << "\n";

    std::cout << table.str();
    if (!a.out.empty()) {
        auto f = io::open_out(a.out);
        f << table.str();
    }
    return 0;
}

int cmd_circuit(const std::string& op, std::size_t bits, const std::string& workers_csv, std::size_t batch,
                const GateCostTable& costs, const std::string& out, const std::string& export_path) {
    Circuit base;
    if (op == "add")
        base = build_adder(bits);
    else if (op == "mul")
        base = build_multiplier(bits);
    else
        throw std::invalid_argument("circuit: unknown op '" + op + "' (add|mul)");

    // exhaustive correctness for small widths
    std::string exhaustive = "n/a (bits > 4)";
    if (bits <= 4) {
        bool ok = true;
        for (u64 a = 0; a < (u64(1) << bits); ++a)
            for (u64 b = 0; b < (u64(1) << bits); ++b) {
                BitVec in(2 * bits);
                for (std::size_t i = 0; i < bits; ++i) {
                    in[i] = static_cast<u8>((a >> i) & 1);
                    in[bits + i] = static_cast<u8>((b >> i) & 1);
                }
                BitVec got = evaluate(base, in);
                u64 v = 0;
                for (std::size_t i = 0; i < got.size(); ++i) v |= static_cast<u64>(got[i]) << i;
                u64 want = op == "add" ? a + b : a * b;
                if (bits == 1 && op == "mul") want &= 1;
                ok &= v == want;
            }
        exhaustive = ok ? "pass" : "FAIL";
        if (!ok) throw std::runtime_error("circuit: exhaustive check failed");
    }

    std::vector<std::size_t> workers;
    std::stringstream ss(workers_csv);
    for (std::string tok; std::getline(ss, tok, ',');) workers.push_back(std::stoul(tok));
    if (workers.empty()) throw std::invalid_argument("circuit: empty worker list");

    Circuit batched = batch > 1 ? parallel_copies(base, batch) : base;
    auto rows = speedup_table(batched, workers, costs);

    std::ostringstream rep;
    rep << "# op " << op << ", " << bits << " bits, batch " << batch << " (circuits: " << batch
        << ", gates per circuit: " << base.gate_count() << ")\n";
    rep << "# exhaustive correctness: " << exhaustive << "\n";
    write_speedup_report(rep, batched, rows, op + " batch");
    std::cout << rep.str();
    if (!out.empty()) {
        auto f = io::open_out(out);
        f << rep.str();
    }
    if (!export_path.empty()) {
        auto f = io::open_out(export_path);
        write_circuit(f, batched);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"leveled CKKS engine with an encrypted CNN inference stack"};
    app.set_config("--config");
    app.require_subcommand(1);

    // keygen
    auto* keygen = app.add_subcommand("keygen", "generate secret/public/evaluation keys");
    std::string kg_preset = "test-n4096-d4", kg_out, kg_presets_file;
    u64 kg_seed = 1;
    bool kg_force = false, kg_degenerate = false;
    keygen->add_option("--preset", kg_preset, "parameter preset name");
    keygen->add_option("--presets-file", kg_presets_file, "JSON presets config");
    keygen->add_option("--out", kg_out, "output directory")->required();
    keygen->add_option("--seed", kg_seed, "RNG seed");
    keygen->add_flag("--force", kg_force, "overwrite existing key files");
    keygen->add_flag("--degenerate", kg_degenerate, "degenerate-noise mode (all samplers zero)");

    // gen-data
    auto* gend = app.add_subcommand("gen-data", "generate a synthetic labeled dataset");
    std::size_t gd_count = 2000, gd_image = 32;
    u64 gd_seed = 1;
    std::string gd_out;
    gend->add_option("--count", gd_count, "sample count");
    gend->add_option("--image", gd_image, "square image side");
    gend->add_option("--seed", gd_seed, "generator seed");
    gend->add_option("--out", gd_out, "output dataset file")->required();

    // make-model
    auto* mkm = app.add_subcommand("make-model", "write a model preset with seeded random weights");
    std::string mm_arch = "tiny", mm_out;
    u64 mm_seed = 1;
    mkm->add_option("--arch", mm_arch, "architecture (alexnet32|tiny)");
    mkm->add_option("--seed", mm_seed, "weight init seed");
    mkm->add_option("--out", mm_out, "output base path")->required();

    // approx
    auto* apx = app.add_subcommand("approx", "fit a polynomial activation surrogate");
    std::string ax_act = "relu", ax_out;
    std::size_t ax_degree = 2, ax_grid = 100000;
    double ax_interval = 0.0;
    apx->add_option("--activation", ax_act, "activation (relu|sigmoid|tanh)");
    apx->add_option("--degree", ax_degree, "surrogate degree (>= 1)");
    apx->add_option("--interval", ax_interval, "fit interval bound B");
    apx->add_option("--grid", ax_grid, "quadrature grid size");
    apx->add_option("--out", ax_out, "manifest output file");

    // infer
    auto* inf = app.add_subcommand("infer", "run inference and write predictions");
    InferArgs ia;
    inf->add_option("--preset", ia.preset, "parameter preset (cross-checked against key files)");
    inf->add_option("--presets-file", ia.presets_file, "JSON presets config");
    inf->add_option("--keys", ia.keys, "key directory (encrypted modes)");
    inf->add_option("--model", ia.model, "model base path")->required();
    inf->add_option("--data", ia.data, "dataset file")->required();
    inf->add_option("--out", ia.out, "predictions output file")->required();
    inf->add_option("--mode", ia.mode, "plain|encrypted|degenerate");
    inf->add_option("--batch", ia.batch, "images per batch (slot packing)");
    inf->add_option("--threads", ia.threads, "worker threads");
    inf->add_option("--seed", ia.seed, "encryption randomness seed");
    inf->add_option("--limit", ia.limit, "use only the first N images");

    // bench
    auto* ben = app.add_subcommand("bench", "plain vs encrypted timing table on the same inputs");
    InferArgs ba;
    ben->add_option("--keys", ba.keys, "key directory")->required();
    ben->add_option("--model", ba.model, "model base path")->required();
    ben->add_option("--data", ba.data, "dataset file")->required();
    ben->add_option("--out", ba.out, "table output file");
    ben->add_option("--batch", ba.batch, "batch size");
    ben->add_option("--threads", ba.threads, "worker threads");
    ben->add_option("--seed", ba.seed, "encryption randomness seed");
    ben->add_option("--limit", ba.limit, "use only the first N images");

    // circuit
    auto* cir = app.add_subcommand("circuit", "build an arithmetic circuit and report schedule speedups");
    std::string c_op = "add", c_workers = "1,10,20,40", c_out, c_export;
    std::size_t c_bits = 8, c_batch = 64;
    GateCostTable c_costs;
    cir->add_option("--op", c_op, "add|mul");
    cir->add_option("--bits", c_bits, "operand bit width");
    cir->add_option("--workers", c_workers, "comma-separated worker counts");
    cir->add_option("--batch", c_batch, "independent copies (exposes parallelism)");
    cir->add_option("--cost-xor", c_costs.xor_cost, "XOR gate cost");
    cir->add_option("--cost-and", c_costs.and_cost, "AND gate cost");
    cir->add_option("--cost-or", c_costs.or_cost, "OR gate cost");
    cir->add_option("--cost-not", c_costs.not_cost, "NOT gate cost");
    cir->add_option("--out", c_out, "report output file");
    cir->add_option("--export", c_export, "gate-list export file");

    try {
        app.parse(argc, argv);
        if (*keygen) return cmd_keygen(kg_preset, kg_presets_file, kg_out, kg_seed, kg_degenerate, kg_force);
        if (*gend) return cmd_gen_data(gd_count, gd_image, gd_seed, gd_out);
        if (*mkm) return cmd_make_model(mm_arch, mm_seed, mm_out);
        if (*apx) return cmd_approx(ax_act, ax_degree, ax_interval, ax_grid, ax_out);
        if (*inf) return cmd_infer(ia);
        if (*ben) return cmd_bench(ba);
        if (*cir) return cmd_circuit(c_op, c_bits, c_workers, c_batch, c_costs, c_out, c_export);
        return 2;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
