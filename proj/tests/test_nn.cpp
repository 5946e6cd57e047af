#include <catch2/catch_amalgamated.hpp>

#include "hecnn/layers.hpp"
#include "hecnn/model_io.hpp"
#include "support/model_gen.hpp"
#include "support/oracles.hpp"

using namespace hecnn;

namespace {

CkksParams small_nn_params() {
    CkksParams p;
    p.ring = RingParams::create(1024, {60, 40, 40, 40, 40, 40, 40, 40, 40});
    p.scale = 0x1p40;
    return p;
}

ModelSpec empty_model(Shape input) {
    ModelSpec m;
    m.input = input;
    return m;
}

double tensor_max_diff(const TensorPlain& a, const TensorPlain& b) {
    REQUIRE(a.data.size() == b.data.size());
    double m = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

}  // namespace

TEST_CASE("shape inference") {
    SECTION("the built-in 32x32 stack") {
        ModelSpec m = alexnet32_preset();
        std::vector<Shape> s = shape_infer(m);
        REQUIRE(s.size() == 21);
        CHECK(s[0] == Shape::spatial(32, 32, 96));  // 96 filters, 11x11, stride 1, padding
        CHECK(s[2] == Shape::spatial(16, 16, 96));
        CHECK(s[5] == Shape::spatial(8, 8, 256));
        CHECK(s[6] == Shape::spatial(10, 10, 256));
        CHECK(s[9] == Shape::spatial(5, 5, 384));
        CHECK(s[14] == Shape::spatial(4, 4, 384));
        CHECK(s[15] == Shape::flattened(4096));
        CHECK(s[19] == Shape::flattened(1));
        CHECK(s[20] == Shape::flattened(1));
    }

    SECTION("identity model keeps the input shape") {
        ModelSpec m = empty_model(Shape::spatial(7, 5, 2));
        CHECK(shape_infer(m).empty());
        TensorPlain x = TensorPlain::zeros(m.input, 3);
        TensorPlain y = forward_plain(m, x);
        CHECK(y.shape == x.shape);
    }

    SECTION("inconsistencies are rejected") {
        ModelSpec m = empty_model(Shape::spatial(8, 8, 1));
        m.layers = {LayerSpec::dense(4), LayerSpec::conv2d(2, 3, 3)};
        CHECK_THROWS_AS(shape_infer(m), std::invalid_argument);  // conv after flatten

        m.layers = {LayerSpec::avg_pool2d(9)};
        CHECK_THROWS_AS(shape_infer(m), std::invalid_argument);  // pool larger than input

        m.layers = {LayerSpec::sigmoid(), LayerSpec::dense(1)};
        CHECK_THROWS_AS(shape_infer(m), std::invalid_argument);  // sigmoid not final

        m.layers = {LayerSpec::activation("missing")};
        CHECK_THROWS_AS(shape_infer(m), std::invalid_argument);  // unregistered surrogate

        m.layers = {LayerSpec::conv2d(0, 3, 3)};
        CHECK_THROWS_AS(shape_infer(m), std::invalid_argument);  // non-positive parameter
    }
}

TEST_CASE("depth cost") {
    ModelSpec m = empty_model(Shape::spatial(8, 8, 1));
    m.activations[kDefaultSurrogateName] = relu_default_surrogate();
    CHECK(depth_cost(m) == 0);
    m.layers = {LayerSpec::conv2d(2, 3, 3), LayerSpec::activation(kDefaultSurrogateName),
                LayerSpec::avg_pool2d(2)};
    CHECK(depth_cost(m) == 4);  // 1 + 2 + 1
    CHECK(depth_cost(alexnet32_preset()) == 23);
}

TEST_CASE("conv2d plain kernel") {
    SECTION("1x1 kernel with unit weight is the identity") {
        ModelSpec m = empty_model(Shape::spatial(4, 4, 1));
        m.layers = {LayerSpec::conv2d(1, 1, 1)};
        m.ensure_param_slots();
        m.weights[0] = {1.0};
        m.biases[0] = {0.0};
        TensorPlain x = TensorPlain::zeros(m.input, 2);
        Rng rng(1);
        for (auto& v : x.data) v = rng.uniform01();
        CHECK(tensor_max_diff(forward_plain(m, x), x) == 0.0);
    }

    SECTION("3x3 ones kernel on a 4x4 ones image, valid padding: all nines") {
        ModelSpec m = empty_model(Shape::spatial(4, 4, 1));
        m.layers = {LayerSpec::conv2d(1, 3, 3, 1, LayerSpec::Padding::Valid)};
        m.ensure_param_slots();
        m.weights[0].assign(9, 1.0);
        m.biases[0] = {0.0};
        TensorPlain x = TensorPlain::zeros(m.input, 1);
        for (auto& v : x.data) v = 1.0;
        TensorPlain y = forward_plain(m, x);
        CHECK(y.shape == Shape::spatial(2, 2, 1));
        for (double v : y.data) CHECK(v == 9.0);
    }

    SECTION("random conv matches the independent loop oracle") {
        ModelSpec m = empty_model(Shape::spatial(8, 8, 2));
        m.layers = {LayerSpec::conv2d(3, 3, 3, 1, LayerSpec::Padding::Same)};
        m.ensure_param_slots();
        init_random_weights(m, 77);
        TensorPlain x = TensorPlain::zeros(m.input, 2);
        Rng rng(2);
        for (auto& v : x.data) v = rng.uniform01() * 2 - 1;
        TensorPlain got = forward_plain(m, x);
        TensorPlain want = test::naive_conv2d(x, 3, 3, 3, 1, true, m.weights[0], m.biases[0]);
        CHECK(tensor_max_diff(got, want) < 1e-10);
    }
}

TEST_CASE("avg_pool2d plain kernel") {
    ModelSpec m = empty_model(Shape::spatial(4, 4, 1));
    m.layers = {LayerSpec::avg_pool2d(2)};

    SECTION("constant tensor stays constant") {
        TensorPlain x = TensorPlain::zeros(m.input, 1);
        for (auto& v : x.data) v = 0.37;
        for (double v : forward_plain(m, x).data) CHECK(v == Catch::Approx(0.37));
    }

    SECTION("2x2 block 1,2,3,4 averages to 2.5") {
        TensorPlain x = TensorPlain::zeros(Shape::spatial(2, 2, 1), 1);
        x.data = {1, 2, 3, 4};
        ModelSpec m2 = empty_model(Shape::spatial(2, 2, 1));
        m2.layers = {LayerSpec::avg_pool2d(2)};
        CHECK(forward_plain(m2, x).data[0] == 2.5);
    }

    SECTION("random tensor matches the blockwise-mean oracle") {
        TensorPlain x = TensorPlain::zeros(Shape::spatial(6, 6, 3), 2);
        Rng rng(3);
        for (auto& v : x.data) v = rng.uniform01();
        ModelSpec m3 = empty_model(x.shape);
        m3.layers = {LayerSpec::avg_pool2d(2)};
        CHECK(tensor_max_diff(forward_plain(m3, x), test::naive_avg_pool(x, 2)) < 1e-12);
    }
}

TEST_CASE("zero_pad2d plain kernel") {
    SECTION("pad 0 is the identity") {
        ModelSpec m = empty_model(Shape::spatial(3, 3, 2));
        m.layers = {LayerSpec::zero_pad2d(0)};
        TensorPlain x = TensorPlain::zeros(m.input, 1);
        Rng rng(4);
        for (auto& v : x.data) v = rng.uniform01();
        CHECK(tensor_max_diff(forward_plain(m, x), x) == 0.0);
    }

    SECTION("2x2 input, pad 1, original centered") {
        ModelSpec m = empty_model(Shape::spatial(2, 2, 1));
        m.layers = {LayerSpec::zero_pad2d(1)};
        TensorPlain x = TensorPlain::zeros(m.input, 1);
        x.data = {1, 2, 3, 4};
        TensorPlain y = forward_plain(m, x);
        REQUIRE(y.shape == Shape::spatial(4, 4, 1));
        std::vector<double> want = {0, 0, 0, 0, 0, 1, 2, 0, 0, 3, 4, 0, 0, 0, 0, 0};
        CHECK(y.data == want);
    }
}

TEST_CASE("dense plain kernel") {
    SECTION("identity weights, zero bias") {
        ModelSpec m = empty_model(Shape::flattened(3));
        m.layers = {LayerSpec::dense(3)};
        m.ensure_param_slots();
        m.weights[0] = {1, 0, 0, 0, 1, 0, 0, 0, 1};
        m.biases[0] = {0, 0, 0};
        TensorPlain x = TensorPlain::zeros(m.input, 1);
        x.data = {5, -2, 7};
        CHECK(forward_plain(m, x).data == x.data);
    }

    SECTION("hand-computed 2x2 case") {
        ModelSpec m = empty_model(Shape::flattened(2));
        m.layers = {LayerSpec::dense(2)};
        m.ensure_param_slots();
        m.weights[0] = {1, 1, 1, -1};  // w[i][u]: row i feeds units (1,1) then (1,-1)
        m.biases[0] = {0, 0};
        TensorPlain x = TensorPlain::zeros(m.input, 1);
        x.data = {1, 2};
        TensorPlain y = forward_plain(m, x);
        CHECK(y.data == std::vector<double>{3, -1});
    }

    SECTION("random layer matches the matrix-multiply oracle") {
        ModelSpec m = empty_model(Shape::flattened(32));
        m.layers = {LayerSpec::dense(8)};
        m.ensure_param_slots();
        init_random_weights(m, 5);
        TensorPlain x = TensorPlain::zeros(m.input, 3);
        Rng rng(6);
        for (auto& v : x.data) v = rng.uniform01() * 2 - 1;
        CHECK(tensor_max_diff(forward_plain(m, x), test::naive_dense(x, 8, m.weights[0], m.biases[0])) <
              1e-10);
    }

    SECTION("weight shape mismatch is an error") {
        ModelSpec m = empty_model(Shape::flattened(4));
        m.layers = {LayerSpec::dense(2)};
        m.ensure_param_slots();
        m.weights[0] = {1, 2, 3};  // wrong size
        m.biases[0] = {0, 0};
        TensorPlain x = TensorPlain::zeros(m.input, 1);
        CHECK_THROWS_AS(forward_plain(m, x), std::invalid_argument);
    }
}

TEST_CASE("forward_plain composition") {
    SECTION("single activation on zero input gives zero") {
        ModelSpec m = empty_model(Shape::flattened(1));
        m.activations[kDefaultSurrogateName] = relu_default_surrogate();
        m.layers = {LayerSpec::activation(kDefaultSurrogateName)};
        TensorPlain x = TensorPlain::zeros(m.input, 1);
        CHECK(forward_plain(m, x).data[0] == 0.0);
    }

    SECTION("tiny reference model against an independently composed oracle, frozen") {
        ModelSpec m = tiny_preset();
        init_random_weights(m, 2024);
        TensorPlain x = TensorPlain::zeros(m.input, 1);
        Rng rng(7);
        for (auto& v : x.data) v = rng.uniform01();

        TensorPlain got = forward_plain(m, x);

        // independent composition from the oracle kernels
        TensorPlain t = test::naive_conv2d(x, 4, 3, 3, 1, true, m.weights[0], m.biases[0]);
        for (auto& v : t.data) v = eval_plain(m.activations.at(kDefaultSurrogateName), v);
        t = test::naive_avg_pool(t, 2);
        t = t.flattened();
        t = test::naive_dense(t, 1, m.weights[3], m.biases[3]);
        REQUIRE(got.data.size() == 1);
        CHECK(std::abs(got.data[0] - t.data[0]) < 1e-10);
        // frozen golden value, cross-checked against the composition above
        CHECK(got.data[0] == Catch::Approx(-0.2619418027202618).margin(1e-9));
    }

    SECTION("classification invariance: logit threshold at 0 equals sigmoid threshold at 1/2") {
        ModelSpec m = tiny_preset();
        m.layers.push_back(LayerSpec::sigmoid());
        init_random_weights(m, 99);
        ModelSpec no_sig = m;
        no_sig.layers.pop_back();
        TensorPlain x = TensorPlain::zeros(m.input, 8);
        Rng rng(8);
        for (auto& v : x.data) v = rng.uniform01();
        TensorPlain probs = forward_plain(m, x);
        TensorPlain logits = forward_plain(no_sig, x);
        for (std::size_t b = 0; b < 8; ++b)
            CHECK((probs.at(b, 0) > 0.5) == (logits.at(b, 0) > 0.0));
    }
}

TEST_CASE("encrypted layer kernels agree with the plain path") {
    CkksParams p = small_nn_params();
    CkksEngine eng(p);
    KeySet ks = eng.keygen(41);
    EvalKeys keys{ks.public_key, ks.eval};

    SECTION("conv2d") {
        ModelSpec m = empty_model(Shape::spatial(6, 6, 2));
        m.layers = {LayerSpec::conv2d(3, 3, 3)};
        m.ensure_param_slots();
        init_random_weights(m, 10);
        TensorPlain x = TensorPlain::zeros(m.input, 2);
        Rng rng(11);
        for (auto& v : x.data) v = rng.uniform01();
        TensorPlain want = forward_plain(m, x);
        TensorEncrypted xe = encrypt_tensor(eng, ks.public_key, x, 1);
        TensorPlain got = decrypt_tensor(eng, ks.secret, forward_encrypted(m, xe, eng, keys, 2));
        CHECK(tensor_max_diff(got, want) < 1e-3);
    }

    SECTION("pool, pad, dense chain") {
        ModelSpec m = empty_model(Shape::spatial(4, 4, 2));
        m.layers = {LayerSpec::zero_pad2d(1), LayerSpec::avg_pool2d(2), LayerSpec::dense(3)};
        m.ensure_param_slots();
        init_random_weights(m, 12);
        TensorPlain x = TensorPlain::zeros(m.input, 3);
        Rng rng(13);
        for (auto& v : x.data) v = rng.uniform01() * 2 - 1;
        TensorPlain want = forward_plain(m, x);
        TensorEncrypted xe = encrypt_tensor(eng, ks.public_key, x, 3);
        TensorPlain got = decrypt_tensor(eng, ks.secret, forward_encrypted(m, xe, eng, keys, 4));
        CHECK(tensor_max_diff(got, want) < 1e-3);
    }

    SECTION("linearity of the encrypted conv") {
        ModelSpec m = empty_model(Shape::spatial(4, 4, 1));
        m.layers = {LayerSpec::conv2d(2, 3, 3)};
        m.ensure_param_slots();
        init_random_weights(m, 14);
        m.biases[0].assign(m.biases[0].size(), 0.0);  // keep it linear
        TensorPlain x = TensorPlain::zeros(m.input, 1);
        TensorPlain y = TensorPlain::zeros(m.input, 1);
        Rng rng(15);
        for (auto& v : x.data) v = rng.uniform01();
        for (auto& v : y.data) v = rng.uniform01();
        TensorPlain x2 = x;
        for (auto& v : x2.data) v *= 2.0;
        TensorPlain xy = x;
        for (std::size_t i = 0; i < xy.data.size(); ++i) xy.data[i] += y.data[i];

        // plain path: scaling and addition commute exactly
        TensorPlain fx = forward_plain(m, x);
        TensorPlain fy = forward_plain(m, y);
        TensorPlain fx2 = forward_plain(m, x2);
        TensorPlain fxy = forward_plain(m, xy);
        for (std::size_t i = 0; i < fx.data.size(); ++i) {
            CHECK(fx2.data[i] == Catch::Approx(2.0 * fx.data[i]).margin(1e-12));
            CHECK(fxy.data[i] == Catch::Approx(fx.data[i] + fy.data[i]).margin(1e-12));
        }

        // encrypted path: same identities within the noise tolerance
        TensorEncrypted xe = encrypt_tensor(eng, ks.public_key, x, 5);
        TensorEncrypted xe2 = encrypt_tensor(eng, ks.public_key, x2, 6);
        TensorEncrypted xye = encrypt_tensor(eng, ks.public_key, xy, 16);
        TensorEncrypted ye = encrypt_tensor(eng, ks.public_key, y, 17);
        TensorPlain g1 = decrypt_tensor(eng, ks.secret, forward_encrypted(m, xe, eng, keys, 7));
        TensorPlain g2 = decrypt_tensor(eng, ks.secret, forward_encrypted(m, xe2, eng, keys, 8));
        TensorPlain gy = decrypt_tensor(eng, ks.secret, forward_encrypted(m, ye, eng, keys, 18));
        TensorPlain gxy = decrypt_tensor(eng, ks.secret, forward_encrypted(m, xye, eng, keys, 19));
        for (std::size_t i = 0; i < g1.data.size(); ++i) {
            CHECK(std::abs(g2.data[i] - 2.0 * g1.data[i]) < 1e-3);
            CHECK(std::abs(gxy.data[i] - (g1.data[i] + gy.data[i])) < 1e-3);
        }
    }
}

TEST_CASE("forward_encrypted end to end") {
    CkksParams p = small_nn_params();
    CkksEngine eng(p);
    KeySet ks = eng.keygen(51);
    EvalKeys keys{ks.public_key, ks.eval};

    ModelSpec m = empty_model(Shape::spatial(4, 4, 2));
    m.activations[kDefaultSurrogateName] = relu_default_surrogate();
    m.layers = {LayerSpec::conv2d(3, 3, 3), LayerSpec::activation(kDefaultSurrogateName),
                LayerSpec::avg_pool2d(2), LayerSpec::dense(2)};
    m.ensure_param_slots();
    init_random_weights(m, 52);
    TensorPlain x = TensorPlain::zeros(m.input, 4);
    Rng rng(53);
    for (auto& v : x.data) v = rng.uniform01();

    SECTION("noisy and degenerate backends match the plain path") {
        TensorPlain want = forward_plain(m, x);
        TensorEncrypted xe = encrypt_tensor(eng, ks.public_key, x, 54);
        std::vector<double> secs;
        TensorPlain got = decrypt_tensor(eng, ks.secret, forward_encrypted(m, xe, eng, keys, 55, 1, &secs));
        CHECK(secs.size() == m.layers.size());
        CHECK(tensor_max_diff(got, want) < 1e-2);

        CkksParams pd = p;
        pd.degenerate_noise = true;
        CkksEngine engd(pd);
        KeySet ksd = engd.keygen(51);
        EvalKeys keysd{ksd.public_key, ksd.eval};
        TensorEncrypted xed = encrypt_tensor(engd, ksd.public_key, x, 54);
        TensorPlain gotd = decrypt_tensor(engd, ksd.secret, forward_encrypted(m, xed, engd, keysd, 55));
        CHECK(tensor_max_diff(gotd, want) < 0x1p-20);
    }

    SECTION("batch slot packing equals one-image-at-a-time runs") {
        TensorEncrypted xe = encrypt_tensor(eng, ks.public_key, x, 60);
        TensorPlain batch_out = decrypt_tensor(eng, ks.secret, forward_encrypted(m, xe, eng, keys, 61));
        for (std::size_t b = 0; b < x.batch; ++b) {
            TensorPlain single = TensorPlain::zeros(m.input, 1);
            for (std::size_t pos = 0; pos < m.input.positions(); ++pos) single.at(0, pos) = x.at(b, pos);
            TensorEncrypted se = encrypt_tensor(eng, ks.public_key, single, 70 + b);
            TensorPlain sout = decrypt_tensor(eng, ks.secret, forward_encrypted(m, se, eng, keys, 80 + b));
            for (std::size_t u = 0; u < sout.data.size(); ++u)
                CHECK(std::abs(sout.at(0, u) - batch_out.at(b, u)) < 1e-4);
        }
    }

    SECTION("multi-thread run is bit-identical to the single-thread run") {
        TensorEncrypted xe = encrypt_tensor(eng, ks.public_key, x, 90);
        TensorEncrypted y1 = forward_encrypted(m, xe, eng, keys, 91, 1);
        TensorEncrypted y4 = forward_encrypted(m, xe, eng, keys, 91, 4);
        REQUIRE(y1.cells.size() == y4.cells.size());
        for (std::size_t i = 0; i < y1.cells.size(); ++i) {
            CHECK(y1.cells[i].c0.rns == y4.cells[i].c0.rns);
            CHECK(y1.cells[i].c1.rns == y4.cells[i].c1.rns);
        }
    }

    SECTION("scale and level stay uniform and levels drop by the layer cost") {
        TensorEncrypted xe = encrypt_tensor(eng, ks.public_key, x, 95);
        std::size_t lvl = xe.level();
        TensorEncrypted cur = xe;
        ModelSpec partial = m;
        for (std::size_t li = 0; li < m.layers.size(); ++li) {
            partial.layers = {m.layers[li]};
            partial.input = cur.shape;
            partial.weights = {m.weights[li]};
            partial.biases = {m.biases[li]};
            cur = forward_encrypted(partial, cur, eng, keys, 96 + li);
            cur.check_uniform();
            std::size_t cost = m.layers[li].kind == LayerSpec::Kind::Activation ? 2
                               : m.layers[li].kind == LayerSpec::Kind::ZeroPad2d ? 0
                                                                                 : 1;
            CHECK(cur.level() == lvl - cost);
            lvl = cur.level();
        }
    }

    SECTION("depth exhaustion names the offending layer") {
        CkksParams shallow;
        shallow.ring = RingParams::create(1024, {60, 40, 40});
        shallow.scale = 0x1p40;
        CkksEngine es(shallow);
        KeySet kss = es.keygen(1);
        EvalKeys keyss{kss.public_key, kss.eval};
        TensorEncrypted xe = encrypt_tensor(es, kss.public_key, x, 97);
        try {
            forward_encrypted(m, xe, es, keyss, 98);
            FAIL("expected depth exhaustion");
        } catch (const std::invalid_argument& e) {
            CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
        }
    }

    SECTION("deterministic outputs for fixed seeds") {
        TensorEncrypted a = encrypt_tensor(eng, ks.public_key, x, 101);
        TensorEncrypted b = encrypt_tensor(eng, ks.public_key, x, 101);
        TensorEncrypted ya = forward_encrypted(m, a, eng, keys, 102);
        TensorEncrypted yb = forward_encrypted(m, b, eng, keys, 102);
        for (std::size_t i = 0; i < ya.cells.size(); ++i) {
            CHECK(ya.cells[i].c0.rns == yb.cells[i].c0.rns);
            CHECK(ya.cells[i].c1.rns == yb.cells[i].c1.rns);
        }
    }
}

TEST_CASE("random tiny models: encrypted backend matches plain") {
    CkksParams p = small_nn_params();
    CkksEngine eng(p);
    KeySet ks = eng.keygen(71);
    EvalKeys keys{ks.public_key, ks.eval};
    for (u64 seed : {1001ull, 1002ull, 1003ull}) {
        test::TinyModelCase c = test::random_tiny_model(seed);
        REQUIRE(depth_cost(c.model) <= eng.depth_budget());
        TensorPlain want = forward_plain(c.model, c.input);
        TensorEncrypted xe = encrypt_tensor(eng, ks.public_key, c.input, seed);
        TensorPlain got = decrypt_tensor(eng, ks.secret, forward_encrypted(c.model, xe, eng, keys, seed + 1));
        INFO("model seed " << seed << " layers " << c.model.layers.size());
        CHECK(tensor_max_diff(got, want) < 1e-2);
    }
}
