#include <catch2/catch_amalgamated.hpp>

#include "hecnn/ring.hpp"
#include "support/oracles.hpp"

using namespace hecnn;

namespace {

RingContext toy_ctx() {
    RingParams rp;
    rp.n = 8;
    rp.primes = {17};  // 17 == 1 (mod 16)
    rp.finalize();
    return RingContext(rp);
}

RingPoly random_poly(const RingContext& ctx, std::size_t level, u64 seed) {
    return sample_poly(ctx, SampleKind::Uniform, {.level = level}, seed);
}

bool poly_equal(const RingPoly& a, const RingPoly& b) {
    return a.level == b.level && a.rep == b.rep && a.rns == b.rns;
}

}  // namespace

TEST_CASE("ring params validation") {
    CHECK_THROWS_AS(RingParams::create(6, {40}), std::invalid_argument);   // not a power of two
    CHECK_THROWS_AS(RingParams::create(4, {40}), std::invalid_argument);   // below minimum degree
    RingParams rp;
    rp.n = 8;
    rp.primes = {};
    CHECK_THROWS_AS(rp.validate(), std::invalid_argument);
    rp.primes = {15};  // not prime
    CHECK_THROWS_AS(rp.finalize(), std::invalid_argument);
    rp.primes = {17, 17};
    CHECK_THROWS_AS(rp.finalize(), std::invalid_argument);

    RingParams ok = RingParams::create(8, {30, 20});
    CHECK(ok.chain_length() == 2);
    CHECK(ok.top_level() == 1);
    for (std::size_t i = 0; i < ok.primes.size(); ++i) {
        CHECK(is_prime_u64(ok.primes[i]));
        CHECK(ok.primes[i] % 16 == 1);
        CHECK(ok.ntt_friendly[i]);
    }
}

TEST_CASE("poly_add identities and oracle") {
    RingContext ctx = toy_ctx();
    RingPoly zero = make_zero_poly(ctx, 0);
    Rng rng(1);
    for (int t = 0; t < 50; ++t) {
        RingPoly a = random_poly(ctx, 0, rng.next());
        RingPoly b = random_poly(ctx, 0, rng.next());

        CHECK(poly_equal(poly_add(ctx, a, zero), a));               // additive identity
        CHECK(poly_add(ctx, a, poly_neg(ctx, a)).is_zero());        // additive inverse

        RingPoly sum = poly_add(ctx, a, b);
        for (std::size_t j = 0; j < 8; ++j)
            CHECK(sum.rns[0][j] == (a.rns[0][j] + b.rns[0][j]) % 17);  // schoolbook mod-17 vector add
    }
}

TEST_CASE("poly_add error cases") {
    RingParams rp = RingParams::create(8, {30, 20});
    RingContext ctx(rp);
    RingPoly a = random_poly(ctx, 1, 1);
    RingPoly b = random_poly(ctx, 0, 2);
    CHECK_THROWS_AS(poly_add(ctx, a, b), std::invalid_argument);  // level mismatch

    RingContext ctx16(RingParams::create(16, {30}));
    RingPoly c = random_poly(ctx16, 0, 3);
    RingPoly d = random_poly(ctx, 0, 4);
    CHECK_THROWS_AS(poly_add(ctx, d, c), std::invalid_argument);  // degree mismatch

    RingPoly e = ntt_transform(ctx, random_poly(ctx, 0, 5), NttDirection::Forward);
    CHECK_THROWS_AS(poly_add(ctx, e, random_poly(ctx, 0, 6)), std::invalid_argument);  // rep mismatch
}

TEST_CASE("negacyclic multiplication identities") {
    RingContext ctx = toy_ctx();
    Rng rng(2);
    RingPoly one = make_constant_poly(ctx, 0, 1);
    RingPoly a = random_poly(ctx, 0, rng.next());
    CHECK(poly_equal(poly_negacyclic_mul(ctx, a, one), a));  // multiplicative identity

    // X^{n/2} * X^{n/2} == -1 (negacyclic wrap)
    RingPoly xh = make_zero_poly(ctx, 0);
    xh.rns[0][4] = 1;
    RingPoly sq = poly_negacyclic_mul(ctx, xh, xh);
    CHECK(sq.rns[0][0] == 16);  // q - 1
    for (std::size_t j = 1; j < 8; ++j) CHECK(sq.rns[0][j] == 0);
}

TEST_CASE("negacyclic multiplication against the schoolbook oracle") {
    RingContext ctx = toy_ctx();
    Rng rng(3);
    for (int t = 0; t < 100; ++t) {
        RingPoly a = random_poly(ctx, 0, rng.next());
        RingPoly b = random_poly(ctx, 0, rng.next());
        RingPoly got = poly_negacyclic_mul(ctx, a, b);
        std::vector<u64> want = test::naive_negacyclic(a.rns[0], b.rns[0], 17);
        CHECK(got.rns[0] == want);
    }
}

TEST_CASE("ntt and schoolbook paths agree bit-exactly") {
    Rng rng(4);
    for (std::size_t n : {8u, 16u, 32u}) {
        RingParams rp = RingParams::create(n, {40, 30});
        RingContext ctx(rp);
        for (int t = 0; t < 100; ++t) {
            RingPoly a = random_poly(ctx, 1, rng.next());
            RingPoly b = random_poly(ctx, 1, rng.next());
            RingPoly ntt_path = poly_negacyclic_mul(ctx, a, b);
            RingPoly school = detail::schoolbook_negacyclic(ctx, a, b);
            REQUIRE(poly_equal(ntt_path, school));
            for (std::size_t i = 0; i <= 1; ++i)
                REQUIRE(ntt_path.rns[i] == test::naive_negacyclic(a.rns[i], b.rns[i], ctx.prime(i)));
        }
    }
}

TEST_CASE("ntt transform round trip and properties") {
    RingParams rp = RingParams::create(32, {40, 30});
    RingContext ctx(rp);
    Rng rng(5);
    for (int t = 0; t < 25; ++t) {
        RingPoly a = random_poly(ctx, 1, rng.next());
        RingPoly f = ntt_transform(ctx, a, NttDirection::Forward);
        CHECK(f.rep == Rep::Ntt);
        RingPoly back = ntt_transform(ctx, f, NttDirection::Inverse);
        CHECK(poly_equal(back, a));  // bit-exact round trip
    }
    CHECK(ntt_transform(ctx, make_zero_poly(ctx, 1), NttDirection::Forward).is_zero());

    // pointwise product in the NTT domain equals the coefficient-domain product
    RingContext toy = toy_ctx();
    for (int t = 0; t < 20; ++t) {
        RingPoly a = random_poly(toy, 0, rng.next());
        RingPoly b = random_poly(toy, 0, rng.next());
        RingPoly fa = ntt_transform(toy, a, NttDirection::Forward);
        RingPoly fb = ntt_transform(toy, b, NttDirection::Forward);
        RingPoly prod = ntt_transform(toy, poly_pointwise_mul(toy, fa, fb), NttDirection::Inverse);
        CHECK(prod.rns[0] == test::naive_negacyclic(a.rns[0], b.rns[0], 17));
    }

    // forcing the NTT path on an unfriendly modulus fails
    RingParams bad;
    bad.n = 8;
    bad.primes = {19};  // 19 != 1 (mod 16)
    bad.finalize();
    RingContext bctx(bad);
    CHECK_FALSE(bad.ntt_friendly[0]);
    RingPoly a = random_poly(bctx, 0, 7);
    CHECK_THROWS_AS(ntt_transform(bctx, a, NttDirection::Forward), std::invalid_argument);
    // but coefficient-domain multiplication still works via schoolbook
    RingPoly one = make_constant_poly(bctx, 0, 1);
    CHECK(poly_equal(poly_negacyclic_mul(bctx, a, one), a));
}

TEST_CASE("ring laws hold exactly") {
    for (auto bits : std::vector<std::vector<int>>{{30}, {40, 30}}) {
        RingParams rp = RingParams::create(16, bits);
        RingContext ctx(rp);
        Rng rng(6);
        std::size_t top = rp.top_level();
        for (int t = 0; t < 40; ++t) {
            RingPoly a = random_poly(ctx, top, rng.next());
            RingPoly b = random_poly(ctx, top, rng.next());
            RingPoly c = random_poly(ctx, top, rng.next());
            CHECK(poly_equal(poly_add(ctx, a, b), poly_add(ctx, b, a)));
            CHECK(poly_equal(poly_add(ctx, poly_add(ctx, a, b), c), poly_add(ctx, a, poly_add(ctx, b, c))));
            CHECK(poly_equal(poly_negacyclic_mul(ctx, a, b), poly_negacyclic_mul(ctx, b, a)));
            CHECK(poly_equal(poly_negacyclic_mul(ctx, poly_negacyclic_mul(ctx, a, b), c),
                             poly_negacyclic_mul(ctx, a, poly_negacyclic_mul(ctx, b, c))));
            CHECK(poly_equal(poly_negacyclic_mul(ctx, a, poly_add(ctx, b, c)),
                             poly_add(ctx, poly_negacyclic_mul(ctx, a, b), poly_negacyclic_mul(ctx, a, c))));
        }
    }
}

TEST_CASE("multiplying by X^k rotates with sign flip") {
    RingContext ctx = toy_ctx();
    Rng rng(7);
    RingPoly a = random_poly(ctx, 0, rng.next());
    for (std::size_t k = 0; k < 16; ++k) {
        RingPoly xk = make_zero_poly(ctx, 0);
        if (k < 8)
            xk.rns[0][k] = 1;
        else
            xk.rns[0][k - 8] = 16;  // X^8 == -1
        RingPoly got = poly_negacyclic_mul(ctx, a, xk);
        for (std::size_t j = 0; j < 8; ++j) {
            std::size_t src = (j + 16 - (k % 16)) % 16;
            u64 want = src < 8 ? a.rns[0][src] : (17 - a.rns[0][src - 8]) % 17;
            CHECK(got.rns[0][j] == want);
        }
    }
}

TEST_CASE("samplers are deterministic and well-shaped") {
    RingParams rp = RingParams::create(512, {40, 30});
    RingContext ctx(rp);

    for (auto kind : {SampleKind::Uniform, SampleKind::Ternary, SampleKind::Gaussian}) {
        SampleParams sp{.level = 1, .sigma = 3.2};
        RingPoly a = sample_poly(ctx, kind, sp, 12345);
        RingPoly b = sample_poly(ctx, kind, sp, 12345);
        CHECK(poly_equal(a, b));  // same seed, same draw
        RingPoly c = sample_poly(ctx, kind, sp, 54321);
        CHECK_FALSE(poly_equal(a, c));
    }

    SECTION("ternary support") {
        RingPoly t = sample_poly(ctx, SampleKind::Ternary, {.level = 1}, 9);
        for (std::size_t i = 0; i <= 1; ++i) {
            u64 q = ctx.prime(i);
            for (u64 v : t.rns[i]) CHECK((v == 0 || v == 1 || v == q - 1));
        }
    }

    SECTION("gaussian moments") {
        // 10^4 draws across several polys
        std::vector<double> draws;
        for (u64 s = 0; s < 20; ++s) {
            RingPoly g = sample_poly(ctx, SampleKind::Gaussian, {.level = 0, .sigma = 3.2}, 1000 + s);
            u64 q = ctx.prime(0);
            for (u64 v : g.rns[0]) draws.push_back(v > q / 2 ? -static_cast<double>(q - v) : static_cast<double>(v));
        }
        REQUIRE(draws.size() >= 10000);
        double mean = 0;
        for (double d : draws) mean += d;
        mean /= static_cast<double>(draws.size());
        double var = 0;
        for (double d : draws) var += (d - mean) * (d - mean);
        double sd = std::sqrt(var / static_cast<double>(draws.size()));
        CHECK(std::abs(mean) < 0.2);
        CHECK(std::abs(sd - 3.2) < 0.15 * 3.2);
        double bound = std::llround(6.0 * 3.2);
        for (double d : draws) CHECK(std::abs(d) <= bound);
    }

    SECTION("error cases") {
        CHECK_THROWS_AS(sample_poly(ctx, SampleKind::Gaussian, {.level = 0, .sigma = 0.0}, 1),
                        std::invalid_argument);
        CHECK_THROWS_AS(parse_sample_kind("cauchy"), std::invalid_argument);
        CHECK(parse_sample_kind("uniform") == SampleKind::Uniform);
        CHECK(parse_sample_kind("ternary") == SampleKind::Ternary);
        CHECK(parse_sample_kind("gaussian") == SampleKind::Gaussian);
    }
}

TEST_CASE("rescale divides by the dropped prime with rounding") {
    RingParams rp = RingParams::create(16, {50, 30, 30});
    RingContext ctx(rp);
    u64 p = rp.primes[2];

    SECTION("zero stays zero") {
        RingPoly z = rescale_poly(ctx, make_zero_poly(ctx, 2));
        CHECK(z.level == 1);
        CHECK(z.is_zero());
    }

    SECTION("exact multiples divide exactly") {
        for (i64 k : {1, 2, 5, -3, 1000}) {
            RingPoly c = make_zero_poly(ctx, 2);
            for (std::size_t i = 0; i < 2; ++i)
                c.rns[i][3] = ctx.mod(i).mul(p % ctx.prime(i), ctx.mod(i).reduce_i64(k));
            c.rns[2][3] = 0;  // p*k == 0 (mod p)
            RingPoly r = rescale_poly(ctx, c);
            for (std::size_t i = 0; i < 2; ++i) CHECK(r.rns[i][3] == ctx.mod(i).reduce_i64(k));
        }
    }

    SECTION("random coefficients land within 1 of the rational quotient") {
        // 2-prime chain so the oracle can reconstruct exactly in 128 bits
        RingParams rp2 = RingParams::create(8, {40, 30});
        RingContext ctx2(rp2);
        u64 q0 = rp2.primes[0], p1 = rp2.primes[1];
        Rng rng(11);
        for (int t = 0; t < 50; ++t) {
            RingPoly a = random_poly(ctx2, 1, rng.next());
            RingPoly r = rescale_poly(ctx2, a);
            for (std::size_t j = 0; j < 8; ++j) {
                // CRT reconstruct the original value
                u128 Q = static_cast<u128>(q0) * p1;
                // x = a0 + q0 * t where t = (a1 - a0) * q0^{-1} mod p1
                Modulus mp(p1);
                u64 t1 = mp.mul(mp.sub(a.rns[1][j] % p1, a.rns[0][j] % p1), mp.inv(q0 % p1));
                u128 x = static_cast<u128>(a.rns[0][j]) + static_cast<u128>(q0) * t1;
                REQUIRE(x < Q);
                long double val = x > Q / 2 ? -static_cast<long double>(Q - x) : static_cast<long double>(x);
                long double quot = val / static_cast<long double>(p1);
                u64 got = r.rns[0][j];
                long double got_signed = got > q0 / 2 ? -static_cast<long double>(q0 - got)
                                                      : static_cast<long double>(got);
                CHECK(std::abs(got_signed - quot) <= 1.0L);
            }
        }
    }

    SECTION("already at last level") {
        CHECK_THROWS_AS(rescale_poly(ctx, make_zero_poly(ctx, 0)), std::invalid_argument);
    }
}

TEST_CASE("crt reconstruction is exact for small signed values") {
    RingParams rp = RingParams::create(8, {50, 40, 30});
    RingContext ctx(rp);
    for (i64 v : {0ll, 1ll, -1ll, 123456789ll, -987654321ll, (1ll << 52)}) {
        RingPoly c = make_constant_poly(ctx, 2, v);
        CHECK(reconstruct_centered(ctx, c, 0) == static_cast<long double>(v));
    }
}
