// Minimal walk through the scheme: encode a vector, encrypt it, square it
// homomorphically, and compare the decrypted result with plaintext math.

#include <cstdio>

#include "hecnn/presets.hpp"

using namespace hecnn;

int main() {
    CkksParams params = preset_params("test-n4096-d4");
    CkksEngine engine(params);
    KeySet keys = engine.keygen(/*seed=*/1);

    std::vector<double> values = {0.5, -1.25, 3.0, 0.125};
    EncodedPlaintext pt = engine.encode_real(values, params.scale, engine.top_level());
    Ciphertext ct = engine.encrypt(keys.public_key, pt, /*seed=*/2);

    Ciphertext sq = engine.square(ct, keys.eval);
    PlaintextVector out = engine.decode(engine.decrypt(keys.secret, sq));

    std::printf("%-10s %-14s %-14s\n", "x", "x^2", "decrypted");
    for (std::size_t i = 0; i < values.size(); ++i)
        std::printf("%-10.4f %-14.8f %-14.8f\n", values[i], values[i] * values[i], out[i].real());
    std::printf("depth budget: %zu, level after square: %u\n", engine.depth_budget(), sq.level);
    return 0;
}
