// Run the same small conv net over plaintext tensors and over CKKS-encrypted
// tensors (batch packed into slots), then compare the logits.

#include <cstdio>

#include "hecnn/model_io.hpp"
#include "hecnn/presets.hpp"
#include "hecnn/synthetic.hpp"

using namespace hecnn;

int main() {
    CkksParams params = preset_params("nn-n4096-d8");
    CkksEngine engine(params);
    KeySet keys = engine.keygen(7);
    EvalKeys eval_keys{keys.public_key, keys.eval};

    ModelSpec model = tiny_preset();
    init_random_weights(model, 3);

    Dataset data = gen_synthetic({.count = 4, .image = 8, .seed = 5});
    TensorPlain batch = data.images;

    TensorPlain plain_logits = forward_plain(model, batch);

    TensorEncrypted enc = encrypt_tensor(engine, keys.public_key, batch, /*seed=*/11);
    TensorEncrypted enc_out = forward_encrypted(model, enc, engine, eval_keys, /*seed=*/13);
    TensorPlain dec_logits = decrypt_tensor(engine, keys.secret, enc_out);

    std::printf("%-6s %-6s %-16s %-16s %-10s\n", "image", "label", "plain logit", "encrypted logit", "delta");
    for (std::size_t i = 0; i < batch.batch; ++i) {
        double a = plain_logits.at(i, 0), b = dec_logits.at(i, 0);
        std::printf("%-6zu %-6d %-16.8f %-16.8f %-10.2e\n", i, static_cast<int>(data.labels[i]), a, b,
                    std::abs(a - b));
    }
    return 0;
}
