#pragma once

// Boolean circuits over abstract encrypted bits: gate DAG construction
// (every wire written once, gates reference earlier wires only), exact
// evaluation, and the ripple-carry adder / shift-and-add multiplier
// builders whose gate counts are closed-form in the bit width.

#include <ostream>

#include "hecnn/fixed_point.hpp"

namespace hecnn {

enum class GateKind : u8 { Xor = 0, And = 1, Or = 2, Not = 3 };

inline const char* gate_name(GateKind k) {
    switch (k) {
        case GateKind::Xor: return "XOR";
        case GateKind::And: return "AND";
        case GateKind::Or: return "OR";
        case GateKind::Not: return "NOT";
    }
    return "?";
}

struct GateNode {
    GateKind kind;
    u32 a = 0, b = 0;  // input wire ids; b unused for NOT
};

struct Circuit {
    u32 num_inputs = 0;
    std::vector<GateNode> gates;  // gate i writes wire num_inputs + i
    std::vector<u32> outputs;

    std::size_t wire_count() const { return num_inputs + gates.size(); }
    std::size_t gate_count() const { return gates.size(); }

    // Structural invariants: SSA wires, acyclic by construction, outputs present.
    void validate() const {
        for (std::size_t i = 0; i < gates.size(); ++i) {
            u32 wire = num_inputs + static_cast<u32>(i);
            if (gates[i].a >= wire || (gates[i].kind != GateKind::Not && gates[i].b >= wire))
                throw std::invalid_argument("circuit: gate reads a later wire (cycle)");
        }
        for (u32 o : outputs)
            if (o >= wire_count()) throw std::invalid_argument("circuit: dangling output wire");
    }
};

class CircuitBuilder {
public:
    u32 input() { return num_inputs_++; }
    std::vector<u32> inputs(std::size_t k) {
        std::vector<u32> v(k);
        for (auto& w : v) w = input();
        return v;
    }

    u32 gate(GateKind kind, u32 a, u32 b = 0) {
        gates_.push_back({kind, a, b});
        return num_inputs_ + static_cast<u32>(gates_.size()) - 1;
    }
    u32 xor_(u32 a, u32 b) { return gate(GateKind::Xor, a, b); }
    u32 and_(u32 a, u32 b) { return gate(GateKind::And, a, b); }
    u32 or_(u32 a, u32 b) { return gate(GateKind::Or, a, b); }
    u32 not_(u32 a) { return gate(GateKind::Not, a); }

    Circuit finish(std::vector<u32> outputs) {
        Circuit c{num_inputs_, std::move(gates_), std::move(outputs)};
        c.validate();
        return c;
    }

    // Ripple-carry addition, b may be up to one bit narrower than a: a half
    // adder at bit 0 (2 gates), a full adder (2 XOR + 2 AND + 1 OR) per bit
    // where both operands exist, and a carry-propagation half adder where
    // only a's bit remains. Returns sum bits (width of a) and the carry-out.
    std::pair<std::vector<u32>, u32> ripple_add(const std::vector<u32>& a, const std::vector<u32>& b) {
        if (b.size() > a.size() || a.size() - b.size() > 1 || b.empty())
            throw std::invalid_argument("ripple_add: width mismatch");
        std::vector<u32> sum(a.size());
        sum[0] = xor_(a[0], b[0]);
        u32 carry = and_(a[0], b[0]);
        for (std::size_t i = 1; i < a.size(); ++i) {
            if (i < b.size()) {
                u32 axb = xor_(a[i], b[i]);
                sum[i] = xor_(axb, carry);
                u32 g = and_(a[i], b[i]);
                u32 p = and_(carry, axb);
                carry = or_(g, p);
            } else {
                u32 s = xor_(a[i], carry);
                carry = and_(a[i], carry);
                sum[i] = s;
            }
        }
        return {sum, carry};
    }

private:
    u32 num_inputs_ = 0;
    std::vector<GateNode> gates_;
};

// Inputs: a[0..k) then b[0..k), LSB first. Outputs: k sum bits then the
// carry. Gate count is 5k - 3.
inline Circuit build_adder(std::size_t k) {
    if (k == 0) throw std::invalid_argument("build_adder: k must be >= 1");
    CircuitBuilder cb;
    auto a = cb.inputs(k);
    auto b = cb.inputs(k);
    auto [sum, carry] = cb.ripple_add(a, b);
    sum.push_back(carry);
    return cb.finish(std::move(sum));
}

// Shift-and-add multiplier: k^2 AND partial products combined by k-1
// ripple-carry adders. Inputs as in build_adder; outputs the full 2k-bit
// product of the unsigned operands (for k = 1 the product is the single
// AND bit). Gate count: k^2 + (5k-6) + (k-2)(5k-3) for k >= 2.
inline Circuit build_multiplier(std::size_t k) {
    if (k == 0) throw std::invalid_argument("build_multiplier: k must be >= 1");
    CircuitBuilder cb;
    auto a = cb.inputs(k);
    auto b = cb.inputs(k);

    auto partial_row = [&](std::size_t i) {
        std::vector<u32> row(k);
        for (std::size_t j = 0; j < k; ++j) row[j] = cb.and_(a[j], b[i]);
        return row;
    };

    // Running high part H: after row i, the emitted low bits plus
    // H * 2^{i+1} equal the partial-product prefix sum.
    std::vector<u32> out;
    std::vector<u32> row0 = partial_row(0);
    out.push_back(row0[0]);
    std::vector<u32> high(row0.begin() + 1, row0.end());  // k-1 bits; k bits after the first add
    for (std::size_t i = 1; i < k; ++i) {
        auto [sum, carry] = cb.ripple_add(partial_row(i), high);
        out.push_back(sum[0]);
        high.assign(sum.begin() + 1, sum.end());
        high.push_back(carry);
    }
    if (k > 1) out.insert(out.end(), high.begin(), high.end());
    return cb.finish(std::move(out));
}

// Topological evaluation over explicit bits; pure.
inline BitVec evaluate(const Circuit& c, const BitVec& inputs) {
    if (inputs.size() != c.num_inputs) throw std::invalid_argument("evaluate: input length mismatch");
    std::vector<u8> wires(c.wire_count());
    std::copy(inputs.begin(), inputs.end(), wires.begin());
    for (std::size_t i = 0; i < c.gates.size(); ++i) {
        const GateNode& g = c.gates[i];
        u8 a = wires[g.a];
        u8 b = wires[g.b];
        u8 v = 0;
        switch (g.kind) {
            case GateKind::Xor: v = a ^ b; break;
            case GateKind::And: v = a & b; break;
            case GateKind::Or: v = a | b; break;
            case GateKind::Not: v = a ^ 1; break;
        }
        wires[c.num_inputs + i] = v;
    }
    BitVec out(c.outputs.size());
    for (std::size_t i = 0; i < c.outputs.size(); ++i) out[i] = wires[c.outputs[i]];
    return out;
}

// m disjoint copies of a circuit (copy-major input/output concatenation):
// the batch shape that exposes the available gate-level parallelism.
inline Circuit parallel_copies(const Circuit& c, std::size_t m) {
    if (m == 0) throw std::invalid_argument("parallel_copies: m must be >= 1");
    Circuit out;
    out.num_inputs = static_cast<u32>(c.num_inputs * m);
    out.gates.reserve(c.gates.size() * m);
    out.outputs.reserve(c.outputs.size() * m);
    for (std::size_t copy = 0; copy < m; ++copy) {
        u32 in_off = static_cast<u32>(copy * c.num_inputs);
        u32 gate_off = out.num_inputs + static_cast<u32>(copy * c.gates.size());
        auto remap = [&](u32 w) {
            return w < c.num_inputs ? in_off + w : gate_off + (w - c.num_inputs);
        };
        for (const GateNode& g : c.gates) out.gates.push_back({g.kind, remap(g.a), remap(g.b)});
        for (u32 o : c.outputs) out.outputs.push_back(remap(o));
    }
    out.validate();
    return out;
}

// Gate-list text export, one gate per line: wire id, kind, input ids.
inline void write_circuit(std::ostream& os, const Circuit& c) {
    os << "inputs " << c.num_inputs << "\n";
    for (std::size_t i = 0; i < c.gates.size(); ++i) {
        const GateNode& g = c.gates[i];
        os << (c.num_inputs + i) << " " << gate_name(g.kind) << " " << g.a;
        if (g.kind != GateKind::Not) os << " " << g.b;
        os << "\n";
    }
    os << "outputs";
    for (u32 o : c.outputs) os << " " << o;
    os << "\n";
}

// ---- fixed-point helpers over circuits ----

inline BitVec concat_bits(const BitVec& a, const BitVec& b) {
    BitVec out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

// Two's-complement fixed-point addition through the adder circuit: feed both
// encodings, keep the low k sum bits (the carry-out is discarded, which is
// exactly two's-complement wraparound).
inline double fixed_add_via_circuit(const Circuit& adder, const FixedPointCodec& codec, double x, double y) {
    BitVec bits = evaluate(adder, concat_bits(codec.encode(x), codec.encode(y)));
    bits.resize(codec.total_bits);
    return codec.decode(bits);
}

}  // namespace hecnn
