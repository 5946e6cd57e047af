#pragma once

// HE-friendly polynomial activation surrogates. The construction fits the
// activation's *derivative* in least squares on an interval and integrates
// the fit, which pins the surrogate's shape where the gradient matters.
// For ReLU (derivative = unit step) at degree 1 on [-B, B] the continuous
// projection is  1/2 + 3x/(4B), so the integrated surrogate is
// x/2 + 3x^2/(8B).

#include <functional>
#include <map>
#include <nlohmann/json.hpp>

#include "hecnn/ckks.hpp"
#include "hecnn/io_util.hpp"

namespace hecnn {

// Quadratic term of the reference degree-2 ReLU surrogate; the default fit
// interval is recovered from it by inverting 3/(8B).
inline constexpr double kReluQuadCoeff = 0.000469841857369822;
inline double default_relu_interval() { return 3.0 / (8.0 * kReluQuadCoeff); }

struct PolyActivation {
    std::vector<double> coefficients;  // ascending degree
    double interval_bound = 0.0;       // fitted on [-B, B]
    std::string source;                // activation this stands in for

    std::size_t degree() const { return coefficients.empty() ? 0 : coefficients.size() - 1; }

    // One squaring chain plus one plaintext multiply per term.
    std::size_t encrypted_depth() const {
        std::size_t d = degree();
        std::size_t lg = 0;
        while ((std::size_t(1) << lg) < d) ++lg;
        return lg + 1;
    }

    void validate() const {
        if (degree() < 1) throw std::invalid_argument("PolyActivation: degree must be >= 1");
        for (double c : coefficients)
            if (!std::isfinite(c)) throw std::invalid_argument("PolyActivation: non-finite coefficient");
        if (!(interval_bound > 0)) throw std::invalid_argument("PolyActivation: interval bound must be > 0");
    }
};

inline PolyActivation relu_default_surrogate() {
    return PolyActivation{{0.0, 0.5, kReluQuadCoeff}, default_relu_interval(), "relu"};
}

struct FitSpec {
    std::string target;          // derivative to fit: step | sigmoid-derivative | tanh-derivative
    double interval_bound = 0.0; // B
    std::size_t degree = 1;      // fit degree (surrogate degree - 1)
    std::size_t grid_size = 100000;

    void validate() const {
        if (!(interval_bound > 0) || !std::isfinite(interval_bound))
            throw std::invalid_argument("FitSpec: degenerate interval");
        if (grid_size < 10 * (degree + 1))
            throw std::invalid_argument("FitSpec: grid size must be >= 10*(degree+1)");
    }
};

inline std::function<double(double)> derivative_target(const std::string& name) {
    if (name == "step") return [](double x) { return x > 0 ? 1.0 : (x < 0 ? 0.0 : 0.5); };
    if (name == "sigmoid-derivative")
        return [](double x) {
            double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 - s);
        };
    if (name == "tanh-derivative")
        return [](double x) {
            double t = std::tanh(x);
            return 1.0 - t * t;
        };
    throw std::invalid_argument("unknown derivative target: " + name);
}

// Derivative target for an activation by name.
inline std::string derivative_for_activation(const std::string& activation) {
    if (activation == "relu") return "step";
    if (activation == "sigmoid") return "sigmoid-derivative";
    if (activation == "tanh") return "tanh-derivative";
    throw std::invalid_argument("unknown activation: " + activation);
}

inline double eval_poly(const std::vector<double>& coeffs, double x) {
    double acc = 0.0;
    for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs[i];
    return acc;
}

namespace detail {

// Monomial coefficients (in t) of the Legendre polynomials P_0..P_d.
inline std::vector<std::vector<double>> legendre_basis(std::size_t d) {
    std::vector<std::vector<double>> P(d + 1);
    P[0] = {1.0};
    if (d >= 1) P[1] = {0.0, 1.0};
    for (std::size_t k = 1; k < d; ++k) {
        // (k+1) P_{k+1} = (2k+1) t P_k - k P_{k-1}
        std::vector<double> next(k + 2, 0.0);
        for (std::size_t j = 0; j < P[k].size(); ++j) next[j + 1] += (2.0 * k + 1.0) * P[k][j];
        for (std::size_t j = 0; j < P[k - 1].size(); ++j) next[j] -= static_cast<double>(k) * P[k - 1][j];
        for (auto& c : next) c /= static_cast<double>(k + 1);
        P[k + 1] = std::move(next);
    }
    return P;
}

inline std::vector<double> solve_spd(std::vector<std::vector<double>> A, std::vector<double> b) {
    std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
        std::swap(A[piv], A[col]);
        std::swap(b[piv], b[col]);
        if (A[col][col] == 0.0) throw std::runtime_error("fit: singular normal equations");
        for (std::size_t r = col + 1; r < n; ++r) {
            double f = A[r][col] / A[col][col];
            for (std::size_t c = col; c < n; ++c) A[r][c] -= f * A[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t r = n; r-- > 0;) {
        double s = b[r];
        for (std::size_t c = r + 1; c < n; ++c) s -= A[r][c] * x[c];
        x[r] = s / A[r][r];
    }
    return x;
}

}  // namespace detail

// Least-squares projection of an arbitrary target onto polynomials of the
// given degree over [-B, B]. Solved in the (shifted) Legendre basis on a
// symmetric midpoint grid, then converted to monomial coefficients.
inline std::vector<double> fit_function(const std::function<double(double)>& f, double B, std::size_t d,
                                        std::size_t N) {
    double h = 2.0 * B / static_cast<double>(N);

    auto basis = detail::legendre_basis(d);
    std::vector<std::vector<double>> gram(d + 1, std::vector<double>(d + 1, 0.0));
    std::vector<double> rhs(d + 1, 0.0);
    std::vector<double> pk(d + 1);
    for (std::size_t i = 0; i < N; ++i) {
        double x = -B + (static_cast<double>(i) + 0.5) * h;
        double t = x / B;
        for (std::size_t k = 0; k <= d; ++k) pk[k] = eval_poly(basis[k], t);
        double y = f(x);
        for (std::size_t k = 0; k <= d; ++k) {
            rhs[k] += pk[k] * y;
            for (std::size_t l = k; l <= d; ++l) gram[k][l] += pk[k] * pk[l];
        }
    }
    for (std::size_t k = 0; k <= d; ++k)
        for (std::size_t l = 0; l < k; ++l) gram[k][l] = gram[l][k];

    std::vector<double> leg = detail::solve_spd(std::move(gram), std::move(rhs));

    std::vector<double> mono(d + 1, 0.0);
    for (std::size_t k = 0; k <= d; ++k)
        for (std::size_t j = 0; j < basis[k].size(); ++j) mono[j] += leg[k] * basis[k][j];
    double bpow = 1.0;
    for (std::size_t j = 0; j <= d; ++j) {
        mono[j] /= bpow;  // rescale t = x/B back to x
        bpow *= B;
    }
    return mono;
}

inline std::vector<double> fit_derivative(const FitSpec& spec) {
    spec.validate();
    return fit_function(derivative_target(spec.target), spec.interval_bound, spec.degree, spec.grid_size);
}

// Squared L2 error of a candidate polynomial against the target on the same
// midpoint grid the fit uses.
inline double fit_grid_l2(const std::function<double(double)>& f, const std::vector<double>& coeffs,
                          double B, std::size_t N) {
    double h = 2.0 * B / static_cast<double>(N);
    double acc = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        double x = -B + (static_cast<double>(i) + 0.5) * h;
        double r = eval_poly(coeffs, x) - f(x);
        acc += r * r;
    }
    return acc;
}

// Antiderivative with integration constant 0, so the surrogate fixes
// surrogate(0) = 0.
inline std::vector<double> integrate_coefficients(const std::vector<double>& c) {
    std::vector<double> out(c.size() + 1, 0.0);
    for (std::size_t k = 0; k < c.size(); ++k) out[k + 1] = c[k] / static_cast<double>(k + 1);
    return out;
}

inline std::vector<double> differentiate_coefficients(const std::vector<double>& c) {
    if (c.size() <= 1) return {0.0};
    std::vector<double> out(c.size() - 1);
    for (std::size_t k = 1; k < c.size(); ++k) out[k - 1] = c[k] * static_cast<double>(k);
    return out;
}

// Fit the derivative of `activation` at surrogate degree `degree` and
// integrate. degree is the surrogate's degree (>= 1).
inline PolyActivation make_surrogate(const std::string& activation, std::size_t degree,
                                     double interval_bound, std::size_t grid_size = 100000) {
    if (degree < 1) throw std::invalid_argument("make_surrogate: degree must be >= 1");
    FitSpec spec{derivative_for_activation(activation), interval_bound, degree - 1, grid_size};
    PolyActivation act;
    act.coefficients = integrate_coefficients(fit_derivative(spec));
    act.interval_bound = interval_bound;
    act.source = activation;
    act.validate();
    return act;
}

inline double eval_plain(const PolyActivation& act, double x) { return eval_poly(act.coefficients, x); }

// Encrypted evaluation via an explicit power basis: the squaring chain costs
// ceil(log2 d) levels and each term one plaintext multiply, so the whole
// evaluation consumes encrypted_depth() levels regardless of coefficients.
inline Ciphertext eval_encrypted(const PolyActivation& act, const Ciphertext& x,
                                 const CkksEngine& eng, const EvaluationKey& evk) {
    act.validate();
    std::size_t d = act.degree();
    std::size_t depth = act.encrypted_depth();
    if (x.level < depth) throw std::invalid_argument("eval_encrypted: insufficient depth budget");

    std::map<std::size_t, Ciphertext> powers;
    powers.emplace(1, x);
    std::function<const Ciphertext&(std::size_t)> power = [&](std::size_t k) -> const Ciphertext& {
        auto it = powers.find(k);
        if (it != powers.end()) return it->second;
        if (k % 2 == 0) {
            Ciphertext sq = eng.square(power(k / 2), evk);
            return powers.emplace(k, std::move(sq)).first->second;
        }
        const Ciphertext& hi = power((k + 1) / 2);
        const Ciphertext& lo = power(k / 2);
        std::size_t lvl = std::min(hi.level, lo.level);
        Ciphertext prod = eng.mul(eng.mod_switch(hi, lvl), eng.mod_switch(lo, lvl), evk);
        return powers.emplace(k, std::move(prod)).first->second;
    };

    double target_scale = eng.params().scale;
    std::vector<Ciphertext> terms;
    for (std::size_t k = 1; k <= d; ++k) {
        const Ciphertext& p = power(k);
        double u = target_scale * static_cast<double>(eng.ring().prime(p.level)) / p.scale;
        terms.push_back(eng.mul_plain(p, eng.encode_const(act.coefficients[k], u, p.level)));
    }
    std::size_t out_level = terms.back().level;
    for (auto& t : terms) out_level = std::min<std::size_t>(out_level, t.level);
    Ciphertext acc = eng.mod_switch(terms[0], out_level);
    for (std::size_t i = 1; i < terms.size(); ++i) acc = eng.add(acc, eng.mod_switch(terms[i], out_level));
    if (act.coefficients[0] != 0.0)
        acc = eng.add_plain(acc, eng.encode_const(act.coefficients[0], acc.scale, acc.level));
    return acc;
}

// ---- surrogate manifest ---------------------------------------------------

inline void save_surrogate(std::ostream& os, const PolyActivation& act) {
    nlohmann::json j;
    j["name"] = act.source;
    j["interval"] = act.interval_bound;
    j["coefficients"] = act.coefficients;
    os << j.dump(2) << "\n";
}

inline PolyActivation load_surrogate(std::istream& is) {
    nlohmann::json j = nlohmann::json::parse(is);
    PolyActivation act;
    act.source = j.at("name").get<std::string>();
    act.interval_bound = j.at("interval").get<double>();
    act.coefficients = j.at("coefficients").get<std::vector<double>>();
    act.validate();
    return act;
}

}  // namespace hecnn
