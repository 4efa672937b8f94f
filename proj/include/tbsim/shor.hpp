#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tbsim/compiler.hpp"
#include "tbsim/detection.hpp"
#include "tbsim/errors.hpp"
#include "tbsim/state.hpp"
#include "tbsim/util.hpp"

namespace tbsim {

inline std::uint64_t mod_exp(std::uint64_t a, std::uint64_t x, std::uint64_t n) {
    if (n < 2) throw std::invalid_argument("mod_exp: modulus must be >= 2");
    std::uint64_t result = 1 % n;
    std::uint64_t base = a % n;
    while (x > 0) {
        if (x & 1)
            result = static_cast<std::uint64_t>(
                (static_cast<unsigned __int128>(result) * base) % n);
        base = static_cast<std::uint64_t>((static_cast<unsigned __int128>(base) * base) % n);
        x >>= 1;
    }
    return result;
}

// Problem instance for the compiled order finder. The function register is
// not wide enough for N; instead `encoding` maps each realized residue
// a^x mod N to an n_fun-bit label, and the modular exponentiation is
// hard-wired as the CNOT fan derived from that table.
struct ShorConfig {
    std::uint64_t N = 15;
    std::uint64_t a = 2;
    int n_arg = 3;
    int n_fun = 2;
    std::map<std::uint64_t, std::uint32_t> encoding;  // residue -> function bits

    int n_qubits() const { return n_arg + n_fun; }

    void check() const {
        if (N < 2) throw std::invalid_argument("ShorConfig: N must be >= 2");
        if (std::gcd(a, N) != 1)
            throw std::invalid_argument("ShorConfig: a and N must be coprime");
        if (n_arg < 1 || n_fun < 1 || n_arg + n_fun > 20)
            throw std::invalid_argument("ShorConfig: unsupported register sizes");
        for (const auto& [residue, bits] : encoding)
            if (bits >= (1u << n_fun))
                throw std::invalid_argument("ShorConfig: encoding of residue " +
                                            std::to_string(residue) +
                                            " does not fit the function register");
    }

    // N = 15, a = 2: residues (1, 2, 4, 8) labeled (10, 00, 11, 01), the
    // labeling reachable with two CNOTs from the argument register.
    static ShorConfig compiled_15_2() {
        ShorConfig cfg;
        cfg.encoding = {{1, 0b10}, {2, 0b00}, {4, 0b11}, {8, 0b01}};
        return cfg;
    }
};

// CNOT fan equivalent to x -> encoding[a^x mod N]: function bit i is
// init_bits_i XOR (sum of the wired argument bits).
struct Wiring {
    std::uint32_t init_bits = 0;
    std::vector<std::pair<int, int>> cnots;  // (argument bit, function bit)
};

inline Wiring derive_wiring(const ShorConfig& cfg) {
    cfg.check();
    const std::uint32_t n_x = 1u << cfg.n_arg;
    auto label = [&](std::uint32_t x) -> std::uint32_t {
        const std::uint64_t residue = mod_exp(cfg.a, x, cfg.N);
        auto it = cfg.encoding.find(residue);
        if (it == cfg.encoding.end())
            throw unsupported_instance_error("no encoding for residue " +
                                             std::to_string(residue) + " = " +
                                             std::to_string(cfg.a) + "^" + std::to_string(x) +
                                             " mod " + std::to_string(cfg.N));
        return it->second;
    };
    // encoding must be injective on the realized residues
    std::map<std::uint32_t, std::uint64_t> seen;
    for (std::uint32_t x = 0; x < n_x; ++x) {
        const std::uint64_t residue = mod_exp(cfg.a, x, cfg.N);
        const std::uint32_t bits = label(x);
        auto [it, inserted] = seen.emplace(bits, residue);
        if (!inserted && it->second != residue)
            throw unsupported_instance_error("encoding is not injective: residues " +
                                             std::to_string(it->second) + " and " +
                                             std::to_string(residue) + " share a label");
    }

    Wiring w;
    w.init_bits = label(0);
    std::vector<std::uint32_t> column(cfg.n_arg);
    for (int j = 0; j < cfg.n_arg; ++j) column[j] = label(1u << j) ^ w.init_bits;
    for (std::uint32_t x = 0; x < n_x; ++x) {
        std::uint32_t predicted = w.init_bits;
        for (int j = 0; j < cfg.n_arg; ++j)
            if ((x >> j) & 1u) predicted ^= column[j];
        if (predicted != label(x))
            throw unsupported_instance_error(
                "encoding is not reachable with a CNOT fan (fails at x = " + std::to_string(x) +
                "); supply a different encoding");
    }
    for (int j = 0; j < cfg.n_arg; ++j)
        for (int i = 0; i < cfg.n_fun; ++i)
            if ((column[j] >> i) & 1u) w.cnots.emplace_back(j, i);
    return w;
}

// Inverse transform over the argument qubits as H and controlled-phase
// gates; the measured index comes out bit-reversed and is undone in
// classical post-processing.
inline std::vector<Gate> inverse_qft_gates(int n_arg) {
    constexpr double pi = std::numbers::pi;
    std::vector<Gate> gates;
    for (int j = n_arg - 1; j >= 0; --j) {
        gates.push_back(Gate::h(j));
        for (int m = j - 1; m >= 0; --m)
            gates.push_back(Gate::cphase(m, j, pi / static_cast<double>(1u << (j - m))));
    }
    return gates;
}

struct ShorStages {
    std::vector<Gate> init;    // argument superposition + function register preparation
    std::vector<Gate> modexp;  // the CNOT fan
    std::vector<Gate> iqft;
};

inline ShorStages build_stages(const ShorConfig& cfg) {
    const Wiring w = derive_wiring(cfg);
    ShorStages st;
    for (int j = 0; j < cfg.n_arg; ++j) st.init.push_back(Gate::h(j));
    for (int i = 0; i < cfg.n_fun; ++i)
        if ((w.init_bits >> i) & 1u) st.init.push_back(Gate::x(cfg.n_arg + i));
    for (const auto& [arg_bit, fun_bit] : w.cnots)
        st.modexp.push_back(Gate::cnot(arg_bit, cfg.n_arg + fun_bit));
    st.iqft = inverse_qft_gates(cfg.n_arg);
    return st;
}

inline QubitLayout shor_layout(const ShorConfig& cfg) {
    QubitLayout l;
    for (int j = 0; j < cfg.n_arg; ++j) l.names.push_back("x" + std::to_string(j));
    for (int i = 0; i < cfg.n_fun; ++i) l.names.push_back("f" + std::to_string(i));
    return l;
}

inline Circuit build_circuit(const ShorConfig& cfg, bool include_qft) {
    const ShorStages st = build_stages(cfg);
    Circuit c;
    c.n_qubits = cfg.n_qubits();
    c.layout = shor_layout(cfg);
    c.gates = st.init;
    c.gates.insert(c.gates.end(), st.modexp.begin(), st.modexp.end());
    if (include_qft) c.gates.insert(c.gates.end(), st.iqft.begin(), st.iqft.end());
    return c;
}

// Bins occupied right after register initialization: all argument values,
// function register holding the label of residue 1.
inline std::vector<std::uint32_t> init_window_bins(const ShorConfig& cfg) {
    const Wiring w = derive_wiring(cfg);
    const std::uint32_t offset = w.init_bits << cfg.n_arg;
    std::vector<std::uint32_t> bins;
    for (std::uint32_t x = 0; x < (1u << cfg.n_arg); ++x) bins.push_back(offset + x);
    return bins;
}

// Per-argument-value probabilities, summed over the function register.
// With bit_reversed = true entry y is read from the reversed bin index
// (post-processing for the compiled transform).
inline std::vector<double> argument_marginal(const TimeBinState& state, int n_arg, int n_fun,
                                             bool bit_reversed = false) {
    const std::uint32_t dim = 1u << (n_arg + n_fun);
    if (state.n_bins() < dim)
        throw std::invalid_argument("argument_marginal: frame too small for the layout");
    const std::vector<double> probs = probabilities(state);
    std::vector<double> marg(std::size_t{1} << n_arg, 0.0);
    for (std::uint32_t y = 0; y < (1u << n_arg); ++y) {
        const std::uint32_t raw = bit_reversed ? bit_reverse(y, n_arg) : y;
        for (std::uint32_t f = 0; f < (1u << n_fun); ++f)
            marg[y] += probs[raw + (f << n_arg)];
    }
    return marg;
}

// Reference transform: applies the analytic kernel exp(2 pi i x y / 2^n) to
// each function-register component and returns the per-y probabilities.
inline std::vector<double> analytic_qft_marginal(const TimeBinState& state, int n_arg,
                                                 int n_fun) {
    const std::uint32_t dim = 1u << (n_arg + n_fun);
    if (state.n_bins() < dim)
        throw std::invalid_argument("analytic_qft_marginal: frame too small for the layout");
    const std::uint32_t n_x = 1u << n_arg;
    const double norm = 1.0 / std::sqrt(static_cast<double>(n_x));
    std::vector<double> marg(n_x, 0.0);
    for (Pol p : {Pol::H, Pol::V}) {
        for (std::uint32_t f = 0; f < (1u << n_fun); ++f) {
            for (std::uint32_t y = 0; y < n_x; ++y) {
                cxd amp = 0.0;
                for (std::uint32_t x = 0; x < n_x; ++x) {
                    const double phase = 2.0 * std::numbers::pi * static_cast<double>(x) *
                                         static_cast<double>(y) / static_cast<double>(n_x);
                    amp += std::polar(1.0, phase) * state.amp(x + (f << n_arg), p);
                }
                marg[y] += std::norm(norm * amp);
            }
        }
    }
    return marg;
}

// ---------------------------------------------------------------------------
// Classical post-processing
// ---------------------------------------------------------------------------

// Continued-fraction convergent denominators of y / q, strictly below limit,
// in the order they appear in the expansion.
inline std::vector<std::uint64_t> convergent_denominators(std::uint64_t y, std::uint64_t q,
                                                          std::uint64_t limit) {
    std::vector<std::uint64_t> out;
    std::uint64_t num = y, den = q;
    std::uint64_t k_prev2 = 1, k_prev = 0;  // k_{-2}, k_{-1}
    while (den != 0) {
        const std::uint64_t a = num / den;
        if (a > (std::numeric_limits<std::uint64_t>::max() - k_prev2) / std::max<std::uint64_t>(k_prev, 1))
            break;
        const std::uint64_t k = a * k_prev + k_prev2;
        if (k >= limit) break;
        out.push_back(k);
        k_prev2 = k_prev;
        k_prev = k;
        const std::uint64_t r = num % den;
        num = den;
        den = r;
    }
    return out;
}

struct FactorResult {
    std::optional<std::pair<std::uint64_t, std::uint64_t>> factors;
    std::string reason;  // set when factors is empty
};

inline FactorResult factors_from_order(std::uint64_t a, std::uint64_t r, std::uint64_t N) {
    if (r == 0 || mod_exp(a, r, N) != 1)
        throw std::invalid_argument("factors_from_order: a^r != 1 (mod N)");
    if (r % 2 != 0) return {std::nullopt, "order is odd"};
    const std::uint64_t t = mod_exp(a, r / 2, N);
    if (t == N - 1) return {std::nullopt, "a^(r/2) = -1 (mod N), gcd step is trivial"};
    const std::uint64_t p = std::gcd(t >= 1 ? t - 1 : 0, N);
    const std::uint64_t q = std::gcd(t + 1, N);
    if (p > 1 && p < N) return {{{std::min(p, N / p), std::max(p, N / p)}}, ""};
    if (q > 1 && q < N) return {{{std::min(q, N / q), std::max(q, N / q)}}, ""};
    return {std::nullopt, "gcd step yields only trivial divisors"};
}

struct SampleOutcome {
    std::uint64_t y = 0;
    std::optional<std::uint64_t> order;
    std::string note;
};

struct OrderResult {
    std::vector<std::uint64_t> samples;
    std::vector<SampleOutcome> per_sample;
    std::optional<std::uint64_t> order;
    std::optional<std::pair<std::uint64_t, std::uint64_t>> factors;
    std::string failure;  // set when order or factors is empty
};

// Order finding from measured argument values: each y proposes the
// convergent denominators of y / 2^n; the least denominator r with
// a^r = 1 (mod N) wins. y = 0 carries no information. If no sample succeeds
// alone, the lcm of the best denominators across samples is tried.
inline OrderResult extract_order(const std::vector<std::uint64_t>& samples, int n_arg,
                                 std::uint64_t a, std::uint64_t N) {
    if (N < 2) throw std::invalid_argument("extract_order: N must be >= 2");
    const std::uint64_t q = std::uint64_t{1} << n_arg;
    OrderResult res;
    res.samples = samples;
    std::uint64_t lcm_guess = 1;
    for (std::uint64_t y : samples) {
        if (y >= q) throw std::invalid_argument("extract_order: sample outside [0, 2^n)");
        SampleOutcome out;
        out.y = y;
        if (y == 0) {
            out.note = "inherent failure: y = 0 carries no period information";
        } else {
            const auto denominators = convergent_denominators(y, q, N);
            for (std::uint64_t d : denominators) {
                if (d == 0) continue;
                if (mod_exp(a, d, N) == 1) {
                    out.order = d;
                    out.note = "order " + std::to_string(d) + " from convergent of " +
                               std::to_string(y) + "/" + std::to_string(q);
                    break;
                }
            }
            if (!out.order && !denominators.empty()) {
                lcm_guess = std::lcm(lcm_guess, denominators.back());
                out.note = "no convergent denominator d has a^d = 1 (mod N)";
            }
        }
        if (out.order && (!res.order || *out.order < *res.order)) res.order = out.order;
        res.per_sample.push_back(std::move(out));
    }
    if (!res.order && lcm_guess > 1 && lcm_guess < N && mod_exp(a, lcm_guess, N) == 1)
        res.order = lcm_guess;
    if (!res.order) {
        res.failure = "order not found among samples";
        return res;
    }
    const FactorResult f = factors_from_order(a, *res.order, N);
    res.factors = f.factors;
    if (!f.factors) res.failure = f.reason;
    return res;
}

// ---------------------------------------------------------------------------
// End-to-end pipeline
// ---------------------------------------------------------------------------

enum class QftMode { Compiled, Classical };
enum class AmplitudeMode { Uniform, Wavepacket };

struct ShorOptions {
    QftMode qft = QftMode::Compiled;
    AmplitudeMode amplitudes = AmplitudeMode::Uniform;
    bool loss_on = false;
    std::uint64_t shots = 0;
    std::uint64_t seed = 1;
    Frame frame{};
    LossTable losses{};
    double coherence_time_ns = 148.0;
    std::optional<double> wavepacket_center_ns;  // default: middle of the init window
    DetectorModel detector{};
};

struct ShorReport {
    std::vector<double> marginal;  // sub-normalized probabilities over y
    std::vector<double> marginal_normalized;
    double survival = 0.0;      // squared norm at the measurement plane
    double total_loss_db = 0.0;  // sum of instruction losses in the executed schedule
    std::uint64_t shots = 0;
    std::uint64_t detected = 0;
    std::vector<std::uint64_t> counts;  // detected events per y
    OrderResult order;
};

// In wavepacket mode the register initialization is amplitude carving: the
// envelope-shaped frame is gated down to the init window (keeping the
// envelope weights), and only the CNOT fan and transform run as gates. In
// uniform mode the whole circuit, initialization included, runs on |0...0>.
inline ShorReport run_shor(const ShorConfig& cfg, const ShorOptions& opt) {
    const Wiring wiring = derive_wiring(cfg);
    const std::uint32_t dim = 1u << cfg.n_qubits();
    if (opt.frame.n_bins < dim)
        throw schedule_infeasible_error("frame too small for " +
                                            std::to_string(cfg.n_qubits()) + " qubits",
                                        0);
    const ShorStages stages = build_stages(cfg);
    const bool compiled_qft = opt.qft == QftMode::Compiled;

    Circuit circuit;
    circuit.n_qubits = cfg.n_qubits();
    circuit.layout = shor_layout(cfg);
    TimeBinState input(opt.frame.n_bins, opt.frame.bin_width_ns);
    std::uint64_t carve_instructions = 0;

    if (opt.amplitudes == AmplitudeMode::Uniform) {
        circuit.gates = stages.init;
        input.amp(0, Pol::H) = 1.0;
    } else {
        const std::uint32_t offset = wiring.init_bits << cfg.n_arg;
        const double center =
            opt.wavepacket_center_ns.value_or((offset + 0.5 * (1u << cfg.n_arg)) *
                                              opt.frame.bin_width_ns);
        const WavePacket packet{opt.coherence_time_ns, center};
        input = shaped_state(packet, opt.frame.n_bins, opt.frame.bin_width_ns, true);
        std::vector<double> keep(opt.frame.n_bins, 0.0);
        for (std::uint32_t x = 0; x < (1u << cfg.n_arg); ++x) keep[offset + x] = 1.0;
        Primitive carve{Attenuate{std::move(keep)}, opt.losses.attenuate_db, -1};
        input = apply_primitive(input, carve, opt.loss_on);
        carve_instructions = 1;
    }
    circuit.gates.insert(circuit.gates.end(), stages.modexp.begin(), stages.modexp.end());
    if (compiled_qft)
        circuit.gates.insert(circuit.gates.end(), stages.iqft.begin(), stages.iqft.end());

    const Schedule sched = compile(circuit, opt.frame, opt.losses);
    const TimeBinState final_state = run_schedule(sched, input, opt.loss_on);

    ShorReport rep;
    rep.total_loss_db =
        sched.total_loss_db() + (carve_instructions ? opt.losses.attenuate_db : 0.0);
    rep.marginal = compiled_qft
                       ? argument_marginal(final_state, cfg.n_arg, cfg.n_fun, true)
                       : analytic_qft_marginal(final_state, cfg.n_arg, cfg.n_fun);
    rep.survival = 0.0;
    for (double p : rep.marginal) rep.survival += p;
    rep.marginal_normalized.assign(rep.marginal.size(), 0.0);
    if (rep.survival > 0.0)
        for (std::size_t y = 0; y < rep.marginal.size(); ++y)
            rep.marginal_normalized[y] = rep.marginal[y] / rep.survival;

    rep.shots = opt.shots;
    rep.counts.assign(std::size_t{1} << cfg.n_arg, 0);
    std::vector<std::uint64_t> seen;
    if (opt.shots > 0) {
        opt.detector.check();
        const std::uint32_t arg_mask = (1u << cfg.n_arg) - 1;
        if (compiled_qft) {
            const auto events = sample_events(final_state, opt.detector, opt.shots, opt.seed);
            for (const EventRecord& e : events) {
                if (!e.detected) continue;
                const std::uint32_t y =
                    bit_reverse(static_cast<std::uint32_t>(e.bin) & arg_mask, cfg.n_arg);
                ++rep.counts[y];
                ++rep.detected;
            }
        } else {
            // classical transform: y is drawn from the analytic distribution
            RandomStream rng(opt.seed);
            const double p_detect = std::min(1.0, rep.survival * opt.detector.efficiency);
            std::vector<double> cdf(rep.marginal.size());
            double acc = 0.0;
            for (std::size_t y = 0; y < rep.marginal.size(); ++y) {
                acc += rep.marginal[y];
                cdf[y] = acc;
            }
            for (std::uint64_t s = 0; s < opt.shots; ++s) {
                if (acc <= 0.0 || rng.uniform() >= p_detect) continue;
                const std::size_t y = rng.categorical(cdf);
                ++rep.counts[y];
                ++rep.detected;
            }
        }
        for (std::uint32_t y = 0; y < rep.counts.size(); ++y)
            if (rep.counts[y] > 0) seen.push_back(y);
    }
    rep.order = extract_order(seen, cfg.n_arg, cfg.a, cfg.N);
    if (seen.empty()) rep.order.failure = "no detected samples";
    return rep;
}

}  // namespace tbsim
