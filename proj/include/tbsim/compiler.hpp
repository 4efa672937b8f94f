#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "tbsim/errors.hpp"
#include "tbsim/primitives.hpp"
#include "tbsim/state.hpp"

namespace tbsim {

struct Gate {
    enum class Kind { H, X, Ry, Rz, Diag, CPhase, CNOT, CU };

    Kind kind = Kind::H;
    int target = -1;   // bit position of the (target) qubit
    int control = -1;  // bit position of the control qubit, -1 when absent
    double angle = 0.0;
    std::vector<double> diag_phases;  // Diag: one phase per basis state
    std::array<cxd, 4> u{};           // CU: row-major 2x2 block

    static Gate h(int q) { return make(Kind::H, q); }
    static Gate x(int q) { return make(Kind::X, q); }
    static Gate ry(int q, double theta) { return make(Kind::Ry, q, -1, theta); }
    static Gate rz(int q, double phi) { return make(Kind::Rz, q, -1, phi); }
    static Gate diag(std::vector<double> phases) {
        Gate g = make(Kind::Diag, 0);
        g.diag_phases = std::move(phases);
        return g;
    }
    static Gate cphase(int c, int t, double phi) { return make(Kind::CPhase, t, c, phi); }
    static Gate cnot(int c, int t) { return make(Kind::CNOT, t, c); }
    static Gate cu(int c, const std::array<cxd, 4>& u, int t) {
        // u must be unitary: u u^dagger = I within 1e-12.
        const cxd r00 = u[0] * std::conj(u[0]) + u[1] * std::conj(u[1]);
        const cxd r01 = u[0] * std::conj(u[2]) + u[1] * std::conj(u[3]);
        const cxd r11 = u[2] * std::conj(u[2]) + u[3] * std::conj(u[3]);
        if (std::abs(r00 - 1.0) > 1e-12 || std::abs(r11 - 1.0) > 1e-12 || std::abs(r01) > 1e-12)
            throw std::invalid_argument("Gate::cu: block is not unitary");
        Gate g = make(Kind::CU, t, c);
        g.u = u;
        return g;
    }

    static Gate make(Kind k, int t, int c = -1, double a = 0.0) {
        Gate g;
        g.kind = k;
        g.target = t;
        g.control = c;
        g.angle = a;
        return g;
    }

    bool two_qubit() const { return kind == Kind::CPhase || kind == Kind::CNOT || kind == Kind::CU; }

    std::string name() const {
        switch (kind) {
            case Kind::H: return "H";
            case Kind::X: return "X";
            case Kind::Ry: return "RY";
            case Kind::Rz: return "RZ";
            case Kind::Diag: return "DIAG";
            case Kind::CPhase: return "CPHASE";
            case Kind::CNOT: return "CNOT";
            case Kind::CU: return "CU";
        }
        return "?";
    }
};

struct Circuit {
    int n_qubits = 0;
    QubitLayout layout;
    std::vector<Gate> gates;

    void check() const {
        if (n_qubits < 0 || n_qubits > 30)
            throw std::invalid_argument("Circuit: unsupported qubit count");
        if (!layout.names.empty() && layout.n_qubits() != n_qubits)
            throw std::invalid_argument("Circuit: layout does not cover all qubits");
        for (std::size_t i = 0; i < gates.size(); ++i) {
            const Gate& g = gates[i];
            const std::string where = "Circuit: gate " + std::to_string(i) + " (" + g.name() + ")";
            if (g.kind != Gate::Kind::Diag && (g.target < 0 || g.target >= n_qubits))
                throw std::invalid_argument(where + " references qubit outside circuit");
            if (g.two_qubit()) {
                if (g.control < 0 || g.control >= n_qubits)
                    throw std::invalid_argument(where + " references control outside circuit");
                if (g.control == g.target)
                    throw std::invalid_argument(where + " has control == target");
            }
            if (g.kind == Gate::Kind::Diag &&
                g.diag_phases.size() != (std::size_t{1} << n_qubits))
                throw std::invalid_argument(where + " needs one phase per basis state");
        }
    }
};

struct Frame {
    std::uint32_t n_bins = 32;
    double bin_width_ns = kDefaultBinWidthNs;
};

struct Schedule {
    Frame frame;
    std::vector<Primitive> instructions;

    // One pass per source gate; merging can fuse a gate boundary away.
    std::vector<std::pair<std::size_t, std::size_t>> passes() const {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        std::size_t begin = 0;
        for (std::size_t i = 1; i <= instructions.size(); ++i) {
            if (i == instructions.size() ||
                instructions[i].gate_index != instructions[begin].gate_index) {
                out.emplace_back(begin, i);
                begin = i;
            }
        }
        return out;
    }

    double total_loss_db() const {
        double s = 0.0;
        for (const Primitive& p : instructions) s += p.loss_db;
        return s;
    }
};

namespace detail {

inline bool bit_of(std::uint32_t value, int bit) { return (value >> bit) & 1u; }

// Bins of the frame with target bit = tv, restricted to control bit = 1 when
// ctrl >= 0.
inline std::vector<std::uint32_t> gate_window(std::uint32_t n_bins, int target, bool tv,
                                              int ctrl) {
    std::vector<std::uint32_t> bins;
    for (std::uint32_t b = 0; b < n_bins; ++b) {
        if (bit_of(b, target) != tv) continue;
        if (ctrl >= 0 && !bit_of(b, ctrl)) continue;
        bins.push_back(b);
    }
    return bins;
}

inline bool all_zero(const std::vector<double>& v) {
    for (double x : v)
        if (x != 0.0) return false;
    return true;
}

inline void emit_pattern(std::vector<Primitive>& out, std::vector<double> phases,
                         const LossTable& losses) {
    if (all_zero(phases)) return;
    out.push_back({PhasePattern{std::move(phases), PolSelector::Both}, losses.phase_db, -1});
}

// Phase pattern with `phase0` on (ctrl & target=0) bins and `phase1` on
// (ctrl & target=1) bins.
inline std::vector<double> split_pattern(std::uint32_t n_bins, int target, int ctrl,
                                         double phase0, double phase1) {
    std::vector<double> phases(n_bins, 0.0);
    for (std::uint32_t b = 0; b < n_bins; ++b) {
        if (ctrl >= 0 && !bit_of(b, ctrl)) continue;
        phases[b] = bit_of(b, target) ? phase1 : phase0;
    }
    return phases;
}

// Emit a (controlled) y-rotation: the coupler realizes
//   [[sqrt(1-C), sqrt(C)], [-sqrt(C), sqrt(1-C)]]
// and sign-only phase patterns turn it into
//   [[cos(theta/2), -sin(theta/2)], [sin(theta/2), cos(theta/2)]]
// on the (target=0, target=1) pair, exactly and for any theta.
inline void emit_ry(std::vector<Primitive>& out, std::uint32_t n_bins, int target, int ctrl,
                    double theta, const LossTable& losses) {
    const double a = 0.5 * theta;
    const double c = std::cos(a);
    const double s = std::sin(a);
    constexpr double pi = std::numbers::pi;

    if (s == 0.0) {  // diagonal: +/- identity on the gated block
        if (c < 0.0) emit_pattern(out, split_pattern(n_bins, target, ctrl, pi, pi), losses);
        return;
    }
    double d1, d2, e2;  // diag(d1, d2) . coupler . diag(1, e2)
    if (c != 0.0) {
        d1 = c > 0.0 ? 1.0 : -1.0;
        d2 = s > 0.0 ? -1.0 : 1.0;
        e2 = -(s > 0.0 ? 1.0 : -1.0) * (c > 0.0 ? 1.0 : -1.0);
    } else {  // pure off-diagonal block
        d1 = d2 = s > 0.0 ? -1.0 : 1.0;
        e2 = 1.0;
    }

    if (e2 < 0.0) emit_pattern(out, split_pattern(n_bins, target, ctrl, 0.0, pi), losses);

    CouplerSpec spec;
    spec.delay_k = 1u << target;
    spec.coupling = std::min(1.0, s * s);
    spec.gate_bins = gate_window(n_bins, target, false, ctrl);
    for (const Primitive& p : coupler_primitives(spec, n_bins, losses)) out.push_back(p);

    std::vector<double> post(n_bins, 0.0);
    bool any = false;
    for (std::uint32_t b = 0; b < n_bins; ++b) {
        if (ctrl >= 0 && !bit_of(b, ctrl)) continue;
        const double d = bit_of(b, target) ? d2 : d1;
        if (d < 0.0) {
            post[b] = pi;
            any = true;
        }
    }
    if (any) emit_pattern(out, std::move(post), losses);
}

// ZYZ Euler angles: u = e^{i alpha} Rz(beta) Ry(gamma) Rz(delta).
struct Euler {
    double alpha, beta, gamma, delta;
};

inline Euler zyz_decompose(const std::array<cxd, 4>& u) {
    const cxd det = u[0] * u[3] - u[1] * u[2];
    const double alpha = 0.5 * std::arg(det);
    const cxd phase = std::polar(1.0, -alpha);
    const cxd v00 = u[0] * phase;
    const cxd v10 = u[2] * phase;
    const double gamma = 2.0 * std::atan2(std::abs(v10), std::abs(v00));
    double beta = 0.0, delta = 0.0;
    if (std::abs(v10) < 1e-14) {
        beta = -2.0 * std::arg(v00);
    } else if (std::abs(v00) < 1e-14) {
        beta = 2.0 * std::arg(v10);
    } else {
        const double sum = -2.0 * std::arg(v00);
        const double diff = 2.0 * std::arg(v10);
        beta = 0.5 * (sum + diff);
        delta = 0.5 * (sum - diff);
    }
    return {alpha, beta, gamma, delta};
}

}  // namespace detail

// Lower one gate to loop instructions. Diagonal gates become a single phase
// pattern; everything else routes through the coupler composite.
inline std::vector<Primitive> lower_gate(const Gate& g, std::uint32_t n_bins,
                                         const LossTable& losses = LossTable{},
                                         int gate_index = -1) {
    using detail::emit_pattern;
    using detail::split_pattern;
    constexpr double pi = std::numbers::pi;
    std::vector<Primitive> out;
    try {
        switch (g.kind) {
            case Gate::Kind::Rz:
                emit_pattern(out, split_pattern(n_bins, g.target, -1, -0.5 * g.angle, 0.5 * g.angle),
                             losses);
                break;
            case Gate::Kind::Diag: {
                std::vector<double> phases(n_bins, 0.0);
                for (std::size_t b = 0; b < g.diag_phases.size() && b < n_bins; ++b)
                    phases[b] = g.diag_phases[b];
                emit_pattern(out, std::move(phases), losses);
                break;
            }
            case Gate::Kind::CPhase:
                emit_pattern(out, split_pattern(n_bins, g.target, g.control, 0.0, g.angle), losses);
                break;
            case Gate::Kind::Ry:
                detail::emit_ry(out, n_bins, g.target, -1, g.angle, losses);
                break;
            case Gate::Kind::H:
            case Gate::Kind::X:
            case Gate::Kind::CNOT: {
                CouplerSpec spec;
                spec.delay_k = 1u << g.target;
                spec.coupling = g.kind == Gate::Kind::H ? 0.5 : 1.0;
                const int ctrl = g.kind == Gate::Kind::CNOT ? g.control : -1;
                spec.gate_bins = detail::gate_window(n_bins, g.target, false, ctrl);
                for (const Primitive& p : coupler_primitives(spec, n_bins, losses))
                    out.push_back(p);
                emit_pattern(out, split_pattern(n_bins, g.target, ctrl, 0.0, pi), losses);
                break;
            }
            case Gate::Kind::CU: {
                const detail::Euler e = detail::zyz_decompose(g.u);
                emit_pattern(out, split_pattern(n_bins, g.target, g.control, -0.5 * e.delta,
                                                0.5 * e.delta),
                             losses);
                detail::emit_ry(out, n_bins, g.target, g.control, e.gamma, losses);
                emit_pattern(out, split_pattern(n_bins, g.target, g.control, -0.5 * e.beta,
                                                0.5 * e.beta),
                             losses);
                emit_pattern(out, split_pattern(n_bins, g.target, g.control, e.alpha, e.alpha),
                             losses);
                break;
            }
        }
    } catch (const frame_overflow_error& err) {
        throw schedule_infeasible_error(std::string("cannot lay out ") + g.name() + ": " +
                                        err.what(), gate_index);
    }
    for (Primitive& p : out) p.gate_index = gate_index;
    return out;
}

// ---------------------------------------------------------------------------
// Frame feasibility
// ---------------------------------------------------------------------------

struct Diagnostic {
    std::size_t instruction;
    std::string kind;  // "overflow", "collision" or "shape"
    std::string message;
};

struct ValidationReport {
    std::vector<Diagnostic> issues;
    bool ok() const { return issues.empty(); }
};

// Propagates a may-be-occupied mask (union over every basis input) through
// the schedule. Reports delays that push occupied slots out of the frame
// ("overflow") and malformed gate windows — duplicate or out-of-frame bins
// that would drive one time slot twice in a single pass ("collision").
inline ValidationReport validate(const Schedule& sched) {
    const std::uint32_t B = sched.frame.n_bins;
    std::vector<char> occ_h(B, 1), occ_v(B, 0);
    ValidationReport rep;
    for (std::size_t i = 0; i < sched.instructions.size(); ++i) {
        const Primitive& p = sched.instructions[i];
        if (const auto* pat = std::get_if<PhasePattern>(&p.op)) {
            if (pat->phases.size() != B)
                rep.issues.push_back({i, "shape", "phase pattern length != frame length"});
        } else if (const auto* rot = std::get_if<PolRotate>(&p.op)) {
            std::vector<char> seen(B, 0);
            for (std::uint32_t b : rot->bins) {
                if (b >= B) {
                    rep.issues.push_back({i, "collision",
                                          "gate window bin " + std::to_string(b) +
                                              " outside the frame"});
                    continue;
                }
                if (seen[b])
                    rep.issues.push_back({i, "collision",
                                          "gate window drives bin " + std::to_string(b) +
                                              " twice in one pass"});
                seen[b] = 1;
            }
            const auto cs = detail::rotation_coeffs(rot->angle);
            if (cs.s == 0.0) continue;
            for (std::uint32_t b : rot->bins) {
                if (b >= B) continue;
                if (cs.c == 0.0) {
                    std::swap(occ_h[b], occ_v[b]);
                } else {
                    const char any = occ_h[b] | occ_v[b];
                    occ_h[b] = any;
                    occ_v[b] = any;
                }
            }
        } else if (const auto* del = std::get_if<Delay>(&p.op)) {
            const std::uint32_t k = del->k;
            if (k == 0) continue;
            if (k >= B) {
                rep.issues.push_back({i, "overflow", "delay longer than frame"});
                continue;
            }
            if (del->delayed == Pol::V) {
                for (std::uint32_t b = B - k; b < B; ++b)
                    if (occ_v[b])
                        rep.issues.push_back({i, "overflow",
                                              "V slot at bin " + std::to_string(b) +
                                                  " pushed past the frame end"});
                for (std::uint32_t b = B; b-- > k;) occ_v[b] = occ_v[b - k];
                for (std::uint32_t b = 0; b < k; ++b) occ_v[b] = 0;
            } else {
                for (std::uint32_t b = 0; b < k; ++b)
                    if (occ_v[b])
                        rep.issues.push_back({i, "overflow",
                                              "V slot at bin " + std::to_string(b) +
                                                  " pushed before the frame start"});
                for (std::uint32_t b = 0; b + k < B; ++b) occ_v[b] = occ_v[b + k];
                for (std::uint32_t b = B - k; b < B; ++b) occ_v[b] = 0;
            }
        } else if (const auto* att = std::get_if<Attenuate>(&p.op)) {
            for (std::uint32_t b = 0; b < B && b < att->factors.size(); ++b)
                if (att->factors[b] == 0.0) occ_h[b] = occ_v[b] = 0;
        }
    }
    return rep;
}

inline Schedule compile(const Circuit& circuit, Frame frame,
                        const LossTable& losses = LossTable{}, bool merge_phases = true) {
    circuit.check();
    if ((std::uint64_t{1} << circuit.n_qubits) > frame.n_bins)
        throw schedule_infeasible_error(
            std::to_string(circuit.n_qubits) + " qubits need at least " +
                std::to_string(std::uint64_t{1} << circuit.n_qubits) + " bins, frame has " +
                std::to_string(frame.n_bins),
            0);
    Schedule sched;
    sched.frame = frame;
    for (std::size_t i = 0; i < circuit.gates.size(); ++i) {
        auto prims = lower_gate(circuit.gates[i], frame.n_bins, losses, static_cast<int>(i));
        for (Primitive& p : prims) sched.instructions.push_back(std::move(p));
    }
    if (merge_phases) {
        std::vector<Primitive> merged;
        for (Primitive& p : sched.instructions) {
            if (!merged.empty() && std::holds_alternative<PhasePattern>(p.op) &&
                std::holds_alternative<PhasePattern>(merged.back().op)) {
                auto& prev = std::get<PhasePattern>(merged.back().op);
                const auto& cur = std::get<PhasePattern>(p.op);
                if (prev.selector == cur.selector) {
                    for (std::size_t b = 0; b < prev.phases.size(); ++b)
                        prev.phases[b] += cur.phases[b];
                    continue;  // one modulator pass, one insertion loss
                }
            }
            merged.push_back(std::move(p));
        }
        sched.instructions = std::move(merged);
    }
    const ValidationReport rep = validate(sched);
    if (!rep.ok()) {
        const Diagnostic& d = rep.issues.front();
        throw schedule_infeasible_error(
            d.kind + " at instruction " + std::to_string(d.instruction) + ": " + d.message,
            sched.instructions[d.instruction].gate_index);
    }
    return sched;
}

inline TimeBinState run_schedule(const Schedule& sched, const TimeBinState& input,
                                 bool loss_on = false) {
    if (input.n_bins() != sched.frame.n_bins || input.bin_width_ns() != sched.frame.bin_width_ns)
        throw std::invalid_argument("run_schedule: state frame does not match schedule frame");
    TimeBinState s = input;
    for (const Primitive& p : sched.instructions) s = apply_primitive(s, p, loss_on);
    return s;
}

// ---------------------------------------------------------------------------
// Dense reference path
// ---------------------------------------------------------------------------

inline std::array<cxd, 4> gate_block(const Gate& g) {
    constexpr double inv_sqrt2 = std::numbers::sqrt2 / 2.0;
    switch (g.kind) {
        case Gate::Kind::H: return {inv_sqrt2, inv_sqrt2, inv_sqrt2, -inv_sqrt2};
        case Gate::Kind::X: return {0.0, 1.0, 1.0, 0.0};
        case Gate::Kind::Ry: {
            const double c = std::cos(0.5 * g.angle), s = std::sin(0.5 * g.angle);
            return {c, -s, s, c};
        }
        case Gate::Kind::Rz:
            return {std::polar(1.0, -0.5 * g.angle), 0.0, 0.0, std::polar(1.0, 0.5 * g.angle)};
        case Gate::Kind::CU: return g.u;
        default: throw std::invalid_argument("gate_block: gate has no 2x2 block");
    }
}

// Apply one gate to a dense 2^n state vector (the reference semantics the
// compiled schedules are checked against).
inline void apply_gate_dense(std::vector<cxd>& v, const Gate& g, int n_qubits) {
    const std::size_t dim = std::size_t{1} << n_qubits;
    switch (g.kind) {
        case Gate::Kind::Diag:
            for (std::size_t i = 0; i < dim; ++i) v[i] *= std::polar(1.0, g.diag_phases[i]);
            return;
        case Gate::Kind::CPhase: {
            const cxd f = std::polar(1.0, g.angle);
            for (std::size_t i = 0; i < dim; ++i)
                if (detail::bit_of(static_cast<std::uint32_t>(i), g.control) &&
                    detail::bit_of(static_cast<std::uint32_t>(i), g.target))
                    v[i] *= f;
            return;
        }
        case Gate::Kind::CNOT:
            for (std::size_t i = 0; i < dim; ++i)
                if (detail::bit_of(static_cast<std::uint32_t>(i), g.control) &&
                    !detail::bit_of(static_cast<std::uint32_t>(i), g.target))
                    std::swap(v[i], v[i | (std::size_t{1} << g.target)]);
            return;
        default: {
            const std::array<cxd, 4> m = gate_block(g);
            const std::size_t step = std::size_t{1} << g.target;
            for (std::size_t i = 0; i < dim; ++i) {
                if (i & step) continue;
                if (g.kind == Gate::Kind::CU &&
                    !detail::bit_of(static_cast<std::uint32_t>(i), g.control))
                    continue;
                const std::size_t j = i | step;
                const cxd a = v[i], b = v[j];
                v[i] = m[0] * a + m[1] * b;
                v[j] = m[2] * a + m[3] * b;
            }
            return;
        }
    }
}

// Dense 2^n x 2^n unitary of the whole circuit, column major
// (result[j] = U |j>). Capped at 10 qubits.
inline std::vector<std::vector<cxd>> unitary_of(const Circuit& circuit) {
    circuit.check();
    if (circuit.n_qubits > 10)
        throw resource_limit_error("unitary_of: dense reference capped at 10 qubits");
    const std::size_t dim = std::size_t{1} << circuit.n_qubits;
    std::vector<std::vector<cxd>> cols(dim, std::vector<cxd>(dim, 0.0));
    for (std::size_t j = 0; j < dim; ++j) {
        cols[j][j] = 1.0;
        for (const Gate& g : circuit.gates) apply_gate_dense(cols[j], g, circuit.n_qubits);
    }
    return cols;
}

}  // namespace tbsim
