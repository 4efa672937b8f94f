#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tbsim {

using cxd = std::complex<double>;

// Squared-norm bookkeeping tolerance used across the library.
inline constexpr double kNormEps = 1e-12;

// Default bin width: a 16-bin hop equals a 200 ns fiber delay line.
inline constexpr double kDefaultBinWidthNs = 12.5;

enum class Pol : std::uint8_t { H = 0, V = 1 };

inline Pol other(Pol p) { return p == Pol::H ? Pol::V : Pol::H; }

// One photon spread over n_bins time bins and two polarization rails.
// Amplitudes are sub-normalized: 1 - squared_norm() is the probability that
// the photon was lost upstream. Bin labels ride on the H rail; see
// apply_delay for what that means for polarization-selective delays.
class TimeBinState {
public:
    explicit TimeBinState(std::uint32_t n_bins,
                          double bin_width_ns = kDefaultBinWidthNs)
        : n_bins_(n_bins), bin_width_ns_(bin_width_ns), amps_(2 * std::size_t{n_bins}) {
        if (n_bins == 0)
            throw std::invalid_argument("TimeBinState: n_bins must be >= 1");
        if (!(bin_width_ns > 0.0))
            throw std::invalid_argument("TimeBinState: bin_width_ns must be > 0");
    }

    std::uint32_t n_bins() const { return n_bins_; }
    double bin_width_ns() const { return bin_width_ns_; }
    double frame_ns() const { return n_bins_ * bin_width_ns_; }
    double bin_center_ns(std::uint32_t b) const { return (b + 0.5) * bin_width_ns_; }

    cxd amp(std::uint32_t bin, Pol p) const { return amps_[index(bin, p)]; }
    cxd& amp(std::uint32_t bin, Pol p) { return amps_[index(bin, p)]; }

    double squared_norm() const {
        double s = 0.0;
        for (const cxd& a : amps_) s += std::norm(a);
        return s;
    }

    std::size_t size_bytes() const { return amps_.size() * sizeof(cxd); }

    bool same_frame(const TimeBinState& o) const {
        return n_bins_ == o.n_bins_ && bin_width_ns_ == o.bin_width_ns_;
    }

private:
    std::size_t index(std::uint32_t bin, Pol p) const {
        if (bin >= n_bins_)
            throw std::invalid_argument("TimeBinState: bin " + std::to_string(bin) +
                                        " out of range [0, " + std::to_string(n_bins_) + ")");
        return bin + (p == Pol::V ? std::size_t{n_bins_} : 0);
    }

    std::uint32_t n_bins_;
    double bin_width_ns_;
    std::vector<cxd> amps_;  // H rail [0, B), V rail [B, 2B)
};

// Qubit q_k occupies bit position k of the bin index: b = sum_k q_k 2^k.
struct QubitLayout {
    std::vector<std::string> names;  // names[k] = qubit at bit position k

    int n_qubits() const { return static_cast<int>(names.size()); }

    int bit_of(const std::string& name) const {
        for (std::size_t k = 0; k < names.size(); ++k)
            if (names[k] == name) return static_cast<int>(k);
        throw std::invalid_argument("QubitLayout: unknown qubit '" + name + "'");
    }

    static QubitLayout numbered(int n) {
        QubitLayout l;
        for (int k = 0; k < n; ++k) l.names.push_back("q" + std::to_string(k));
        return l;
    }
};

// Bit strings are written most-significant bit first: "10111" is bin 23.
inline std::uint32_t bin_of_bits(const std::string& bits) {
    std::uint32_t b = 0;
    for (char c : bits) {
        if (c != '0' && c != '1')
            throw std::invalid_argument("bin_of_bits: bit string must be over {0,1}");
        b = (b << 1) | static_cast<std::uint32_t>(c - '0');
    }
    return b;
}

inline TimeBinState uniform_state(std::uint32_t n_bins, Pol p = Pol::H,
                                  double bin_width_ns = kDefaultBinWidthNs) {
    if (n_bins == 0) throw std::invalid_argument("uniform_state: n_bins must be >= 1");
    TimeBinState s(n_bins, bin_width_ns);
    const double a = 1.0 / std::sqrt(static_cast<double>(n_bins));
    for (std::uint32_t b = 0; b < n_bins; ++b) s.amp(b, p) = a;
    return s;
}

inline TimeBinState basis_state(const QubitLayout& layout, const std::string& bits,
                                double bin_width_ns = kDefaultBinWidthNs) {
    if (static_cast<int>(bits.size()) != layout.n_qubits())
        throw std::invalid_argument("basis_state: bit string length " +
                                    std::to_string(bits.size()) + " != " +
                                    std::to_string(layout.n_qubits()) + " qubits");
    TimeBinState s(1u << layout.n_qubits(), bin_width_ns);
    s.amp(bin_of_bits(bits), Pol::H) = 1.0;
    return s;
}

// Per-bin probabilities summed over polarization; sums to the squared norm.
inline std::vector<double> probabilities(const TimeBinState& s) {
    std::vector<double> p(s.n_bins());
    for (std::uint32_t b = 0; b < s.n_bins(); ++b)
        p[b] = std::norm(s.amp(b, Pol::H)) + std::norm(s.amp(b, Pol::V));
    return p;
}

inline cxd overlap(const TimeBinState& a, const TimeBinState& b) {
    if (a.n_bins() != b.n_bins())
        throw std::invalid_argument("overlap: states have different frame lengths");
    cxd s = 0.0;
    for (std::uint32_t i = 0; i < a.n_bins(); ++i) {
        s += std::conj(a.amp(i, Pol::H)) * b.amp(i, Pol::H);
        s += std::conj(a.amp(i, Pol::V)) * b.amp(i, Pol::V);
    }
    return s;
}

}  // namespace tbsim
