#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tbsim/state.hpp"
#include "tbsim/util.hpp"

namespace tbsim {

// Double-exponential temporal envelope:
//   intensity(t) = (2/T) exp(-4 |t - center| / T)
// where T is the 1/e^2 full width of the intensity, so the envelope
// integrates to 1 over the real line.
struct WavePacket {
    double coherence_time_ns = 148.0;
    double center_ns = 0.0;

    double intensity(double t_ns) const {
        const double T = coherence_time_ns;
        return (2.0 / T) * std::exp(-4.0 * std::abs(t_ns - center_ns) / T);
    }

    // Closed-form integral of the intensity over [a, b].
    double integral(double a_ns, double b_ns) const {
        if (b_ns < a_ns) return 0.0;
        const double lam = 4.0 / coherence_time_ns;
        auto cdf = [&](double t) {
            const double u = t - center_ns;
            return u < 0.0 ? 0.5 * std::exp(lam * u) : 1.0 - 0.5 * std::exp(-lam * u);
        };
        return cdf(b_ns) - cdf(a_ns);
    }

    static WavePacket centered_on_frame(double coherence_time_ns, std::uint32_t n_bins,
                                        double bin_width_ns) {
        return {coherence_time_ns, 0.5 * n_bins * bin_width_ns};
    }
};

struct DetectorModel {
    double efficiency = 0.15;
    double jitter_sigma_ns = 0.15;
    double time_resolution_ns = 0.1;  // digitizer quantization step
    double dark_rate_hz = 0.0;

    void check() const {
        if (!(efficiency >= 0.0 && efficiency <= 1.0))
            throw std::invalid_argument("DetectorModel: efficiency must lie in [0, 1]");
        if (!(time_resolution_ns > 0.0))
            throw std::invalid_argument("DetectorModel: time_resolution_ns must be > 0");
        if (jitter_sigma_ns < 0.0 || dark_rate_hz < 0.0)
            throw std::invalid_argument("DetectorModel: negative jitter or dark rate");
    }
};

struct EventRecord {
    std::uint64_t shot = 0;
    bool detected = false;
    double arrival_ns = 0.0;  // meaningful only when detected
    std::int32_t bin = -1;    // frame bin of the (quantized) arrival
};

// Deterministic across platforms: consumes raw mt19937_64 output only, so a
// seed pins the full event stream regardless of the standard library.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : eng_(seed) {}

    double uniform() {  // [0, 1)
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 == 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    std::uint64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        std::uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }

    // Index into a cumulative distribution (non-normalized cdf allowed; draw
    // is u * cdf.back()).
    std::size_t categorical(const std::vector<double>& cdf) {
        const double u = uniform() * cdf.back();
        return static_cast<std::size_t>(
            std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Bin amplitudes carved from the wave packet: amplitude_b = sqrt of the
// envelope intensity integrated over bin b, renormalized over the frame.
// Requires the frame to cover >= 99% of the envelope unless overridden.
inline TimeBinState shaped_state(const WavePacket& packet, std::uint32_t n_bins,
                                 double bin_width_ns, bool allow_low_coverage = false) {
    if (n_bins == 0 || !(bin_width_ns > 0.0))
        throw std::invalid_argument("shaped_state: frame dimensions must be positive");
    if (!(packet.coherence_time_ns > 0.0))
        throw std::invalid_argument("shaped_state: coherence time must be > 0");
    const double coverage = packet.integral(0.0, n_bins * bin_width_ns);
    if (coverage < 0.99 && !allow_low_coverage)
        throw std::invalid_argument("shaped_state: frame covers only " +
                                    format_double(coverage) +
                                    " of the envelope (need >= 0.99 or an override)");
    TimeBinState s(n_bins, bin_width_ns);
    double total = 0.0;
    std::vector<double> w(n_bins);
    for (std::uint32_t b = 0; b < n_bins; ++b) {
        w[b] = packet.integral(b * bin_width_ns, (b + 1) * bin_width_ns);
        total += w[b];
    }
    if (!(total > 0.0))
        throw std::invalid_argument("shaped_state: envelope does not overlap the frame");
    for (std::uint32_t b = 0; b < n_bins; ++b)
        s.amp(b, Pol::H) = std::sqrt(w[b] / total);
    return s;
}

// Monte-Carlo detection. Per shot the photon is seen with probability
// (squared norm x efficiency); a seen photon draws its bin from the state,
// picks up Gaussian jitter and is quantized to the digitizer step. Dark
// counts (if any) arrive uniformly over the frame.
inline std::vector<EventRecord> sample_events(const TimeBinState& state,
                                              const DetectorModel& det, std::uint64_t shots,
                                              std::uint64_t seed) {
    det.check();
    if (shots < 1) throw std::invalid_argument("sample_events: shots must be >= 1");
    const std::uint32_t B = state.n_bins();
    const double frame = state.frame_ns();
    const std::vector<double> probs = probabilities(state);
    std::vector<double> cdf(B);
    double acc = 0.0;
    for (std::uint32_t b = 0; b < B; ++b) {
        acc += probs[b];
        cdf[b] = acc;
    }
    const double p_detect = std::min(1.0, state.squared_norm() * det.efficiency);
    const double dark_mean = det.dark_rate_hz * frame * 1e-9;

    RandomStream rng(seed);
    std::vector<EventRecord> events;  // one record per shot plus dark counts
    events.reserve(static_cast<std::size_t>(static_cast<double>(shots) * (1.0 + dark_mean)) + 16);

    auto record_arrival = [&](std::uint64_t shot, double t) {
        t = std::round(t / det.time_resolution_ns) * det.time_resolution_ns;
        t = std::clamp(t, 0.0, std::nexttoward(frame, 0.0));
        const auto bin = static_cast<std::int32_t>(
            std::min<double>(std::floor(t / state.bin_width_ns()), B - 1));
        events.push_back({shot, true, t, bin});
    };

    for (std::uint64_t shot = 0; shot < shots; ++shot) {
        if (acc > 0.0 && rng.uniform() < p_detect) {
            const std::size_t b = rng.categorical(cdf);
            double t = state.bin_center_ns(static_cast<std::uint32_t>(b));
            if (det.jitter_sigma_ns > 0.0) t += det.jitter_sigma_ns * rng.gaussian();
            record_arrival(shot, t);
        } else {
            events.push_back({shot, false, 0.0, -1});
        }
        if (dark_mean > 0.0) {
            const std::uint64_t n_dark = rng.poisson(dark_mean);
            for (std::uint64_t d = 0; d < n_dark; ++d) record_arrival(shot, rng.uniform() * frame);
        }
    }
    return events;
}

// Counts of detected arrivals per interval [edge_i, edge_{i+1}).
inline std::vector<std::uint64_t> histogram(const std::vector<EventRecord>& events,
                                            const std::vector<double>& edges) {
    if (edges.size() < 2) throw std::invalid_argument("histogram: need at least two edges");
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (!(edges[i] > edges[i - 1]))
            throw std::invalid_argument("histogram: edges must be strictly increasing");
    std::vector<std::uint64_t> counts(edges.size() - 1, 0);
    for (const EventRecord& e : events) {
        if (!e.detected) continue;
        if (e.arrival_ns < edges.front() || e.arrival_ns >= edges.back()) continue;
        const std::size_t i = static_cast<std::size_t>(
            std::upper_bound(edges.begin(), edges.end(), e.arrival_ns) - edges.begin() - 1);
        ++counts[i];
    }
    return counts;
}

inline std::vector<double> bin_edges(std::uint32_t n_bins, double bin_width_ns) {
    std::vector<double> edges(n_bins + 1);
    for (std::uint32_t b = 0; b <= n_bins; ++b) edges[b] = b * bin_width_ns;
    return edges;
}

inline void write_events_csv(std::ostream& os, const std::vector<EventRecord>& events) {
    os << "shot,detected,arrival_ns,bin\n";
    for (const EventRecord& e : events) {
        if (e.detected)
            os << e.shot << ",1," << format_double(e.arrival_ns) << "," << e.bin << "\n";
        else
            os << e.shot << ",0,,\n";
    }
}

inline void write_histogram_csv(std::ostream& os, const std::vector<double>& edges,
                                const std::vector<std::uint64_t>& counts) {
    os << "bin_start_ns,bin_end_ns,count\n";
    for (std::size_t i = 0; i < counts.size(); ++i)
        os << format_double(edges[i]) << "," << format_double(edges[i + 1]) << "," << counts[i]
           << "\n";
}

}  // namespace tbsim
