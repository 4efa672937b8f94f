#pragma once

#include <istream>
#include <optional>
#include <sstream>
#include <string>

#include "tbsim/compiler.hpp"
#include "tbsim/detection.hpp"
#include "tbsim/errors.hpp"
#include "tbsim/shor.hpp"
#include "tbsim/util.hpp"

namespace tbsim {

// Flat key-value run configuration. Serialization emits keys in a fixed
// order with round-trip-exact numbers, so parse(serialize(c)) reproduces the
// bytes of serialize(c).
struct RunConfig {
    std::uint32_t n_bins = 32;
    double bin_width_ns = kDefaultBinWidthNs;
    bool loss_enabled = false;
    double loss_phase_db = 2.0;
    double loss_pol_rotate_db = 3.5;
    double loss_delay_db = 0.0;
    double loss_attenuate_db = 0.0;
    std::string amplitudes = "uniform";  // uniform | wavepacket
    double coherence_time_ns = 148.0;
    std::optional<double> wavepacket_center_ns;  // absent = auto
    double efficiency = 0.15;
    double jitter_sigma_ns = 0.15;
    double time_resolution_ns = 0.1;
    double dark_rate_hz = 0.0;
    std::uint64_t shots = 0;
    std::uint64_t seed = 1;
    std::string out_json;
    std::string out_events_csv;
    std::string out_histogram_csv;

    Frame frame() const { return Frame{n_bins, bin_width_ns}; }
    LossTable losses() const {
        return LossTable{loss_phase_db, loss_pol_rotate_db, loss_delay_db, loss_attenuate_db};
    }
    DetectorModel detector() const {
        return DetectorModel{efficiency, jitter_sigma_ns, time_resolution_ns, dark_rate_hz};
    }
    AmplitudeMode amplitude_mode() const {
        if (amplitudes == "uniform") return AmplitudeMode::Uniform;
        if (amplitudes == "wavepacket") return AmplitudeMode::Wavepacket;
        throw std::invalid_argument("config: amplitudes must be 'uniform' or 'wavepacket'");
    }

    void check() const {
        if (n_bins == 0) throw std::invalid_argument("config: n_bins must be >= 1");
        if (!(bin_width_ns > 0.0)) throw std::invalid_argument("config: bin_width_ns must be > 0");
        if (loss_phase_db < 0.0 || loss_pol_rotate_db < 0.0 || loss_delay_db < 0.0 ||
            loss_attenuate_db < 0.0)
            throw std::invalid_argument("config: losses must be >= 0 dB");
        if (!(coherence_time_ns > 0.0))
            throw std::invalid_argument("config: coherence_time_ns must be > 0");
        amplitude_mode();
        detector().check();
    }
};

inline std::string serialize_config(const RunConfig& c) {
    std::ostringstream os;
    os << "n_bins = " << c.n_bins << "\n";
    os << "bin_width_ns = " << format_double(c.bin_width_ns) << "\n";
    os << "loss_enabled = " << (c.loss_enabled ? "on" : "off") << "\n";
    os << "loss_phase_db = " << format_double(c.loss_phase_db) << "\n";
    os << "loss_pol_rotate_db = " << format_double(c.loss_pol_rotate_db) << "\n";
    os << "loss_delay_db = " << format_double(c.loss_delay_db) << "\n";
    os << "loss_attenuate_db = " << format_double(c.loss_attenuate_db) << "\n";
    os << "amplitudes = " << c.amplitudes << "\n";
    os << "coherence_time_ns = " << format_double(c.coherence_time_ns) << "\n";
    os << "wavepacket_center_ns = "
       << (c.wavepacket_center_ns ? format_double(*c.wavepacket_center_ns) : std::string("auto"))
       << "\n";
    os << "efficiency = " << format_double(c.efficiency) << "\n";
    os << "jitter_sigma_ns = " << format_double(c.jitter_sigma_ns) << "\n";
    os << "time_resolution_ns = " << format_double(c.time_resolution_ns) << "\n";
    os << "dark_rate_hz = " << format_double(c.dark_rate_hz) << "\n";
    os << "shots = " << c.shots << "\n";
    os << "seed = " << c.seed << "\n";
    os << "out_json = " << c.out_json << "\n";
    os << "out_events_csv = " << c.out_events_csv << "\n";
    os << "out_histogram_csv = " << c.out_histogram_csv << "\n";
    return os.str();
}

inline RunConfig parse_config(std::istream& in) {
    RunConfig c;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::size_t eq = raw.find('=');
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        if (eq == std::string::npos) {
            if (!trim(raw).empty())
                throw parse_error("expected 'key = value', got '" + trim(raw) + "'", line_no);
            continue;
        }
        const std::string key = trim(raw.substr(0, eq));
        const std::string value = trim(raw.substr(eq + 1));
        auto as_double = [&]() -> double {
            try {
                std::size_t used = 0;
                const double v = std::stod(value, &used);
                if (used != value.size()) throw std::invalid_argument(value);
                return v;
            } catch (const std::exception&) {
                throw parse_error("key '" + key + "' needs a number, got '" + value + "'",
                                  line_no);
            }
        };
        auto as_u64 = [&]() -> std::uint64_t {
            try {
                std::size_t used = 0;
                const std::uint64_t v = std::stoull(value, &used);
                if (used != value.size()) throw std::invalid_argument(value);
                return v;
            } catch (const std::exception&) {
                throw parse_error("key '" + key + "' needs an integer, got '" + value + "'",
                                  line_no);
            }
        };
        auto as_switch = [&]() -> bool {
            if (value == "on" || value == "true" || value == "1") return true;
            if (value == "off" || value == "false" || value == "0") return false;
            throw parse_error("key '" + key + "' needs on/off, got '" + value + "'", line_no);
        };

        if (key == "n_bins") c.n_bins = static_cast<std::uint32_t>(as_u64());
        else if (key == "bin_width_ns") c.bin_width_ns = as_double();
        else if (key == "loss_enabled") c.loss_enabled = as_switch();
        else if (key == "loss_phase_db") c.loss_phase_db = as_double();
        else if (key == "loss_pol_rotate_db") c.loss_pol_rotate_db = as_double();
        else if (key == "loss_delay_db") c.loss_delay_db = as_double();
        else if (key == "loss_attenuate_db") c.loss_attenuate_db = as_double();
        else if (key == "amplitudes") c.amplitudes = value;
        else if (key == "coherence_time_ns") c.coherence_time_ns = as_double();
        else if (key == "wavepacket_center_ns") {
            if (value == "auto") c.wavepacket_center_ns.reset();
            else c.wavepacket_center_ns = as_double();
        }
        else if (key == "efficiency") c.efficiency = as_double();
        else if (key == "jitter_sigma_ns") c.jitter_sigma_ns = as_double();
        else if (key == "time_resolution_ns") c.time_resolution_ns = as_double();
        else if (key == "dark_rate_hz") c.dark_rate_hz = as_double();
        else if (key == "shots") c.shots = as_u64();
        else if (key == "seed") c.seed = as_u64();
        else if (key == "out_json") c.out_json = value;
        else if (key == "out_events_csv") c.out_events_csv = value;
        else if (key == "out_histogram_csv") c.out_histogram_csv = value;
        else throw parse_error("unknown key '" + key + "'", line_no);
    }
    c.check();
    return c;
}

inline RunConfig parse_config(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is);
}

}  // namespace tbsim
