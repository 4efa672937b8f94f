// Command-line front end: compile and run circuit files, run the compiled
// order finder, characterize gates, and benchmark large frames. Emits JSON
// reports and plot-ready CSVs.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tbsim/circuit_text.hpp"
#include "tbsim/compiler.hpp"
#include "tbsim/config.hpp"
#include "tbsim/detection.hpp"
#include "tbsim/shor.hpp"

using json = nlohmann::ordered_json;
using namespace tbsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUserError = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitResourceLimit = 4;

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::invalid_argument("cannot open '" + path + "' for writing");
    os << text;
}

void emit_json(const json& j, const std::string& path) {
    const std::string text = j.dump(2) + "\n";
    if (path.empty())
        std::cout << text;
    else
        write_text(path, text);
}

struct CommonFlags {
    std::string config_path;
    std::optional<std::string> loss;        // on|off
    std::optional<std::string> amplitudes;  // uniform|wavepacket
    std::optional<std::uint64_t> shots;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint32_t> n_bins;
    std::optional<double> bin_width_ns;
    std::optional<std::string> out_json;
    std::optional<std::string> out_events;
    std::optional<std::string> out_histogram;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "key = value config file (flags override it)");
    cmd->add_option("--loss", f.loss, "apply insertion losses: on|off")
        ->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--amplitudes", f.amplitudes, "initial amplitudes: uniform|wavepacket")
        ->check(CLI::IsMember({"uniform", "wavepacket"}));
    cmd->add_option("--shots", f.shots, "Monte-Carlo shots (0 = analytic only)");
    cmd->add_option("--seed", f.seed, "random seed for sampling");
    cmd->add_option("--n-bins", f.n_bins, "frame length in bins");
    cmd->add_option("--bin-width", f.bin_width_ns, "bin width in ns");
    cmd->add_option("--out-json", f.out_json, "JSON report path (default: stdout)");
}

RunConfig resolve_config(const CommonFlags& f) {
    RunConfig cfg;
    if (!f.config_path.empty()) {
        std::ifstream is(f.config_path);
        if (!is) throw std::invalid_argument("cannot open config file '" + f.config_path + "'");
        cfg = parse_config(is);
    }
    if (f.loss) cfg.loss_enabled = *f.loss == "on";
    if (f.amplitudes) cfg.amplitudes = *f.amplitudes;
    if (f.shots) cfg.shots = *f.shots;
    if (f.seed) cfg.seed = *f.seed;
    if (f.n_bins) cfg.n_bins = *f.n_bins;
    if (f.bin_width_ns) cfg.bin_width_ns = *f.bin_width_ns;
    if (f.out_json) cfg.out_json = *f.out_json;
    if (f.out_events) cfg.out_events_csv = *f.out_events;
    if (f.out_histogram) cfg.out_histogram_csv = *f.out_histogram;
    cfg.check();
    return cfg;
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

int cmd_run(const std::string& circuit_path, const CommonFlags& flags) {
    const RunConfig cfg = resolve_config(flags);
    std::ifstream is(circuit_path);
    if (!is) throw std::invalid_argument("cannot open circuit file '" + circuit_path + "'");
    const Circuit circuit = parse_circuit(is);

    const Frame frame = cfg.frame();
    const Schedule sched = compile(circuit, frame, cfg.losses());

    TimeBinState input(frame.n_bins, frame.bin_width_ns);
    if (cfg.amplitude_mode() == AmplitudeMode::Uniform) {
        input.amp(0, Pol::H) = 1.0;
    } else {
        const WavePacket packet{
            cfg.coherence_time_ns,
            cfg.wavepacket_center_ns.value_or(0.5 * frame.n_bins * frame.bin_width_ns)};
        input = shaped_state(packet, frame.n_bins, frame.bin_width_ns);
    }
    const TimeBinState out = run_schedule(sched, input, cfg.loss_enabled);
    const std::vector<double> probs = probabilities(out);

    json j;
    j["circuit"] = circuit_path;
    j["n_qubits"] = circuit.n_qubits;
    j["n_bins"] = frame.n_bins;
    j["bin_width_ns"] = frame.bin_width_ns;
    j["gates"] = circuit.gates.size();
    j["instructions"] = sched.instructions.size();
    j["loss_enabled"] = cfg.loss_enabled;
    j["total_loss_db"] = sched.total_loss_db();
    j["loss_transmission_product"] =
        cfg.loss_enabled ? loss_transmission(sched.total_loss_db()) : 1.0;
    j["survival_probability"] = out.squared_norm();
    json plist = json::array();
    for (std::uint32_t b = 0; b < frame.n_bins; ++b)
        plist.push_back(json{{"bin", b}, {"prob", probs[b]}});
    j["probabilities"] = std::move(plist);

    if (cfg.shots > 0) {
        const auto events = sample_events(out, cfg.detector(), cfg.shots, cfg.seed);
        std::uint64_t detected = 0;
        for (const auto& e : events) detected += e.detected;
        j["shots"] = cfg.shots;
        j["detected"] = detected;
        const std::string ev_path =
            cfg.out_events_csv.empty() ? "events.csv" : cfg.out_events_csv;
        const std::string hist_path =
            cfg.out_histogram_csv.empty() ? "histogram.csv" : cfg.out_histogram_csv;
        std::ostringstream ev;
        write_events_csv(ev, events);
        write_text(ev_path, ev.str());
        const auto edges = bin_edges(frame.n_bins, frame.bin_width_ns);
        std::ostringstream hs;
        write_histogram_csv(hs, edges, histogram(events, edges));
        write_text(hist_path, hs.str());
        j["events_csv"] = ev_path;
        j["histogram_csv"] = hist_path;
    }
    emit_json(j, cfg.out_json);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// shor
// ---------------------------------------------------------------------------

std::map<std::uint64_t, std::uint32_t> parse_encoding_file(const std::string& path,
                                                           int& n_fun_out) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open encoding file '" + path + "'");
    std::map<std::uint64_t, std::uint32_t> enc;
    std::string raw;
    std::size_t line_no = 0;
    int width = -1;
    while (std::getline(is, raw)) {
        ++line_no;
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        std::istringstream ls(raw);
        std::string residue_tok, bits;
        if (!(ls >> residue_tok)) continue;
        if (!(ls >> bits)) throw parse_error("expected '<residue> <bits>'", line_no);
        std::uint64_t residue = 0;
        try {
            residue = std::stoull(residue_tok);
        } catch (const std::exception&) {
            throw parse_error("bad residue '" + residue_tok + "'", line_no);
        }
        if (width < 0) width = static_cast<int>(bits.size());
        if (static_cast<int>(bits.size()) != width)
            throw parse_error("inconsistent label width", line_no);
        enc[residue] = bin_of_bits(bits);
    }
    if (enc.empty()) throw std::invalid_argument("encoding file '" + path + "' is empty");
    n_fun_out = width;
    return enc;
}

int cmd_shor(std::uint64_t N, std::uint64_t a, const std::string& qft_mode,
             const std::string& encoding_path, int n_arg_flag, const std::string& out_csv,
             const CommonFlags& flags) {
    const RunConfig cfg = resolve_config(flags);

    ShorConfig sc;
    sc.N = N;
    sc.a = a;
    if (!encoding_path.empty()) {
        int n_fun = 0;
        sc.encoding = parse_encoding_file(encoding_path, n_fun);
        sc.n_fun = n_fun;
        sc.n_arg = n_arg_flag;
    } else if (N == 15 && a == 2) {
        sc = ShorConfig::compiled_15_2();
    } else {
        throw unsupported_instance_error(
            "no built-in compiled template for N = " + std::to_string(N) + ", a = " +
            std::to_string(a) + "; supply --encoding");
    }

    ShorOptions opt;
    opt.qft = qft_mode == "classical" ? QftMode::Classical : QftMode::Compiled;
    opt.amplitudes = cfg.amplitude_mode();
    opt.loss_on = cfg.loss_enabled;
    opt.shots = cfg.shots;
    opt.seed = cfg.seed;
    opt.frame = cfg.frame();
    opt.losses = cfg.losses();
    opt.coherence_time_ns = cfg.coherence_time_ns;
    opt.wavepacket_center_ns = cfg.wavepacket_center_ns;
    opt.detector = cfg.detector();

    const ShorReport rep = run_shor(sc, opt);

    json j;
    j["N"] = sc.N;
    j["a"] = sc.a;
    j["n_arg"] = sc.n_arg;
    j["n_fun"] = sc.n_fun;
    j["qft"] = qft_mode;
    j["amplitudes"] = cfg.amplitudes;
    j["loss_enabled"] = cfg.loss_enabled;
    j["shots"] = rep.shots;
    j["seed"] = cfg.seed;
    j["total_loss_db"] = rep.total_loss_db;
    j["survival_probability"] = rep.survival;
    j["argument_marginal"] = rep.marginal;
    j["argument_marginal_normalized"] = rep.marginal_normalized;
    j["detected"] = rep.detected;
    j["counts"] = rep.counts;
    if (rep.order.order)
        j["order"] = *rep.order.order;
    else
        j["order"] = nullptr;
    if (rep.order.factors)
        j["factors"] = {rep.order.factors->first, rep.order.factors->second};
    else
        j["factors"] = nullptr;
    j["failure"] = rep.order.failure;
    json per = json::array();
    for (const SampleOutcome& s : rep.order.per_sample) {
        json e;
        e["y"] = s.y;
        if (s.order)
            e["order"] = *s.order;
        else
            e["order"] = nullptr;
        e["note"] = s.note;
        per.push_back(std::move(e));
    }
    j["per_sample"] = std::move(per);

    if (!out_csv.empty()) {
        std::ostringstream os;
        os << "y,probability,counts\n";
        for (std::size_t y = 0; y < rep.marginal_normalized.size(); ++y)
            os << y << "," << format_double(rep.marginal_normalized[y]) << ","
               << (y < rep.counts.size() ? rep.counts[y] : 0) << "\n";
        write_text(out_csv, os.str());
        j["bar_csv"] = out_csv;
    }
    emit_json(j, cfg.out_json);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// characterize
// ---------------------------------------------------------------------------

struct Bloch {
    double sx, sy, sz;
};

Bloch bloch_of(const TimeBinState& s) {
    const cxd a = s.amp(0, Pol::H), b = s.amp(1, Pol::H);
    const cxd cross = std::conj(a) * b;
    return {2.0 * cross.real(), 2.0 * cross.imag(), std::norm(a) - std::norm(b)};
}

int cmd_characterize(const std::string& target, int steps, const std::string& out_csv,
                     const CommonFlags& flags) {
    const RunConfig cfg = resolve_config(flags);
    if (steps < 2) throw std::invalid_argument("characterize: steps must be >= 2");
    json j;
    j["target"] = target;
    std::ostringstream csv;

    if (target == "cnot") {
        Circuit c;
        c.n_qubits = 2;
        c.layout = QubitLayout::numbered(2);
        c.gates = {Gate::cnot(1, 0)};
        const Frame frame{4, cfg.bin_width_ns};
        const Schedule sched = compile(c, frame, cfg.losses());
        json table = json::array();
        csv << "input,p00,p01,p10,p11\n";
        double max_off = 0.0;
        static const char* kets[4] = {"00", "01", "10", "11"};
        for (std::uint32_t in = 0; in < 4; ++in) {
            TimeBinState s(4, cfg.bin_width_ns);
            s.amp(in, Pol::H) = 1.0;
            const auto probs = probabilities(run_schedule(sched, s, cfg.loss_enabled));
            table.push_back(probs);
            csv << kets[in];
            for (double p : probs) csv << "," << format_double(p);
            csv << "\n";
            const std::uint32_t expect = in ^ ((in >> 1) & 1u);  // control q1 flips q0
            for (std::uint32_t out = 0; out < 4; ++out)
                if (out != expect) max_off = std::max(max_off, probs[out]);
        }
        j["truth_table"] = std::move(table);
        j["max_off_target"] = max_off;
    } else if (target == "ry-sweep" || target == "rz-sweep") {
        const bool ry = target == "ry-sweep";
        json rows = json::array();
        csv << "angle,sx,sy,sz\n";
        const Frame frame{2, cfg.bin_width_ns};
        for (int i = 0; i < steps; ++i) {
            const double angle = 2.0 * std::numbers::pi * i / (steps - 1);
            Circuit c;
            c.n_qubits = 1;
            c.layout = QubitLayout::numbered(1);
            if (ry)
                c.gates = {Gate::ry(0, angle)};
            else
                c.gates = {Gate::h(0), Gate::rz(0, angle)};
            TimeBinState s(2, cfg.bin_width_ns);
            s.amp(0, Pol::H) = 1.0;
            const TimeBinState out =
                run_schedule(compile(c, frame, cfg.losses()), s, cfg.loss_enabled);
            const Bloch bl = bloch_of(out);
            rows.push_back(json{{"angle", angle}, {"sx", bl.sx}, {"sy", bl.sy}, {"sz", bl.sz}});
            csv << format_double(angle) << "," << format_double(bl.sx) << ","
                << format_double(bl.sy) << "," << format_double(bl.sz) << "\n";
        }
        j["sweep"] = std::move(rows);
    } else {
        throw std::invalid_argument("characterize: target must be cnot, ry-sweep or rz-sweep");
    }

    if (!out_csv.empty()) {
        write_text(out_csv, csv.str());
        j["csv"] = out_csv;
    }
    emit_json(j, cfg.out_json);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

Gate random_bench_gate(std::mt19937_64& rng, int n) {
    auto uni = [&](double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    };
    const int kind = static_cast<int>(rng() % (n >= 2 ? 6 : 4));
    const int q = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
    switch (kind) {
        case 0: return Gate::h(q);
        case 1: return Gate::x(q);
        case 2: return Gate::ry(q, uni(-3.0, 3.0));
        case 3: return Gate::rz(q, uni(-3.0, 3.0));
        default: {
            int c = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
            while (c == q) c = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
            return kind == 4 ? Gate::cnot(c, q) : Gate::cphase(c, q, uni(-3.0, 3.0));
        }
    }
}

int cmd_bench(std::uint64_t n_bins, int depth, const CommonFlags& flags) {
    const RunConfig cfg = resolve_config(flags);
    const std::uint64_t seed = cfg.seed;
    if (n_bins > (1u << 16))
        throw resource_limit_error("bench: frame capped at 2^16 bins, got " +
                                   std::to_string(n_bins));
    if (n_bins == 0 || (n_bins & (n_bins - 1)) != 0)
        throw std::invalid_argument("bench: n_bins must be a power of two");
    int n_qubits = 0;
    while ((std::uint64_t{1} << n_qubits) < n_bins) ++n_qubits;
    if (n_qubits == 0) throw std::invalid_argument("bench: need at least 2 bins");

    std::mt19937_64 rng(seed);
    Circuit c;
    c.n_qubits = n_qubits;
    c.layout = QubitLayout::numbered(n_qubits);
    for (int d = 0; d < depth; ++d) c.gates.push_back(random_bench_gate(rng, n_qubits));

    const Frame frame{static_cast<std::uint32_t>(n_bins), cfg.bin_width_ns};
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const Schedule sched = compile(c, frame, cfg.losses());
    const auto t1 = clock::now();
    TimeBinState s(frame.n_bins, frame.bin_width_ns);
    s.amp(0, Pol::H) = 1.0;
    const TimeBinState out = run_schedule(sched, s, cfg.loss_enabled);
    const auto t2 = clock::now();

    const double compile_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    const double run_ms = std::chrono::duration<double, std::milli>(t2 - t1).count();
    json j;
    j["n_bins"] = n_bins;
    j["n_qubits"] = n_qubits;
    j["depth"] = depth;
    j["seed"] = seed;
    j["instructions"] = sched.instructions.size();
    j["compile_ms"] = compile_ms;
    j["run_ms"] = run_ms;
    j["total_ms"] = compile_ms + run_ms;
    j["state_bytes"] = out.size_bytes();
    j["survival_probability"] = out.squared_norm();
    emit_json(j, cfg.out_json);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "tbsim — single-photon time-bin circuit simulator for a programmable fiber loop.\n"
        "Settings resolve as: built-in defaults, then --config file, then flags."};
    app.require_subcommand(1);

    CommonFlags run_flags, shor_flags, char_flags, bench_flags;

    auto* run = app.add_subcommand("run", "compile and run a circuit file");
    std::string circuit_path;
    run->add_option("circuit", circuit_path, "circuit file")->required();
    add_common_flags(run, run_flags);
    run->add_option("--out-events", run_flags.out_events,
                    "events CSV path (with --shots; default events.csv)");
    run->add_option("--out-histogram", run_flags.out_histogram,
                    "histogram CSV path (with --shots; default histogram.csv)");

    auto* shor = app.add_subcommand("shor", "run the compiled order finder");
    std::uint64_t N = 15, a = 2;
    std::string qft_mode = "compiled", encoding_path, shor_csv;
    int n_arg_flag = 3;
    shor->add_option("--N", N, "integer to factor (default 15)");
    shor->add_option("--a", a, "coprime base (default 2)");
    shor->add_option("--qft", qft_mode, "transform mode: compiled|classical")
        ->check(CLI::IsMember({"compiled", "classical"}));
    shor->add_option("--encoding", encoding_path,
                     "residue encoding file ('<residue> <bits>' per line) for instances "
                     "without a built-in template");
    shor->add_option("--n-arg", n_arg_flag, "argument register width with --encoding");
    shor->add_option("--out-csv", shor_csv, "bar-data CSV path (y,probability,counts)");
    add_common_flags(shor, shor_flags);

    auto* chr = app.add_subcommand("characterize", "gate characterization reports");
    std::string target;
    int steps = 33;
    chr->add_option("target", target, "cnot | ry-sweep | rz-sweep")->required();
    chr->add_option("--steps", steps, "sweep points (default 33)");
    std::string char_csv;
    chr->add_option("--out-csv", char_csv, "CSV output path");
    add_common_flags(chr, char_flags);

    auto* bench = app.add_subcommand("bench", "compile + run a random circuit on a large frame");
    std::uint64_t bench_bins = 4096;
    int depth = 20;
    bench->add_option("n_bins", bench_bins, "frame length (power of two, <= 65536)")->required();
    bench->add_option("--depth", depth, "random circuit depth (default 20)");
    add_common_flags(bench, bench_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUserError;
    }

    try {
        if (run->parsed()) return cmd_run(circuit_path, run_flags);
        if (shor->parsed())
            return cmd_shor(N, a, qft_mode, encoding_path, n_arg_flag, shor_csv, shor_flags);
        if (chr->parsed()) return cmd_characterize(target, steps, char_csv, char_flags);
        if (bench->parsed()) return cmd_bench(bench_bins, depth, bench_flags);
    } catch (const schedule_infeasible_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const frame_overflow_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const resource_limit_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitResourceLimit;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUserError;
    }
    return kExitUserError;
}
