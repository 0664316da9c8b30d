#include "eschil/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace eschil {

std::string format_real_17g(Real v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_waveform_csv(const std::string& path, const Waveform& w) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SimError("cli", "cannot write '" + path + "'");
    out << "t";
    for (const auto& n : w.names) out << ',' << n;
    out << '\n';
    for (std::size_t j = 0; j < w.rows(); ++j) {
        out << format_real_17g(w.t[j]);
        for (const auto& col : w.cols) out << ',' << format_real_17g(col[j]);
        out << '\n';
    }
    if (!out) throw SimError("cli", "write failed for '" + path + "'");
}

Waveform read_waveform_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SimError("cli", "cannot read '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw SimError("cli", "empty waveform CSV '" + path + "'");

    Waveform w;
    {
        std::stringstream ss(line);
        std::string field;
        bool first = true;
        while (std::getline(ss, field, ',')) {
            if (first) {
                if (field != "t") throw SimError("cli", "waveform CSV must start with 't'");
                first = false;
            } else {
                w.names.push_back(field);
            }
        }
    }
    w.cols.assign(w.names.size(), {});
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::size_t i = 0;
        while (std::getline(ss, field, ',')) {
            const Real v = std::strtod(field.c_str(), nullptr);
            if (i == 0) {
                w.t.push_back(v);
            } else if (i - 1 < w.cols.size()) {
                w.cols[i - 1].push_back(v);
            }
            ++i;
        }
        if (i != w.names.size() + 1) throw SimError("cli", "ragged waveform CSV row");
    }
    return w;
}

void write_trace_csv(const std::string& path, const EventLog& log) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SimError("cli", "cannot write '" + path + "'");
    out << "seq,t_sim_s,kind,cycle,payload_summary\n";
    for (const auto& e : log.ordered()) {
        out << e.seq << ',' << format_real_17g(e.t_sim) << ',' << event_kind_name(e.kind) << ','
            << e.cycle << ',' << e.payload << '\n';
    }
    if (!out) throw SimError("cli", "write failed for '" + path + "'");
}

void write_spectrum_csv(const std::string& path, const Spectrum& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SimError("cli", "cannot write '" + path + "'");
    out << "freq_hz,magnitude\n";
    for (std::size_t i = 0; i < s.freq_hz.size(); ++i) {
        out << format_real_17g(s.freq_hz[i]) << ',' << format_real_17g(s.magnitude[i]) << '\n';
    }
    if (!out) throw SimError("cli", "write failed for '" + path + "'");
}

}  // namespace eschil
