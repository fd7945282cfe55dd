#include "spo2/common.hpp"

#include <fstream>
#include <sstream>

namespace spo2 {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::DegenerateHistogram: return "DegenerateHistogram";
        case ErrorCode::InsufficientContrast: return "InsufficientContrast";
        case ErrorCode::EmptyMask: return "EmptyMask";
        case ErrorCode::TooFewKnots: return "TooFewKnots";
        case ErrorCode::SignalTooShort: return "SignalTooShort";
        case ErrorCode::ReferenceGap: return "ReferenceGap";
        case ErrorCode::BadBoundaries: return "BadBoundaries";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::TooFewParticipants: return "TooFewParticipants";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::EmptyBatch: return "EmptyBatch";
        case ErrorCode::SpecInvalid: return "SpecInvalid";
        case ErrorCode::DivergenceDetected: return "DivergenceDetected";
        case ErrorCode::NoPulse: return "NoPulse";
        case ErrorCode::DegenerateFit: return "DegenerateFit";
        case ErrorCode::BadBudget: return "BadBudget";
        case ErrorCode::NoOverlap: return "NoOverlap";
        case ErrorCode::EmptyList: return "EmptyList";
        case ErrorCode::TooFewSamples: return "TooFewSamples";
        case ErrorCode::NonConvergence: return "NonConvergence";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "UnknownError";
}

double parse_double(std::string_view s) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw Error(ErrorCode::IoError, "bad numeric field '" + std::string(s) + "'");
    return value;
}

std::int64_t parse_int(std::string_view s) {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw Error(ErrorCode::IoError, "bad integer field '" + std::string(s) + "'");
    return value;
}

std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fnv1a_hex(std::string_view data) {
    static const char* digits = "0123456789abcdef";
    std::uint64_t h = fnv1a(data);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << content;
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

int CsvTable::column(std::string_view name) const {
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    throw Error(ErrorCode::IoError, "missing CSV column '" + std::string(name) + "'");
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        size_t start = 0;
        while (true) {
            size_t comma = line.find(',', start);
            if (comma == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, comma - start));
            start = comma + 1;
        }
        if (first) {
            table.header = std::move(fields);
            first = false;
        } else {
            table.rows.push_back(std::move(fields));
        }
    }
    if (first) throw Error(ErrorCode::IoError, "empty CSV " + path);
    return table;
}

}  // namespace spo2
