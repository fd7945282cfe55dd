#ifndef SPO2_COMMON_HPP
#define SPO2_COMMON_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace spo2 {

enum class ErrorCode {
    DegenerateHistogram,
    InsufficientContrast,
    EmptyMask,
    TooFewKnots,
    SignalTooShort,
    ReferenceGap,
    BadBoundaries,
    EmptyDataset,
    TooFewParticipants,
    ShapeMismatch,
    EmptyBatch,
    SpecInvalid,
    DivergenceDetected,
    NoPulse,
    DegenerateFit,
    BadBudget,
    NoOverlap,
    EmptyList,
    TooFewSamples,
    NonConvergence,
    IoError,
    ConfigError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

// Deterministic RNG. Distributions are hand-rolled on top of a fixed-width
// generator so that streams are identical across platforms and standard
// library versions (std::uniform_int_distribution et al. are
// implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        // splitmix64 expansion of the seed into four xoshiro256++ words
        state_[0] = splitmix(seed);
        state_[1] = splitmix(seed);
        state_[2] = splitmix(seed);
        state_[3] = splitmix(seed);
        has_spare_ = false;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform integer in [0, n), rejection sampled
    std::uint64_t uniform_u64(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }

    // standard normal, Box-Muller with cached spare
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // derive an independent child stream, e.g. one per training instance
    Rng child(std::uint64_t stream) const {
        Rng r(0);
        std::uint64_t s = state_[0] ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
        r.reseed(s);
        return r;
    }

private:
    std::uint64_t splitmix(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Shortest round-trip decimal formatting, used by every CSV/JSON writer so
// that artifacts are byte-stable across reruns.
inline std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    (void)ec;
    return std::string(buf, ptr);
}

double parse_double(std::string_view s);
std::int64_t parse_int(std::string_view s);

// FNV-1a, for config/content hashes in run manifests
std::uint64_t fnv1a(std::string_view data);
std::string fnv1a_hex(std::string_view data);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Minimal CSV support: comma separated, first row is the header.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(std::string_view name) const;
};

CsvTable read_csv(const std::string& path);

}  // namespace spo2

#endif
