#pragma once

// Checkpoint container, all integers and doubles little-endian:
//
//   char[8]  "RGYMCKPT"
//   u32      format version (1)
//   u32      obs_dim, act_dim, hidden
//   u32      observation normalization flag (0/1)
//   u64      parameter count P
//   f64[P]   parameters: pi.w1 pi.b1 pi.w2 pi.b2 pi.w3 pi.b3 log_std
//                        vf.w1 vf.b1 vf.w2 vf.b2 vf.w3 vf.b3, matrices row-major
//   f64      normalizer clip, sample count
//   f64[obs] normalizer mean, then variance
//   u64      metadata length L
//   u8[L]    metadata JSON (variant, model, update, timesteps, ...)

#include <Eigen/Core>
#include <json.hpp>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "reachgym/error.hpp"
#include "reachgym/mlp_policy.hpp"
#include "reachgym/running_stats.hpp"

namespace reachgym {

inline constexpr std::array<char, 8> kCheckpointMagic{'R', 'G', 'Y', 'M', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Policy weights plus the frozen observation normalizer they were trained with.
struct TrainedPolicy {
    PolicyParams params;
    ObsNormalizer normalizer;

    TrainedPolicy() = default;
    TrainedPolicy(PolicyParams p, ObsNormalizer n) : params(std::move(p)), normalizer(std::move(n)) {}

    Eigen::VectorXd act(const Eigen::VectorXd& raw_obs, Rng& rng, bool deterministic) const {
        return sample_action(params, normalizer.normalize(raw_obs), rng, deterministic).action;
    }
};

struct Checkpoint {
    TrainedPolicy policy;
    nlohmann::json metadata = nlohmann::json::object();
};

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
public:
    Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    std::uint64_t bytes(int n) {
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) {
            const int c = in_.get();
            if (c == std::char_traits<char>::eof()) fail("truncated file");
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
        }
        return v;
    }
    std::uint32_t u32() { return static_cast<std::uint32_t>(bytes(4)); }
    std::uint64_t u64() { return bytes(8); }
    double f64() { return std::bit_cast<double>(bytes(8)); }

    [[noreturn]] void fail(const std::string& why) const { throw LoadError("checkpoint " + source_ + ": " + why); }

private:
    std::istream& in_;
    std::string source_;
};

}  // namespace detail

inline void write_checkpoint(std::ostream& out, const Checkpoint& ck) {
    const PolicyParams& p = ck.policy.params;
    const ObsNormalizer& n = ck.policy.normalizer;
    const PolicyShape& s = p.shape();
    out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
    detail::put_u32(out, kCheckpointVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(s.obs_dim));
    detail::put_u32(out, static_cast<std::uint32_t>(s.act_dim));
    detail::put_u32(out, static_cast<std::uint32_t>(s.hidden));
    detail::put_u32(out, n.enabled ? 1u : 0u);
    detail::put_u64(out, static_cast<std::uint64_t>(p.flat().size()));
    for (double v : p.flat()) detail::put_f64(out, v);
    detail::put_f64(out, n.clip);
    detail::put_f64(out, n.stats.count());
    for (double v : n.stats.mean()) detail::put_f64(out, v);
    for (double v : n.stats.var()) detail::put_f64(out, v);
    const std::string meta = ck.metadata.dump();
    detail::put_u64(out, meta.size());
    out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
}

inline Checkpoint read_checkpoint(std::istream& in, const std::string& source = "<stream>") {
    detail::Reader r(in, source);
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kCheckpointMagic) r.fail("not a checkpoint file");
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion) r.fail("unsupported format version " + std::to_string(version));
    PolicyShape shape;
    shape.obs_dim = static_cast<int>(r.u32());
    shape.act_dim = static_cast<int>(r.u32());
    shape.hidden = static_cast<int>(r.u32());
    if (shape.obs_dim < 1 || shape.act_dim < 1 || shape.hidden < 1 || shape.obs_dim > 1 << 16 ||
        shape.act_dim > 1 << 16 || shape.hidden > 1 << 16)
        r.fail("implausible architecture header");
    const bool normalize = r.u32() != 0;
    const std::uint64_t count = r.u64();
    if (count != static_cast<std::uint64_t>(shape.param_count()))
        r.fail("parameter count " + std::to_string(count) + " does not match the architecture header");
    Checkpoint ck;
    ck.policy.params = PolicyParams(shape);
    for (auto& v : ck.policy.params.flat()) v = r.f64();
    ck.policy.normalizer = ObsNormalizer(shape.obs_dim, normalize);
    ck.policy.normalizer.clip = r.f64();
    const double samples = r.f64();
    Eigen::VectorXd mean(shape.obs_dim), var(shape.obs_dim);
    for (auto& v : mean) v = r.f64();
    for (auto& v : var) v = r.f64();
    ck.policy.normalizer.stats.set(std::move(mean), std::move(var), samples);
    const std::uint64_t meta_len = r.u64();
    if (meta_len > (1u << 24)) r.fail("implausible metadata length");
    std::string meta(meta_len, '\0');
    if (!in.read(meta.data(), static_cast<std::streamsize>(meta_len))) r.fail("truncated metadata");
    try {
        ck.metadata = nlohmann::json::parse(meta);
    } catch (const nlohmann::json::parse_error&) {
        r.fail("corrupt metadata");
    }
    if (!ck.policy.params.all_finite()) r.fail("non-finite parameters");
    return ck;
}

inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw TrainingError("cannot write checkpoint " + path.string());
    write_checkpoint(out, ck);
    out.flush();
    if (!out) throw TrainingError("failed writing checkpoint " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open checkpoint " + path.string());
    return read_checkpoint(in, path.string());
}

/// Loads and checks the architecture against an environment's widths.
inline Checkpoint load_checkpoint(const std::filesystem::path& path, int obs_dim, int act_dim) {
    Checkpoint ck = load_checkpoint(path);
    const PolicyShape& s = ck.policy.params.shape();
    if (s.obs_dim != obs_dim || s.act_dim != act_dim)
        throw LoadError("checkpoint " + path.string() + " is for observation/action widths " +
                        std::to_string(s.obs_dim) + "/" + std::to_string(s.act_dim) + ", environment has " +
                        std::to_string(obs_dim) + "/" + std::to_string(act_dim));
    return ck;
}

}  // namespace reachgym
