#pragma once

// Binary checkpoint: everything needed to regenerate samples or resume
// training bit-exactly. Layout (little-endian):
//
//   "GENCKPT\0"  u32 format_version
//   str  config echo (JSON text, stored verbatim)
//   cfg  TrainConfig fields
//   u32  epochs_completed
//   fmap u64 d, u64 D, u64 seed, f64[D*d] directions (row-major), f64[d] log_scale
//   ball u64 2D, f64[2D] centre, f64 radius_sq, f64 lambda
//   gen  u64 noise_dim, u32 noise_kind, u64 layers, per layer:
//        u64 in, u64 out, u32 activation, f64[out*in] weight (row-major), f64[out] bias
//   str  shuffle rng state, str noise rng state
//   u8   has_scale [u64 d, f64[d] shift, f64[d] factor]
//   adam x2 (ball, generator)
//   u64  FNV-1a hash of every preceding byte
//
// str = u64 length + bytes; vectors carry their length where not implied.

#include "gen/adam.hpp"
#include "gen/ball.hpp"
#include "gen/config.hpp"
#include "gen/data.hpp"
#include "gen/generator.hpp"
#include "gen/rff.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

namespace gen {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[8] = {'G', 'E', 'N', 'C', 'K', 'P', 'T', '\0'};

struct Checkpoint {
    std::uint32_t format_version = kCheckpointVersion;
    std::string config_json;
    TrainConfig config;
    int epochs_completed = 0;
    FeatureMap feature_map;
    Ball ball;
    Generator generator;
    std::string shuffle_rng_state;
    std::string noise_rng_state;
    std::optional<ScaleRecord> scale_applied;
    AdamState ball_opt;
    AdamState gen_opt;
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class ByteWriter {
public:
    template <typename T>
    void pod(T v) {
        static_assert(std::is_trivially_copyable_v<T>);
        char buf[sizeof(T)];
        std::memcpy(buf, &v, sizeof(T));
        out_.append(buf, sizeof(T));
    }
    void u8(std::uint8_t v) { pod(v); }
    void u32(std::uint32_t v) { pod(v); }
    void u64(std::uint64_t v) { pod(v); }
    void i64(std::int64_t v) { pod(v); }
    void f64(double v) { pod(v); }
    void str(std::string_view s) {
        u64(s.size());
        out_.append(s.data(), s.size());
    }
    void doubles(const double* p, std::size_t n) { out_.append(reinterpret_cast<const char*>(p), n * sizeof(double)); }
    void vec(const Vector& v) {
        u64(static_cast<std::uint64_t>(v.size()));
        doubles(v.data(), static_cast<std::size_t>(v.size()));
    }
    void raw(const char* p, std::size_t n) { out_.append(p, n); }
    std::string& bytes() { return out_; }

private:
    std::string out_;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view in) : in_(in) {}

    template <typename T>
    T pod() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, in_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::uint8_t u8() { return pod<std::uint8_t>(); }
    std::uint32_t u32() { return pod<std::uint32_t>(); }
    std::uint64_t u64() { return pod<std::uint64_t>(); }
    std::int64_t i64() { return pod<std::int64_t>(); }
    double f64() { return pod<double>(); }
    std::uint64_t count(std::uint64_t limit = (1ULL << 32)) {
        const auto n = u64();
        if (n > limit) throw CheckpointError("checkpoint declares an implausible size " + std::to_string(n));
        return n;
    }
    std::string str() {
        const auto n = count();
        need(n);
        std::string s(in_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    void doubles(double* p, std::size_t n) {
        need(n * sizeof(double));
        std::memcpy(p, in_.data() + pos_, n * sizeof(double));
        pos_ += n * sizeof(double);
    }
    Vector vec() {
        const auto n = count();
        Vector v(static_cast<Eigen::Index>(n));
        doubles(v.data(), n);
        return v;
    }
    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return in_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) throw CheckpointError("checkpoint is truncated");
    }
    std::string_view in_;
    std::size_t pos_ = 0;
};

inline void write_adam(ByteWriter& w, const AdamState& a) {
    w.f64(a.beta1);
    w.f64(a.beta2);
    w.f64(a.eps);
    w.i64(a.step);
    w.u64(a.m.size());
    for (std::size_t k = 0; k < a.m.size(); ++k) {
        w.vec(a.m[k]);
        w.vec(a.v[k]);
    }
}

inline AdamState read_adam(ByteReader& r) {
    AdamState a;
    a.beta1 = r.f64();
    a.beta2 = r.f64();
    a.eps = r.f64();
    a.step = r.i64();
    const auto blocks = r.count(1 << 20);
    for (std::uint64_t k = 0; k < blocks; ++k) {
        a.m.push_back(r.vec());
        a.v.push_back(r.vec());
    }
    return a;
}

inline void write_config(ByteWriter& w, const TrainConfig& c) {
    w.f64(c.lambda);
    w.u64(static_cast<std::uint64_t>(c.num_features));
    w.u32(static_cast<std::uint32_t>(c.total_epochs));
    w.u32(static_cast<std::uint32_t>(c.phase1_epochs));
    w.u64(static_cast<std::uint64_t>(c.batch_size));
    w.f64(c.lr_ball);
    w.f64(c.lr_gen);
    w.f64(c.fm_weight);
    w.u64(c.seed);
    w.u32(static_cast<std::uint32_t>(c.noise.kind));
    w.u64(static_cast<std::uint64_t>(c.noise.dim));
    w.u64(c.generator.hidden.size());
    for (auto h : c.generator.hidden) w.u64(static_cast<std::uint64_t>(h));
    w.u32(static_cast<std::uint32_t>(c.generator.hidden_activation));
    w.u32(static_cast<std::uint32_t>(c.generator.output_activation));
    w.f64(c.initial_log_scale);
    w.u8(c.rescale_to_bijective ? 1 : 0);
}

inline Activation read_activation(ByteReader& r) {
    const auto a = r.u32();
    if (a > static_cast<std::uint32_t>(Activation::sigmoid)) throw CheckpointError("unknown activation tag in checkpoint");
    return static_cast<Activation>(a);
}

inline TrainConfig read_config(ByteReader& r) {
    TrainConfig c;
    c.lambda = r.f64();
    c.num_features = static_cast<Eigen::Index>(r.u64());
    c.total_epochs = static_cast<int>(r.u32());
    c.phase1_epochs = static_cast<int>(r.u32());
    c.batch_size = static_cast<Eigen::Index>(r.u64());
    c.lr_ball = r.f64();
    c.lr_gen = r.f64();
    c.fm_weight = r.f64();
    c.seed = r.u64();
    const auto kind = r.u32();
    if (kind > 1) throw CheckpointError("unknown noise kind in checkpoint");
    c.noise.kind = static_cast<NoiseKind>(kind);
    c.noise.dim = static_cast<Eigen::Index>(r.u64());
    c.generator.hidden.resize(r.count(1 << 16));
    for (auto& h : c.generator.hidden) h = static_cast<Eigen::Index>(r.u64());
    c.generator.hidden_activation = read_activation(r);
    c.generator.output_activation = read_activation(r);
    c.initial_log_scale = r.f64();
    c.rescale_to_bijective = r.u8() != 0;
    return c;
}

}  // namespace detail

inline std::string serialize(const Checkpoint& ck) {
    detail::ByteWriter w;
    w.raw(kCheckpointMagic, sizeof kCheckpointMagic);
    w.u32(ck.format_version);
    w.str(ck.config_json);
    detail::write_config(w, ck.config);
    w.u32(static_cast<std::uint32_t>(ck.epochs_completed));

    const auto& fm = ck.feature_map;
    w.u64(static_cast<std::uint64_t>(fm.dims_in()));
    w.u64(static_cast<std::uint64_t>(fm.num_features()));
    w.u64(fm.seed());
    w.doubles(fm.directions().data(), static_cast<std::size_t>(fm.directions().size()));
    w.doubles(fm.log_scale().data(), static_cast<std::size_t>(fm.log_scale().size()));

    w.vec(ck.ball.center);
    w.f64(ck.ball.radius_sq);
    w.f64(ck.ball.lambda);

    const auto& g = ck.generator;
    w.u64(static_cast<std::uint64_t>(g.noise_dim()));
    w.u32(static_cast<std::uint32_t>(ck.config.noise.kind));
    w.u64(g.layers().size());
    for (const auto& L : g.layers()) {
        w.u64(static_cast<std::uint64_t>(L.in()));
        w.u64(static_cast<std::uint64_t>(L.out()));
        w.u32(static_cast<std::uint32_t>(L.act));
        w.doubles(L.weight.data(), static_cast<std::size_t>(L.weight.size()));
        w.doubles(L.bias.data(), static_cast<std::size_t>(L.bias.size()));
    }

    w.str(ck.shuffle_rng_state);
    w.str(ck.noise_rng_state);
    w.u8(ck.scale_applied ? 1 : 0);
    if (ck.scale_applied) {
        w.vec(ck.scale_applied->shift);
        w.vec(ck.scale_applied->factor);
    }
    detail::write_adam(w, ck.ball_opt);
    detail::write_adam(w, ck.gen_opt);
    w.u64(detail::fnv1a(w.bytes()));
    return std::move(w.bytes());
}

inline Checkpoint deserialize(std::string_view bytes) {
    if (bytes.size() < sizeof kCheckpointMagic + 4 + 8) throw CheckpointError("checkpoint is truncated");
    if (std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0)
        throw CheckpointError("not a checkpoint file (bad magic)");
    detail::ByteReader r(bytes.substr(sizeof kCheckpointMagic));
    Checkpoint ck;
    ck.format_version = r.u32();
    if (ck.format_version != kCheckpointVersion)
        throw CheckpointError("checkpoint format version " + std::to_string(ck.format_version) + " is not supported (expected " +
                              std::to_string(kCheckpointVersion) + ")");
    const auto body = bytes.substr(0, bytes.size() - 8);
    std::uint64_t stored = 0;
    std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
    if (stored != detail::fnv1a(body)) throw CheckpointError("checkpoint checksum mismatch (file corrupted)");

    ck.config_json = r.str();
    ck.config = detail::read_config(r);
    ck.epochs_completed = static_cast<int>(r.u32());

    const auto d = static_cast<Eigen::Index>(r.count());
    const auto D = static_cast<Eigen::Index>(r.count());
    const auto seed = r.u64();
    RowMatrix E(D, d);
    r.doubles(E.data(), static_cast<std::size_t>(E.size()));
    Vector ls(d);
    r.doubles(ls.data(), static_cast<std::size_t>(d));
    try {
        ck.feature_map = FeatureMap(std::move(E), std::move(ls), seed);
    } catch (const ShapeError& e) {
        throw CheckpointError(std::string("invalid feature map in checkpoint: ") + e.what());
    }

    ck.ball.center = r.vec();
    ck.ball.radius_sq = r.f64();
    ck.ball.lambda = r.f64();

    const auto noise_dim = static_cast<Eigen::Index>(r.count());
    const auto kind = r.u32();
    if (kind != static_cast<std::uint32_t>(ck.config.noise.kind)) throw CheckpointError("noise kind mismatch in checkpoint");
    const auto nlayers = r.count(1 << 16);
    std::vector<Layer> layers;
    for (std::uint64_t l = 0; l < nlayers; ++l) {
        Layer L;
        const auto in = static_cast<Eigen::Index>(r.count());
        const auto out = static_cast<Eigen::Index>(r.count());
        L.act = detail::read_activation(r);
        L.weight.resize(out, in);
        r.doubles(L.weight.data(), static_cast<std::size_t>(L.weight.size()));
        L.bias.resize(out);
        r.doubles(L.bias.data(), static_cast<std::size_t>(out));
        layers.push_back(std::move(L));
    }
    try {
        ck.generator = Generator(noise_dim, std::move(layers));
    } catch (const ShapeError& e) {
        throw CheckpointError(std::string("invalid generator in checkpoint: ") + e.what());
    }

    ck.shuffle_rng_state = r.str();
    ck.noise_rng_state = r.str();
    if (r.u8()) {
        ScaleRecord s;
        s.shift = r.vec();
        s.factor = r.vec();
        ck.scale_applied = std::move(s);
    }
    ck.ball_opt = detail::read_adam(r);
    ck.gen_opt = detail::read_adam(r);
    if (r.remaining() != 8) throw CheckpointError("checkpoint has trailing bytes");
    if (ck.ball.center.size() != ck.feature_map.dims_out())
        throw CheckpointError("ball centre length does not match the feature map");
    return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    const std::string bytes = serialize(ck);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write checkpoint '" + tmp.string() + "'");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw DataError("failed writing checkpoint '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

inline std::string rng_state(const Rng& rng) {
    std::ostringstream os;
    os << rng;
    return os.str();
}

inline Rng rng_from_state(const std::string& state) {
    Rng rng;
    std::istringstream is(state);
    is >> rng;
    if (!is) throw CheckpointError("invalid rng state in checkpoint");
    return rng;
}

}  // namespace gen
