#include "splat/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "splat/errors.hpp"

namespace splat {
namespace {

constexpr char kMagic[8] = {'S', 'P', 'L', 'A', 'T', '2', 'D', '\0'};
constexpr uint32_t kVersion = 1;

// Field-by-field little-endian serialization (this targets x86-64; the
// container format is versioned so a layout change can be detected).
template <class T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
void read_pod(std::istream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof v);
}

template <class T>
void write_vec(std::ostream& out, const std::vector<T>& v) {
    write_pod(out, static_cast<uint64_t>(v.size()));
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <class T>
void read_vec(std::istream& in, std::vector<T>& v) {
    uint64_t n = 0;
    read_pod(in, n);
    v.resize(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
}

void write_moments(std::ostream& out, const AdamMoments& mo) {
    write_vec(out, mo.m);
    write_vec(out, mo.v);
}

void read_moments(std::istream& in, AdamMoments& mo) {
    read_vec(in, mo.m);
    read_vec(in, mo.v);
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open checkpoint '" + path + "' for writing");
    out.write(kMagic, sizeof kMagic);
    write_pod(out, kVersion);
    write_pod(out, ckpt.config_hash);
    write_pod(out, ckpt.seed);
    write_pod(out, ckpt.iteration);
    write_pod(out, ckpt.model.scene_extent);
    write_pod(out, static_cast<uint64_t>(ckpt.model.size()));
    for (const GaussianPrimitive& g : ckpt.model.primitives) {
        write_pod(out, g.position.x);
        write_pod(out, g.position.y);
        write_pod(out, g.depth);
        write_pod(out, g.log_scale.x);
        write_pod(out, g.log_scale.y);
        write_pod(out, g.rotation);
        write_pod(out, g.opacity_logit);
        write_pod(out, g.color.x);
        write_pod(out, g.color.y);
        write_pod(out, g.color.z);
        write_pod(out, g.lineage.origin_position.x);
        write_pod(out, g.lineage.origin_position.y);
        write_pod(out, g.lineage.split_count);
        write_pod(out, g.lineage.clone_count);
    }
    write_vec(out, ckpt.model.grad_norm_sum);
    write_vec(out, ckpt.model.grad_obs_count);
    write_pod(out, ckpt.opt.step_count);
    write_moments(out, ckpt.opt.position);
    write_moments(out, ckpt.opt.depth);
    write_moments(out, ckpt.opt.log_scale);
    write_moments(out, ckpt.opt.rotation);
    write_moments(out, ckpt.opt.opacity_logit);
    write_moments(out, ckpt.opt.color);
    if (!out) throw ConfigError("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open checkpoint '" + path + "'");
    char magic[8] = {};
    in.read(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
        throw ConfigError("'" + path + "' is not a checkpoint file");
    }
    uint32_t version = 0;
    read_pod(in, version);
    if (version != kVersion) {
        throw ConfigError("checkpoint '" + path + "' has unsupported version " +
                          std::to_string(version));
    }
    Checkpoint ckpt;
    read_pod(in, ckpt.config_hash);
    read_pod(in, ckpt.seed);
    read_pod(in, ckpt.iteration);
    read_pod(in, ckpt.model.scene_extent);
    uint64_t n = 0;
    read_pod(in, n);
    ckpt.model.primitives.resize(n);
    for (GaussianPrimitive& g : ckpt.model.primitives) {
        read_pod(in, g.position.x);
        read_pod(in, g.position.y);
        read_pod(in, g.depth);
        read_pod(in, g.log_scale.x);
        read_pod(in, g.log_scale.y);
        read_pod(in, g.rotation);
        read_pod(in, g.opacity_logit);
        read_pod(in, g.color.x);
        read_pod(in, g.color.y);
        read_pod(in, g.color.z);
        read_pod(in, g.lineage.origin_position.x);
        read_pod(in, g.lineage.origin_position.y);
        read_pod(in, g.lineage.split_count);
        read_pod(in, g.lineage.clone_count);
    }
    read_vec(in, ckpt.model.grad_norm_sum);
    read_vec(in, ckpt.model.grad_obs_count);
    read_pod(in, ckpt.opt.step_count);
    read_moments(in, ckpt.opt.position);
    read_moments(in, ckpt.opt.depth);
    read_moments(in, ckpt.opt.log_scale);
    read_moments(in, ckpt.opt.rotation);
    read_moments(in, ckpt.opt.opacity_logit);
    read_moments(in, ckpt.opt.color);
    if (!in) throw ConfigError("checkpoint '" + path + "' is truncated or corrupt");
    return ckpt;
}

}  // namespace splat
