#include "splat/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "splat/errors.hpp"

namespace splat {
namespace {

// Single field list driving parsing, serialization, and hashing so the
// three can never drift apart.
template <class C, class F>
void visit_fields(C& c, F&& f) {
    f("total_iterations", c.total_iterations);
    f("densify_until", c.densify_until);
    f("densify_interval", c.densify_interval);
    f("opacity_reset_interval", c.opacity_reset_interval);
    f("max_scale_factor", c.max_scale_factor);
    f("schedule_sample_cap", c.schedule_sample_cap);
    f("grad_threshold", c.grad_threshold);
    f("scale_threshold_fraction", c.scale_threshold_fraction);
    f("split_scale_divisor", c.split_scale_divisor);
    f("pruning_ratio", c.pruning_ratio);
    f("pruning_upper_limit", c.pruning_upper_limit);
    f("loss_lambda", c.loss_lambda);
    f("lr_position_init", c.lr_position_init);
    f("lr_position_final", c.lr_position_final);
    f("lr_depth", c.lr_depth);
    f("lr_log_scale", c.lr_log_scale);
    f("lr_rotation", c.lr_rotation);
    f("lr_opacity", c.lr_opacity);
    f("lr_color", c.lr_color);
    f("init_point_count", c.init_point_count);
    f("seed", c.seed);
    f("enable_g2l", c.enable_g2l);
    f("enable_c2f", c.enable_c2f);
    f("enable_prune", c.enable_prune);
    f("suppress_reset_in_global", c.suppress_reset_in_global);
    f("num_threads", c.num_threads);
    f("snapshot_interval", c.snapshot_interval);
}

std::string format_value(int v) { return std::to_string(v); }
std::string format_value(uint64_t v) { return std::to_string(v); }
std::string format_value(bool v) { return v ? "true" : "false"; }
std::string format_value(float v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v));
    return buf;
}

void parse_into(const std::string& key, const std::string& text, int& out) {
    size_t pos = 0;
    out = std::stoi(text, &pos);
    if (pos != text.size()) throw ConfigError("config: bad integer for " + key + ": " + text);
}
void parse_into(const std::string& key, const std::string& text, uint64_t& out) {
    size_t pos = 0;
    out = std::stoull(text, &pos);
    if (pos != text.size()) throw ConfigError("config: bad integer for " + key + ": " + text);
}
void parse_into(const std::string& key, const std::string& text, float& out) {
    size_t pos = 0;
    out = std::stof(text, &pos);
    if (pos != text.size()) throw ConfigError("config: bad number for " + key + ": " + text);
}
void parse_into(const std::string& key, const std::string& text, bool& out) {
    if (text == "true" || text == "1") {
        out = true;
    } else if (text == "false" || text == "0") {
        out = false;
    } else {
        throw ConfigError("config: bad boolean for " + key + ": " + text);
    }
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

void TrainConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(std::string("config: ") + what);
    };
    require(total_iterations >= 1, "total_iterations must be >= 1");
    require(densify_until >= 0, "densify_until must be >= 0");
    require(densify_until <= total_iterations, "densify_until must not exceed total_iterations");
    require(densify_interval >= 1, "densify_interval must be >= 1");
    require(opacity_reset_interval >= 1, "opacity_reset_interval must be >= 1");
    require(max_scale_factor >= 1, "max_scale_factor must be >= 1");
    require(schedule_sample_cap >= 0, "schedule_sample_cap must be >= 0");
    require(grad_threshold >= 0.0f, "grad_threshold must be >= 0");
    require(scale_threshold_fraction > 0.0f, "scale_threshold_fraction must be > 0");
    require(split_scale_divisor > 1.0f, "split_scale_divisor must be > 1");
    require(pruning_ratio > 0.0f && pruning_ratio < 1.0f, "pruning_ratio must be in (0,1)");
    require(pruning_upper_limit > 0.0f && pruning_upper_limit <= 1.0f,
            "pruning_upper_limit must be in (0,1]");
    require(loss_lambda >= 0.0f && loss_lambda <= 1.0f, "loss_lambda must be in [0,1]");
    require(lr_position_init > 0.0f && lr_position_final > 0.0f,
            "positional learning rates must be > 0");
    require(lr_depth >= 0.0f && lr_log_scale >= 0.0f && lr_rotation >= 0.0f &&
                lr_opacity >= 0.0f && lr_color >= 0.0f,
            "learning rates must be >= 0");
    require(init_point_count >= 1, "init_point_count must be >= 1");
    require(num_threads >= 1, "num_threads must be >= 1");
    require(snapshot_interval >= 0, "snapshot_interval must be >= 0");
}

std::string TrainConfig::serialize() const {
    std::ostringstream out;
    visit_fields(*this, [&out](const char* name, const auto& value) {
        out << name << "=" << format_value(value) << "\n";
    });
    return out.str();
}

uint64_t TrainConfig::hash() const {
    // FNV-1a over the canonical serialization.
    uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : serialize()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

TrainConfig load_config(const std::string& path) {
    TrainConfig cfg;
    if (path.empty()) {
        cfg.validate();
        return cfg;
    }
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (size_t hash_pos = line.find('#'); hash_pos != std::string::npos) {
            line.resize(hash_pos);
        }
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config '" + path + "' line " + std::to_string(line_no) +
                              ": expected key=value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        bool matched = false;
        try {
            visit_fields(cfg, [&](const char* name, auto& field) {
                if (!matched && key == name) {
                    parse_into(key, value, field);
                    matched = true;
                }
            });
        } catch (const std::invalid_argument&) {
            throw ConfigError("config: bad value for " + key + ": " + value);
        } catch (const std::out_of_range&) {
            throw ConfigError("config: value out of range for " + key + ": " + value);
        }
        if (!matched) throw ConfigError("config: unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

void apply_variant(TrainConfig& cfg, const std::string& variant) {
    if (variant == "baseline") {
        cfg.enable_g2l = cfg.enable_c2f = cfg.enable_prune = false;
    } else if (variant == "g2l") {
        cfg.enable_g2l = true;
        cfg.enable_c2f = cfg.enable_prune = false;
    } else if (variant == "c2f") {
        cfg.enable_c2f = true;
        cfg.enable_g2l = cfg.enable_prune = false;
    } else if (variant == "g2l-c2f") {
        cfg.enable_g2l = cfg.enable_c2f = true;
        cfg.enable_prune = false;
    } else if (variant == "prune") {
        cfg.enable_prune = true;
        cfg.enable_g2l = cfg.enable_c2f = false;
    } else if (variant == "full") {
        cfg.enable_g2l = cfg.enable_c2f = cfg.enable_prune = true;
    } else {
        throw ConfigError("unknown variant '" + variant + "'");
    }
}

}  // namespace splat
