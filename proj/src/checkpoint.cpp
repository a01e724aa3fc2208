#include "ddcl/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "ddcl/binio.hpp"

namespace ddcl::ckpt {

namespace {
constexpr char kMagic[8] = {'D', 'D', 'C', 'L', 'C', 'K', 'P', 'T'};
}

void save(const std::string& path, const Checkpoint& c) {
    std::ostringstream body(std::ios::binary);
    binio::put_bytes(body, kMagic, 8);
    binio::put_u32(body, c.version);
    binio::put_string(body, c.config_json);
    binio::put_u64(body, c.step);
    for (auto w : c.rng_state) binio::put_u64(body, w);
    binio::put_u64(body, c.tensors.size());
    for (const auto& [name, data] : c.tensors) {
        binio::put_string(body, name);
        binio::put_u64(body, data.size());
        for (float v : data) binio::put_f32(body, v);
    }
    const std::string bytes = body.str();
    binio::Fnv64 h;
    h.add(bytes.data(), bytes.size());

    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("checkpoint save: cannot open " + path);
    binio::put_bytes(os, bytes.data(), bytes.size());
    binio::put_u64(os, h.state);
    if (!os) throw IoError("checkpoint save: write failed for " + path);
}

Checkpoint load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("checkpoint load: cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (bytes.size() < 8 + 8) throw IoError("checkpoint load: file too short: " + path);

    const std::string body = bytes.substr(0, bytes.size() - 8);
    std::istringstream tail(bytes.substr(bytes.size() - 8), std::ios::binary);
    const std::uint64_t stored = binio::get_u64(tail, "checkpoint load");
    binio::Fnv64 h;
    h.add(body.data(), body.size());
    if (h.state != stored)
        throw IoError("checkpoint load: integrity hash mismatch in " + path);

    std::istringstream isb(body, std::ios::binary);
    char magic[8];
    binio::read_exact(isb, magic, 8, "checkpoint load");
    if (std::memcmp(magic, kMagic, 8) != 0)
        throw IoError("checkpoint load: bad magic in " + path);

    Checkpoint c;
    c.version = binio::get_u32(isb, "checkpoint load");
    if (c.version != 1)
        throw IoError("checkpoint load: unsupported version " + std::to_string(c.version));
    c.config_json = binio::get_string(isb, "checkpoint load");
    c.step = binio::get_u64(isb, "checkpoint load");
    for (auto& w : c.rng_state) w = binio::get_u64(isb, "checkpoint load");
    const std::uint64_t count = binio::get_u64(isb, "checkpoint load");
    for (std::uint64_t i = 0; i < count; ++i) {
        std::string name = binio::get_string(isb, "checkpoint load");
        const std::uint64_t n = binio::get_u64(isb, "checkpoint load");
        std::vector<float> data(n);
        for (auto& v : data) v = binio::get_f32(isb, "checkpoint load");
        c.tensors.emplace(std::move(name), std::move(data));
    }
    return c;
}

std::uint64_t stored_hash(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("checkpoint hash: cannot open " + path);
    is.seekg(-8, std::ios::end);
    return binio::get_u64(is, "checkpoint hash");
}

Checkpoint snapshot(model::Net& net, std::uint64_t step, const std::string& config_json,
                    const Rng& rng) {
    Checkpoint c;
    c.step = step;
    c.config_json = config_json;
    for (int i = 0; i < 4; ++i) c.rng_state[i] = rng.state()[i];
    for (const auto& p : net.params()) {
        c.tensors[p.name] = p.t->v;
        c.tensors[p.name + ".vel"] = p.t->m;
    }
    for (const auto& b : net.buffers()) c.tensors[b.name] = *b.v;
    return c;
}

void restore(model::Net& net, const Checkpoint& c, Rng* rng) {
    auto fetch = [&](const std::string& name, std::size_t expect) -> const std::vector<float>& {
        auto it = c.tensors.find(name);
        if (it == c.tensors.end())
            throw IoError("checkpoint restore: missing tensor '" + name + "'");
        if (it->second.size() != expect)
            throw IoError("checkpoint restore: tensor '" + name + "': expected " +
                          std::to_string(expect) + " values, found " +
                          std::to_string(it->second.size()));
        return it->second;
    };
    for (auto& p : net.params()) {
        p.t->v = fetch(p.name, p.t->size());
        p.t->m = fetch(p.name + ".vel", p.t->size());
        std::fill(p.t->g.begin(), p.t->g.end(), 0.0f);
    }
    for (auto& b : net.buffers()) *b.v = fetch(b.name, b.v->size());
    if (rng) rng->set_state(c.rng_state.data());
}

} // namespace ddcl::ckpt
