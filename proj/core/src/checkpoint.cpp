#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "pointjepa/errors.hpp"
#include "pointjepa/train.hpp"

// Checkpoint file layout (little-endian):
//   magic "PJCK", u32 version,
//   u64 config_hash, u64 master_seed, i64 step, i64 epoch,
//   u32 config_text_len + bytes,
//   u32 n_params  { u32 name_len, name, u32 ndim, i64 dims..., f32 data... }
//   u32 n_m       { u32 name_len, name, u64 len, f32 data... }
//   u32 n_v       { same }
//   magic "KCJP"

namespace pointjepa::train {

namespace {

constexpr char kMagic[4] = {'P', 'J', 'C', 'K'};
constexpr char kTrailer[4] = {'K', 'C', 'J', 'P'};

template <typename T>
void write_pod(std::ostream& os, T value) {
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

void write_string(std::ostream& os, const std::string& s) {
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void write_floats(std::ostream& os, const std::vector<float>& v) {
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(float)));
}

template <typename T>
T read_pod(std::istream& is) {
    T value;
    is.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!is) throw FormatError("checkpoint: truncated file");
    return value;
}

std::string read_string(std::istream& is) {
    const auto len = read_pod<std::uint32_t>(is);
    std::string s(len, '\0');
    is.read(s.data(), len);
    if (!is) throw FormatError("checkpoint: truncated file");
    return s;
}

std::vector<float> read_floats(std::istream& is, std::size_t count) {
    std::vector<float> v(count);
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    if (!is) throw FormatError("checkpoint: truncated file");
    return v;
}

void write_moments(std::ostream& os,
                   const std::vector<std::pair<std::string, std::vector<float>>>& moments) {
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(moments.size()));
    for (const auto& [name, data] : moments) {
        write_string(os, name);
        write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(data.size()));
        write_floats(os, data);
    }
}

std::vector<std::pair<std::string, std::vector<float>>> read_moments(std::istream& is) {
    const auto n = read_pod<std::uint32_t>(is);
    std::vector<std::pair<std::string, std::vector<float>>> out;
    out.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        std::string name = read_string(is);
        const auto len = read_pod<std::uint64_t>(is);
        out.emplace_back(std::move(name), read_floats(is, static_cast<std::size_t>(len)));
    }
    return out;
}

}  // namespace

void save_checkpoint(const CheckpointState& state, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("checkpoint: cannot open for write: " + path);
    os.write(kMagic, 4);
    write_pod<std::uint32_t>(os, state.version);
    write_pod<std::uint64_t>(os, state.config_hash);
    write_pod<std::uint64_t>(os, state.master_seed);
    write_pod<std::int64_t>(os, state.step);
    write_pod<std::int64_t>(os, state.epoch);
    write_string(os, state.config_text);

    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(state.params.size()));
    for (const auto& p : state.params) {
        write_string(os, p.name);
        const auto& shape = p.tensor.shape();
        write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(shape.size()));
        for (const auto d : shape) write_pod<std::int64_t>(os, d);
        write_floats(os, p.tensor.data_vec());
    }
    write_moments(os, state.opt_m);
    write_moments(os, state.opt_v);
    os.write(kTrailer, 4);
    os.flush();
    if (!os) throw FormatError("checkpoint: write failed: " + path);
}

CheckpointState load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("checkpoint: cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("checkpoint: bad magic in " + path);

    CheckpointState state;
    state.version = read_pod<std::uint32_t>(is);
    if (state.version != 1)
        throw FormatError("checkpoint: unsupported format version " + std::to_string(state.version));
    state.config_hash = read_pod<std::uint64_t>(is);
    state.master_seed = read_pod<std::uint64_t>(is);
    state.step = read_pod<std::int64_t>(is);
    state.epoch = read_pod<std::int64_t>(is);
    state.config_text = read_string(is);

    const auto n_params = read_pod<std::uint32_t>(is);
    state.params.reserve(n_params);
    for (std::uint32_t i = 0; i < n_params; ++i) {
        std::string name = read_string(is);
        const auto ndim = read_pod<std::uint32_t>(is);
        std::vector<std::int64_t> shape(ndim);
        std::int64_t numel = 1;
        for (auto& d : shape) {
            d = read_pod<std::int64_t>(is);
            if (d < 0) throw FormatError("checkpoint: negative dimension");
            numel *= d;
        }
        auto data = read_floats(is, static_cast<std::size_t>(numel));
        state.params.push_back({std::move(name), nn::Tensor::from_data(std::move(shape), std::move(data))});
    }
    state.opt_m = read_moments(is);
    state.opt_v = read_moments(is);

    char trailer[4];
    is.read(trailer, 4);
    if (!is || std::memcmp(trailer, kTrailer, 4) != 0)
        throw FormatError("checkpoint: truncated file (missing trailer)");
    is.peek();
    if (!is.eof()) throw FormatError("checkpoint: trailing bytes after trailer");
    return state;
}

CheckpointState make_checkpoint(const nn::JepaModel& model, const AdamWT<float>& optimizer,
                                std::uint64_t master_seed, std::int64_t step, std::int64_t epoch) {
    CheckpointState state;
    state.master_seed = master_seed;
    state.step = step;
    state.epoch = epoch;
    for (const auto& p : model.all_params()) state.params.push_back({p.name, p.tensor.detach()});
    const auto trainable = model.trainable_params();
    for (std::size_t i = 0; i < trainable.size(); ++i) {
        state.opt_m.emplace_back(trainable[i].name, optimizer.moments_m()[i]);
        state.opt_v.emplace_back(trainable[i].name, optimizer.moments_v()[i]);
    }
    return state;
}

void apply_checkpoint(const CheckpointState& state, nn::JepaModel& model, AdamWT<float>* optimizer) {
    auto live = model.all_params();
    std::unordered_map<std::string, nn::Tensor*> by_name;
    for (auto& p : live) by_name[p.name] = &p.tensor;
    if (state.params.size() != live.size())
        throw MismatchError("checkpoint: parameter count differs from model (" +
                            std::to_string(state.params.size()) + " vs " +
                            std::to_string(live.size()) + ")");
    for (const auto& p : state.params) {
        auto it = by_name.find(p.name);
        if (it == by_name.end()) throw MismatchError("checkpoint: unknown parameter " + p.name);
        if (it->second->shape() != p.tensor.shape())
            throw MismatchError("checkpoint: shape mismatch for " + p.name);
        it->second->data_vec() = p.tensor.data_vec();
    }
    if (optimizer != nullptr) {
        const auto trainable = model.trainable_params();
        std::unordered_map<std::string, const std::vector<float>*> m_by_name, v_by_name;
        for (const auto& [name, data] : state.opt_m) m_by_name[name] = &data;
        for (const auto& [name, data] : state.opt_v) v_by_name[name] = &data;
        for (std::size_t i = 0; i < trainable.size(); ++i) {
            const auto m_it = m_by_name.find(trainable[i].name);
            const auto v_it = v_by_name.find(trainable[i].name);
            if (m_it == m_by_name.end() || v_it == v_by_name.end())
                throw MismatchError("checkpoint: missing optimizer state for " + trainable[i].name);
            if (m_it->second->size() != trainable[i].tensor.data_vec().size())
                throw MismatchError("checkpoint: optimizer state size mismatch for " + trainable[i].name);
            optimizer->moments_m()[i] = *m_it->second;
            optimizer->moments_v()[i] = *v_it->second;
        }
        optimizer->set_step_count(state.step);
    }
}

}  // namespace pointjepa::train
