#include "imrnn/checkpoint.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <sstream>
#include <vector>

#include "imrnn/io.hpp"

namespace imrnn {

namespace {

using K = CheckpointFormatError::Kind;

struct TensorView {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::span<const double> values;
};

std::vector<TensorView> tensors_of(const AdapterCheckpoint& c) {
    auto mat = [](std::string name, const Matrix& m) {
        return TensorView{std::move(name),
                          {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())},
                          m.values()};
    };
    auto vec = [](std::string name, const Vector& v) {
        return TensorView{std::move(name), {static_cast<std::uint32_t>(v.size())}, v};
    };
    return {
        mat("projection", c.projection),
        mat("query_adapter.w1", c.query_adapter.w1),
        vec("query_adapter.b1", c.query_adapter.b1),
        mat("query_adapter.w2", c.query_adapter.w2),
        vec("query_adapter.b2", c.query_adapter.b2),
        mat("doc_adapter.w1", c.doc_adapter.w1),
        vec("doc_adapter.b1", c.doc_adapter.b1),
        mat("doc_adapter.w2", c.doc_adapter.w2),
        vec("doc_adapter.b2", c.doc_adapter.b2),
    };
}

struct LoadedTensor {
    std::vector<std::uint32_t> dims;
    std::vector<double> values;
};

}  // namespace

std::string serialize_checkpoint(const AdapterCheckpoint& ckpt) {
    ckpt.validate();
    std::ostringstream out;
    out.write(kCheckpointMagic, 4);
    io::put_u32(out, kCheckpointFormatVersion);
    io::put_u32(out, static_cast<std::uint32_t>(ckpt.config.m));
    io::put_u32(out, static_cast<std::uint32_t>(ckpt.config.n));
    io::put_u32(out, static_cast<std::uint32_t>(ckpt.config.h));
    io::put_f64(out, ckpt.config.eps);
    io::put_u32(out, ckpt.config.identity_residual ? 1u : 0u);
    io::put_u32(out, ckpt.metadata.epoch);
    io::put_f64(out, ckpt.metadata.best_validation_ndcg);

    const auto tensors = tensors_of(ckpt);
    io::put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        io::put_u16(out, static_cast<std::uint16_t>(t.name.size()));
        out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        io::put_u8(out, static_cast<std::uint8_t>(t.dims.size()));
        for (auto d : t.dims) io::put_u32(out, d);
        for (double v : t.values) {
            const auto f = static_cast<float>(v);
            if (!std::isfinite(f)) {
                throw NonFiniteError("tensor " + t.name + " has a value not representable as float32");
            }
            io::put_f32(out, f);
        }
    }
    return std::move(out).str();
}

AdapterCheckpoint deserialize_checkpoint(const std::string& bytes) {
    io::ByteReader in(bytes, [](std::size_t offset, std::size_t wanted) {
        throw CheckpointFormatError(K::Truncated, "truncated checkpoint at byte offset " +
                                                      std::to_string(offset) + " (needed " +
                                                      std::to_string(wanted) + " bytes)");
    });
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
        throw CheckpointFormatError(K::BadMagic, "not a checkpoint file: bad magic");
    }
    in.bytes(4);
    const auto version = in.u32();
    if (version != kCheckpointFormatVersion) {
        throw CheckpointFormatError(K::VersionMismatch,
                                    "unsupported checkpoint version " + std::to_string(version));
    }

    AdapterCheckpoint ckpt;
    ckpt.config.m = in.u32();
    ckpt.config.n = in.u32();
    ckpt.config.h = in.u32();
    ckpt.config.eps = in.f64();
    ckpt.config.identity_residual = (in.u32() & 1u) != 0;
    ckpt.metadata.epoch = in.u32();
    ckpt.metadata.best_validation_ndcg = in.f64();
    try {
        ckpt.config.validate();
    } catch (const Error& e) {
        throw CheckpointFormatError(K::BadRecord, std::string("invalid checkpoint config: ") + e.what());
    }

    std::map<std::string, LoadedTensor> loaded;
    const auto count = in.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name = in.bytes(in.u16());
        LoadedTensor t;
        const auto rank = in.u8();
        std::uint64_t numel = 1;
        for (std::uint8_t r = 0; r < rank; ++r) {
            t.dims.push_back(in.u32());
            numel *= t.dims.back();
        }
        if (numel * 4 > in.remaining()) {
            throw CheckpointFormatError(K::Truncated, "truncated payload for tensor " + name +
                                                          " at byte offset " + std::to_string(in.offset()));
        }
        t.values.resize(numel);
        for (auto& v : t.values) {
            const float f = in.f32();
            if (!std::isfinite(f)) throw CheckpointFormatError(K::NonFinite, "non-finite value in tensor " + name);
            v = f;
        }
        if (!loaded.emplace(name, std::move(t)).second) {
            throw CheckpointFormatError(K::BadRecord, "duplicate tensor " + name);
        }
    }
    if (in.remaining() != 0) throw CheckpointFormatError(K::BadRecord, "trailing bytes after tensors");

    const auto m = ckpt.config.m;
    const auto n = ckpt.config.n;
    const auto h = ckpt.config.h;
    auto take = [&](const std::string& name, std::vector<std::uint32_t> dims) {
        auto it = loaded.find(name);
        if (it == loaded.end()) throw CheckpointFormatError(K::MissingTensor, "missing tensor " + name);
        if (it->second.dims != dims) throw CheckpointFormatError(K::ShapeMismatch, "tensor " + name + " has unexpected shape");
        return std::move(it->second.values);
    };
    auto u = [](std::size_t v) { return static_cast<std::uint32_t>(v); };
    const auto out_dim = m * m + m;

    ckpt.projection = Matrix(m, n, take("projection", {u(m), u(n)}));
    for (auto [prefix, mlp] : {std::pair{"query_adapter", &ckpt.query_adapter},
                               std::pair{"doc_adapter", &ckpt.doc_adapter}}) {
        const std::string p = prefix;
        mlp->w1 = Matrix(h, m, take(p + ".w1", {u(h), u(m)}));
        mlp->b1 = take(p + ".b1", {u(h)});
        mlp->w2 = Matrix(out_dim, h, take(p + ".w2", {u(out_dim), u(h)}));
        mlp->b2 = take(p + ".b2", {u(out_dim)});
    }
    if (loaded.size() != 9) throw CheckpointFormatError(K::BadRecord, "unexpected extra tensors");
    return ckpt;
}

nlohmann::ordered_json checkpoint_summary(const AdapterCheckpoint& ckpt) {
    nlohmann::ordered_json j;
    j["format"] = "IMCK";
    j["format_version"] = kCheckpointFormatVersion;
    j["m"] = ckpt.config.m;
    j["n"] = ckpt.config.n;
    j["h"] = ckpt.config.h;
    j["eps"] = ckpt.config.eps;
    j["identity_residual"] = ckpt.config.identity_residual;
    j["epoch"] = ckpt.metadata.epoch;
    j["best_validation_ndcg@10"] = ckpt.metadata.best_validation_ndcg;
    j["parameter_count"] = ckpt.parameter_count();
    j["query_adapter_parameters"] = ckpt.query_adapter.parameter_count();
    j["doc_adapter_parameters"] = ckpt.doc_adapter.parameter_count();
    auto& tensors = j["tensors"] = nlohmann::ordered_json::array();
    for (const auto& t : tensors_of(ckpt)) tensors.push_back({{"name", t.name}, {"shape", t.dims}});
    return j;
}

void save_checkpoint(const AdapterCheckpoint& ckpt, const std::filesystem::path& path,
                     const nlohmann::ordered_json& extra) {
    const auto bytes = serialize_checkpoint(ckpt);
    auto summary = checkpoint_summary(ckpt);
    for (const auto& [key, value] : extra.items()) summary[key] = value;
    io::write_atomic(path, [&](std::ostream& out) {
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    });
    auto sidecar = path;
    sidecar += ".json";
    io::write_atomic(sidecar, [&](std::ostream& out) { out << summary.dump(2) << '\n'; });
}

AdapterCheckpoint load_checkpoint(const std::filesystem::path& path) {
    try {
        return deserialize_checkpoint(io::read_text_file(path));
    } catch (const CheckpointFormatError& e) {
        throw CheckpointFormatError(e.kind(), path.string() + ": " + e.what());
    }
}

AdapterCheckpoint round_to_storage_precision(AdapterCheckpoint ckpt) {
    auto round = [](std::span<double> values) {
        for (auto& v : values) v = static_cast<double>(static_cast<float>(v));
    };
    round(ckpt.projection.values());
    for (auto* mlp : {&ckpt.query_adapter, &ckpt.doc_adapter}) {
        round(mlp->w1.values());
        round(mlp->b1);
        round(mlp->w2.values());
        round(mlp->b2);
    }
    return ckpt;
}

}  // namespace imrnn
