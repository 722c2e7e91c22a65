#include "rdit/fixture_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rdit {

static void write_tensor_body(std::ostream& os, const Tensor& t) {
    os << "shape:";
    for (size_t d : t.shape) os << " " << d;
    os << "\n";
    char buf[32];
    for (size_t i = 0; i < t.data.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.9g", t.data[i]);
        os << buf << ((i + 1) % 8 == 0 ? "\n" : " ");
    }
    if (t.data.size() % 8 != 0) os << "\n";
}

static Tensor read_tensor_body(std::istream& is, const std::string& path) {
    std::string tag;
    if (!(is >> tag) || tag != "shape:") {
        throw IoError("missing shape header in " + path);
    }
    std::string line;
    std::getline(is, line);
    std::istringstream ls(line);
    std::vector<size_t> shape;
    size_t d;
    while (ls >> d) shape.push_back(d);
    if (shape.empty()) throw IoError("empty shape in " + path);
    size_t n = 1;
    for (size_t s : shape) n *= s;
    std::vector<float> data(n);
    for (size_t i = 0; i < n; ++i) {
        if (!(is >> data[i])) {
            throw IoError("expected " + std::to_string(n) + " values in " + path +
                          ", got " + std::to_string(i));
        }
    }
    return Tensor(std::move(shape), std::move(data));
}

void write_tensor(const std::string& path, const Tensor& t) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path + " for writing");
    write_tensor_body(os, t);
}

Tensor read_tensor(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path);
    return read_tensor_body(is, path);
}

void write_embedding(const std::string& path, const RawEmbedding& emb) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os << "source: " << (emb.source == EmbeddingSource::LongCtx ? "longctx" : "shortctx")
       << "\n";
    write_tensor_body(os, emb.values);
}

RawEmbedding load_embedding_fixture(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path);
    std::string tag, src;
    if (!(is >> tag >> src) || tag != "source:") {
        throw IoError("missing source header in " + path);
    }
    RawEmbedding emb;
    if (src == "longctx") {
        emb.source = EmbeddingSource::LongCtx;
    } else if (src == "shortctx") {
        emb.source = EmbeddingSource::ShortCtx;
    } else {
        throw IoError("unknown embedding source '" + src + "' in " + path);
    }
    emb.values = read_tensor_body(is, path);
    if (emb.values.ndim() != 2) throw IoError("embedding fixture must be 2d: " + path);
    return emb;
}

void write_named_tensors(const std::string& path,
                         const std::vector<std::pair<std::string, const Tensor*>>& tensors) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path + " for writing");
    for (const auto& [name, t] : tensors) {
        os << "tensor: " << name << "\n";
        write_tensor_body(os, *t);
    }
}

std::map<std::string, Tensor> read_named_tensors(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path);
    std::map<std::string, Tensor> out;
    std::string tag;
    while (is >> tag) {
        if (tag != "tensor:") throw IoError("expected tensor section in " + path);
        std::string name;
        if (!(is >> name)) throw IoError("missing tensor name in " + path);
        out.emplace(name, read_tensor_body(is, path));
    }
    return out;
}

uint64_t fnv1a64_bytes(const void* ptr, size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(ptr);
    uint64_t h = 0xcbf29ce484222325ULL;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string checksum_hex(const Tensor& t) {
    uint64_t h = fnv1a64_bytes(t.data.data(), t.data.size() * sizeof(float));
    for (size_t d : t.shape) {
        h ^= d + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
    return buf;
}

}  // namespace rdit
