#include "rdit/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace rdit {

static size_t product(const std::vector<size_t>& shape) {
    size_t n = 1;
    for (size_t d : shape) n *= d;
    return n;
}

Tensor::Tensor(std::vector<size_t> shape_, std::vector<float> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
    if (product(shape) != data.size()) {
        throw DimensionError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str());
    }
}

Tensor Tensor::zeros(std::vector<size_t> shape) {
    size_t n = product(shape);
    return Tensor(std::move(shape), std::vector<float>(n, 0.0f));
}

Tensor Tensor::full(std::vector<size_t> shape, float value) {
    size_t n = product(shape);
    return Tensor(std::move(shape), std::vector<float>(n, value));
}

size_t Tensor::numel() const { return data.size(); }

size_t Tensor::rows() const {
    if (shape.size() != 2) throw DimensionError("rows() on non-2d tensor " + shape_str());
    return shape[0];
}

size_t Tensor::cols() const {
    if (shape.size() != 2) throw DimensionError("cols() on non-2d tensor " + shape_str());
    return shape[1];
}

float& Tensor::at(size_t r, size_t c) { return data[r * shape[1] + c]; }
float Tensor::at(size_t r, size_t c) const { return data[r * shape[1] + c]; }

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << " ";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

uint64_t splitmix64(uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

uint64_t Rng::next_u64() { return splitmix64(state); }

double Rng::next_unit() {
    // (0, 1]; never 0 so log() below is safe
    uint64_t u = next_u64() >> 11;  // 53 bits
    return (static_cast<double>(u) + 1.0) * 0x1.0p-53;
}

float Rng::next_normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = next_unit();
    double u2 = next_unit();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = static_cast<float>(r * std::sin(a));
    has_spare_ = true;
    return static_cast<float>(r * std::cos(a));
}

void check_finite(const Tensor& t, const char* context) {
    for (float v : t.data) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string("non-finite value in ") + context);
        }
    }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.cols() != b.rows()) {
        throw DimensionError("matmul shape mismatch " + a.shape_str() + " x " + b.shape_str());
    }
    size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out = Tensor::zeros({m, n});
    const float* ap = a.data.data();
    const float* bp = b.data.data();
    float* op = out.data.data();
    for (size_t i = 0; i < m; ++i) {
        const float* arow = ap + i * k;
        float* orow = op + i * n;
        for (size_t kk = 0; kk < k; ++kk) {
            float av = arow[kk];
            if (av == 0.0f) continue;
            const float* brow = bp + kk * n;
            for (size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    check_finite(out, "matmul");
    return out;
}

Tensor softmax_rows(const Tensor& x) {
    if (x.ndim() != 2) throw DimensionError("softmax_rows needs a 2d tensor");
    check_finite(x, "softmax_rows input");
    size_t m = x.rows(), n = x.cols();
    Tensor out = Tensor::zeros({m, n});
    for (size_t i = 0; i < m; ++i) {
        const float* row = x.data.data() + i * n;
        float* orow = out.data.data() + i * n;
        float mx = row[0];
        for (size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        float sum = 0.0f;
        for (size_t j = 0; j < n; ++j) {
            orow[j] = std::exp(row[j] - mx);
            sum += orow[j];
        }
        for (size_t j = 0; j < n; ++j) orow[j] /= sum;
    }
    check_finite(out, "softmax_rows");
    return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (x.ndim() != 2 || w.ndim() != 2 || x.cols() != w.rows()) {
        throw DimensionError("linear shape mismatch " + x.shape_str() + " x " + w.shape_str());
    }
    if (b.ndim() != 1 || b.shape[0] != w.cols()) {
        throw DimensionError("linear bias shape mismatch");
    }
    Tensor out = matmul(x, w);
    size_t m = out.rows(), n = out.cols();
    for (size_t i = 0; i < m; ++i) {
        float* orow = out.data.data() + i * n;
        for (size_t j = 0; j < n; ++j) orow[j] += b.data[j];
    }
    check_finite(out, "linear");
    return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, float eps) {
    if (x.ndim() != 2) throw DimensionError("layer_norm needs a 2d tensor");
    size_t m = x.rows(), d = x.cols();
    if (gain.numel() != d || bias.numel() != d) {
        throw DimensionError("layer_norm gain/bias must have length d");
    }
    Tensor out = Tensor::zeros({m, d});
    for (size_t i = 0; i < m; ++i) {
        const float* row = x.data.data() + i * d;
        float* orow = out.data.data() + i * d;
        float mean = 0.0f;
        for (size_t j = 0; j < d; ++j) mean += row[j];
        mean /= static_cast<float>(d);
        float var = 0.0f;
        for (size_t j = 0; j < d; ++j) {
            float c = row[j] - mean;
            var += c * c;
        }
        var /= static_cast<float>(d);
        float inv = 1.0f / std::sqrt(var + eps);
        for (size_t j = 0; j < d; ++j) {
            orow[j] = (row[j] - mean) * inv * gain.data[j] + bias.data[j];
        }
    }
    check_finite(out, "layer_norm");
    return out;
}

Tensor seeded_normal(std::vector<size_t> shape, uint64_t seed, float scale) {
    Rng rng(seed);
    return seeded_normal(std::move(shape), rng, scale);
}

Tensor seeded_normal(std::vector<size_t> shape, Rng& rng, float scale) {
    if (scale <= 0.0f) throw NumericError("seeded_normal scale must be > 0");
    Tensor out = Tensor::zeros(std::move(shape));
    for (float& v : out.data) v = rng.next_normal() * scale;
    check_finite(out, "seeded_normal");
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw DimensionError("add shape mismatch");
    Tensor out = a;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    check_finite(out, "add");
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw DimensionError("sub shape mismatch");
    Tensor out = a;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
    check_finite(out, "sub");
    return out;
}

Tensor scale(const Tensor& a, float s) {
    Tensor out = a;
    for (float& v : out.data) v *= s;
    check_finite(out, "scale");
    return out;
}

Tensor gelu(const Tensor& x) {
    Tensor out = x;
    for (float& v : out.data) {
        v = 0.5f * v * (1.0f + std::erf(v * 0.70710678118654752f));
    }
    check_finite(out, "gelu");
    return out;
}

float l2_norm(const Tensor& t) {
    double s = 0.0;
    for (float v : t.data) s += static_cast<double>(v) * v;
    return static_cast<float>(std::sqrt(s));
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw DimensionError("max_abs_diff shape mismatch");
    float mx = 0.0f;
    for (size_t i = 0; i < a.data.size(); ++i) {
        mx = std::max(mx, std::fabs(a.data[i] - b.data[i]));
    }
    return mx;
}

}  // namespace rdit
