#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rdit/errors.hpp"

namespace rdit {

// Row-major float32 dense array. Every op in tensor.cpp checks its output for
// NaN/Inf and throws NumericError on violation.
struct Tensor {
    std::vector<size_t> shape;
    std::vector<float> data;

    Tensor() = default;
    Tensor(std::vector<size_t> shape_, std::vector<float> data_);

    static Tensor zeros(std::vector<size_t> shape);
    static Tensor full(std::vector<size_t> shape, float value);

    size_t numel() const;
    size_t ndim() const { return shape.size(); }
    size_t rows() const;
    size_t cols() const;

    float& at(size_t r, size_t c);
    float at(size_t r, size_t c) const;

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    std::string shape_str() const;
};

// SplitMix64 stream feeding Box-Muller; same seed gives a bit-identical
// sequence on every platform.
struct Rng {
    explicit Rng(uint64_t seed) : state(seed) {}

    uint64_t next_u64();
    double next_unit();   // uniform in (0, 1]
    float next_normal();  // standard normal

    uint64_t state;

  private:
    bool has_spare_ = false;
    float spare_ = 0.0f;
};

uint64_t splitmix64(uint64_t& state);

void check_finite(const Tensor& t, const char* context);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor softmax_rows(const Tensor& x);
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  float eps = 1e-5f);
Tensor seeded_normal(std::vector<size_t> shape, uint64_t seed,
                     float scale = 0.02f);
Tensor seeded_normal(std::vector<size_t> shape, Rng& rng, float scale = 0.02f);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float s);
Tensor gelu(const Tensor& x);

float l2_norm(const Tensor& t);
float max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace rdit
