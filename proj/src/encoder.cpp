#include "tvmf/encoder.hpp"

#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>
#include <string>

namespace tvmf {

namespace {

DenseLayer make_layer(std::size_t in, std::size_t out, std::mt19937_64& rng) {
    if (in == 0 || out == 0) throw std::invalid_argument("layer widths must be positive");
    DenseLayer layer{in, out, std::vector<double>(in * out), std::vector<double>(out, 0.0)};
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& w : layer.weight) w = dist(rng);
    return layer;
}

DenseLayer zeros_like(const DenseLayer& l) {
    return {l.in, l.out, std::vector<double>(l.weight.size(), 0.0),
            std::vector<double>(l.bias.size(), 0.0)};
}

void affine(const DenseLayer& l, std::span<const double> x, std::vector<double>& y) {
    if (x.size() != l.in) {
        throw std::invalid_argument("input dimension " + std::to_string(x.size()) +
                                    " does not match layer width " + std::to_string(l.in));
    }
    y.assign(l.bias.begin(), l.bias.end());
    for (std::size_t o = 0; o < l.out; ++o) {
        const double* row = l.weight.data() + o * l.in;
        double s = y[o];
        for (std::size_t i = 0; i < l.in; ++i) s += row[i] * x[i];
        y[o] = s;
    }
}

std::vector<double> relu(const std::vector<double>& v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] > 0.0 ? v[i] : 0.0;
    return out;
}

// dL/dW += dy x^T, dL/db += dy; returns dL/dx.
std::vector<double> affine_backward(const DenseLayer& l, std::span<const double> x,
                                    std::span<const double> dy, DenseLayer& g) {
    std::vector<double> dx(l.in, 0.0);
    for (std::size_t o = 0; o < l.out; ++o) {
        const double d = dy[o];
        if (d == 0.0) continue;
        g.bias[o] += d;
        const double* row = l.weight.data() + o * l.in;
        double* grow = g.weight.data() + o * l.in;
        for (std::size_t i = 0; i < l.in; ++i) {
            grow[i] += d * x[i];
            dx[i] += d * row[i];
        }
    }
    return dx;
}

void relu_backward(const std::vector<double>& pre, std::vector<double>& d) {
    for (std::size_t i = 0; i < d.size(); ++i)
        if (!(pre[i] > 0.0)) d[i] = 0.0;
}

template <typename Fn>
void for_each_tensor(std::vector<DenseLayer>& backbone, std::vector<DenseLayer>& head, Fn&& fn) {
    for (auto* group : {&backbone, &head}) {
        for (auto& l : *group) {
            fn(l.weight);
            fn(l.bias);
        }
    }
}

template <typename Fn>
void for_each_tensor(const std::vector<DenseLayer>& backbone, const std::vector<DenseLayer>& head,
                     Fn&& fn) {
    for (const auto* group : {&backbone, &head}) {
        for (const auto& l : *group) {
            fn(l.weight);
            fn(l.bias);
        }
    }
}

}  // namespace

std::size_t EncoderNet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : backbone) n += l.parameter_count();
    for (const auto& l : head) n += l.parameter_count();
    return n;
}

ParamGrads ParamGrads::zeros_like(const EncoderNet& net) {
    ParamGrads g;
    for (const auto& l : net.backbone) g.backbone.push_back(tvmf::zeros_like(l));
    for (const auto& l : net.head) g.head.push_back(tvmf::zeros_like(l));
    return g;
}

void ParamGrads::add(const ParamGrads& other) {
    std::vector<const std::vector<double>*> src;
    for_each_tensor(other.backbone, other.head, [&](const std::vector<double>& t) { src.push_back(&t); });
    std::size_t k = 0;
    for_each_tensor(backbone, head, [&](std::vector<double>& t) {
        const auto& s = *src.at(k++);
        if (s.size() != t.size()) throw std::invalid_argument("gradient shape mismatch");
        for (std::size_t i = 0; i < t.size(); ++i) t[i] += s[i];
    });
}

void ParamGrads::scale(double s) {
    for_each_tensor(backbone, head, [&](std::vector<double>& t) {
        for (double& x : t) x *= s;
    });
}

void SgdConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("learning rate must be finite and nonnegative");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) {
        throw std::invalid_argument("momentum must lie in [0, 1)");
    }
    if (batch_current == 0) throw std::invalid_argument("current batch size must be >= 1");
}

EncoderNet init_encoder(std::uint64_t seed, std::span<const std::size_t> backbone_dims,
                        std::span<const std::size_t> head_dims) {
    if (backbone_dims.size() < 2) {
        throw std::invalid_argument("backbone needs at least an input and one layer width");
    }
    if (head_dims.size() != 3) {
        throw std::invalid_argument("projection head takes exactly three widths (in, hidden, out)");
    }
    if (head_dims[0] != backbone_dims.back()) {
        throw std::invalid_argument("projection head input must equal the representation width");
    }
    if (head_dims[2] < 2) throw std::invalid_argument("projection dimension must be >= 2");

    std::mt19937_64 rng(seed);
    EncoderNet net;
    for (std::size_t i = 0; i + 1 < backbone_dims.size(); ++i)
        net.backbone.push_back(make_layer(backbone_dims[i], backbone_dims[i + 1], rng));
    for (std::size_t i = 0; i + 1 < head_dims.size(); ++i)
        net.head.push_back(make_layer(head_dims[i], head_dims[i + 1], rng));
    return net;
}

ForwardCache forward_cached(const EncoderNet& net, std::span<const double> input) {
    ForwardCache c;
    c.input.assign(input.begin(), input.end());
    std::vector<double> x(input.begin(), input.end());
    std::vector<double> pre;
    for (const auto& l : net.backbone) {
        affine(l, x, pre);
        x = relu(pre);
        c.backbone_pre.push_back(pre);
    }
    c.representation = x;

    affine(net.head[0], c.representation, c.head_hidden_pre);
    affine(net.head[1], relu(c.head_hidden_pre), c.projection);

    double n2 = 0.0;
    for (double v : c.projection) n2 += v * v;
    c.projection_norm = std::sqrt(n2);
    if (!(c.projection_norm > 0.0)) throw std::domain_error("zero-norm embedding");
    c.embedding = c.projection;
    for (double& v : c.embedding) v /= c.projection_norm;
    return c;
}

ForwardResult forward(const EncoderNet& net, std::span<const double> input) {
    ForwardCache c = forward_cached(net, input);
    return {std::move(c.representation), std::move(c.embedding)};
}

std::vector<double> represent(const EncoderNet& net, std::span<const double> input) {
    std::vector<double> x(input.begin(), input.end());
    std::vector<double> pre;
    for (const auto& l : net.backbone) {
        affine(l, x, pre);
        x = relu(pre);
    }
    return x;
}

void backward_into(const EncoderNet& net, const ForwardCache& cache,
                   std::span<const double> upstream, ParamGrads& grads) {
    const std::size_t d = cache.embedding.size();
    if (upstream.size() != d) throw std::invalid_argument("upstream gradient has wrong dimension");
    if (!(cache.projection_norm > 0.0)) throw std::domain_error("zero-norm embedding");

    // (I - e e^T) / |h|
    double proj = 0.0;
    for (std::size_t i = 0; i < d; ++i) proj += cache.embedding[i] * upstream[i];
    std::vector<double> dh(d);
    for (std::size_t i = 0; i < d; ++i)
        dh[i] = (upstream[i] - cache.embedding[i] * proj) / cache.projection_norm;

    const std::vector<double> hidden = relu(cache.head_hidden_pre);
    std::vector<double> dhidden = affine_backward(net.head[1], hidden, dh, grads.head[1]);
    relu_backward(cache.head_hidden_pre, dhidden);
    std::vector<double> dx = affine_backward(net.head[0], cache.representation, dhidden, grads.head[0]);

    for (std::size_t k = net.backbone.size(); k-- > 0;) {
        relu_backward(cache.backbone_pre[k], dx);
        const std::vector<double> layer_in = k == 0 ? cache.input : relu(cache.backbone_pre[k - 1]);
        dx = affine_backward(net.backbone[k], layer_in, dx, grads.backbone[k]);
    }
}

ParamGrads backward(const EncoderNet& net, std::span<const double> input,
                    std::span<const double> upstream) {
    ParamGrads g = ParamGrads::zeros_like(net);
    backward_into(net, forward_cached(net, input), upstream, g);
    return g;
}

void sgd_step(EncoderNet& net, const ParamGrads& grads, const SgdConfig& cfg, SgdState& state) {
    const std::vector<double> g = flatten(grads);
    if (g.size() != net.parameter_count()) throw std::invalid_argument("gradient shape mismatch");
    if (state.velocity.empty()) state.velocity.assign(g.size(), 0.0);
    if (state.velocity.size() != g.size()) throw std::invalid_argument("momentum buffer shape mismatch");

    std::size_t k = 0;
    for_each_tensor(net.backbone, net.head, [&](std::vector<double>& t) {
        for (double& p : t) {
            double& v = state.velocity[k];
            v = cfg.momentum * v + g[k];
            p -= cfg.learning_rate * v;
            ++k;
        }
    });
}

std::vector<double> flatten(const EncoderNet& net) {
    std::vector<double> out;
    out.reserve(net.parameter_count());
    for_each_tensor(net.backbone, net.head,
                    [&](const std::vector<double>& t) { out.insert(out.end(), t.begin(), t.end()); });
    return out;
}

std::vector<double> flatten(const ParamGrads& grads) {
    std::vector<double> out;
    for_each_tensor(grads.backbone, grads.head,
                    [&](const std::vector<double>& t) { out.insert(out.end(), t.begin(), t.end()); });
    return out;
}

void assign_flat(EncoderNet& net, std::span<const double> values) {
    if (values.size() != net.parameter_count()) {
        throw std::invalid_argument("expected " + std::to_string(net.parameter_count()) +
                                    " parameters, got " + std::to_string(values.size()));
    }
    std::size_t k = 0;
    for_each_tensor(net.backbone, net.head, [&](std::vector<double>& t) {
        for (double& p : t) p = values[k++];
    });
}

std::uint64_t parameter_checksum(const EncoderNet& net) {
    std::uint64_t h = 1469598103934665603ULL;
    for (double v : flatten(net)) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof v);
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

}  // namespace tvmf
