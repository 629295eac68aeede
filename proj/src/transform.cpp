#include "clever/transform.hpp"

#include <cmath>
#include <stdexcept>

namespace clever {

TransformSpec TransformSpec::identity() { return TransformSpec{}; }

TransformSpec TransformSpec::bit_depth(int bits, double lo, double hi) {
    TransformSpec spec;
    spec.kind = Kind::bit_depth;
    spec.bits = bits;
    spec.lo = lo;
    spec.hi = hi;
    spec.validate();
    return spec;
}

TransformSpec TransformSpec::parse(const std::string& text, double lo, double hi) {
    if (text == "identity") {
        TransformSpec spec;
        spec.lo = lo;
        spec.hi = hi;
        return spec;
    }
    const std::string prefix = "bitdepth:";
    if (text.rfind(prefix, 0) == 0) {
        const std::string arg = text.substr(prefix.size());
        int bits = 0;
        try {
            std::size_t used = 0;
            bits = std::stoi(arg, &used);
            if (used != arg.size()) throw std::invalid_argument(arg);
        } catch (const std::exception&) {
            throw std::invalid_argument("transform: invalid bit count \"" + arg + "\"");
        }
        return bit_depth(bits, lo, hi);
    }
    throw std::invalid_argument("transform: expected \"identity\" or \"bitdepth:k\", got \"" +
                                text + "\"");
}

std::string TransformSpec::to_string() const {
    if (kind == Kind::identity) return "identity";
    return "bitdepth:" + std::to_string(bits);
}

void TransformSpec::validate() const {
    if (kind == Kind::bit_depth && (bits < 1 || bits > 16)) {
        throw std::invalid_argument("transform: bit depth must be in [1, 16], got " +
                                    std::to_string(bits));
    }
    if (!(hi > lo)) {
        throw std::invalid_argument("transform: domain upper bound must exceed lower bound");
    }
}

double TransformSpec::apply_element(double v) const {
    if (kind == Kind::identity) return v;
    double clamped = std::min(std::max(v, lo), hi);
    // The 1e-9 nudge keeps requantization of already-quantized values from
    // dropping a level through floating-point rounding.
    double t = (clamped - lo) / (hi - lo) * 255.0;
    int byte = static_cast<int>(std::floor(t + 1e-9));
    byte = std::min(std::max(byte, 0), 255);
    const int mask = bits >= 8 ? 0xFF : (0xFF << (8 - bits)) & 0xFF;
    byte &= mask;
    return lo + (static_cast<double>(byte) / 255.0) * (hi - lo);
}

Tensor TransformSpec::apply(const Tensor& x) const {
    if (kind == Kind::identity) return x;
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = apply_element(out[i]);
    return out;
}

Tensor bpda_gradient(MarginFn& margin, const TransformSpec& spec, const Tensor& x) {
    return margin.gradient(spec.apply(x));
}

Tensor true_composed_gradient(MarginFn& margin, const TransformSpec& spec, const Tensor& x) {
    if (spec.kind == TransformSpec::Kind::bit_depth) {
        return Tensor(x.shape());  // staircase derivative is zero almost everywhere
    }
    return margin.gradient(x);
}

}  // namespace clever
