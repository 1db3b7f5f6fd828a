#include "flucast/codec.hpp"

#include "flucast/errors.hpp"

#include <algorithm>
#include <stdexcept>

namespace flucast::clpso {

namespace {

std::size_t width_for(std::size_t count)
{
    std::size_t width = 0;
    while ((std::size_t{1} << width) < count) {
        ++width;
    }
    return width;
}

} // namespace

ParameterSegment::ParameterSegment(std::string name_, std::vector<double> candidates_)
    : ParameterSegment(std::move(name_), width_for(candidates_.size()), candidates_)
{
}

ParameterSegment::ParameterSegment(std::string name_, std::size_t bit_width_, std::vector<double> candidates_)
    : name(std::move(name_)), bit_width(bit_width_), candidates(std::move(candidates_))
{
    if (bit_width == 0 || bit_width > 30 || candidates.size() != (std::size_t{1} << bit_width)) {
        throw std::invalid_argument("segment '" + name + "': candidate count " + std::to_string(candidates.size()) +
                                    " is not 2^" + std::to_string(bit_width));
    }
}

double ModelConfig::get(const std::string& name) const
{
    for (const auto& [key, value] : parameters) {
        if (key == name) {
            return value;
        }
    }
    throw std::out_of_range("model config has no parameter '" + name + "'");
}

ParticleCodec::ParticleCodec(std::size_t feature_dim, std::vector<ParameterSegment> segments)
    : feature_dim_(feature_dim), segments_(std::move(segments)), dimension_(feature_dim)
{
    if (feature_dim_ == 0) {
        throw std::invalid_argument("codec: feature dimension must be positive");
    }
    for (const auto& s : segments_) {
        dimension_ += s.bit_width;
    }
}

Bits ParticleCodec::encode(const ModelConfig& config) const
{
    if (config.feature_mask.size() != feature_dim_) {
        throw DimensionError("encode: feature mask has " + std::to_string(config.feature_mask.size()) +
                             " bits, expected " + std::to_string(feature_dim_));
    }
    if (config.parameters.size() != segments_.size()) {
        throw std::invalid_argument("encode: parameter count does not match codec segments");
    }
    Bits bits;
    bits.reserve(dimension_);
    for (bool b : config.feature_mask) {
        bits.push_back(b ? 1 : 0);
    }
    for (std::size_t s = 0; s < segments_.size(); ++s) {
        const auto& seg = segments_[s];
        const auto& [name, value] = config.parameters[s];
        if (name != seg.name) {
            throw std::invalid_argument("encode: expected parameter '" + seg.name + "', got '" + name + "'");
        }
        const auto it = std::find(seg.candidates.begin(), seg.candidates.end(), value);
        if (it == seg.candidates.end()) {
            throw std::invalid_argument("encode: value " + std::to_string(value) + " is not a candidate for '" +
                                        seg.name + "'");
        }
        const auto index = static_cast<std::size_t>(it - seg.candidates.begin());
        for (std::size_t k = seg.bit_width; k-- > 0;) {
            bits.push_back(static_cast<std::uint8_t>((index >> k) & 1U));
        }
    }
    return bits;
}

ModelConfig ParticleCodec::decode(const Bits& bits) const
{
    if (bits.size() != dimension_) {
        throw DimensionError("decode: expected " + std::to_string(dimension_) + " bits, got " +
                             std::to_string(bits.size()));
    }
    ModelConfig config;
    config.feature_mask.resize(feature_dim_);
    for (std::size_t j = 0; j < feature_dim_; ++j) {
        config.feature_mask[j] = bits[j] != 0;
    }
    if (strategies::popcount(config.feature_mask) == 0) {
        config.feature_mask[0] = true;
    }
    std::size_t pos = feature_dim_;
    for (const auto& seg : segments_) {
        std::size_t index = 0;
        for (std::size_t k = 0; k < seg.bit_width; ++k) {
            index = (index << 1U) | (bits[pos++] != 0 ? 1U : 0U);
        }
        config.parameters.emplace_back(seg.name, seg.candidates[index]);
    }
    return config;
}

} // namespace flucast::clpso
