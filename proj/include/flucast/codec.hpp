#pragma once

#include "flucast/clpso.hpp"
#include "flucast/strategies.hpp"

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace flucast::clpso {

/// One hyperparameter's slice of the particle: a big-endian index into `candidates`.
struct ParameterSegment {
    std::string name;
    std::size_t bit_width = 0;
    std::vector<double> candidates;

    /// Derives the bit width; candidates.size() must be a power of two.
    ParameterSegment(std::string name, std::vector<double> candidates);
    ParameterSegment(std::string name, std::size_t bit_width, std::vector<double> candidates);
};

/// A decoded particle: selected lags and one value per hyperparameter.
struct ModelConfig {
    strategies::FeatureMask feature_mask;
    std::vector<std::pair<std::string, double>> parameters;

    double get(const std::string& name) const;
    bool operator==(const ModelConfig&) const = default;
};

/// Maps bit strings of length M = d + sum(bit widths) to model configurations.
class ParticleCodec {
public:
    ParticleCodec(std::size_t feature_dim, std::vector<ParameterSegment> segments);

    std::size_t feature_dim() const { return feature_dim_; }
    std::size_t dimension() const { return dimension_; }
    const std::vector<ParameterSegment>& segments() const { return segments_; }

    Bits encode(const ModelConfig& config) const;
    /// An all-zero feature mask decodes with the lag-0 bit forced on.
    ModelConfig decode(const Bits& bits) const;

private:
    std::size_t feature_dim_;
    std::vector<ParameterSegment> segments_;
    std::size_t dimension_;
};

} // namespace flucast::clpso
