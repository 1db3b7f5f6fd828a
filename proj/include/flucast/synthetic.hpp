#pragma once

#include "flucast/data.hpp"

#include <cstddef>
#include <cstdint>

namespace flucast::harness {

/// 53 for ISO-8601 long years, otherwise 52.
int iso_weeks_in_year(int year);

/// Weekly ILI-like rates for `years` calendar years starting at `start_year`.
///
/// Log10 rates combine a baseline, one winter epidemic per season peaking between
/// week 48 and week 4, a weak summer bump and AR(1) noise, so rates are strictly
/// positive with multiplicative noise.
data::IliSeries generate_synthetic_ili(std::size_t years, std::uint64_t seed, int start_year = 2010);

} // namespace flucast::harness
