#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace tucker {

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Order-sensitive combination of several 64-bit words into one seed.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> words) noexcept;

/// FNV-1a of a label, for folding names such as experiment kinds into seeds.
std::uint64_t label_hash(std::string_view label) noexcept;

/// Seed for one Monte Carlo trial.
std::uint64_t trial_seed(std::uint64_t master_seed, std::string_view kind, std::uint64_t grid_index,
                         std::uint64_t repetition) noexcept;

}  // namespace tucker
