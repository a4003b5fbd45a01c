#pragma once

// Name-based dispatch over the Tucker algorithms.

#include "rtucker/tucker.hpp"

#include <array>
#include <string_view>

namespace rtucker {

enum class TuckerAlgorithm { thosvd, sthosvd, hooi, rp_hosvd, rp_hooi, r_sthosvd, r_pet, r_st, r_hoid, r_lshooi };

inline constexpr std::array<std::pair<TuckerAlgorithm, std::string_view>, 10> kAlgorithmNames{{
    {TuckerAlgorithm::thosvd, "thosvd"},
    {TuckerAlgorithm::sthosvd, "sthosvd"},
    {TuckerAlgorithm::hooi, "hooi"},
    {TuckerAlgorithm::rp_hosvd, "rp-hosvd"},
    {TuckerAlgorithm::rp_hooi, "rp-hooi"},
    {TuckerAlgorithm::r_sthosvd, "r-sthosvd"},
    {TuckerAlgorithm::r_pet, "r-pet"},
    {TuckerAlgorithm::r_st, "r-st"},
    {TuckerAlgorithm::r_hoid, "r-hoid"},
    {TuckerAlgorithm::r_lshooi, "r-lshooi"},
}};

[[nodiscard]] inline std::string_view algorithm_name(TuckerAlgorithm a) {
    for (const auto& [k, v] : kAlgorithmNames)
        if (k == a) return v;
    return "?";
}

[[nodiscard]] inline std::optional<TuckerAlgorithm> parse_algorithm(std::string_view s) {
    for (const auto& [k, v] : kAlgorithmNames)
        if (v == s) return k;
    return std::nullopt;
}

[[nodiscard]] inline bool is_randomized(TuckerAlgorithm a) {
    return a != TuckerAlgorithm::thosvd && a != TuckerAlgorithm::sthosvd && a != TuckerAlgorithm::hooi;
}

[[nodiscard]] inline TuckerResult decompose(const DenseTensor& t, TuckerAlgorithm algo, const TuckerConfig& cfg) {
    switch (algo) {
        case TuckerAlgorithm::thosvd: return thosvd(t, cfg);
        case TuckerAlgorithm::sthosvd: return sthosvd(t, cfg);
        case TuckerAlgorithm::hooi: return hooi(t, cfg);
        case TuckerAlgorithm::rp_hosvd: return rp_hosvd(t, cfg);
        case TuckerAlgorithm::rp_hooi: return rp_hooi(t, cfg);
        case TuckerAlgorithm::r_sthosvd: return r_sthosvd(t, cfg);
        case TuckerAlgorithm::r_pet: return r_pet(t, cfg);
        case TuckerAlgorithm::r_st: return r_st(t, cfg);
        case TuckerAlgorithm::r_hoid: return r_hoid(t, cfg);
        case TuckerAlgorithm::r_lshooi: return r_lshooi(t, cfg);
    }
    throw std::invalid_argument("unknown algorithm");
}

}  // namespace rtucker
