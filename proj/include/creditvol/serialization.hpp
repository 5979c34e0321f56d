#pragma once

#include <filesystem>
#include <span>

#include "json.hpp"

#include "creditvol/pmmh.hpp"
#include "creditvol/pruned_irf.hpp"
#include "creditvol/sv_model.hpp"
#include "creditvol/timeseries.hpp"

namespace creditvol {

void to_json(nlohmann::json& j, const SvParams& p);
void from_json(const nlohmann::json& j, SvParams& p);
void to_json(nlohmann::json& j, const PriorSpec& s);
void from_json(const nlohmann::json& j, PriorSpec& s);
void to_json(nlohmann::json& j, const RbcCalibration& c);
void from_json(const nlohmann::json& j, RbcCalibration& c);

nlohmann::json read_json(const std::filesystem::path& path);
// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

// Columns t, eps, eta, eta_star; eta and eta_star are empty at t = 1.
// `periods` labels the rows when given (same length as eps).
void write_shock_csv(const std::filesystem::path& path, const ShockSet& s,
                     std::span<const Period> periods = {});
// Reads the column `column` (eta or eta_star) of a shock CSV as a series,
// skipping the empty first row.
TimeSeries read_shock_series(const std::filesystem::path& path, const std::string& column);

// One row per retained draw: mu_h, phi_y, phi_h, tau, rho, loglik.
void write_draws_csv(const std::filesystem::path& path, const PosteriorDraws& d);
PosteriorDraws read_draws_csv(const std::filesystem::path& path);

// Stored latent paths, one row per path: draw, then h at each period.
void write_latent_paths_csv(const std::filesystem::path& path, const PosteriorDraws& d,
                            std::span<const Period> periods);
std::vector<LatentPath> read_latent_paths_csv(const std::filesystem::path& path,
                                              std::vector<std::size_t>* draw_index = nullptr);

// t, mean of 100 exp(h_t / 2) across stored paths, 5% and 95% bands.
void write_volatility_csv(const std::filesystem::path& path, const PosteriorDraws& d,
                          std::span<const Period> periods);

nlohmann::json summary_json(const PosteriorSummary& s);

}  // namespace creditvol
