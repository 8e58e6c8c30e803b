#pragma once

// JSON serialization of the pipeline's wire formats plus deterministic
// number formatting (all doubles rounded to 12 significant digits before
// dumping so identical runs produce byte-identical reports).

#include "fraclab/forward.hpp"
#include "fraclab/recover.hpp"

#include <json.hpp>

#include <string>

namespace fraclab {

using json = nlohmann::ordered_json;

/// Round to 12 significant digits (deterministic report payloads).
double round_sig(double x);
json num(double x);
json vec_to_json(const Vec& v);
Vec vec_from_json(const json& j);

/// FNV-1a over the compact dump, hex string.
std::string json_hash(const json& j);

/// metadata block + array of {f_O, u_O, fracu_O}; blind omits everything
/// outside O, otherwise the private full solutions ride along for oracles.
json cauchy_to_json(const CauchyDataSet& data, const DiscreteManifold& m,
                    bool blind);
BlindCauchyData blind_cauchy_from_json(const json& j);

json spectral_data_to_json(const SpectralData& sd);
SpectralData spectral_data_from_json(const json& j);

void write_json_file(const std::string& path, const json& j);
json read_json_file(const std::string& path);

}  // namespace fraclab
