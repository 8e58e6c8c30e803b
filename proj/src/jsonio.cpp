#include "fraclab/jsonio.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

namespace fraclab {

double round_sig(double x) {
  if (x == 0.0 || !std::isfinite(x)) return x;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12e", x);
  return std::strtod(buf, nullptr);
}

json num(double x) { return json(round_sig(x)); }

json vec_to_json(const Vec& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(round_sig(v[i]));
  return arr;
}

Vec vec_from_json(const json& j) {
  Vec v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
  return v;
}

std::string json_hash(const json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

json cauchy_to_json(const CauchyDataSet& data, const DiscreteManifold& m,
                    bool blind) {
  json j;
  j["manifold_hash"] = data.manifold_hash;
  j["alpha"] = num(data.alpha);
  j["seed"] = data.seed;
  j["O_indices"] = data.O.vertex_indices;
  j["V_on_O"] = vec_to_json(data.V_on_O);
  Vec mass_O(data.O.size());
  for (int k = 0; k < data.O.size(); ++k)
    mass_O[k] = m.mass[data.O.vertex_indices[k]];
  j["mass_on_O"] = vec_to_json(mass_O);
  j["blind"] = blind;
  json pairs = json::array();
  for (const CauchyPair& p : data.pairs) {
    json pj;
    pj["f_O"] = vec_to_json(p.f_O);
    pj["u_O"] = vec_to_json(p.u_O);
    pj["fracu_O"] = vec_to_json(p.fracu_O);
    if (!blind) {
      pj["full_f"] = vec_to_json(p.full_f);
      pj["full_u"] = vec_to_json(p.full_u);
      pj["residual"] = num(p.residual);
      pj["kernel_orthogonality"] = num(p.kernel_orthogonality);
    }
    pairs.push_back(pj);
  }
  j["pairs"] = pairs;
  return j;
}

BlindCauchyData blind_cauchy_from_json(const json& j) {
  BlindCauchyData b;
  b.O_indices = j.at("O_indices").get<std::vector<int>>();
  b.alpha = j.at("alpha").get<double>();
  b.seed = j.at("seed").get<std::uint64_t>();
  b.V_on_O = vec_from_json(j.at("V_on_O"));
  b.mass_on_O = vec_from_json(j.at("mass_on_O"));
  b.manifold_hash = j.at("manifold_hash").get<std::string>();
  for (const auto& pj : j.at("pairs")) {
    b.f_O.push_back(vec_from_json(pj.at("f_O")));
    b.u_O.push_back(vec_from_json(pj.at("u_O")));
    b.fracu_O.push_back(vec_from_json(pj.at("fracu_O")));
  }
  return b;
}

json spectral_data_to_json(const SpectralData& sd) {
  json j;
  json evs = json::array();
  for (double e : sd.eigenvalues) evs.push_back(round_sig(e));
  j["eigenvalues"] = evs;
  j["multiplicities"] = sd.multiplicities;
  json rows = json::array();
  for (int r = 0; r < sd.restrictions.rows(); ++r)
    for (int c = 0; c < sd.restrictions.cols(); ++c)
      rows.push_back(round_sig(sd.restrictions(r, c)));
  j["restrictions"] = rows;  // row-major
  j["O_indices"] = sd.O_indices;
  j["normalized"] = sd.normalized;
  j["lambda_cap"] = num(sd.lambda_cap);
  j["unsaturated"] = sd.unsaturated;
  j["ambiguous"] = sd.ambiguous;
  j["alt_multiplicity"] = sd.alt_multiplicity;
  return j;
}

SpectralData spectral_data_from_json(const json& j) {
  SpectralData sd;
  sd.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
  sd.multiplicities = j.at("multiplicities").get<std::vector<int>>();
  sd.O_indices = j.at("O_indices").get<std::vector<int>>();
  sd.normalized = j.at("normalized").get<bool>();
  sd.lambda_cap = j.at("lambda_cap").get<double>();
  if (j.contains("unsaturated"))
    sd.unsaturated = j.at("unsaturated").get<std::vector<int>>();
  if (j.contains("ambiguous"))
    sd.ambiguous = j.at("ambiguous").get<std::vector<int>>();
  if (j.contains("alt_multiplicity"))
    sd.alt_multiplicity = j.at("alt_multiplicity").get<std::vector<int>>();
  const int n_O = static_cast<int>(sd.O_indices.size());
  int total = 0;
  for (int d : sd.multiplicities) total += d;
  const auto& rows = j.at("restrictions");
  if (static_cast<int>(rows.size()) != n_O * total)
    throw std::runtime_error("spectral data json: restriction matrix shape");
  sd.restrictions = Mat(n_O, total);
  size_t idx = 0;
  for (int r = 0; r < n_O; ++r)
    for (int c = 0; c < total; ++c)
      sd.restrictions(r, c) = rows[idx++].get<double>();
  return sd;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << j.dump(2) << "\n";
}

json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  json j;
  is >> j;
  return j;
}

}  // namespace fraclab
