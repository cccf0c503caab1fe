#pragma once

#include "peierls/hofstadter.hpp"
#include "peierls/quantum.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace peierls::io {

enum class Experiment { Bands, Geometry, Butterfly, Egorov, Flow, Propagate };

std::string to_string(Experiment e);
std::optional<Experiment> experiment_from_string(const std::string& s);

struct Coefficient {
  DualIndex m;
  Real re = 0;
  Real im = 0;

  bool operator==(const Coefficient&) const = default;
};

/// Named preset (zero, mathieu, mathieu2d, broken_inversion) or custom Fourier coefficients.
struct PotentialSpec {
  std::string preset = "mathieu";
  int dim = 1;  // zero preset only
  Real v = 1;
  Real w = 0;
  Real theta = 0;
  std::vector<std::vector<Real>> basis;  // custom only, rows are lattice vectors
  std::vector<Coefficient> coefficients;

  bool operator==(const PotentialSpec&) const = default;
};

/// phi(r) = force . r + amplitude cos(2 pi r_1 / period); in 2D a constant B_12 = b.
struct FieldSpec {
  Real b = 0;
  Real lambda = 1;
  std::string gauge = "symmetric";
  std::vector<Real> force;
  Real amplitude = 0;
  Real period = 1;

  bool operator==(const FieldSpec&) const = default;
};

struct NumericsSpec {
  int cutoff = 5;
  std::vector<int> kgrid;
  int bands = 3;
  int band = 0;
  std::vector<Real> eps;
  Real dt = 0.01;
  Real t_final = 1;
  int theta_points = 64;
  int q_max = 20;
  bool chern = true;
  int k_samples = 32;  // 0: automatic, 1D Egorov only
  int points = 12;
  Real k0 = 0;
  Real width = 1;

  bool operator==(const NumericsSpec&) const = default;
};

struct RunConfig {
  Experiment experiment = Experiment::Bands;
  PotentialSpec potential;
  FieldSpec field;
  NumericsSpec numerics;
  std::map<std::string, Real> tolerances;
  std::string out_dir = "out";
  std::uint64_t seed = 0;

  bool operator==(const RunConfig&) const = default;
};

struct ParseResult {
  std::optional<RunConfig> config;
  std::vector<std::string> errors;  // "path: message", all violations found
};

/// Strict: unknown keys, wrong types, missing required keys and invalid values are all reported.
ParseResult parse_config(const std::string& text);
nlohmann::json serialize_config(const RunConfig& config);

FourierPotential build_potential(const PotentialSpec& spec);
EMFieldConfig build_field(const FieldSpec& spec, int dim, Real eps);

struct Check {
  std::string name;
  Real value = 0;
  Real tolerance = 0;
  std::string relation;  // "<=" or ">="
  bool pass = false;
};

struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<Real>> rows;  // NaN is written as an empty field
};

struct RunReport {
  nlohmann::json config;
  nlohmann::json results;
  std::vector<Check> checks;
  std::vector<Table> tables;  // CSV
  std::vector<Table> plots;   // whitespace-delimited, no header
  std::map<std::string, Real> timing;

  bool passed() const;
};

RunReport run(const RunConfig& config);

std::string format_csv(const Table& t);
std::string format_plot(const Table& t);
/// report.json, timing.json, <table>.csv and <plot>.dat; returns the files written.
std::vector<std::filesystem::path> write_outputs(const RunReport& report, const std::filesystem::path& dir);

}  // namespace peierls::io
