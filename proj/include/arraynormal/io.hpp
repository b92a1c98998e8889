#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "arraynormal/covariance.hpp"
#include "arraynormal/estimators.hpp"
#include "arraynormal/tensor.hpp"

namespace arraynormal {

// Shortest decimal representation that parses back to the identical double
// (never loses a bit), and its inverse.
std::string format_double(double v);
double parse_double(const std::string& s);

// "4x4x4" <-> {4,4,4}
std::string format_dims(const std::vector<std::int64_t>& dims);
std::vector<std::int64_t> parse_dims(const std::string& s);

// Tensor file format (.tnsr.json):
//   {"dims": [...], "order": "col-major", "data": [...]}
// with data in column-major linear order. Reading validates the order tag,
// the length, and that every entry is finite.
std::string tensor_to_json(const Tensor& x);
Tensor tensor_from_json(const std::string& text);
void write_tensor_file(const std::string& path, const Tensor& x);
Tensor read_tensor_file(const std::string& path);

// Covariance format: {"sigma2": s, "factors": [[[row], [row], ...], ...]}
// with each factor given by rows (row-major). Loading validates the
// positive-definite and unit-determinant invariants. Extra keys (such as a
// diagnostics block) are ignored, so estimate files reload as parameters.
std::string covariance_to_json(const SeparableCovariance& cov);
SeparableCovariance covariance_from_json(const std::string& text);
void write_covariance_file(const std::string& path, const SeparableCovariance& cov);
SeparableCovariance read_covariance_file(const std::string& path);

// Estimate file: the covariance object plus
//   "diagnostics": {"method", "iterations", "kept_draws", "final_objective", "seed"}
// (final_objective is null when the method has none).
std::string estimate_to_json(const EstimatorOutput& out, std::uint64_t seed);
void write_estimate_file(const std::string& path, const EstimatorOutput& out, std::uint64_t seed);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace arraynormal
