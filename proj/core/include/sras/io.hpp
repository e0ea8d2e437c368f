#pragma once

#include <string>
#include <vector>

#include "sras/baselines.hpp"
#include "sras/gridfisher.hpp"
#include "sras/probes.hpp"
#include "sras/repmap.hpp"
#include "sras/spd.hpp"
#include "sras/summaries.hpp"

// Text formats: JSON for structured objects, CSV for matrices and tables.
// Every parser takes a `source` name used in "source:line: message"
// diagnostics and throws ParseError (or the relevant domain error).

namespace sras::io {

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/// Shortest representation that parses back to the same double.
std::string format_double(double x);
double parse_double(const std::string& field, const std::string& source, std::size_t line);

/// Rows of comma-separated values. A non-numeric first row is a header and is
/// skipped when allowed.
std::string matrix_to_csv(const Matrix& m);
Matrix matrix_from_csv(const std::string& text, const std::string& source, bool allow_header = true);

std::string sym_matrix_to_json(const SymMatrix& m);
SymMatrix sym_matrix_from_json(const std::string& text, const std::string& source);

std::string model_to_json(const RepMap& map);
RepMap model_from_json(const std::string& text, const std::string& source);

/// Header "x0,...,x{d-1}[,label]".
std::string dataset_to_csv(const Dataset& data);
Dataset dataset_from_csv(const std::string& text, const std::string& source);

/// d rows x k columns; orthonormality is checked by PerturbationFamily.
PerturbationFamily family_from_csv(const std::string& text, const std::string& id, const std::string& source);

std::string summary_to_json(const SensitivitySummary& s);
SensitivitySummary summary_from_json(const std::string& text, const std::string& source);

std::string probe_set_to_json(const ProbeSet& probes);
ProbeSet probe_set_from_json(const std::string& text, const std::string& source);

ActivationMatrix activations_from_csv(const std::string& text, const std::string& source);

/// experiment_id, donor_id, label, condition_index, cell responses...
std::string trials_to_csv(const std::vector<ExperimentRecord>& records);
std::vector<ExperimentRecord> trials_from_csv(const std::string& text, const std::string& source);

std::string grid_to_json(const ConditionGrid& grid);
ConditionGrid grid_from_json(const std::string& text, const std::string& source);

}  // namespace sras::io
