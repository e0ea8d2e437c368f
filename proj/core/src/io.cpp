#include "sras/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace sras::io {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void parse_fail(const std::string& source, std::size_t line, const std::string& what) {
  std::ostringstream os;
  os << source;
  if (line > 0) os << ':' << line;
  os << ": " << what;
  fail(ErrorCode::ParseError, os.str());
}

Json parse_json(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    // Map the byte offset back to a line number for the diagnostic.
    std::size_t line = 1;
    for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, text.size()); ++i) line += text[i] == '\n';
    parse_fail(source, line, e.what());
  }
}

const Json& field(const Json& j, const char* key, const std::string& source) {
  if (!j.is_object() || !j.contains(key)) parse_fail(source, 0, std::string("missing field '") + key + "'");
  return j.at(key);
}

double number(const Json& j, const std::string& what, const std::string& source) {
  if (!j.is_number()) parse_fail(source, 0, what + " must be a number");
  return j.get<double>();
}

Index integer(const Json& j, const std::string& what, const std::string& source) {
  if (!j.is_number_integer()) parse_fail(source, 0, what + " must be an integer");
  return j.get<Index>();
}

std::string text_field(const Json& j, const std::string& what, const std::string& source) {
  if (!j.is_string()) parse_fail(source, 0, what + " must be a string");
  return j.get<std::string>();
}

Vector vector_of(const Json& j, const std::string& what, const std::string& source) {
  if (!j.is_array()) parse_fail(source, 0, what + " must be an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = number(j[i], what, source);
  return v;
}

Matrix matrix_of(const Json& j, const std::string& what, const std::string& source) {
  if (!j.is_array() || j.empty()) parse_fail(source, 0, what + " must be a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) parse_fail(source, 0, what + " rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = number(j[r][c], what, source);
  }
  return m;
}

Json json_of(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json json_of(const Matrix& m) {
  Json a = Json::array();
  for (Index r = 0; r < m.rows(); ++r) a.push_back(json_of(Vector(m.row(r).transpose())));
  return a;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

struct CsvLine {
  std::size_t number;
  std::vector<std::string> fields;
};

std::vector<CsvLine> split_csv(const std::string& text) {
  std::vector<CsvLine> out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    CsvLine row{n, {}};
    std::string cell;
    std::istringstream cells(line);
    while (std::getline(cells, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      row.fields.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    if (line.back() == ',') row.fields.emplace_back();
    out.push_back(std::move(row));
  }
  return out;
}

bool is_number(const std::string& s) {
  double x = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  return ec == std::errc() && p == s.data() + s.size() && !s.empty();
}

bool numeric_row(const CsvLine& row) {
  for (const auto& f : row.fields) {
    if (!is_number(f)) return false;
  }
  return true;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "," : "") + parts[i];
  return out;
}

std::string summary_kind_string(SummaryKind k) { return k == SummaryKind::Fisher ? "F" : "G"; }

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  out << content;
  if (!out) fail(ErrorCode::IoError, "failed writing '" + path + "'");
}

std::string format_double(double x) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) fail(ErrorCode::InvalidArgument, "cannot format number");
  return std::string(buf, p);
}

double parse_double(const std::string& field, const std::string& source, std::size_t line) {
  double x = 0.0;
  // Surrounding blanks are tolerated so hand-edited CSV ("1, 2") parses.
  const char* begin = field.data();
  const char* end = field.data() + field.size();
  while (begin != end && (*begin == ' ' || *begin == '\t' || *begin == '\r')) ++begin;
  while (end != begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
  if (begin != end && *begin == '+') ++begin;
  const auto [p, ec] = std::from_chars(begin, end, x);
  if (ec != std::errc() || p != end || begin == end) {
    parse_fail(source, line, "'" + field + "' is not a number");
  }
  if (!std::isfinite(x)) parse_fail(source, line, "non-finite value '" + field + "'");
  return x;
}

std::string matrix_to_csv(const Matrix& m) {
  std::string out;
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) out += (c ? "," : "") + format_double(m(r, c));
    out += '\n';
  }
  return out;
}

Matrix matrix_from_csv(const std::string& text, const std::string& source, bool allow_header) {
  std::vector<CsvLine> rows = split_csv(text);
  if (!rows.empty() && allow_header && !numeric_row(rows.front())) rows.erase(rows.begin());
  if (rows.empty()) parse_fail(source, 0, "no numeric rows");
  const std::size_t cols = rows.front().fields.size();
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].fields.size() != cols) {
      parse_fail(source, rows[r].number, "expected " + std::to_string(cols) + " columns, found " +
                                             std::to_string(rows[r].fields.size()));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Index>(r), static_cast<Index>(c)) = parse_double(rows[r].fields[c], source, rows[r].number);
    }
  }
  return m;
}

std::string sym_matrix_to_json(const SymMatrix& m) {
  Json j;
  j["k"] = m.dim();
  Json entries = Json::array();
  for (Index r = 0; r < m.dim(); ++r) {
    for (Index c = 0; c < m.dim(); ++c) entries.push_back(m(r, c));
  }
  j["entries"] = std::move(entries);
  return dump(j);
}

SymMatrix sym_matrix_from_json(const std::string& text, const std::string& source) {
  const Json j = parse_json(text, source);
  const Index k = integer(field(j, "k", source), "k", source);
  const Vector e = vector_of(field(j, "entries", source), "entries", source);
  if (k < 1 || e.size() != k * k) parse_fail(source, 0, "entries must hold k*k values");
  Matrix m(k, k);
  for (Index r = 0; r < k; ++r) {
    for (Index c = 0; c < k; ++c) m(r, c) = e(r * k + c);
  }
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
    fail(ErrorCode::InvalidMatrix, source + ": matrix is not symmetric");
  }
  return SymMatrix(m);
}

std::string model_to_json(const RepMap& map) {
  Json j;
  j["input_dim"] = map.input_dim();
  Json layers = Json::array();
  for (const LayerSpec& l : map.layers()) {
    Json lj;
    if (l.is_dense()) {
      lj["kind"] = "dense";
      lj["W"] = json_of(l.dense_layer().weight);
      lj["b"] = json_of(l.dense_layer().bias);
    } else {
      lj["kind"] = "activation";
      lj["fn"] = to_string(l.activation_fn());
    }
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  j["classifier"] = map.classifier();
  return dump(j);
}

RepMap model_from_json(const std::string& text, const std::string& source) {
  const Json j = parse_json(text, source);
  const Index input_dim = integer(field(j, "input_dim", source), "input_dim", source);
  const Json& layers_json = field(j, "layers", source);
  if (!layers_json.is_array()) parse_fail(source, 0, "'layers' must be an array");
  std::vector<LayerSpec> layers;
  for (std::size_t i = 0; i < layers_json.size(); ++i) {
    const Json& lj = layers_json[i];
    const std::string where = "layer " + std::to_string(i);
    const std::string kind = text_field(field(lj, "kind", source), where + " kind", source);
    if (kind == "dense") {
      const Matrix w = matrix_of(field(lj, "W", source), where + " W", source);
      const Vector b = lj.contains("b") ? vector_of(lj.at("b"), where + " b", source) : Vector::Zero(w.rows());
      layers.push_back(LayerSpec::dense(w, b));
    } else if (kind == "activation") {
      layers.push_back(LayerSpec::activation(activation_from_string(text_field(field(lj, "fn", source), where + " fn", source))));
    } else {
      parse_fail(source, 0, where + ": unknown kind '" + kind + "'");
    }
  }
  const bool classifier = j.contains("classifier") && j.at("classifier").is_boolean() && j.at("classifier").get<bool>();
  return RepMap(input_dim, std::move(layers), classifier);
}

std::string dataset_to_csv(const Dataset& data) {
  std::vector<std::string> header;
  for (Index c = 0; c < data.dim(); ++c) header.push_back("x" + std::to_string(c));
  if (data.labeled()) header.emplace_back("label");
  std::string out = join(header) + "\n";
  for (Index r = 0; r < data.size(); ++r) {
    for (Index c = 0; c < data.dim(); ++c) out += (c ? "," : "") + format_double(data.samples(r, c));
    if (data.labeled()) out += "," + std::to_string(data.labels[static_cast<std::size_t>(r)]);
    out += '\n';
  }
  return out;
}

Dataset dataset_from_csv(const std::string& text, const std::string& source) {
  std::vector<CsvLine> rows = split_csv(text);
  if (rows.empty()) parse_fail(source, 0, "missing header row");
  const CsvLine header = rows.front();
  rows.erase(rows.begin());
  const bool labeled = !header.fields.empty() && header.fields.back() == "label";
  const std::size_t d = header.fields.size() - (labeled ? 1 : 0);
  for (std::size_t c = 0; c < d; ++c) {
    if (header.fields[c] != "x" + std::to_string(c)) {
      parse_fail(source, header.number, "expected header column 'x" + std::to_string(c) + "'");
    }
  }
  if (d == 0) parse_fail(source, header.number, "dataset has no feature columns");
  Dataset data{Matrix(static_cast<Index>(rows.size()), static_cast<Index>(d)), {}};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const CsvLine& row = rows[r];
    if (row.fields.size() != header.fields.size()) {
      parse_fail(source, row.number, "expected " + std::to_string(header.fields.size()) + " columns");
    }
    for (std::size_t c = 0; c < d; ++c) {
      data.samples(static_cast<Index>(r), static_cast<Index>(c)) = parse_double(row.fields[c], source, row.number);
    }
    if (labeled) {
      int label = 0;
      const std::string& f = row.fields.back();
      const auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), label);
      if (ec != std::errc() || p != f.data() + f.size()) parse_fail(source, row.number, "label must be an integer");
      data.labels.push_back(label);
    }
  }
  return data;
}

PerturbationFamily family_from_csv(const std::string& text, const std::string& id, const std::string& source) {
  return PerturbationFamily(id, matrix_from_csv(text, source, true), FamilyKind::User);
}

std::string summary_to_json(const SensitivitySummary& s) {
  Json j;
  j["kind"] = summary_kind_string(s.kind());
  j["k"] = s.dim();
  j["n_samples"] = s.n_samples();
  j["family_id"] = s.family_id();
  Json noise;
  noise["kind"] = to_string(s.noise().kind);
  if (s.noise().sigma) noise["sigma"] = *s.noise().sigma;
  j["noise"] = std::move(noise);
  j["class_label"] = s.class_label() ? Json(*s.class_label()) : Json(nullptr);
  j["operator"] = json_of(s.op().matrix());
  return dump(j);
}

SensitivitySummary summary_from_json(const std::string& text, const std::string& source) {
  const Json j = parse_json(text, source);
  const std::string kind = text_field(field(j, "kind", source), "kind", source);
  if (kind != "G" && kind != "F") parse_fail(source, 0, "kind must be \"G\" or \"F\"");
  const Index k = integer(field(j, "k", source), "k", source);
  const Matrix op = matrix_of(field(j, "operator", source), "operator", source);
  if (op.rows() != k || op.cols() != k) parse_fail(source, 0, "operator must be k x k");
  NoiseDescriptor noise;
  if (j.contains("noise") && j.at("noise").is_object()) {
    const std::string nk = text_field(field(j.at("noise"), "kind", source), "noise kind", source);
    if (nk == "none") {
      noise.kind = NoiseKind::None;
    } else if (nk == "isotropic") {
      noise.kind = NoiseKind::Isotropic;
      if (j.at("noise").contains("sigma")) noise.sigma = number(j.at("noise").at("sigma"), "noise sigma", source);
    } else if (nk == "full") {
      noise.kind = NoiseKind::Full;
    } else {
      parse_fail(source, 0, "unknown noise kind '" + nk + "'");
    }
  }
  std::optional<int> label;
  if (j.contains("class_label") && !j.at("class_label").is_null()) {
    label = static_cast<int>(integer(j.at("class_label"), "class_label", source));
  }
  const Index n = j.contains("n_samples") ? integer(j.at("n_samples"), "n_samples", source) : 0;
  const std::string family = j.contains("family_id") ? text_field(j.at("family_id"), "family_id", source) : "";
  if ((op - op.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, op.cwiseAbs().maxCoeff())) {
    fail(ErrorCode::InvalidMatrix, source + ": operator is not symmetric");
  }
  return SensitivitySummary(kind == "F" ? SummaryKind::Fisher : SummaryKind::Pullback, SymMatrix(op), n, family,
                            noise, label);
}

std::string probe_set_to_json(const ProbeSet& probes) {
  Json j;
  j["k"] = probes.dim;
  j["family_id"] = probes.family_id;
  Json sides = Json::array();
  for (const ProbeDirection& d : probes.directions) {
    Json dj;
    dj["sign"] = d.side == ProbeSide::Positive ? "+" : "-";
    dj["v"] = json_of(d.v);
    dj["lambda"] = d.lambda;
    sides.push_back(std::move(dj));
  }
  j["sides"] = std::move(sides);
  Json amps = Json::array();
  for (double a : probes.amplitudes) amps.push_back(a);
  j["amplitudes"] = std::move(amps);
  return dump(j);
}

ProbeSet probe_set_from_json(const std::string& text, const std::string& source) {
  const Json j = parse_json(text, source);
  ProbeSet p;
  p.dim = integer(field(j, "k", source), "k", source);
  p.family_id = j.contains("family_id") ? text_field(j.at("family_id"), "family_id", source) : "";
  const Json& sides = field(j, "sides", source);
  if (!sides.is_array()) parse_fail(source, 0, "'sides' must be an array");
  Index n_pos = 0;
  for (const Json& dj : sides) {
    ProbeDirection d;
    const std::string sign = text_field(field(dj, "sign", source), "sign", source);
    if (sign != "+" && sign != "-") parse_fail(source, 0, "sign must be \"+\" or \"-\"");
    d.side = sign == "+" ? ProbeSide::Positive : ProbeSide::Negative;
    d.v = vector_of(field(dj, "v", source), "v", source);
    if (d.v.size() != p.dim) parse_fail(source, 0, "probe direction length differs from k");
    d.lambda = dj.contains("lambda") ? number(dj.at("lambda"), "lambda", source) : 0.0;
    n_pos += d.side == ProbeSide::Positive;
    p.directions.push_back(std::move(d));
  }
  p.probes_per_side = n_pos;
  if (j.contains("amplitudes")) {
    const Vector a = vector_of(j.at("amplitudes"), "amplitudes", source);
    p.amplitudes.assign(a.data(), a.data() + a.size());
  }
  return p;
}

ActivationMatrix activations_from_csv(const std::string& text, const std::string& source) {
  return ActivationMatrix(matrix_from_csv(text, source, true));
}

std::string trials_to_csv(const std::vector<ExperimentRecord>& records) {
  Index cells = records.empty() ? 0 : records.front().n_cells();
  std::vector<std::string> header{"experiment_id", "donor_id", "label", "condition_index"};
  for (Index c = 0; c < cells; ++c) header.push_back("cell" + std::to_string(c));
  std::string out = join(header) + "\n";
  for (const ExperimentRecord& r : records) {
    if (r.n_cells() != cells) fail(ErrorCode::DimMismatch, "records in one trials table need equal cell counts");
    for (Index t = 0; t < r.n_trials(); ++t) {
      out += r.id + "," + r.donor + "," + r.label + "," + std::to_string(r.conditions[static_cast<std::size_t>(t)]);
      for (Index c = 0; c < cells; ++c) out += "," + format_double(r.responses(t, c));
      out += '\n';
    }
  }
  return out;
}

std::vector<ExperimentRecord> trials_from_csv(const std::string& text, const std::string& source) {
  std::vector<CsvLine> rows = split_csv(text);
  if (rows.empty()) parse_fail(source, 0, "empty trials table");
  if (!rows.front().fields.empty() && rows.front().fields.front() == "experiment_id") rows.erase(rows.begin());
  // Records keep first-appearance order; rows may vary in cell count only
  // between experiments.
  std::vector<ExperimentRecord> records;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<std::vector<double>>> responses;
  for (const CsvLine& row : rows) {
    if (row.fields.size() < 5) parse_fail(source, row.number, "expected id, donor, label, condition and cells");
    const std::string& id = row.fields[0];
    auto it = index.find(id);
    if (it == index.end()) {
      it = index.emplace(id, records.size()).first;
      records.push_back({id, row.fields[1], row.fields[2], {}, Matrix()});
      responses.emplace_back();
    }
    ExperimentRecord& r = records[it->second];
    if (r.donor != row.fields[1] || r.label != row.fields[2]) {
      parse_fail(source, row.number, "experiment '" + id + "' changes donor or label");
    }
    Index condition = 0;
    const std::string& f = row.fields[3];
    const auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), condition);
    if (ec != std::errc() || p != f.data() + f.size() || condition < 0) {
      parse_fail(source, row.number, "condition_index must be a non-negative integer");
    }
    std::vector<double> cells;
    for (std::size_t c = 4; c < row.fields.size(); ++c) cells.push_back(parse_double(row.fields[c], source, row.number));
    auto& rs = responses[it->second];
    if (!rs.empty() && rs.front().size() != cells.size()) {
      parse_fail(source, row.number, "experiment '" + id + "' changes its cell count");
    }
    r.conditions.push_back(condition);
    rs.push_back(std::move(cells));
  }
  for (std::size_t e = 0; e < records.size(); ++e) {
    const auto& rs = responses[e];
    records[e].responses.resize(static_cast<Index>(rs.size()), static_cast<Index>(rs.front().size()));
    for (std::size_t t = 0; t < rs.size(); ++t) {
      for (std::size_t c = 0; c < rs[t].size(); ++c) {
        records[e].responses(static_cast<Index>(t), static_cast<Index>(c)) = rs[t][c];
      }
    }
  }
  return records;
}

std::string grid_to_json(const ConditionGrid& grid) {
  Json j;
  Json axes = Json::array();
  for (const GridAxis& a : grid.axes()) {
    Json aj;
    aj["name"] = a.name;
    aj["kind"] = a.kind == AxisKind::Circular ? "circular" : "linear";
    Json values = Json::array();
    for (double v : a.values) values.push_back(v);
    aj["values"] = std::move(values);
    if (a.kind == AxisKind::Circular) aj["period"] = a.period;
    axes.push_back(std::move(aj));
  }
  j["axes"] = std::move(axes);
  return dump(j);
}

ConditionGrid grid_from_json(const std::string& text, const std::string& source) {
  const Json j = parse_json(text, source);
  const Json& axes_json = field(j, "axes", source);
  if (!axes_json.is_array()) parse_fail(source, 0, "'axes' must be an array");
  std::vector<GridAxis> axes;
  for (const Json& aj : axes_json) {
    GridAxis a;
    a.name = text_field(field(aj, "name", source), "axis name", source);
    const std::string kind = text_field(field(aj, "kind", source), "axis kind", source);
    if (kind == "circular") {
      a.kind = AxisKind::Circular;
      a.period = number(field(aj, "period", source), "period", source);
    } else if (kind == "linear") {
      a.kind = AxisKind::Linear;
    } else {
      parse_fail(source, 0, "axis '" + a.name + "': kind must be circular or linear");
    }
    const Vector v = vector_of(field(aj, "values", source), "values", source);
    a.values.assign(v.data(), v.data() + v.size());
    axes.push_back(std::move(a));
  }
  return ConditionGrid(std::move(axes));
}

}  // namespace sras::io
