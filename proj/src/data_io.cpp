#include "hiersel/data_io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "hiersel/random.hpp"

namespace hsel {

Matrix TabularDataset::normalized() const {
  Matrix out = predictors;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const auto& r = normalization.at(static_cast<std::size_t>(j));
    const double width = r.max - r.min;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      const double u = width > 0.0 ? (out(i, j) - r.min) / width : 0.0;
      out(i, j) = std::clamp(u, 0.0, 1.0);
    }
  }
  return out;
}

Matrix TabularDataset::denormalize(const Matrix& unit) const {
  Matrix out = unit;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const auto& r = normalization.at(static_cast<std::size_t>(j));
    out.col(j) = (out.col(j).array() * (r.max - r.min) + r.min).matrix();
  }
  return out;
}

TabularDataset TabularDataset::subset(const std::vector<std::size_t>& idx) const {
  TabularDataset out;
  out.column_names = column_names;
  out.response_name = response_name;
  out.normalization = normalization;
  out.predictors.resize(static_cast<Eigen::Index>(idx.size()), predictors.cols());
  out.response.resize(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    require(idx[r] < rows(), "subset: row index out of range");
    out.predictors.row(static_cast<Eigen::Index>(r)) = predictors.row(static_cast<Eigen::Index>(idx[r]));
    out.response[static_cast<Eigen::Index>(r)] = response[static_cast<Eigen::Index>(idx[r])];
  }
  return out;
}

std::vector<ColumnRange> observed_ranges(const Matrix& x) {
  std::vector<ColumnRange> out(static_cast<std::size_t>(x.cols()));
  if (x.rows() == 0) return out;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    out[static_cast<std::size_t>(j)] = {x.col(j).minCoeff(), x.col(j).maxCoeff()};
  }
  return out;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed, std::uint64_t stream) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(seed, stream);
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(perm[i - 1], perm[pick(rng.engine())]);
  }
  return perm;
}

namespace {

std::vector<std::string> default_names(std::size_t d) {
  std::vector<std::string> names;
  for (std::size_t j = 1; j <= d; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

double linear_coefficient(std::size_t j, CoefficientFormula formula) {
  const double jj = static_cast<double>(j);
  return formula == CoefficientFormula::j_squared ? 10.0 / (25.0 + jj * jj) : 10.0 / (25.0 + 2.0 * jj);
}

}  // namespace

SyntheticData simulate_linear_gaussian(std::size_t n, std::size_t p, std::size_t active, double sigma,
                                       double rho, std::uint64_t seed, CoefficientFormula formula) {
  if (n < 1 || p < 1 || active > p || sigma < 0.0 || !(rho >= 0.0 && rho < 1.0)) {
    fail(ErrorCode::invalid_argument, "simulate_linear_gaussian: need n, p >= 1, active <= p, sigma >= 0, 0 <= rho < 1");
  }
  Rng rng(seed, 0);
  const double shared = std::sqrt(rho);
  const double own = std::sqrt(1.0 - rho);

  SyntheticData out;
  auto& ds = out.dataset;
  ds.predictors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < ds.predictors.rows(); ++i) {
    const double w = rng.normal();
    for (Eigen::Index j = 0; j < ds.predictors.cols(); ++j) ds.predictors(i, j) = shared * w + own * rng.normal();
  }

  auto& truth = out.truth;
  truth.kind = SyntheticKind::linear_gaussian;
  truth.noise_sd = sigma;
  truth.rho = rho;
  truth.true_coefficients.assign(p, 0.0);
  for (std::size_t j = 1; j <= active; ++j) truth.true_coefficients[j - 1] = linear_coefficient(j, formula);
  const Vector beta = Eigen::Map<const Vector>(truth.true_coefficients.data(), static_cast<Eigen::Index>(p));
  truth.true_predictor = [beta](const Matrix& x) -> Vector { return x * beta; };

  ds.response = truth.true_predictor(ds.predictors);
  for (Eigen::Index i = 0; i < ds.response.size(); ++i) ds.response[i] += sigma * rng.normal();
  ds.column_names = default_names(p);
  ds.normalization = observed_ranges(ds.predictors);
  return out;
}

StepInteractionCoefficients step_interaction_coefficients() {
  // Term 1 is Bernoulli(1/8); term 2 is Bernoulli(3/8 * 1/4 * 1/2 = 3/64).
  const double p1 = 1.0 / 8.0;
  const double p2 = 3.0 / 64.0;
  const double sd1 = std::sqrt(p1 * (1.0 - p1));
  const double sd2 = std::sqrt(p2 * (1.0 - p2));
  StepInteractionCoefficients c;
  c.beta1 = 1.0;
  c.beta2 = 3.0 * sd1 / sd2;
  // The terms depend on disjoint variables, so var f = sd1^2 + (3 sd1)^2 and
  // R^2 = var f / (var f + s^2) = 0.9 gives s^2 = var f / 9.
  const double var_f = 10.0 * sd1 * sd1;
  c.noise_sd = std::sqrt(var_f / 9.0);
  return c;
}

SyntheticData simulate_step_interaction(std::size_t n, std::uint64_t seed) {
  require(n >= 1, "simulate_step_interaction: n must be positive");
  const auto coef = step_interaction_coefficients();
  Rng rng(seed, 0);

  SyntheticData out;
  auto& ds = out.dataset;
  ds.predictors.resize(static_cast<Eigen::Index>(n), 10);
  for (Eigen::Index i = 0; i < ds.predictors.rows(); ++i) {
    for (Eigen::Index j = 0; j < 10; ++j) ds.predictors(i, j) = rng.uniform();
  }

  auto& truth = out.truth;
  truth.kind = SyntheticKind::step_interaction;
  truth.true_coefficients = {coef.beta1, coef.beta2};
  truth.noise_sd = coef.noise_sd;
  truth.population_r2 = 0.9;
  truth.true_predictor = [coef](const Matrix& x) -> Vector {
    Vector f(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double t1 = (x(i, 0) > 1.0 / 8 && x(i, 0) <= 1.0 / 4) ? 1.0 : 0.0;
      const double t2 = (x(i, 1) > 1.0 / 8 && x(i, 1) <= 1.0 / 2) && (x(i, 2) > 1.0 / 8 && x(i, 2) <= 3.0 / 8) &&
                                (x(i, 3) >= 1.0 / 8 && x(i, 3) <= 5.0 / 8)
                            ? 1.0
                            : 0.0;
      f[i] = coef.beta1 * t1 + coef.beta2 * t2;
    }
    return f;
  };

  ds.response = truth.true_predictor(ds.predictors);
  for (Eigen::Index i = 0; i < ds.response.size(); ++i) ds.response[i] += coef.noise_sd * rng.normal();
  ds.column_names = default_names(10);
  ds.normalization.assign(10, ColumnRange{0.0, 1.0});
  return out;
}

namespace {

// RFC 4180 records: quoted fields, doubled quotes, CRLF or LF line ends.
struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

std::vector<CsvRecord> split_records(const std::string& text) {
  std::vector<CsvRecord> records;
  CsvRecord current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  current.line = line;

  auto end_field = [&] {
    current.fields.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = current.fields.size() == 1 && current.fields[0].empty();
    if (!blank) records.push_back(std::move(current));
    current = CsvRecord{};
    current.line = line;
  };

  std::size_t i = text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0 ? 3 : 0;
  for (; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field += ch;
      }
      continue;
    }
    if (ch == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (ch == ',') {
      end_field();
    } else if (ch == '\r') {
      // swallowed; the following '\n' ends the record
    } else if (ch == '\n') {
      ++line;
      end_record();
    } else {
      field += ch;
      field_started = true;
    }
  }
  if (in_quotes) fail(ErrorCode::parse_error, "unterminated quoted field at line " + std::to_string(current.line));
  if (!field.empty() || !current.fields.empty()) end_record();
  return records;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return errno == 0 && end == s.c_str() + s.size() && std::isfinite(out);
}

}  // namespace

TabularDataset parse_csv(const std::string& text, const std::string& response_column) {
  auto records = split_records(text);
  if (records.empty()) fail(ErrorCode::parse_error, "CSV has no header row");
  std::vector<std::string> header;
  for (const auto& h : records.front().fields) header.push_back(trim(h));
  const std::size_t width = header.size();

  const auto resp_it = std::find(header.begin(), header.end(), response_column);
  if (resp_it == header.end()) fail(ErrorCode::missing_column, "response column '" + response_column + "' not found");
  const auto resp_col = static_cast<std::size_t>(resp_it - header.begin());

  TabularDataset ds;
  ds.response_name = response_column;

  std::vector<std::vector<std::string>> rows;
  for (std::size_t r = 1; r < records.size(); ++r) {
    auto& rec = records[r];
    if (rec.fields.size() != width) {
      fail(ErrorCode::parse_error, "line " + std::to_string(rec.line) + ": expected " + std::to_string(width) +
                                       " fields, found " + std::to_string(rec.fields.size()));
    }
    bool missing = false;
    for (auto& f : rec.fields) {
      f = trim(f);
      if (f.empty()) missing = true;
    }
    if (missing) {
      ds.warnings.push_back("line " + std::to_string(rec.line) + ": empty field, row rejected");
      continue;
    }
    rows.push_back(std::move(rec.fields));
  }
  const std::size_t n = rows.size();

  // Column-wise decoding: numeric when every value parses.
  std::vector<std::vector<double>> columns;
  std::vector<std::string> names;
  Vector response(static_cast<Eigen::Index>(n));
  for (std::size_t c = 0; c < width; ++c) {
    std::vector<double> values(n);
    bool numeric = true;
    for (std::size_t r = 0; r < n && numeric; ++r) numeric = parse_number(rows[r][c], values[r]);
    if (c == resp_col) {
      if (!numeric) fail(ErrorCode::parse_error, "response column '" + response_column + "' is not numeric");
      for (std::size_t r = 0; r < n; ++r) response[static_cast<Eigen::Index>(r)] = values[r];
      continue;
    }
    if (numeric) {
      columns.push_back(std::move(values));
      names.push_back(header[c]);
      continue;
    }
    std::set<std::string> levels;
    for (std::size_t r = 0; r < n; ++r) levels.insert(rows[r][c]);
    for (const auto& level : levels) {
      std::vector<double> ind(n);
      for (std::size_t r = 0; r < n; ++r) ind[r] = rows[r][c] == level ? 1.0 : 0.0;
      columns.push_back(std::move(ind));
      names.push_back(header[c] + "=" + level);
    }
  }

  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto [lo, hi] = std::minmax_element(columns[c].begin(), columns[c].end());
    if (n == 0 || *lo == *hi) {
      ds.warnings.push_back("column '" + names[c] + "' is constant and was dropped");
      continue;
    }
    keep.push_back(c);
  }

  ds.predictors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    for (std::size_t r = 0; r < n; ++r) {
      ds.predictors(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = columns[keep[k]][r];
    }
    ds.column_names.push_back(names[keep[k]]);
  }
  ds.response = std::move(response);
  ds.normalization = observed_ranges(ds.predictors);
  return ds;
}

TabularDataset load_csv(const std::string& path, const std::string& response_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), response_column);
}

namespace {

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

std::string format_csv(const TabularDataset& data) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t j = 0; j < data.cols(); ++j) os << quote_if_needed(data.column_names.at(j)) << ',';
  os << quote_if_needed(data.response_name) << '\n';
  for (Eigen::Index i = 0; i < data.predictors.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.predictors.cols(); ++j) os << data.predictors(i, j) << ',';
    os << data.response[i] << '\n';
  }
  return os.str();
}

void write_csv(const TabularDataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io_error, "cannot write '" + path + "'");
  out << format_csv(data);
  if (!out) fail(ErrorCode::io_error, "write failed for '" + path + "'");
}

Split train_test_split(const TabularDataset& data, std::size_t n_train, std::uint64_t seed) {
  if (n_train < 1 || n_train >= data.rows()) {
    fail(ErrorCode::invalid_argument, "train size must satisfy 1 <= n_train < n");
  }
  const auto perm = seeded_permutation(data.rows(), seed, 0);
  std::vector<std::size_t> train_idx(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test_idx(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());

  Split s{data.subset(train_idx), data.subset(test_idx)};
  s.train.normalization = observed_ranges(s.train.predictors);
  s.test.normalization = s.train.normalization;
  return s;
}

}  // namespace hsel
